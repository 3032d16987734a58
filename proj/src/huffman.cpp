#include "aqc/huffman.hpp"

#include "aqc/error.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <string>

namespace aqc {

namespace {

constexpr int kMaxCodeLength = 63;

// Depths of an optimal prefix tree via the two-queue merge. Leaves are
// pre-sorted by (count, symbol); ties between queues prefer the leaf queue.
// Deterministic by construction.
std::vector<std::uint8_t> optimal_lengths(const std::vector<std::uint64_t>& counts) {
    struct Node {
        std::uint64_t weight;
        int left, right;   // -1 for leaves
        int symbol;
    };

    std::vector<int> used;
    for (std::size_t k = 0; k < counts.size(); ++k) {
        if (counts[k] > 0) {
            used.push_back(static_cast<int>(k));
        }
    }

    std::vector<std::uint8_t> lengths(counts.size(), 0);
    if (used.empty()) {
        throw ArgumentError("cannot build a Huffman code from zero symbols");
    }
    if (used.size() == 1) {
        lengths[static_cast<std::size_t>(used[0])] = 1;
        return lengths;
    }

    std::stable_sort(used.begin(), used.end(), [&](int a, int b) {
        return counts[static_cast<std::size_t>(a)] < counts[static_cast<std::size_t>(b)] ||
               (counts[static_cast<std::size_t>(a)] == counts[static_cast<std::size_t>(b)] &&
                a < b);
    });

    std::vector<Node> nodes;
    nodes.reserve(2 * used.size());
    std::deque<int> leaves, merged;
    for (int s : used) {
        nodes.push_back({counts[static_cast<std::size_t>(s)], -1, -1, s});
        leaves.push_back(static_cast<int>(nodes.size()) - 1);
    }

    auto take_min = [&]() {
        if (leaves.empty()) {
            int id = merged.front();
            merged.pop_front();
            return id;
        }
        if (merged.empty() || nodes[static_cast<std::size_t>(leaves.front())].weight <=
                                  nodes[static_cast<std::size_t>(merged.front())].weight) {
            int id = leaves.front();
            leaves.pop_front();
            return id;
        }
        int id = merged.front();
        merged.pop_front();
        return id;
    };

    while (leaves.size() + merged.size() > 1) {
        const int a = take_min();
        const int b = take_min();
        nodes.push_back({nodes[static_cast<std::size_t>(a)].weight +
                             nodes[static_cast<std::size_t>(b)].weight,
                         a, b, -1});
        merged.push_back(static_cast<int>(nodes.size()) - 1);
    }

    // iterative depth walk from the root
    std::vector<std::pair<int, int>> stack{{merged.front(), 0}};
    while (!stack.empty()) {
        auto [id, depth] = stack.back();
        stack.pop_back();
        const Node& n = nodes[static_cast<std::size_t>(id)];
        if (n.left < 0) {
            if (depth > kMaxCodeLength) {
                throw Error("Huffman code length exceeds 63 bits");
            }
            lengths[static_cast<std::size_t>(n.symbol)] = static_cast<std::uint8_t>(depth);
        } else {
            stack.push_back({n.left, depth + 1});
            stack.push_back({n.right, depth + 1});
        }
    }
    return lengths;
}

}  // namespace

HuffmanSpec HuffmanSpec::from_lengths(std::vector<std::uint8_t> lengths) {
    std::size_t used = 0;
    int max_len = 0;
    for (std::uint8_t len : lengths) {
        if (len > kMaxCodeLength) {
            throw ParseError(ParseError::Kind::Corrupt, "Huffman length out of range");
        }
        if (len > 0) {
            ++used;
            max_len = std::max<int>(max_len, len);
        }
    }
    if (used == 0) {
        throw ParseError(ParseError::Kind::Corrupt, "Huffman table has no used symbols");
    }

    if (used == 1) {
        if (max_len != 1) {
            throw ParseError(ParseError::Kind::Corrupt,
                             "single-symbol Huffman table must use length 1");
        }
    } else {
        // Kraft equality: sum over used symbols of 2^-len == 1. 128-bit so a
        // hostile length table cannot wrap the accumulator.
        unsigned __int128 kraft = 0;
        for (std::uint8_t len : lengths) {
            if (len > 0) {
                kraft += static_cast<unsigned __int128>(1) << (kMaxCodeLength - len);
            }
        }
        if (kraft != static_cast<unsigned __int128>(1) << kMaxCodeLength) {
            throw ParseError(ParseError::Kind::Corrupt,
                             "Huffman lengths do not form a complete prefix code");
        }
    }

    // canonical assignment by ascending (length, symbol)
    std::vector<std::size_t> order;
    for (std::size_t k = 0; k < lengths.size(); ++k) {
        if (lengths[k] > 0) {
            order.push_back(k);
        }
    }
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return lengths[a] < lengths[b] || (lengths[a] == lengths[b] && a < b);
    });

    HuffmanSpec spec;
    spec.code_lengths = std::move(lengths);
    spec.codewords.assign(spec.code_lengths.size(), 0);
    std::uint64_t code = 0;
    int prev_len = 0;
    for (std::size_t k : order) {
        const int len = spec.code_lengths[k];
        code <<= (len - prev_len);
        spec.codewords[k] = code;
        ++code;
        prev_len = len;
    }
    return spec;
}

std::vector<std::uint64_t> pooled_counts(const CodeMatrix& cm) {
    std::vector<std::uint64_t> counts(static_cast<std::size_t>(cm.alphabet), 0);
    for (Eigen::Index p = 0; p < cm.pages(); ++p) {
        for (Eigen::Index m = 0; m < cm.books(); ++m) {
            const std::int32_t sym = cm.codes(p, m);
            if (sym < 0 || sym >= cm.alphabet) {
                throw StructuralError("code out of range at page " + std::to_string(p));
            }
            ++counts[static_cast<std::size_t>(sym)];
        }
    }
    return counts;
}

HuffmanSpec huffman_from_counts(const std::vector<std::uint64_t>& counts) {
    return HuffmanSpec::from_lengths(optimal_lengths(counts));
}

HuffmanSpec build_huffman(const CodeMatrix& cm) {
    if (cm.pages() * cm.books() == 0) {
        throw ArgumentError("cannot build a Huffman code from an empty code matrix");
    }
    return huffman_from_counts(pooled_counts(cm));
}

double empirical_entropy_bits(const std::vector<std::uint64_t>& counts) {
    const double total = static_cast<double>(
        std::accumulate(counts.begin(), counts.end(), std::uint64_t(0)));
    if (total == 0) {
        return 0.0;
    }
    double h = 0.0;
    for (std::uint64_t c : counts) {
        if (c > 0) {
            const double p = static_cast<double>(c) / total;
            h -= p * std::log2(p);
        }
    }
    return h;
}

double mean_code_length(const HuffmanSpec& spec, const std::vector<std::uint64_t>& counts) {
    const std::uint64_t total =
        std::accumulate(counts.begin(), counts.end(), std::uint64_t(0));
    if (total == 0) {
        return 0.0;
    }
    return static_cast<double>(coded_bits(spec, counts)) / static_cast<double>(total);
}

std::uint64_t coded_bits(const HuffmanSpec& spec, const std::vector<std::uint64_t>& counts) {
    std::uint64_t bits = 0;
    for (std::size_t k = 0; k < counts.size(); ++k) {
        bits += counts[k] * spec.code_lengths[k];
    }
    return bits;
}

Bitstream pack(const CodeMatrix& cm, const HuffmanSpec& spec) {
    Bitstream out;
    std::uint8_t current = 0;
    int filled = 0;
    for (Eigen::Index p = 0; p < cm.pages(); ++p) {
        for (Eigen::Index m = 0; m < cm.books(); ++m) {
            const auto sym = static_cast<std::size_t>(cm.codes(p, m));
            if (sym >= spec.alphabet() || spec.code_lengths[sym] == 0) {
                throw StructuralError("symbol " + std::to_string(sym) +
                                      " has no codeword at page " + std::to_string(p));
            }
            const int len = spec.code_lengths[sym];
            const std::uint64_t word = spec.codewords[sym];
            for (int bit = len - 1; bit >= 0; --bit) {
                current = static_cast<std::uint8_t>((current << 1) |
                                                    ((word >> bit) & 1));
                if (++filled == 8) {
                    out.bytes.push_back(current);
                    current = 0;
                    filled = 0;
                }
            }
            out.bit_count += static_cast<std::uint64_t>(len);
        }
    }
    if (filled > 0) {
        out.bytes.push_back(static_cast<std::uint8_t>(current << (8 - filled)));
    }
    return out;
}

CodeMatrix unpack(const std::vector<std::uint8_t>& bytes, std::uint64_t bit_count,
                  const HuffmanSpec& spec, std::uint64_t pages, std::uint32_t books) {
    if (bytes.size() != (bit_count + 7) / 8) {
        throw ParseError(ParseError::Kind::Corrupt,
                         "bitstream byte count does not match bit count");
    }

    // canonical decode tables: per length, first code value and the symbols
    // of that length in canonical order
    int max_len = 0;
    for (std::uint8_t len : spec.code_lengths) {
        max_len = std::max<int>(max_len, len);
    }
    std::vector<std::uint64_t> first_code(static_cast<std::size_t>(max_len) + 1, 0);
    std::vector<std::uint32_t> count(static_cast<std::size_t>(max_len) + 1, 0);
    std::vector<std::uint32_t> offset(static_cast<std::size_t>(max_len) + 1, 0);
    std::vector<std::int32_t> symbols;
    {
        std::vector<std::size_t> order;
        for (std::size_t k = 0; k < spec.code_lengths.size(); ++k) {
            if (spec.code_lengths[k] > 0) {
                order.push_back(k);
            }
        }
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return spec.code_lengths[a] < spec.code_lengths[b] ||
                   (spec.code_lengths[a] == spec.code_lengths[b] && a < b);
        });
        for (std::size_t k : order) {
            symbols.push_back(static_cast<std::int32_t>(k));
        }
        std::uint32_t index = 0;
        std::uint64_t code = 0;
        int prev_len = 0;
        for (std::size_t k : order) {
            const int len = spec.code_lengths[k];
            code <<= (len - prev_len);
            if (count[static_cast<std::size_t>(len)] == 0) {
                first_code[static_cast<std::size_t>(len)] = code;
                offset[static_cast<std::size_t>(len)] = index;
            }
            ++count[static_cast<std::size_t>(len)];
            ++code;
            ++index;
            prev_len = len;
        }
    }

    CodeMatrix cm;
    cm.alphabet = static_cast<std::int32_t>(spec.alphabet());
    cm.codes.resize(static_cast<Eigen::Index>(pages), static_cast<Eigen::Index>(books));

    std::uint64_t pos = 0;
    auto next_bit = [&]() -> std::uint64_t {
        if (pos >= bit_count) {
            throw ParseError(ParseError::Kind::Corrupt, "bitstream exhausted mid-symbol");
        }
        const std::uint64_t byte = pos >> 3;
        const int shift = 7 - static_cast<int>(pos & 7);
        ++pos;
        return (bytes[static_cast<std::size_t>(byte)] >> shift) & 1;
    };

    const std::uint64_t total = pages * books;
    for (std::uint64_t i = 0; i < total; ++i) {
        std::uint64_t acc = 0;
        int len = 0;
        for (;;) {
            acc = (acc << 1) | next_bit();
            ++len;
            if (len > max_len) {
                throw ParseError(ParseError::Kind::Corrupt, "invalid Huffman prefix");
            }
            const auto l = static_cast<std::size_t>(len);
            if (count[l] > 0 && acc >= first_code[l] &&
                acc - first_code[l] < count[l]) {
                const std::int32_t sym =
                    symbols[offset[l] + static_cast<std::uint32_t>(acc - first_code[l])];
                cm.codes(static_cast<Eigen::Index>(i / books),
                         static_cast<Eigen::Index>(i % books)) = sym;
                break;
            }
        }
    }
    if (pos != bit_count) {
        throw ParseError(ParseError::Kind::Corrupt,
                         "bitstream has leftover bits after the declared symbol count");
    }
    return cm;
}

}  // namespace aqc
