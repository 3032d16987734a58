#pragma once

#include "aqc/types.hpp"

#include <cstdint>
#include <vector>

namespace aqc {

// Canonical Huffman code over the symbol alphabet {0..K-1}. Only the code
// lengths are stored on disk; codewords are reassigned canonically by
// ascending (length, symbol) on both ends.
struct HuffmanSpec {
    std::vector<std::uint8_t> code_lengths;  // K entries, 0 = symbol unused
    std::vector<std::uint64_t> codewords;    // derived, valid where length > 0

    std::size_t alphabet() const { return code_lengths.size(); }

    // Validates Kraft equality over used symbols (single-symbol codes get
    // length 1) and derives canonical codewords. Throws ParseError::Corrupt
    // on an invalid length table.
    static HuffmanSpec from_lengths(std::vector<std::uint8_t> lengths);
};

// Pooled symbol counts across all codebooks, indexed by symbol value.
std::vector<std::uint64_t> pooled_counts(const CodeMatrix& cm);

// One global table from the pooled frequencies. Tie-breaking is by ascending
// symbol index, so the result is deterministic.
HuffmanSpec build_huffman(const CodeMatrix& cm);
HuffmanSpec huffman_from_counts(const std::vector<std::uint64_t>& counts);

// Shannon entropy of the count distribution, in bits per symbol.
double empirical_entropy_bits(const std::vector<std::uint64_t>& counts);

// Mean codeword length under the spec, in bits per symbol.
double mean_code_length(const HuffmanSpec& spec, const std::vector<std::uint64_t>& counts);

// Total coded size of the counts under the spec, in bits.
std::uint64_t coded_bits(const HuffmanSpec& spec, const std::vector<std::uint64_t>& counts);

struct Bitstream {
    std::vector<std::uint8_t> bytes;
    std::uint64_t bit_count = 0;
};

// Symbols emitted page-major with the codebook index as the inner loop, bits
// packed most-significant-bit-first, final byte zero-padded.
Bitstream pack(const CodeMatrix& cm, const HuffmanSpec& spec);

// Exact inverse of pack. Throws ParseError::Corrupt when the stream exhausts
// early, decodes an invalid prefix, or does not consume exactly bit_count
// bits for P·M symbols.
CodeMatrix unpack(const std::vector<std::uint8_t>& bytes, std::uint64_t bit_count,
                  const HuffmanSpec& spec, std::uint64_t pages, std::uint32_t books);

}  // namespace aqc
