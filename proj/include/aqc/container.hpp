#pragma once

#include "aqc/aq_model.hpp"
#include "aqc/huffman.hpp"
#include "aqc/pager.hpp"
#include "aqc/types.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace aqc {

// Within each codebook, permutes basis vectors by descending usage frequency
// (ties by ascending original index) and remaps the codes through the same
// permutation. Reconstructions are bit-exact unchanged; the pooled code
// distribution becomes skewed toward small symbol values, which is what
// makes the shared Huffman table effective.
template <class Scalar>
std::pair<Codebooks<Scalar>, CodeMatrix> sort_codebooks(const CodeMatrix& cm,
                                                        const Codebooks<Scalar>& books) {
    if (static_cast<std::size_t>(cm.books()) != books.size()) {
        throw StructuralError("code matrix book count does not match codebooks");
    }
    Codebooks<Scalar> sorted_books;
    CodeMatrix out;
    out.alphabet = cm.alphabet;
    out.codes.resize(cm.pages(), cm.books());

    const auto K = static_cast<std::size_t>(cm.alphabet);
    for (Eigen::Index m = 0; m < cm.books(); ++m) {
        std::vector<std::uint64_t> counts(K, 0);
        for (Eigen::Index p = 0; p < cm.pages(); ++p) {
            ++counts[static_cast<std::size_t>(cm.codes(p, m))];
        }
        std::vector<std::int32_t> perm(K);
        for (std::size_t k = 0; k < K; ++k) {
            perm[k] = static_cast<std::int32_t>(k);
        }
        std::sort(perm.begin(), perm.end(), [&](std::int32_t a, std::int32_t b) {
            return counts[static_cast<std::size_t>(a)] > counts[static_cast<std::size_t>(b)] ||
                   (counts[static_cast<std::size_t>(a)] ==
                        counts[static_cast<std::size_t>(b)] &&
                    a < b);
        });

        const Mat<Scalar>& basis = books[static_cast<std::size_t>(m)];
        Mat<Scalar> permuted(basis.rows(), basis.cols());
        std::vector<std::int32_t> remap(K);
        for (std::size_t j = 0; j < K; ++j) {
            permuted.row(static_cast<Eigen::Index>(j)) = basis.row(perm[j]);
            remap[static_cast<std::size_t>(perm[j])] = static_cast<std::int32_t>(j);
        }
        sorted_books.push_back(std::move(permuted));
        for (Eigen::Index p = 0; p < cm.pages(); ++p) {
            out.codes(p, m) = remap[static_cast<std::size_t>(cm.codes(p, m))];
        }
    }
    return {std::move(sorted_books), std::move(out)};
}

// Decoded logical content of an AQPK container.
struct ContainerData {
    Codebooks<float> books;
    CodeMatrix codes;
    PageManifest manifest;
    AqHyper hyper;
};

// Serializes per the "AQPK" layout, bit-exact:
//   magic "AQPK" | version u8 = 1 | header_len u32 LE | header JSON
//   | codebooks M·K·D f32 LE in (m,k,d) order | code_lengths K bytes
//   | bit_count u64 LE | packed bitstream
// Applies sort_codebooks and build_huffman internally; the same logical
// inputs always produce identical bytes.
std::vector<std::uint8_t> write_container(const Codebooks<float>& books,
                                          const CodeMatrix& codes,
                                          const PageManifest& manifest,
                                          const AqHyper& hyper);

ContainerData read_container(const std::vector<std::uint8_t>& bytes);

void save_container(const std::vector<std::uint8_t>& bytes, const std::string& path);
std::vector<std::uint8_t> load_container_bytes(const std::string& path);
ContainerData load_container(const std::string& path);

// Bits needed to store every code at ceil(log2 K) bits (1 bit when K == 1).
std::uint64_t bitwise_bits(std::uint64_t pages, std::uint32_t books, std::uint32_t alphabet);

// (T·32) / (code_bits + M·K·D·32 [+ table_bits]); codebooks count as fp32.
double compression_ratio(std::uint64_t total_scalars, std::uint32_t page_size,
                         std::uint32_t books, std::uint32_t alphabet,
                         std::uint64_t pages, std::uint64_t code_bits,
                         bool include_table = false, std::uint64_t table_bits = 0);

}  // namespace aqc
