#pragma once

#include "aqc/tensor_archive.hpp"
#include "aqc/types.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace aqc {

// One tensor's slice of the flattened scalar stream. count == product(shape)
// for plain flattening; under masked packing it is the number of surviving
// scalars, so offsets stay contiguous either way.
struct TensorSlot {
    std::string name;
    std::vector<std::int64_t> shape;
    std::uint64_t offset = 0;
    std::uint64_t count = 0;
};

// Everything needed to invert flatten(): the architecture-decoupled page
// matrix plus this manifest reproduce the original archive bit-exactly.
struct PageManifest {
    std::uint32_t page_size = 0;       // D
    std::uint64_t total_scalars = 0;   // T (packed count under masking)
    std::uint64_t page_count = 0;      // P = ceil(T / D)
    std::uint32_t pad_count = 0;       // P*D - T
    std::vector<TensorSlot> table;
    std::string mask_digest;           // empty unless masked packing was used
};

void validate(const PageManifest& manifest);

struct Paged {
    MatF pages;  // P×D, row-major; the final pad_count scalars are zero
    PageManifest manifest;
};

// Concatenates tensor data in entry order, zero-pads to a multiple of
// page_size and reshapes row-major into P×D. Page boundaries ignore tensor
// boundaries.
Paged flatten(const TensorArchive& archive, std::uint32_t page_size);

// Exact inverse of flatten. Throws StructuralError on dimension mismatch or
// when the manifest came from masked packing (the mask is needed to invert).
TensorArchive unflatten(const MatF& pages, const PageManifest& manifest);

// Packs only scalars whose mask value is exactly 1.0, in archive order.
// The caller retains the mask to re-scatter on decode.
Paged flatten_masked(const TensorArchive& archive, const TensorArchive& mask,
                     std::uint32_t page_size);

// Splits the concatenated scalar stream into `parts` contiguous chunks of
// near-equal size (difference at most 1), each a single-tensor archive named
// "part_<i>".
std::vector<TensorArchive> partition(const TensorArchive& archive, std::uint32_t parts);

// FNV-1a 64 over the mask payload bytes, hex-encoded.
std::string mask_digest(const TensorArchive& mask);

nlohmann::json manifest_to_json(const PageManifest& manifest);
PageManifest manifest_from_json(const nlohmann::json& j);

}  // namespace aqc
