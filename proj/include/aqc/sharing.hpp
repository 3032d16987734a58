#pragma once

#include "aqc/pager.hpp"
#include "aqc/types.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace aqc {

// Multiset of global basis indices (m·K + k) used to reconstruct a group of
// parameter pages.
struct BasisMultiset {
    std::vector<std::uint64_t> counts;  // M·K entries

    std::uint64_t total() const;
};

struct ScalarRange {
    std::uint64_t begin = 0;  // inclusive
    std::uint64_t end = 0;    // exclusive
};

// A named set of scalar-offset ranges into the flattened stream. A page
// belongs to the group iff any of its scalars falls in one of the ranges;
// pages can straddle tensor boundaries, so a page may belong to several
// groups.
struct GroupSpec {
    std::string name;
    std::vector<ScalarRange> ranges;
};

// One group per manifest tensor.
std::vector<GroupSpec> per_tensor_groups(const PageManifest& manifest);

BasisMultiset group_multiset(const CodeMatrix& codes, const PageManifest& manifest,
                             const GroupSpec& group);

// |multiset intersection| / min(|a|, |b|), intersection count per index
// being min(count_a, count_b). Symmetric, in [0, 1], and exactly 1 when one
// multiset contains the other.
double sharing_factor(const BasisMultiset& a, const BasisMultiset& b);

// Per codebook: usage frequencies sorted descending and the cumulative
// fraction of page-codebook slots covered by the top vectors.
struct UsageStats {
    std::vector<std::vector<std::uint64_t>> sorted_freq;  // M × K, non-increasing
    std::vector<std::vector<double>> coverage;            // M × K, ends at 1
};

UsageStats usage_stats(const CodeMatrix& codes);

enum class ParamType { Weight, Bias };

// Per codebook and basis vector: the fraction of pages involving each
// parameter type that use that vector. A page involves a type iff any of its
// scalars belongs to a tensor of that type.
struct TypeSharing {
    std::vector<std::vector<double>> weight_frac;  // M × K
    std::vector<std::vector<double>> bias_frac;    // M × K
    std::uint64_t weight_pages = 0;
    std::uint64_t bias_pages = 0;
};

TypeSharing type_sharing(const CodeMatrix& codes, const PageManifest& manifest,
                         const std::map<std::string, ParamType>& type_map);

}  // namespace aqc
