#include "aqc/sharing.hpp"

#include "aqc/error.hpp"

#include <algorithm>
#include <numeric>

namespace aqc {

std::uint64_t BasisMultiset::total() const {
    return std::accumulate(counts.begin(), counts.end(), std::uint64_t(0));
}

std::vector<GroupSpec> per_tensor_groups(const PageManifest& manifest) {
    std::vector<GroupSpec> groups;
    for (const TensorSlot& slot : manifest.table) {
        groups.push_back({slot.name, {{slot.offset, slot.offset + slot.count}}});
    }
    return groups;
}

namespace {

// Pages whose scalar span [p·D, p·D+D) overlaps any of the group's ranges.
std::vector<Eigen::Index> member_pages(const PageManifest& manifest,
                                       const GroupSpec& group) {
    std::vector<bool> member(static_cast<std::size_t>(manifest.page_count), false);
    const std::uint64_t D = manifest.page_size;
    for (const ScalarRange& r : group.ranges) {
        if (r.begin >= r.end || r.end > manifest.total_scalars) {
            throw ArgumentError("group range invalid or outside [0, T) in " + group.name);
        }
        const std::uint64_t first = r.begin / D;
        const std::uint64_t last = (r.end - 1) / D;
        for (std::uint64_t p = first; p <= last; ++p) {
            member[static_cast<std::size_t>(p)] = true;
        }
    }
    std::vector<Eigen::Index> pages;
    for (std::size_t p = 0; p < member.size(); ++p) {
        if (member[p]) {
            pages.push_back(static_cast<Eigen::Index>(p));
        }
    }
    return pages;
}

}  // namespace

BasisMultiset group_multiset(const CodeMatrix& codes, const PageManifest& manifest,
                             const GroupSpec& group) {
    if (group.ranges.empty()) {
        throw ArgumentError("group " + group.name + " has no ranges");
    }
    if (static_cast<std::uint64_t>(codes.pages()) != manifest.page_count) {
        throw StructuralError("code matrix page count does not match manifest");
    }
    const auto K = static_cast<std::uint64_t>(codes.alphabet);
    BasisMultiset ms;
    ms.counts.assign(static_cast<std::size_t>(codes.books()) * K, 0);
    for (Eigen::Index p : member_pages(manifest, group)) {
        for (Eigen::Index m = 0; m < codes.books(); ++m) {
            const auto global =
                static_cast<std::uint64_t>(m) * K + static_cast<std::uint64_t>(codes.codes(p, m));
            ++ms.counts[static_cast<std::size_t>(global)];
        }
    }
    return ms;
}

double sharing_factor(const BasisMultiset& a, const BasisMultiset& b) {
    const std::uint64_t ta = a.total();
    const std::uint64_t tb = b.total();
    if (ta == 0 || tb == 0) {
        throw ArgumentError("sharing_factor needs non-empty multisets");
    }
    if (a.counts.size() != b.counts.size()) {
        throw StructuralError("multisets index different basis spaces");
    }
    std::uint64_t intersection = 0;
    for (std::size_t i = 0; i < a.counts.size(); ++i) {
        intersection += std::min(a.counts[i], b.counts[i]);
    }
    return static_cast<double>(intersection) / static_cast<double>(std::min(ta, tb));
}

UsageStats usage_stats(const CodeMatrix& codes) {
    if (codes.pages() == 0 || codes.books() == 0) {
        throw ArgumentError("usage_stats needs a non-empty code matrix");
    }
    UsageStats stats;
    const auto K = static_cast<std::size_t>(codes.alphabet);
    for (Eigen::Index m = 0; m < codes.books(); ++m) {
        std::vector<std::uint64_t> freq(K, 0);
        for (Eigen::Index p = 0; p < codes.pages(); ++p) {
            ++freq[static_cast<std::size_t>(codes.codes(p, m))];
        }
        std::sort(freq.begin(), freq.end(), std::greater<>());
        std::vector<double> coverage(K, 0.0);
        const double total = static_cast<double>(codes.pages());
        std::uint64_t acc = 0;
        for (std::size_t k = 0; k < K; ++k) {
            acc += freq[k];
            coverage[k] = static_cast<double>(acc) / total;
        }
        stats.sorted_freq.push_back(std::move(freq));
        stats.coverage.push_back(std::move(coverage));
    }
    return stats;
}

TypeSharing type_sharing(const CodeMatrix& codes, const PageManifest& manifest,
                         const std::map<std::string, ParamType>& type_map) {
    if (static_cast<std::uint64_t>(codes.pages()) != manifest.page_count) {
        throw StructuralError("code matrix page count does not match manifest");
    }
    const std::uint64_t D = manifest.page_size;

    // page involvement flags per type
    std::vector<bool> is_weight(static_cast<std::size_t>(codes.pages()), false);
    std::vector<bool> is_bias(static_cast<std::size_t>(codes.pages()), false);
    for (const TensorSlot& slot : manifest.table) {
        const auto it = type_map.find(slot.name);
        if (it == type_map.end()) {
            throw ArgumentError("tensor not classified as weight or bias: " + slot.name);
        }
        if (slot.count == 0) {
            continue;
        }
        auto& flags = it->second == ParamType::Weight ? is_weight : is_bias;
        const std::uint64_t first = slot.offset / D;
        const std::uint64_t last = (slot.offset + slot.count - 1) / D;
        for (std::uint64_t p = first; p <= last; ++p) {
            flags[static_cast<std::size_t>(p)] = true;
        }
    }

    TypeSharing out;
    out.weight_pages = static_cast<std::uint64_t>(
        std::count(is_weight.begin(), is_weight.end(), true));
    out.bias_pages =
        static_cast<std::uint64_t>(std::count(is_bias.begin(), is_bias.end(), true));

    const auto K = static_cast<std::size_t>(codes.alphabet);
    for (Eigen::Index m = 0; m < codes.books(); ++m) {
        std::vector<std::uint64_t> wcount(K, 0), bcount(K, 0);
        for (Eigen::Index p = 0; p < codes.pages(); ++p) {
            const auto k = static_cast<std::size_t>(codes.codes(p, m));
            if (is_weight[static_cast<std::size_t>(p)]) {
                ++wcount[k];
            }
            if (is_bias[static_cast<std::size_t>(p)]) {
                ++bcount[k];
            }
        }
        std::vector<double> wfrac(K, 0.0), bfrac(K, 0.0);
        for (std::size_t k = 0; k < K; ++k) {
            if (out.weight_pages > 0) {
                wfrac[k] = static_cast<double>(wcount[k]) /
                           static_cast<double>(out.weight_pages);
            }
            if (out.bias_pages > 0) {
                bfrac[k] = static_cast<double>(bcount[k]) /
                           static_cast<double>(out.bias_pages);
            }
        }
        out.weight_frac.push_back(std::move(wfrac));
        out.bias_frac.push_back(std::move(bfrac));
    }
    return out;
}

}  // namespace aqc
