#pragma once

// Shared fixtures for the test suites: random archive/code generators and a
// central-difference gradient checker, all independent of the code paths
// they are used to verify.

#include "aqc/rng.hpp"
#include "aqc/tensor_archive.hpp"
#include "aqc/types.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace aqc::testing {

inline TensorArchive random_archive(std::uint64_t seed, int max_tensors = 6,
                                    int max_dim = 5) {
    Rng rng(seed);
    TensorArchive archive;
    const int n = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_tensors)));
    for (int i = 0; i < n; ++i) {
        TensorEntry e;
        e.name = "t" + std::to_string(i);
        const int rank = 1 + static_cast<int>(rng.below(3));
        std::int64_t numel = 1;
        for (int r = 0; r < rank; ++r) {
            const std::int64_t d =
                1 + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(max_dim)));
            e.shape.push_back(d);
            numel *= d;
        }
        for (std::int64_t j = 0; j < numel; ++j) {
            e.data.push_back(static_cast<float>(rng.uniform(-2.0, 2.0)));
        }
        archive.entries.push_back(std::move(e));
    }
    return archive;
}

inline bool archives_equal(const TensorArchive& a, const TensorArchive& b) {
    if (a.entries.size() != b.entries.size()) {
        return false;
    }
    for (std::size_t i = 0; i < a.entries.size(); ++i) {
        const TensorEntry& x = a.entries[i];
        const TensorEntry& y = b.entries[i];
        if (x.name != y.name || x.shape != y.shape || x.data.size() != y.data.size()) {
            return false;
        }
        for (std::size_t j = 0; j < x.data.size(); ++j) {
            if (std::bit_cast<std::uint32_t>(x.data[j]) !=
                std::bit_cast<std::uint32_t>(y.data[j])) {
                return false;
            }
        }
    }
    return true;
}

// Codes drawn from a skewed distribution so Huffman tables have something to
// work with; skew 0 gives uniform codes.
inline CodeMatrix random_codes(std::uint64_t seed, Eigen::Index pages, Eigen::Index books,
                               std::int32_t alphabet, double skew = 1.0) {
    Rng rng(seed);
    CodeMatrix cm;
    cm.alphabet = alphabet;
    cm.codes.resize(pages, books);
    for (Eigen::Index p = 0; p < pages; ++p) {
        for (Eigen::Index m = 0; m < books; ++m) {
            if (skew <= 0.0) {
                cm.codes(p, m) =
                    static_cast<std::int32_t>(rng.below(static_cast<std::uint64_t>(alphabet)));
            } else {
                // truncated geometric over [0, K)
                const double u = rng.uniform();
                const double g = std::floor(std::log1p(-u * (1.0 - std::pow(0.5, skew * alphabet))) /
                                            std::log(std::pow(0.5, skew)));
                cm.codes(p, m) = static_cast<std::int32_t>(
                    std::min<double>(g, static_cast<double>(alphabet - 1)));
            }
        }
    }
    return cm;
}

// Central finite difference of a scalar function at x, step scaled to x.
inline double central_diff(const std::function<double(double)>& f, double x) {
    const double h = 1e-5 * std::max(1.0, std::abs(x));
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

// |a - b| relative to max(1, |a|, |b|).
inline double rel_err(double a, double b) {
    return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace aqc::testing
