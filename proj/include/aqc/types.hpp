#pragma once

#include <Eigen/Core>

#include <cstdint>

namespace aqc {

// Dense row-major matrices throughout: parameter pages are rows, so the
// row-major layout makes page slices contiguous and flattening a memcpy.
template <class Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <class Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using MatF = Mat<float>;
using MatD = Mat<double>;
using VecF = Vec<float>;
using VecD = Vec<double>;

using IndexMat = Eigen::Matrix<std::int32_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// P×M discrete codes, one per (parameter page, codebook) pair, each in
// [0, alphabet).
struct CodeMatrix {
    IndexMat codes;
    std::int32_t alphabet = 0;

    Eigen::Index pages() const { return codes.rows(); }
    Eigen::Index books() const { return codes.cols(); }
};

constexpr const char* kVersion = "0.1.0";

}  // namespace aqc
