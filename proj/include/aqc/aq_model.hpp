#pragma once

// Additive-quantization model: per-codebook two-layer encoder, Gumbel-softmax
// discretization, and an additive decoder that reconstructs each parameter
// page as a sum of M basis vectors, one per codebook.
//
// Everything is templated on the scalar so the exact same computation graph
// runs in float for production and in double for finite-difference checks.

#include "aqc/error.hpp"
#include "aqc/rng.hpp"
#include "aqc/types.hpp"

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace aqc {

struct AqHyper {
    std::int32_t page_size = 8;   // D
    std::int32_t num_books = 4;   // M
    std::int32_t book_size = 32;  // K
    std::int32_t hidden = 64;     // H
    double tau = 1.0;             // Gumbel-softmax temperature
    std::uint64_t seed = 0;

    void check() const {
        if (page_size < 1 || num_books < 1 || book_size < 1 || hidden < 1) {
            throw ArgumentError("AqHyper dimensions must be >= 1");
        }
        if (!(tau > 0.0)) {
            throw ArgumentError("AqHyper tau must be positive");
        }
    }
};

// One codebook's encoder: alpha = softplus(theta2^T tanh(theta1^T w + b1) + b2).
template <class Scalar>
struct EncoderBook {
    Mat<Scalar> theta1;  // D×H
    Vec<Scalar> b1;      // H
    Mat<Scalar> theta2;  // H×K
    Vec<Scalar> b2;      // K
};

template <class Scalar>
struct Encoder {
    std::vector<EncoderBook<Scalar>> books;  // M entries, no weight sharing
};

// M codebooks of K basis vectors each, every basis vector D-dimensional.
template <class Scalar>
using Codebooks = std::vector<Mat<Scalar>>;  // each K×D

template <class Scalar>
struct AqModel {
    Encoder<Scalar> enc;
    Codebooks<Scalar> books;
};

// Per-codebook B×K matrices; used both for soft assignments and for the
// Gumbel noise samples that produce them.
template <class Scalar>
using BookStack = std::vector<Mat<Scalar>>;

struct PageStats {
    double mean = 0.0;
    double stddev = 0.0;
};

inline PageStats page_stats(const MatF& pages) {
    PageStats s;
    const auto n = static_cast<double>(pages.size());
    if (n == 0) {
        return s;
    }
    s.mean = pages.cast<double>().mean();
    s.stddev = std::sqrt((pages.cast<double>().array() - s.mean).square().sum() / n);
    return s;
}

// Encoder weights uniform in ±sqrt(6/(fan_in+fan_out)), biases zero.
// Codebook entries zero-mean Gaussian with sd = stddev/sqrt(M) so the sum of
// M basis vectors starts at the data scale; falls back to 0.01 when the
// input is constant.
template <class Scalar>
AqModel<Scalar> init_model(const AqHyper& hyper, const PageStats& stats) {
    hyper.check();
    if (stats.stddev < 0.0) {
        throw ArgumentError("page stddev must be non-negative");
    }
    Rng rng(hyper.seed);
    const auto D = hyper.page_size;
    const auto M = hyper.num_books;
    const auto K = hyper.book_size;
    const auto H = hyper.hidden;

    auto glorot = [&rng](Eigen::Index rows, Eigen::Index cols) {
        Mat<Scalar> w(rows, cols);
        const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
        for (Eigen::Index i = 0; i < rows; ++i) {
            for (Eigen::Index j = 0; j < cols; ++j) {
                w(i, j) = static_cast<Scalar>(rng.uniform(-bound, bound));
            }
        }
        return w;
    };

    AqModel<Scalar> model;
    for (std::int32_t m = 0; m < M; ++m) {
        EncoderBook<Scalar> book;
        book.theta1 = glorot(D, H);
        book.b1 = Vec<Scalar>::Zero(H);
        book.theta2 = glorot(H, K);
        book.b2 = Vec<Scalar>::Zero(K);
        model.enc.books.push_back(std::move(book));
    }

    const double sd = stats.stddev > 0.0 ? stats.stddev / std::sqrt(static_cast<double>(M))
                                         : 0.01;
    for (std::int32_t m = 0; m < M; ++m) {
        Mat<Scalar> basis(K, D);
        for (std::int32_t k = 0; k < K; ++k) {
            for (std::int32_t d = 0; d < D; ++d) {
                basis(k, d) = static_cast<Scalar>(sd * rng.normal());
            }
        }
        model.books.push_back(std::move(basis));
    }
    return model;
}

namespace detail {

template <class Scalar>
Scalar softplus(Scalar x) {
    // max(x,0) + log1p(exp(-|x|)), stable for large |x|
    return std::max<Scalar>(x, Scalar(0)) + std::log1p(std::exp(-std::abs(x)));
}

template <class Scalar>
Scalar sigmoid(Scalar x) {
    if (x >= Scalar(0)) {
        return Scalar(1) / (Scalar(1) + std::exp(-x));
    }
    const Scalar e = std::exp(x);
    return e / (Scalar(1) + e);
}

constexpr double kLogitEps = 1e-10;

// softmax over each row, max-subtracted
template <class Scalar>
void softmax_rows(Mat<Scalar>& z) {
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        auto row = z.row(i);
        const Scalar mx = row.maxCoeff();
        row = (row.array() - mx).exp();
        row /= row.sum();
    }
}

}  // namespace detail

// Fresh Gumbel(0,1) samples for one batch, sampled book-major then row-major.
template <class Scalar>
BookStack<Scalar> sample_gumbel(Eigen::Index batch, const AqHyper& hyper, Rng& rng) {
    BookStack<Scalar> g(hyper.num_books);
    for (auto& gm : g) {
        gm.resize(batch, hyper.book_size);
        for (Eigen::Index i = 0; i < batch; ++i) {
            for (Eigen::Index k = 0; k < hyper.book_size; ++k) {
                gm(i, k) = static_cast<Scalar>(rng.gumbel());
            }
        }
    }
    return g;
}

// Encoder activations alpha for every page in the batch; one B×K matrix per
// codebook.
template <class Scalar>
BookStack<Scalar> encode_alpha(const Mat<Scalar>& pages, const Encoder<Scalar>& enc,
                               const AqHyper& hyper) {
    if (pages.cols() != hyper.page_size) {
        throw ArgumentError("page width does not match hyper page_size");
    }
    if (static_cast<std::int32_t>(enc.books.size()) != hyper.num_books) {
        throw ArgumentError("encoder book count does not match hyper");
    }
    BookStack<Scalar> alpha(hyper.num_books);
    for (std::int32_t m = 0; m < hyper.num_books; ++m) {
        const EncoderBook<Scalar>& eb = enc.books[m];
        Mat<Scalar> hidden = ((pages * eb.theta1).rowwise() + eb.b1.transpose())
                                 .array()
                                 .tanh();
        Mat<Scalar> z2 = (hidden * eb.theta2).rowwise() + eb.b2.transpose();
        alpha[m] = z2.unaryExpr([](Scalar v) { return detail::softplus(v); });
    }
    return alpha;
}

// Soft assignments d = softmax((log(alpha+eps) + g)/tau); `noise` may be
// null for the noise-free path. Each row sums to 1.
template <class Scalar>
BookStack<Scalar> soft_assign(const BookStack<Scalar>& alpha, const AqHyper& hyper,
                              const BookStack<Scalar>* noise) {
    BookStack<Scalar> d(alpha.size());
    for (std::size_t m = 0; m < alpha.size(); ++m) {
        Mat<Scalar> logits =
            (alpha[m].array() + Scalar(detail::kLogitEps)).log().matrix();
        if (noise != nullptr) {
            logits += (*noise)[m];
        }
        logits /= static_cast<Scalar>(hyper.tau);
        detail::softmax_rows(logits);
        d[m] = std::move(logits);
    }
    return d;
}

template <class Scalar>
BookStack<Scalar> encode_soft(const Mat<Scalar>& pages, const Encoder<Scalar>& enc,
                              const AqHyper& hyper, Rng& rng, bool noise_on) {
    BookStack<Scalar> alpha = encode_alpha(pages, enc, hyper);
    BookStack<Scalar> d;
    if (noise_on) {
        BookStack<Scalar> g = sample_gumbel<Scalar>(pages.rows(), hyper, rng);
        d = soft_assign(alpha, hyper, &g);
    } else {
        d = soft_assign(alpha, hyper, nullptr);
    }
    for (std::size_t m = 0; m < d.size(); ++m) {
        for (Eigen::Index i = 0; i < d[m].rows(); ++i) {
            if (!d[m].row(i).allFinite()) {
                throw NumericError("non-finite assignment for page " + std::to_string(i) +
                                   " in codebook " + std::to_string(m));
            }
        }
    }
    return d;
}

// w~ = sum_m d^m A^m
template <class Scalar>
Mat<Scalar> decode_soft(const BookStack<Scalar>& d, const Codebooks<Scalar>& books) {
    if (d.size() != books.size()) {
        throw ArgumentError("assignment/codebook count mismatch");
    }
    Mat<Scalar> recon = Mat<Scalar>::Zero(d.empty() ? 0 : d[0].rows(),
                                          books.empty() ? 0 : books[0].cols());
    for (std::size_t m = 0; m < books.size(); ++m) {
        recon += d[m] * books[m];
    }
    return recon;
}

// (1/P) sum_p ||w_p - w~_p||^2
template <class Scalar>
Scalar recon_loss(const Mat<Scalar>& pages, const Mat<Scalar>& recon) {
    if (pages.rows() != recon.rows() || pages.cols() != recon.cols()) {
        throw ArgumentError("recon_loss shape mismatch");
    }
    if (pages.rows() == 0) {
        return Scalar(0);
    }
    return (pages - recon).squaredNorm() / static_cast<Scalar>(pages.rows());
}

// Hard codes: per page and codebook, argmax of alpha with noise off. Ties
// break toward the lowest index.
template <class Scalar>
CodeMatrix extract_codes(const Mat<Scalar>& pages, const Encoder<Scalar>& enc,
                         const AqHyper& hyper) {
    const BookStack<Scalar> alpha = encode_alpha(pages, enc, hyper);
    CodeMatrix cm;
    cm.alphabet = hyper.book_size;
    cm.codes.resize(pages.rows(), hyper.num_books);
    for (std::int32_t m = 0; m < hyper.num_books; ++m) {
        const Mat<Scalar>& a = alpha[m];
        for (Eigen::Index p = 0; p < a.rows(); ++p) {
            std::int32_t best = 0;
            Scalar best_val = a(p, 0);
            for (Eigen::Index k = 1; k < a.cols(); ++k) {
                if (a(p, k) > best_val) {
                    best_val = a(p, k);
                    best = static_cast<std::int32_t>(k);
                }
            }
            cm.codes(p, m) = best;
        }
    }
    return cm;
}

// w~_p = sum_m A^m[codes[p][m]], accumulated in ascending m so the result is
// bit-exact reproducible everywhere the same codes and books appear.
template <class Scalar>
Mat<Scalar> reconstruct_hard(const CodeMatrix& cm, const Codebooks<Scalar>& books) {
    if (static_cast<std::size_t>(cm.books()) != books.size()) {
        throw StructuralError("code matrix book count does not match codebooks");
    }
    const Eigen::Index D = books.empty() ? 0 : books[0].cols();
    Mat<Scalar> recon = Mat<Scalar>::Zero(cm.pages(), D);
    for (Eigen::Index m = 0; m < cm.books(); ++m) {
        const Mat<Scalar>& basis = books[static_cast<std::size_t>(m)];
        for (Eigen::Index p = 0; p < cm.pages(); ++p) {
            const std::int32_t k = cm.codes(p, m);
            if (k < 0 || k >= basis.rows()) {
                throw StructuralError("code out of range at page " + std::to_string(p) +
                                      ", book " + std::to_string(m));
            }
            recon.row(p) += basis.row(k);
        }
    }
    return recon;
}

}  // namespace aqc
