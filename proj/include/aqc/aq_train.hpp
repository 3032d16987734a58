#pragma once

// Minibatch training of the additive-quantization model on the page
// reconstruction loss. The backward pass differentiates the fixed forward
// graph (linear maps, tanh, softplus, softmax with the batch's Gumbel noise
// held constant) exactly; finite-difference tests instantiate it in double.

#include "aqc/aq_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

namespace aqc {

struct AqTrainConfig {
    std::int32_t epochs = 200;
    std::int32_t batch_size = 256;
    double lr = 1e-3;  // adaptive moment estimation step size
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::int32_t patience = 0;  // early stop after this many epochs without
                                // improvement; 0 disables
};

struct TrainLog {
    std::vector<double> epoch_loss;  // mean squared L2 over the epoch's pages
    AqTrainConfig config;            // settings the run actually used
};

// Gradients in the same shapes as the parameters they belong to.
template <class Scalar>
struct AqGrads {
    std::vector<Mat<Scalar>> theta1, theta2;  // per book
    std::vector<Vec<Scalar>> b1, b2;
    Codebooks<Scalar> books;

    static AqGrads zeros_like(const AqModel<Scalar>& model) {
        AqGrads g;
        for (const auto& eb : model.enc.books) {
            g.theta1.push_back(Mat<Scalar>::Zero(eb.theta1.rows(), eb.theta1.cols()));
            g.b1.push_back(Vec<Scalar>::Zero(eb.b1.size()));
            g.theta2.push_back(Mat<Scalar>::Zero(eb.theta2.rows(), eb.theta2.cols()));
            g.b2.push_back(Vec<Scalar>::Zero(eb.b2.size()));
        }
        for (const auto& basis : model.books) {
            g.books.push_back(Mat<Scalar>::Zero(basis.rows(), basis.cols()));
        }
        return g;
    }
};

// Reconstruction loss of one batch under fixed noise (null = noise off).
template <class Scalar>
Scalar aq_forward_loss(const Mat<Scalar>& batch, const AqModel<Scalar>& model,
                       const AqHyper& hyper, const BookStack<Scalar>* noise) {
    const BookStack<Scalar> alpha = encode_alpha(batch, model.enc, hyper);
    const BookStack<Scalar> d = soft_assign(alpha, hyper, noise);
    return recon_loss(batch, decode_soft(d, model.books));
}

// Loss plus exact gradients with respect to every encoder parameter and
// codebook entry. Accumulation is sequential, so results are deterministic.
template <class Scalar>
Scalar aq_loss_and_grad(const Mat<Scalar>& batch, const AqModel<Scalar>& model,
                        const AqHyper& hyper, const BookStack<Scalar>* noise,
                        AqGrads<Scalar>& grads) {
    const Eigen::Index B = batch.rows();
    const auto M = static_cast<std::size_t>(hyper.num_books);
    const Scalar tau = static_cast<Scalar>(hyper.tau);
    const Scalar eps = Scalar(detail::kLogitEps);

    // forward, keeping every intermediate the backward pass needs
    std::vector<Mat<Scalar>> hidden(M), z2(M), alpha(M), d(M);
    Mat<Scalar> recon = Mat<Scalar>::Zero(B, hyper.page_size);
    for (std::size_t m = 0; m < M; ++m) {
        const EncoderBook<Scalar>& eb = model.enc.books[m];
        hidden[m] = ((batch * eb.theta1).rowwise() + eb.b1.transpose()).array().tanh();
        z2[m] = (hidden[m] * eb.theta2).rowwise() + eb.b2.transpose();
        alpha[m] = z2[m].unaryExpr([](Scalar v) { return detail::softplus(v); });
        Mat<Scalar> logits = (alpha[m].array() + eps).log().matrix();
        if (noise != nullptr) {
            logits += (*noise)[m];
        }
        logits /= tau;
        detail::softmax_rows(logits);
        d[m] = std::move(logits);
        recon += d[m] * model.books[m];
    }
    const Scalar loss = recon_loss(batch, recon);

    // backward
    const Mat<Scalar> d_recon = (recon - batch) * (Scalar(2) / static_cast<Scalar>(B));
    for (std::size_t m = 0; m < M; ++m) {
        const EncoderBook<Scalar>& eb = model.enc.books[m];

        grads.books[m] += d[m].transpose() * d_recon;
        const Mat<Scalar> dd = d_recon * model.books[m].transpose();  // B×K

        // softmax backward per row: dz = s .* (ds - <ds, s>)
        Mat<Scalar> d_logits(dd.rows(), dd.cols());
        for (Eigen::Index i = 0; i < dd.rows(); ++i) {
            const Scalar dot = dd.row(i).cwiseProduct(d[m].row(i)).sum();
            d_logits.row(i) = d[m].row(i).cwiseProduct((dd.row(i).array() - dot).matrix());
        }
        d_logits /= tau;

        const Mat<Scalar> d_z2 =
            (d_logits.array() / (alpha[m].array() + eps) *
             z2[m].unaryExpr([](Scalar v) { return detail::sigmoid(v); }).array())
                .matrix();

        grads.theta2[m] += hidden[m].transpose() * d_z2;
        grads.b2[m] += d_z2.colwise().sum().transpose();

        const Mat<Scalar> d_hidden = d_z2 * eb.theta2.transpose();
        const Mat<Scalar> d_z1 =
            d_hidden.cwiseProduct((Scalar(1) - hidden[m].array().square()).matrix());

        grads.theta1[m] += batch.transpose() * d_z1;
        grads.b1[m] += d_z1.colwise().sum().transpose();
    }
    return loss;
}

namespace detail {

// Adaptive moment estimation state for one parameter tensor.
template <class ParamT>
struct AdamSlot {
    ParamT m1, m2;
    bool started = false;

    void step(ParamT& param, const ParamT& grad, const AqTrainConfig& cfg,
              std::int64_t t) {
        using Scalar = typename ParamT::Scalar;
        if (!started) {
            m1 = ParamT::Zero(grad.rows(), grad.cols());
            m2 = ParamT::Zero(grad.rows(), grad.cols());
            started = true;
        }
        const Scalar b1 = static_cast<Scalar>(cfg.beta1);
        const Scalar b2 = static_cast<Scalar>(cfg.beta2);
        m1 = b1 * m1 + (Scalar(1) - b1) * grad;
        m2 = (b2 * m2.array() + (Scalar(1) - b2) * grad.array().square()).matrix();
        const Scalar c1 = Scalar(1) - static_cast<Scalar>(std::pow(cfg.beta1, t));
        const Scalar c2 = Scalar(1) - static_cast<Scalar>(std::pow(cfg.beta2, t));
        param.array() -= static_cast<Scalar>(cfg.lr) * (m1.array() / c1) /
                         ((m2.array() / c2).sqrt() + static_cast<Scalar>(cfg.eps));
    }
};

}  // namespace detail

template <class Scalar>
struct AqTrainResult {
    AqModel<Scalar> model;
    TrainLog log;
};

// Minibatch descent on the reconstruction loss with soft Gumbel-softmax
// forward (fresh noise per batch) and exact gradients. Deterministic given
// hyper.seed.
template <class Scalar>
AqTrainResult<Scalar> train_aq(const Mat<Scalar>& pages, const AqHyper& hyper,
                               const AqTrainConfig& cfg) {
    hyper.check();
    if (pages.rows() == 0 || pages.cols() != hyper.page_size) {
        throw ArgumentError("page matrix does not match hyper page_size");
    }
    if (cfg.epochs < 1 || cfg.batch_size < 1 || !(cfg.lr >= 0.0)) {
        throw ArgumentError("invalid training config");
    }

    PageStats stats;
    stats.mean = pages.template cast<double>().mean();
    stats.stddev = std::sqrt(
        (pages.template cast<double>().array() - stats.mean).square().sum() /
        static_cast<double>(pages.size()));

    AqTrainResult<Scalar> result;
    result.model = init_model<Scalar>(hyper, stats);
    result.log.config = cfg;
    AqModel<Scalar>& model = result.model;

    const auto M = static_cast<std::size_t>(hyper.num_books);
    std::vector<detail::AdamSlot<Mat<Scalar>>> s_theta1(M), s_theta2(M), s_books(M);
    std::vector<detail::AdamSlot<Vec<Scalar>>> s_b1(M), s_b2(M);

    Rng rng(hyper.seed + 0x9e3779b97f4a7c15ull);  // decorrelate from init stream
    std::vector<Eigen::Index> order(static_cast<std::size_t>(pages.rows()));
    std::iota(order.begin(), order.end(), 0);

    std::int64_t t = 0;
    double best_loss = std::numeric_limits<double>::infinity();
    std::int32_t stale = 0;
    for (std::int32_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order.begin(), order.end());
        double epoch_sum = 0.0;
        for (std::size_t begin = 0; begin < order.size();
             begin += static_cast<std::size_t>(cfg.batch_size)) {
            const auto size = std::min<std::size_t>(cfg.batch_size, order.size() - begin);
            Mat<Scalar> batch(size, hyper.page_size);
            for (std::size_t i = 0; i < size; ++i) {
                batch.row(static_cast<Eigen::Index>(i)) = pages.row(order[begin + i]);
            }

            const BookStack<Scalar> noise = sample_gumbel<Scalar>(batch.rows(), hyper, rng);
            AqGrads<Scalar> grads = AqGrads<Scalar>::zeros_like(model);
            const Scalar loss = aq_loss_and_grad(batch, model, hyper, &noise, grads);
            if (!std::isfinite(static_cast<double>(loss))) {
                throw TrainingError("reconstruction loss diverged at epoch " +
                                    std::to_string(epoch));
            }
            epoch_sum += static_cast<double>(loss) * static_cast<double>(size);

            ++t;
            for (std::size_t m = 0; m < M; ++m) {
                EncoderBook<Scalar>& eb = model.enc.books[m];
                s_theta1[m].step(eb.theta1, grads.theta1[m], cfg, t);
                s_b1[m].step(eb.b1, grads.b1[m], cfg, t);
                s_theta2[m].step(eb.theta2, grads.theta2[m], cfg, t);
                s_b2[m].step(eb.b2, grads.b2[m], cfg, t);
                s_books[m].step(model.books[m], grads.books[m], cfg, t);
            }
        }
        const double epoch_loss = epoch_sum / static_cast<double>(pages.rows());
        result.log.epoch_loss.push_back(epoch_loss);

        if (epoch_loss < best_loss - 1e-12) {
            best_loss = epoch_loss;
            stale = 0;
        } else if (cfg.patience > 0 && ++stale >= cfg.patience) {
            break;
        }
    }
    return result;
}

}  // namespace aqc
