#pragma once

// Small manually differentiated MLP classifiers used as the task models the
// codec compresses and finetunes against. Scalar-templated so gradient
// checks can run the identical graph in double.

#include "aqc/error.hpp"
#include "aqc/rng.hpp"
#include "aqc/tensor_archive.hpp"
#include "aqc/types.hpp"

#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

namespace aqc {

enum class Activation { Tanh, Relu };

Activation activation_from_string(const std::string& name);
std::string to_string(Activation act);

struct MlpSpec {
    std::vector<std::int32_t> widths;  // input, hidden..., classes
    Activation act = Activation::Tanh;
    std::uint64_t seed = 0;

    void check() const {
        if (widths.size() < 2) {
            throw ArgumentError("MLP needs at least input and output widths");
        }
        for (std::int32_t w : widths) {
            if (w < 1) {
                throw ArgumentError("MLP widths must be positive");
            }
        }
    }

    std::size_t layers() const { return widths.size() - 1; }
};

struct Dataset {
    MatF x;                       // N×d
    std::vector<std::int32_t> y;  // N labels in [0, classes)
    std::int32_t classes = 0;

    Eigen::Index size() const { return x.rows(); }
};

// Parameters ordered layer-major, weights before biases; this layout is the
// contract that flatten/scatter and the exported archives all share.
template <class Scalar>
struct TaskModel {
    MlpSpec spec;
    std::vector<Mat<Scalar>> weights;  // layer l: widths[l] × widths[l+1]
    std::vector<Vec<Scalar>> biases;   // layer l: widths[l+1]

    std::uint64_t parameter_count() const {
        std::uint64_t t = 0;
        for (std::size_t l = 0; l < weights.size(); ++l) {
            t += static_cast<std::uint64_t>(weights[l].size()) +
                 static_cast<std::uint64_t>(biases[l].size());
        }
        return t;
    }
};

template <class Scalar>
struct TaskGrads {
    std::vector<Mat<Scalar>> weights;
    std::vector<Vec<Scalar>> biases;
};

// Weights uniform in ±sqrt(6/(fan_in+fan_out)), biases zero, per seed.
template <class Scalar>
TaskModel<Scalar> init_task(const MlpSpec& spec) {
    spec.check();
    Rng rng(spec.seed);
    TaskModel<Scalar> model;
    model.spec = spec;
    for (std::size_t l = 0; l < spec.layers(); ++l) {
        const Eigen::Index in = spec.widths[l];
        const Eigen::Index out = spec.widths[l + 1];
        Mat<Scalar> w(in, out);
        const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
        for (Eigen::Index i = 0; i < in; ++i) {
            for (Eigen::Index j = 0; j < out; ++j) {
                w(i, j) = static_cast<Scalar>(rng.uniform(-bound, bound));
            }
        }
        model.weights.push_back(std::move(w));
        model.biases.push_back(Vec<Scalar>::Zero(out));
    }
    return model;
}

template <class Scalar>
Mat<Scalar> apply_activation(const Mat<Scalar>& z, Activation act) {
    if (act == Activation::Tanh) {
        return z.array().tanh();
    }
    return z.cwiseMax(Scalar(0));
}

// Logits for a batch; optionally records post-activation values per hidden
// layer for the backward pass.
template <class Scalar>
Mat<Scalar> forward(const TaskModel<Scalar>& model, const Mat<Scalar>& x,
                    std::vector<Mat<Scalar>>* activations = nullptr) {
    if (x.cols() != model.spec.widths.front()) {
        throw ArgumentError("feature width does not match model input width");
    }
    Mat<Scalar> h = x;
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
        Mat<Scalar> z = (h * model.weights[l]).rowwise() + model.biases[l].transpose();
        if (l + 1 < model.weights.size()) {
            h = apply_activation(z, model.spec.act);
            if (activations != nullptr) {
                activations->push_back(h);
            }
        } else {
            h = std::move(z);
        }
    }
    return h;
}

// Mean softmax cross-entropy over the batch, max-subtracted for stability.
template <class Scalar>
Scalar task_loss(const TaskModel<Scalar>& model, const Mat<Scalar>& x,
                 const std::vector<std::int32_t>& y) {
    const Mat<Scalar> logits = forward(model, x);
    Scalar loss = 0;
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        const Scalar mx = logits.row(i).maxCoeff();
        const Scalar lse = std::log((logits.row(i).array() - mx).exp().sum()) + mx;
        loss += lse - logits(i, y[static_cast<std::size_t>(i)]);
    }
    return loss / static_cast<Scalar>(logits.rows());
}

// Loss plus exact gradients for every weight and bias.
template <class Scalar>
Scalar loss_and_backward(const TaskModel<Scalar>& model, const Mat<Scalar>& x,
                         const std::vector<std::int32_t>& y, TaskGrads<Scalar>& grads) {
    if (x.rows() == 0 || static_cast<std::size_t>(x.rows()) != y.size()) {
        throw ArgumentError("batch features and labels disagree");
    }
    const Eigen::Index B = x.rows();
    const std::size_t L = model.weights.size();

    std::vector<Mat<Scalar>> activations;
    activations.reserve(L);
    const Mat<Scalar> logits = forward(model, x, &activations);

    // softmax probabilities and loss in one pass
    Mat<Scalar> delta = logits;
    Scalar loss = 0;
    for (Eigen::Index i = 0; i < B; ++i) {
        const Scalar mx = delta.row(i).maxCoeff();
        Vec<Scalar> e = (delta.row(i).array() - mx).exp();
        const Scalar z = e.sum();
        loss += std::log(z) + mx - delta(i, y[static_cast<std::size_t>(i)]);
        delta.row(i) = (e / z).transpose();
        delta(i, y[static_cast<std::size_t>(i)]) -= Scalar(1);
    }
    loss /= static_cast<Scalar>(B);
    delta /= static_cast<Scalar>(B);

    grads.weights.assign(L, {});
    grads.biases.assign(L, {});
    for (std::size_t l = L; l-- > 0;) {
        const Mat<Scalar>& input = l == 0 ? x : activations[l - 1];
        grads.weights[l] = input.transpose() * delta;
        grads.biases[l] = delta.colwise().sum().transpose();
        if (l == 0) {
            break;
        }
        Mat<Scalar> d_act = delta * model.weights[l].transpose();
        if (model.spec.act == Activation::Tanh) {
            delta = d_act.cwiseProduct(
                (Scalar(1) - activations[l - 1].array().square()).matrix());
        } else {
            delta = d_act.cwiseProduct(
                (activations[l - 1].array() > Scalar(0)).template cast<Scalar>().matrix());
        }
    }
    return loss;
}

// Fraction of argmax-correct predictions; ties break toward the lowest class.
template <class Scalar>
double evaluate(const TaskModel<Scalar>& model, const Dataset& data) {
    if (data.size() == 0) {
        throw ArgumentError("cannot evaluate on an empty dataset");
    }
    const Mat<Scalar> logits = forward(model, data.x.cast<Scalar>().eval());
    std::int64_t correct = 0;
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        Eigen::Index best = 0;
        for (Eigen::Index c = 1; c < logits.cols(); ++c) {
            if (logits(i, c) > logits(i, best)) {
                best = c;
            }
        }
        if (best == data.y[static_cast<std::size_t>(i)]) {
            ++correct;
        }
    }
    return static_cast<double>(correct) / static_cast<double>(logits.rows());
}

struct TrainTaskConfig {
    std::int32_t epochs = 80;
    double lr = 0.05;
    std::int32_t batch_size = 32;
};

template <class Scalar>
struct TaskTrainResult {
    TaskModel<Scalar> model;
    std::vector<double> accuracy_history;  // train accuracy per epoch
};

// Plain minibatch gradient descent; deterministic given spec.seed.
template <class Scalar>
TaskTrainResult<Scalar> train_task(const MlpSpec& spec, const Dataset& data,
                                   const TrainTaskConfig& cfg) {
    spec.check();
    if (data.size() == 0) {
        throw ArgumentError("cannot train on an empty dataset");
    }
    if (cfg.epochs < 1 || cfg.batch_size < 1) {
        throw ArgumentError("invalid task training config");
    }

    TaskTrainResult<Scalar> result;
    result.model = init_task<Scalar>(spec);
    TaskModel<Scalar>& model = result.model;

    const Mat<Scalar> x = data.x.template cast<Scalar>();
    Rng rng(spec.seed + 0x9e3779b97f4a7c15ull);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(data.size()));
    std::iota(order.begin(), order.end(), 0);

    for (std::int32_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order.begin(), order.end());
        for (std::size_t begin = 0; begin < order.size();
             begin += static_cast<std::size_t>(cfg.batch_size)) {
            const auto size = std::min<std::size_t>(cfg.batch_size, order.size() - begin);
            Mat<Scalar> bx(size, x.cols());
            std::vector<std::int32_t> by(size);
            for (std::size_t i = 0; i < size; ++i) {
                bx.row(static_cast<Eigen::Index>(i)) = x.row(order[begin + i]);
                by[i] = data.y[static_cast<std::size_t>(order[begin + i])];
            }
            TaskGrads<Scalar> grads;
            const Scalar loss = loss_and_backward(model, bx, by, grads);
            if (!std::isfinite(static_cast<double>(loss))) {
                throw TrainingError("task loss diverged at epoch " + std::to_string(epoch));
            }
            for (std::size_t l = 0; l < model.weights.size(); ++l) {
                model.weights[l] -= static_cast<Scalar>(cfg.lr) * grads.weights[l];
                model.biases[l] -= static_cast<Scalar>(cfg.lr) * grads.biases[l];
            }
        }
        result.accuracy_history.push_back(evaluate(model, data));
    }
    return result;
}

// Archive layout: layer<i>.weight (shape [in, out], row-major), then
// layer<i>.bias (shape [out]), in layer order.
TensorArchive export_model(const TaskModel<float>& model);
TaskModel<float> import_model(const TensorArchive& archive, Activation act);

// Recovers layer widths from "layer<i>.weight"/"layer<i>.bias" shape pairs.
MlpSpec infer_spec(const std::vector<std::pair<std::string, std::vector<std::int64_t>>>&
                       names_and_shapes,
                   Activation act);

// Gaussian clusters at deterministic centers (radius-4 circle in the first
// two feature dimensions); reproducible given seed.
Dataset make_blobs(std::int32_t n_per_class, std::int32_t classes, std::int32_t dim,
                   double spread, std::uint64_t seed);

// IDX image/label files (big-endian magic per that format); pixels scaled to
// [0, 1]. Not needed by the blobs pipeline, available for plugging in a real
// small image task.
Dataset load_idx(const std::string& images_path, const std::string& labels_path);

}  // namespace aqc
