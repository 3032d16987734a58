#pragma once

// Codebook finetuning against a task objective with the discrete codes
// frozen. The surrogate loss sum_p g_p·w~_p, with g_p the detached task
// gradient for page p, has codebook gradients identical to the task loss's,
// so one scatter-add per step trains the codebooks directly.

#include "aqc/aq_model.hpp"
#include "aqc/container.hpp"
#include "aqc/mlp.hpp"
#include "aqc/pager.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace aqc {

// Writes the first T scalars of the page matrix into the model's parameter
// tensors following the manifest order; the padded tail is discarded.
template <class Scalar>
void scatter_pages(const Mat<Scalar>& pages, const PageManifest& manifest,
                   TaskModel<Scalar>& model) {
    if (static_cast<std::uint64_t>(pages.rows()) != manifest.page_count ||
        static_cast<std::uint64_t>(pages.cols()) != manifest.page_size) {
        throw StructuralError("page matrix dimensions do not match manifest");
    }
    if (manifest.table.size() != model.spec.layers() * 2) {
        throw StructuralError("manifest table does not match model layout");
    }
    const Scalar* stream = pages.data();
    for (std::size_t l = 0; l < model.spec.layers(); ++l) {
        const TensorSlot& ws = manifest.table[l * 2];
        const TensorSlot& bs = manifest.table[l * 2 + 1];
        Mat<Scalar>& w = model.weights[l];
        Vec<Scalar>& b = model.biases[l];
        if (ws.count != static_cast<std::uint64_t>(w.size()) ||
            bs.count != static_cast<std::uint64_t>(b.size())) {
            throw StructuralError("manifest slot sizes do not match model layer " +
                                  std::to_string(l));
        }
        std::copy(stream + ws.offset, stream + ws.offset + ws.count, w.data());
        std::copy(stream + bs.offset, stream + bs.offset + bs.count, b.data());
    }
}

// Inverse direction: flattens per-tensor gradients in manifest order into a
// P×D matrix, zero padding the tail.
template <class Scalar>
Mat<Scalar> gather_grad_pages(const TaskGrads<Scalar>& grads, const PageManifest& manifest) {
    Mat<Scalar> out = Mat<Scalar>::Zero(static_cast<Eigen::Index>(manifest.page_count),
                                        manifest.page_size);
    Scalar* stream = out.data();
    if (manifest.table.size() != grads.weights.size() * 2) {
        throw StructuralError("manifest table does not match gradient layout");
    }
    for (std::size_t l = 0; l < grads.weights.size(); ++l) {
        const TensorSlot& ws = manifest.table[l * 2];
        const TensorSlot& bs = manifest.table[l * 2 + 1];
        if (ws.count != static_cast<std::uint64_t>(grads.weights[l].size()) ||
            bs.count != static_cast<std::uint64_t>(grads.biases[l].size())) {
            throw StructuralError("gradient shapes do not match manifest layer " +
                                  std::to_string(l));
        }
        std::copy(grads.weights[l].data(), grads.weights[l].data() + ws.count,
                  stream + ws.offset);
        std::copy(grads.biases[l].data(), grads.biases[l].data() + bs.count,
                  stream + bs.offset);
    }
    return out;
}

// Runs the task forward/backward with parameters set to the reconstruction
// and returns the task gradients reshaped to P×D: row p is dL_task/dw~_p.
template <class Scalar>
Mat<Scalar> task_grad_pages(TaskModel<Scalar>& model, const Mat<Scalar>& x,
                            const std::vector<std::int32_t>& y, const Mat<Scalar>& recon,
                            const PageManifest& manifest, Scalar* loss_out = nullptr) {
    scatter_pages(recon, manifest, model);
    TaskGrads<Scalar> grads;
    const Scalar loss = loss_and_backward(model, x, y, grads);
    if (loss_out != nullptr) {
        *loss_out = loss;
    }
    return gather_grad_pages(grads, manifest);
}

// L_ft = sum_p g_p · w~_p with G treated as constant.
template <class Scalar>
Scalar finetune_loss(const Mat<Scalar>& grad_pages, const CodeMatrix& codes,
                     const Codebooks<Scalar>& books) {
    const Mat<Scalar> recon = reconstruct_hard(codes, books);
    if (grad_pages.rows() != recon.rows() || grad_pages.cols() != recon.cols()) {
        throw StructuralError("gradient matrix shape does not match reconstruction");
    }
    return grad_pages.cwiseProduct(recon).sum();
}

// d L_ft / d A^m[k] = sum over pages p with codes[p][m] == k of g_p. The
// codes receive no gradient. Linear in A, so this is exact, not approximate.
template <class Scalar>
Codebooks<Scalar> codebook_grad(const Mat<Scalar>& grad_pages, const CodeMatrix& codes,
                                const AqHyper& hyper) {
    if (grad_pages.rows() != codes.pages() || codes.books() != hyper.num_books ||
        codes.alphabet != hyper.book_size ||
        grad_pages.cols() != hyper.page_size) {
        throw StructuralError("codebook_grad inputs are mutually inconsistent");
    }
    Codebooks<Scalar> grads(static_cast<std::size_t>(hyper.num_books),
                            Mat<Scalar>::Zero(hyper.book_size, hyper.page_size));
    for (Eigen::Index m = 0; m < codes.books(); ++m) {
        Mat<Scalar>& g = grads[static_cast<std::size_t>(m)];
        for (Eigen::Index p = 0; p < codes.pages(); ++p) {
            g.row(codes.codes(p, m)) += grad_pages.row(p);
        }
    }
    return grads;
}

enum class FinetuneOptimizer { Gd, Adam };

struct FinetuneConfig {
    double lr = 0.05;
    FinetuneOptimizer optimizer = FinetuneOptimizer::Gd;
    std::int32_t steps = 200;
    std::int32_t batch_size = 64;
    std::uint64_t seed = 0;
    std::int32_t eval_every = 20;

    void check() const {
        if (!(lr >= 0.0) || steps < 1 || batch_size < 1 || eval_every < 1) {
            throw ArgumentError("invalid finetune config");
        }
    }
};

struct FinetuneRecord {
    std::int32_t step = 0;   // 0 = before any update
    double task_loss = 0.0;  // batch loss at that step
    double accuracy = 0.0;   // held-out accuracy
};

struct FinetuneResult {
    Codebooks<float> books;  // best checkpoint by held-out accuracy
    std::vector<FinetuneRecord> history;
    std::int32_t best_step = 0;
    double best_accuracy = 0.0;
};

// Per step: reconstruct pages, scatter into the task model, compute G on a
// fresh minibatch, scatter-add into codebook gradients, and step the
// codebooks only. Codes and encoder stay untouched.
FinetuneResult finetune_loop(const ContainerData& container, Activation act,
                             const Dataset& train, const Dataset& holdout,
                             const FinetuneConfig& cfg);

}  // namespace aqc
