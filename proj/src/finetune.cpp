#include "aqc/finetune.hpp"

#include "aqc/aq_train.hpp"
#include "aqc/rng.hpp"

#include <cmath>
#include <numeric>

namespace aqc {

FinetuneResult finetune_loop(const ContainerData& container, Activation act,
                             const Dataset& train, const Dataset& holdout,
                             const FinetuneConfig& cfg) {
    cfg.check();
    if (train.size() == 0 || holdout.size() == 0) {
        throw ArgumentError("finetune needs non-empty train and holdout sets");
    }

    std::vector<std::pair<std::string, std::vector<std::int64_t>>> layout;
    for (const TensorSlot& slot : container.manifest.table) {
        layout.emplace_back(slot.name, slot.shape);
    }
    TaskModel<float> model = init_task<float>(infer_spec(layout, act));
    if (model.parameter_count() != container.manifest.total_scalars) {
        throw StructuralError("task model parameter count does not match container");
    }

    const CodeMatrix& codes = container.codes;
    FinetuneResult result;
    result.books = container.books;

    std::vector<detail::AdamSlot<MatF>> adam(result.books.size());
    AqTrainConfig adam_cfg;  // moment/epsilon defaults; lr comes from cfg
    adam_cfg.lr = cfg.lr;

    Rng rng(cfg.seed);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(train.size()));
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order.begin(), order.end());
    std::size_t cursor = 0;

    auto next_batch = [&](MatF& bx, std::vector<std::int32_t>& by) {
        const auto size = std::min<std::size_t>(cfg.batch_size, order.size());
        bx.resize(static_cast<Eigen::Index>(size), train.x.cols());
        by.resize(size);
        for (std::size_t i = 0; i < size; ++i) {
            if (cursor == order.size()) {
                rng.shuffle(order.begin(), order.end());
                cursor = 0;
            }
            bx.row(static_cast<Eigen::Index>(i)) = train.x.row(order[cursor]);
            by[i] = train.y[static_cast<std::size_t>(order[cursor])];
            ++cursor;
        }
    };

    auto record = [&](std::int32_t step, double loss) {
        scatter_pages(reconstruct_hard(codes, result.books), container.manifest, model);
        const double acc = evaluate(model, holdout);
        result.history.push_back({step, loss, acc});
        if (result.history.size() == 1 || acc > result.best_accuracy) {
            result.best_accuracy = acc;
            result.best_step = step;
        }
        return acc;
    };

    record(0, 0.0);
    Codebooks<float> best_books = result.books;

    MatF bx;
    std::vector<std::int32_t> by;
    for (std::int32_t step = 1; step <= cfg.steps; ++step) {
        next_batch(bx, by);
        const MatF recon = reconstruct_hard(codes, result.books);
        float loss = 0.0f;
        const MatF grad_pages =
            task_grad_pages(model, bx, by, recon, container.manifest, &loss);
        if (!std::isfinite(loss)) {
            throw TrainingError("task loss diverged at finetune step " +
                                std::to_string(step));
        }
        const Codebooks<float> grads = codebook_grad(grad_pages, codes, container.hyper);
        for (std::size_t m = 0; m < result.books.size(); ++m) {
            if (cfg.optimizer == FinetuneOptimizer::Gd) {
                result.books[m] -= static_cast<float>(cfg.lr) * grads[m];
            } else {
                adam[m].step(result.books[m], grads[m], adam_cfg, step);
            }
        }
        if (step % cfg.eval_every == 0 || step == cfg.steps) {
            const std::int32_t prev_best = result.best_step;
            record(step, static_cast<double>(loss));
            if (result.best_step != prev_best && result.best_step == step) {
                best_books = result.books;
            }
        }
    }

    result.books = std::move(best_books);
    return result;
}

}  // namespace aqc
