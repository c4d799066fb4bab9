// SPDX-License-Identifier: Apache-2.0
#include "xling/lm/train.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include "xling/lm/checkpoint.hpp"

namespace xling::lm {

double learning_rate_at(const TrainConfig& cfg, int step) {
    if (step < cfg.warmup_steps)
        return cfg.lr_max * (step + 1) / static_cast<double>(cfg.warmup_steps);
    double progress = (step - cfg.warmup_steps) /
                      std::max(1.0, static_cast<double>(cfg.steps - cfg.warmup_steps));
    progress = std::min(1.0, progress);
    return cfg.lr_min + 0.5 * (cfg.lr_max - cfg.lr_min) * (1.0 + std::cos(M_PI * progress));
}

namespace {

// Chunk order for one step, derived from (seed, epoch) so a resumed run sees
// the same data as an uninterrupted one.
std::vector<size_t> epoch_order(size_t n, uint64_t seed, int epoch) {
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(mix_seed(seed, 1000 + epoch));
    std::shuffle(order.begin(), order.end(), rng);
    return order;
}

void emit_checkpoint(const Model<float>& model, const OptimizerState& opt, int step,
                     const std::vector<uint64_t>& lineage, const std::string& dir,
                     std::vector<std::string>& paths) {
    if (dir.empty()) return;
    std::filesystem::create_directories(dir);
    Checkpoint ckpt;
    ckpt.step = step;
    ckpt.config = model.cfg;
    ckpt.seed_lineage = lineage;
    ckpt.model = model;
    ckpt.optimizer = opt;
    ckpt.has_optimizer = true;
    char name[64];
    std::snprintf(name, sizeof(name), "step_%06d.ckpt", step);
    std::string path = dir + "/" + name;
    save_checkpoint(ckpt, path);
    paths.push_back(path);
}

}  // namespace

TrainResult train(Model<float>& model, const std::vector<corpus::Chunk>& mixture,
                  const TrainConfig& cfg, OptimizerState& opt,
                  const std::string& checkpoint_dir, int pad_id,
                  const std::vector<uint64_t>& seed_lineage,
                  const std::function<void(const LossEntry&)>& on_step) {
    if (mixture.empty()) throw DataError("train: empty mixture");
    if (cfg.warmup_steps >= cfg.steps)
        throw ConfigError("train: warmup_steps must be below total steps");

    size_t n_params = model.params.size();
    if (opt.m.size() != n_params) {
        opt.m.assign(n_params, 0.0f);
        opt.v.assign(n_params, 0.0f);
        opt.step = 0;
    }

    std::vector<uint64_t> lineage = seed_lineage;
    lineage.push_back(cfg.seed);

    TrainResult result;
    Activations<float> acts;
    int Tn = static_cast<int>(mixture[0].tokens.size());
    std::vector<int> batch_ids(static_cast<size_t>(cfg.batch_size) * Tn);

    size_t steps_per_epoch = std::max<size_t>(1, mixture.size() / cfg.batch_size);

    if (opt.step == 0)
        emit_checkpoint(model, opt, 0, lineage, checkpoint_dir, result.checkpoint_paths);

    for (int step = opt.step; step < cfg.steps; ++step) {
        int epoch = static_cast<int>(step / steps_per_epoch);
        auto order = epoch_order(mixture.size(), cfg.seed, epoch);
        size_t base = (step % steps_per_epoch) * cfg.batch_size;
        for (int b = 0; b < cfg.batch_size; ++b) {
            const auto& chunk = mixture[order[(base + b) % mixture.size()]];
            std::copy(chunk.tokens.begin(), chunk.tokens.end(),
                      batch_ids.begin() + static_cast<size_t>(b) * Tn);
        }

        std::fill(model.grads.begin(), model.grads.end(), 0.0f);
        float loss = loss_and_grad(model, batch_ids.data(), cfg.batch_size, Tn, pad_id, acts);
        if (!std::isfinite(loss))
            throw NumericError("train: non-finite loss at step " + std::to_string(step));

        // global gradient-norm clip
        double norm_sq = 0.0;
        for (float gv : model.grads) norm_sq += static_cast<double>(gv) * gv;
        double norm = std::sqrt(norm_sq);
        float scale = norm > cfg.grad_clip ? static_cast<float>(cfg.grad_clip / norm) : 1.0f;

        double lr = learning_rate_at(cfg, step);
        double bc1 = 1.0 - std::pow(cfg.beta1, step + 1);
        double bc2 = 1.0 - std::pow(cfg.beta2, step + 1);
        for (size_t i = 0; i < n_params; ++i) {
            float gv = model.grads[i] * scale;
            opt.m[i] = static_cast<float>(cfg.beta1 * opt.m[i] + (1.0 - cfg.beta1) * gv);
            opt.v[i] = static_cast<float>(cfg.beta2 * opt.v[i] + (1.0 - cfg.beta2) * gv * gv);
            double mhat = opt.m[i] / bc1;
            double vhat = opt.v[i] / bc2;
            double update = mhat / (std::sqrt(vhat) + 1e-8) + cfg.weight_decay * model.params[i];
            model.params[i] = static_cast<float>(model.params[i] - lr * update);
        }
        opt.step = step + 1;

        LossEntry entry{step, static_cast<double>(loss), lr};
        result.history.push_back(entry);
        if (on_step) on_step(entry);

        if ((step + 1) % cfg.checkpoint_every == 0 || step + 1 == cfg.steps)
            emit_checkpoint(model, opt, step + 1, lineage, checkpoint_dir,
                            result.checkpoint_paths);
    }
    return result;
}

void write_loss_history(const std::vector<LossEntry>& history, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write loss history: " + path);
    out << "step,loss,learning_rate\n";
    out.precision(10);
    for (const auto& e : history) out << e.step << "," << e.loss << "," << e.lr << "\n";
}

}  // namespace xling::lm
