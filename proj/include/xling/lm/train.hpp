// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <string>
#include <vector>

#include "xling/corpus/pack.hpp"
#include "xling/lm/model.hpp"

namespace xling::lm {

struct TrainConfig {
    int batch_size = 8;
    int steps = 200;
    int warmup_steps = 20;
    double lr_max = 2.0e-4;
    double lr_min = 2.0e-5;
    double beta1 = 0.9;
    double beta2 = 0.95;
    double weight_decay = 0.1;
    double grad_clip = 1.0;
    int checkpoint_every = 50;
    uint64_t seed = 0;
};

struct LossEntry {
    int step = 0;
    double loss = 0.0;
    double lr = 0.0;
};

// AdamW first/second moments plus the step the moments are synced to.
struct OptimizerState {
    std::vector<float> m;
    std::vector<float> v;
    int step = 0;
};

struct TrainResult {
    std::vector<LossEntry> history;
    std::vector<std::string> checkpoint_paths;  // empty when checkpoint_dir empty
};

// Cosine schedule with linear warmup.
double learning_rate_at(const TrainConfig& cfg, int step);

// Trains in place. Checkpoints (config + params + optimizer state) are written
// to checkpoint_dir at the configured cadence plus step 0 and the final step.
// Resuming from a saved checkpoint reproduces the uninterrupted run bit-exactly.
// Throws NumericError on a non-finite loss, naming the step.
TrainResult train(Model<float>& model, const std::vector<corpus::Chunk>& mixture,
                  const TrainConfig& cfg, OptimizerState& opt,
                  const std::string& checkpoint_dir, int pad_id,
                  const std::vector<uint64_t>& seed_lineage = {},
                  const std::function<void(const LossEntry&)>& on_step = nullptr);

void write_loss_history(const std::vector<LossEntry>& history, const std::string& path);

}  // namespace xling::lm
