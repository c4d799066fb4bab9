// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "xling/lm/model.hpp"
#include "xling/lm/train.hpp"

namespace xling::lm {

// Versioned container: magic line, JSON manifest (config, step, seed lineage,
// tensor table, payload checksum), then named little-endian float32 tensors.
struct Checkpoint {
    int step = 0;
    ModelConfig config;
    std::vector<uint64_t> seed_lineage;
    Model<float> model;
    OptimizerState optimizer;
    bool has_optimizer = false;
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace xling::lm
