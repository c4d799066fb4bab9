// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "xling/lm/model.hpp"

namespace xling::lm {

struct DecodeConfig {
    bool greedy = true;
    double temperature = 1.0;
    uint64_t seed = 0;
    int max_new_tokens = 32;
};

struct GenerateResult {
    std::vector<int> tokens;            // generated tokens only
    std::vector<double> logprobs;       // log p of each generated token (under the
                                        // steered model that produced it)
};

// Steered (or plain, scale 0 / no vectors) autoregressive decoding. Steering
// vectors are added to the residual stream after their block at every
// position, prompt and generated alike. Greedy decoding is deterministic;
// scale 0 is bit-identical to no steering.
GenerateResult generate(const Model<float>& model, const std::vector<int>& prompt,
                        const DecodeConfig& decode,
                        const std::vector<std::vector<float>>* steering_vectors = nullptr,
                        float steering_scale = 0.0f);

// Mean log-probability of `continuation` after `prompt` under the unsteered
// model; the plausibility proxy used by the steering sweep.
double mean_logprob(const Model<float>& model, const std::vector<int>& prompt,
                    const std::vector<int>& continuation);

}  // namespace xling::lm
