// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "xling/lm/model.hpp"

namespace xling::probes {

// Mean-pooled per-sentence residual-stream vectors, tap 0 (post-embedding)
// through tap layers. Row-major [sentence, tap, dim].
struct ActivationSet {
    int sentences = 0;
    int taps = 0;  // layers + 1
    int dim = 0;
    std::vector<float> values;
    std::vector<std::string> labels;    // language per sentence
    std::vector<int64_t> pair_ids;      // -1 when unpaired

    const float* row(int sentence, int tap) const {
        return values.data() + (static_cast<size_t>(sentence) * taps + tap) * dim;
    }
    float* row(int sentence, int tap) {
        return values.data() + (static_cast<size_t>(sentence) * taps + tap) * dim;
    }
};

// Per-sentence mean activation of every post-activation gated-MLP hidden
// unit. Row-major [sentence, layer, hidden].
struct NeuronTable {
    int sentences = 0;
    int layers = 0;
    int hidden = 0;
    std::vector<float> values;
    std::vector<std::string> labels;

    float at(int sentence, int layer, int neuron) const {
        return values[(static_cast<size_t>(sentence) * layers + layer) * hidden + neuron];
    }
};

struct ExtractionResult {
    ActivationSet activations;
    NeuronTable neurons;
};

// One forward per sentence; pooling averages over real tokens only (pad, bos
// and eos excluded).
ExtractionResult extract_all(const lm::Model<float>& model,
                             const std::vector<std::vector<int>>& sentences,
                             const std::vector<std::string>& labels,
                             const std::vector<int64_t>& pair_ids,
                             const std::vector<int>& special_ids);

ActivationSet extract_sentence_representations(const lm::Model<float>& model,
                                               const std::vector<std::vector<int>>& sentences,
                                               const std::vector<std::string>& labels,
                                               const std::vector<int64_t>& pair_ids,
                                               const std::vector<int>& special_ids);

NeuronTable extract_neuron_activations(const lm::Model<float>& model,
                                       const std::vector<std::vector<int>>& sentences,
                                       const std::vector<std::string>& labels,
                                       const std::vector<int>& special_ids);

}  // namespace xling::probes
