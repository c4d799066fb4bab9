// SPDX-License-Identifier: Apache-2.0
#include "xling/probes/activations.hpp"

#include <algorithm>

namespace xling::probes {

ExtractionResult extract_all(const lm::Model<float>& model,
                             const std::vector<std::vector<int>>& sentences,
                             const std::vector<std::string>& labels,
                             const std::vector<int64_t>& pair_ids,
                             const std::vector<int>& special_ids) {
    const auto& cfg = model.cfg;
    if (labels.size() != sentences.size())
        throw DataError("extract_all: label count != sentence count");
    if (!pair_ids.empty() && pair_ids.size() != sentences.size())
        throw DataError("extract_all: pair id count != sentence count");

    ExtractionResult out;
    int n = static_cast<int>(sentences.size());
    out.activations.sentences = n;
    out.activations.taps = cfg.layers + 1;
    out.activations.dim = cfg.model_dim;
    out.activations.values.assign(
        static_cast<size_t>(n) * (cfg.layers + 1) * cfg.model_dim, 0.0f);
    out.activations.labels = labels;
    out.activations.pair_ids = pair_ids.empty() ? std::vector<int64_t>(n, -1) : pair_ids;
    out.neurons.sentences = n;
    out.neurons.layers = cfg.layers;
    out.neurons.hidden = cfg.mlp_hidden;
    out.neurons.values.assign(static_cast<size_t>(n) * cfg.layers * cfg.mlp_hidden, 0.0f);
    out.neurons.labels = labels;

    lm::Activations<float> acts;
    for (int s = 0; s < n; ++s) {
        const auto& toks = sentences[s];
        int Tn = static_cast<int>(toks.size());
        if (Tn == 0) throw DataError("extract_all: sentence " + std::to_string(s) +
                                     " is empty after tokenization");
        if (Tn > cfg.context_len)
            throw DataError("extract_all: sentence " + std::to_string(s) + " exceeds context");
        lm::forward(model, toks.data(), 1, Tn, acts);

        std::vector<int> real;
        for (int t = 0; t < Tn; ++t)
            if (std::find(special_ids.begin(), special_ids.end(), toks[t]) == special_ids.end())
                real.push_back(t);
        if (real.empty())
            throw DataError("extract_all: sentence " + std::to_string(s) +
                            " has only special tokens");

        for (int tap = 0; tap <= cfg.layers; ++tap) {
            float* dst = out.activations.row(s, tap);
            for (int t : real) {
                const float* src = acts.x[tap].data() + static_cast<size_t>(t) * cfg.model_dim;
                for (int i = 0; i < cfg.model_dim; ++i) dst[i] += src[i];
            }
            for (int i = 0; i < cfg.model_dim; ++i) dst[i] /= static_cast<float>(real.size());
        }
        for (int l = 0; l < cfg.layers; ++l) {
            float* dst = out.neurons.values.data() +
                         (static_cast<size_t>(s) * cfg.layers + l) * cfg.mlp_hidden;
            for (int t : real) {
                const float* src =
                    acts.mlp_h[l].data() + static_cast<size_t>(t) * cfg.mlp_hidden;
                for (int i = 0; i < cfg.mlp_hidden; ++i) dst[i] += src[i];
            }
            for (int i = 0; i < cfg.mlp_hidden; ++i) dst[i] /= static_cast<float>(real.size());
        }
    }
    return out;
}

ActivationSet extract_sentence_representations(const lm::Model<float>& model,
                                               const std::vector<std::vector<int>>& sentences,
                                               const std::vector<std::string>& labels,
                                               const std::vector<int64_t>& pair_ids,
                                               const std::vector<int>& special_ids) {
    return extract_all(model, sentences, labels, pair_ids, special_ids).activations;
}

NeuronTable extract_neuron_activations(const lm::Model<float>& model,
                                       const std::vector<std::vector<int>>& sentences,
                                       const std::vector<std::string>& labels,
                                       const std::vector<int>& special_ids) {
    return extract_all(model, sentences, labels, {}, special_ids).neurons;
}

}  // namespace xling::probes
