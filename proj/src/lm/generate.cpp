// SPDX-License-Identifier: Apache-2.0
#include "xling/lm/generate.hpp"

#include <cmath>
#include <random>

namespace xling::lm {

namespace {

// log softmax value at index `pick` of a logit row.
double row_logprob(const float* logits, int vocab, int pick) {
    float maxv = logits[0];
    for (int i = 1; i < vocab; ++i) maxv = std::max(maxv, logits[i]);
    double denom = 0.0;
    for (int i = 0; i < vocab; ++i) denom += std::exp(static_cast<double>(logits[i] - maxv));
    return static_cast<double>(logits[pick] - maxv) - std::log(denom);
}

}  // namespace

GenerateResult generate(const Model<float>& model, const std::vector<int>& prompt,
                        const DecodeConfig& decode,
                        const std::vector<std::vector<float>>* steering_vectors,
                        float steering_scale) {
    if (prompt.empty()) throw DataError("generate: empty prompt");
    if (!std::isfinite(steering_scale)) throw NumericError("generate: non-finite steering scale");
    if (static_cast<int>(prompt.size()) > model.cfg.context_len)
        throw DataError("generate: prompt longer than context");

    Steering<float> steer;
    steer.vectors = steering_vectors;
    steer.scale = steering_scale;
    const Steering<float>* steer_ptr = steering_vectors ? &steer : nullptr;

    std::vector<int> ids = prompt;
    GenerateResult out;
    std::mt19937_64 rng(decode.seed);
    Activations<float> acts;

    for (int n = 0; n < decode.max_new_tokens; ++n) {
        if (static_cast<int>(ids.size()) > model.cfg.context_len) break;
        int Tn = static_cast<int>(ids.size());
        forward(model, ids.data(), 1, Tn, acts, steer_ptr);
        const float* last = acts.logits.data() + static_cast<size_t>(Tn - 1) * model.cfg.vocab_size;
        int pick = 0;
        if (decode.greedy) {
            for (int i = 1; i < model.cfg.vocab_size; ++i)
                if (last[i] > last[pick]) pick = i;
        } else {
            double temp = decode.temperature > 0 ? decode.temperature : 1.0;
            std::vector<double> probs(model.cfg.vocab_size);
            double maxv = last[0];
            for (int i = 1; i < model.cfg.vocab_size; ++i) maxv = std::max(maxv, (double)last[i]);
            double denom = 0.0;
            for (int i = 0; i < model.cfg.vocab_size; ++i) {
                probs[i] = std::exp((last[i] - maxv) / temp);
                denom += probs[i];
            }
            std::uniform_real_distribution<double> unit(0.0, 1.0);
            double u = unit(rng) * denom, acc = 0.0;
            for (int i = 0; i < model.cfg.vocab_size; ++i) {
                acc += probs[i];
                if (u <= acc) {
                    pick = i;
                    break;
                }
                pick = i;
            }
        }
        out.tokens.push_back(pick);
        out.logprobs.push_back(row_logprob(last, model.cfg.vocab_size, pick));
        ids.push_back(pick);
    }
    return out;
}

double mean_logprob(const Model<float>& model, const std::vector<int>& prompt,
                    const std::vector<int>& continuation) {
    if (continuation.empty()) throw DataError("mean_logprob: empty continuation");
    std::vector<int> ids = prompt;
    ids.insert(ids.end(), continuation.begin(), continuation.end());
    if (static_cast<int>(ids.size()) > model.cfg.context_len)
        ids.resize(model.cfg.context_len);
    Activations<float> acts;
    forward(model, ids.data(), 1, static_cast<int>(ids.size()), acts);
    double total = 0.0;
    int count = 0;
    for (size_t pos = prompt.size(); pos < ids.size(); ++pos) {
        const float* row =
            acts.logits.data() + (pos - 1) * static_cast<size_t>(model.cfg.vocab_size);
        total += row_logprob(row, model.cfg.vocab_size, ids[pos]);
        ++count;
    }
    return total / count;
}

}  // namespace xling::lm
