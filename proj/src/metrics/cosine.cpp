// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <numeric>
#include <random>

#include "common.hpp"
#include "xling/metrics/metrics.hpp"

namespace xling::metrics {

namespace {

double cosine(const float* a, const float* b, int dim, int sentence, int tap) {
    double dot = 0, na = 0, nb = 0;
    for (int i = 0; i < dim; ++i) {
        dot += static_cast<double>(a[i]) * b[i];
        na += static_cast<double>(a[i]) * a[i];
        nb += static_cast<double>(b[i]) * b[i];
    }
    if (na == 0 || nb == 0)
        throw NumericError("cosine_curves: zero-norm vector at sentence " +
                           std::to_string(sentence) + ", tap " + std::to_string(tap));
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace

CosineCurves cosine_curves(const probes::ActivationSet& set, const AnalysisConfig& config) {
    auto pairs = detail::matched_pairs(set);
    auto [lang_a, lang_b] = detail::language_pair(set.labels);

    std::vector<int> idx_a, idx_b;
    for (int s = 0; s < set.sentences; ++s)
        (set.labels[s] == lang_a ? idx_a : idx_b).push_back(s);
    if (idx_a.empty() || idx_b.empty())
        throw DataError("cosine_curves: need sentences from both languages");
    const int n_base = std::min(config.baseline_samples, static_cast<int>(idx_a.size()));

    CosineCurves out;
    out.translation.metric = "cosine_translation";
    out.random_baseline.metric = "cosine_random";
    out.translation.values.resize(set.taps);
    out.random_baseline.values.resize(set.taps);

    std::mt19937_64 rng(mix_seed(config.seed, 40));
    // one fixed sample of language-A partners per language-B sentence,
    // shared across taps
    std::vector<std::vector<int>> samples(idx_b.size());
    for (size_t j = 0; j < idx_b.size(); ++j) {
        std::vector<int> pool = idx_a;
        std::shuffle(pool.begin(), pool.end(), rng);
        samples[j].assign(pool.begin(), pool.begin() + n_base);
    }

    for (int tap = 0; tap < set.taps; ++tap) {
        double trans = 0;
        for (auto [a, b] : pairs)
            trans += cosine(set.row(a, tap), set.row(b, tap), set.dim, a, tap);
        out.translation.values[tap] = trans / pairs.size();

        double base = 0;
        for (size_t j = 0; j < idx_b.size(); ++j) {
            double per = 0;
            for (int a : samples[j])
                per += cosine(set.row(idx_b[j], tap), set.row(a, tap), set.dim, idx_b[j], tap);
            base += per / samples[j].size();
        }
        out.random_baseline.values[tap] = base / idx_b.size();
    }
    return out;
}

}  // namespace xling::metrics
