// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <numeric>

#include "common.hpp"
#include "xling/metrics/metrics.hpp"

namespace xling::metrics {

double average_precision(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size() || scores.empty())
        throw DataError("average_precision: size mismatch or empty input");
    int64_t positives = std::count(labels.begin(), labels.end(), 1);
    if (positives == 0) throw DataError("average_precision: no positive labels");

    std::vector<int> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return scores[a] > scores[b]; });

    double sum = 0;
    int64_t hits = 0;
    for (size_t rank = 0; rank < order.size(); ++rank) {
        if (labels[order[rank]] == 1) {
            ++hits;
            sum += static_cast<double>(hits) / static_cast<double>(rank + 1);
        }
    }
    return sum / static_cast<double>(positives);
}

NeuronScoreTable score_neurons(const probes::NeuronTable& table) {
    auto [lang_a, lang_b] = detail::language_pair(table.labels);
    NeuronScoreTable out;
    out.layers = table.layers;
    out.hidden = table.hidden;
    out.language_a = lang_a;
    out.language_b = lang_b;
    size_t total = static_cast<size_t>(table.layers) * table.hidden;
    out.ap_a.resize(total);
    out.ap_b.resize(total);

    std::vector<int> pos_a(table.sentences), pos_b(table.sentences);
    for (int s = 0; s < table.sentences; ++s) {
        pos_a[s] = table.labels[s] == lang_a ? 1 : 0;
        pos_b[s] = 1 - pos_a[s];
    }
    std::vector<double> scores(table.sentences);
    for (int l = 0; l < table.layers; ++l) {
        for (int u = 0; u < table.hidden; ++u) {
            for (int s = 0; s < table.sentences; ++s) scores[s] = table.at(s, l, u);
            size_t idx = static_cast<size_t>(l) * table.hidden + u;
            out.ap_a[idx] = average_precision(scores, pos_a);
            out.ap_b[idx] = average_precision(scores, pos_b);
        }
    }
    return out;
}

std::vector<int64_t> neuron_layer_distribution(const NeuronScoreTable& table,
                                               const std::string& language, int k) {
    const std::vector<double>* ap = nullptr;
    if (language == table.language_a)
        ap = &table.ap_a;
    else if (language == table.language_b)
        ap = &table.ap_b;
    else
        throw DataError("neuron_layer_distribution: unknown language " + language);
    int64_t total = static_cast<int64_t>(ap->size());
    if (k < 1 || k > total)
        throw ConfigError("neuron_layer_distribution: k out of range");

    std::vector<int64_t> order(total);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int64_t a, int64_t b) { return (*ap)[a] > (*ap)[b]; });

    std::vector<int64_t> hist(table.layers, 0);
    for (int i = 0; i < k; ++i) ++hist[order[i] / table.hidden];
    return hist;
}

ThresholdBuckets threshold_buckets(const NeuronScoreTable& table,
                                   const AnalysisConfig& config) {
    ThresholdBuckets out;
    out.thresholds = config.ap_thresholds;
    out.counts_a.assign(out.thresholds.size(), 0);
    out.counts_b.assign(out.thresholds.size(), 0);
    for (size_t i = 0; i < table.ap_a.size(); ++i) {
        for (size_t t = 0; t < out.thresholds.size(); ++t) {
            if (table.ap_a[i] >= out.thresholds[t]) ++out.counts_a[t];
            if (table.ap_b[i] >= out.thresholds[t]) ++out.counts_b[t];
        }
        if (table.ap_a[i] <= config.shared_threshold && table.ap_b[i] <= config.shared_threshold)
            ++out.shared;
    }
    return out;
}

}  // namespace xling::metrics
