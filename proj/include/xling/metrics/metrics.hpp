// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "xling/probes/activations.hpp"

namespace xling::metrics {

struct AnalysisConfig {
    int top_k = 1000;
    std::vector<double> ap_thresholds = {0.75, 0.90, 0.95, 0.99};
    double shared_threshold = 0.55;
    int baseline_samples = 50;
    double pwcca_energy = 0.99;  // squared-singular-value retention fraction
    uint64_t seed = 0;
};

// One value per residual tap (tap 0 = post-embedding).
struct LayerCurve {
    std::string metric;
    std::vector<double> values;
    std::vector<double> baseline;  // empty when the metric has no baseline
};

// ---- PCA projections -------------------------------------------------------

struct PcaProjection {
    std::vector<double> coords;          // [sentence, 2]
    double explained_variance[2] = {0, 0};  // fraction of total variance
    // centroid distance over mean within-language spread, in projected space
    double overlap_statistic = 0.0;
    std::vector<std::string> labels;
};

// Stack both languages at one tap, center, project onto the top-2 principal
// directions (descending eigenvalue, sign fixed so the largest-magnitude
// loading is positive).
PcaProjection pca_project2(const probes::ActivationSet& set, int tap);

// ---- Cosine curves ---------------------------------------------------------

struct CosineCurves {
    LayerCurve translation;  // mean cosine over pairs per tap
    LayerCurve random_baseline;
};

// Baseline: per language-B sentence, mean cosine against `baseline_samples`
// language-A sentences drawn without replacement, then mean over sentences.
CosineCurves cosine_curves(const probes::ActivationSet& set, const AnalysisConfig& config);

// ---- PWCCA -----------------------------------------------------------------

// x, y: column-paired views, row-major [dim][n]. Centers both views,
// truncates each by singular-value energy, runs CCA, and weights the
// canonical correlations by the normalized mean absolute inner products
// between the FIRST view's canonical directions and its centered data.
double pwcca_score(const std::vector<double>& x, const std::vector<double>& y, int dim_x,
                   int dim_y, int n, const AnalysisConfig& config);

// pwcca per tap between the two languages of a paired set; shuffled = break
// the pairing with a seeded permutation first.
LayerCurve pwcca_curve(const probes::ActivationSet& set, const AnalysisConfig& config,
                       bool shuffle_pairs = false);

// ---- Average precision and neuron tables -----------------------------------

// Ranks by descending score, ties broken by ascending original index;
// AP = mean of precision at each positive item's rank.
double average_precision(const std::vector<double>& scores, const std::vector<int>& labels);

// AP per (layer, neuron) for both languages of a two-language neuron table.
struct NeuronScoreTable {
    int layers = 0;
    int hidden = 0;
    std::string language_a, language_b;
    std::vector<double> ap_a;  // [layer * hidden + neuron]
    std::vector<double> ap_b;
};

NeuronScoreTable score_neurons(const probes::NeuronTable& table);

// Histogram over layers of the k highest-AP neurons for one language.
std::vector<int64_t> neuron_layer_distribution(const NeuronScoreTable& table,
                                               const std::string& language, int k);

struct ThresholdBuckets {
    std::vector<double> thresholds;
    std::vector<int64_t> counts_a;  // per threshold, AP_a >= threshold
    std::vector<int64_t> counts_b;
    int64_t shared = 0;  // AP <= shared_threshold for both languages
};

ThresholdBuckets threshold_buckets(const NeuronScoreTable& table, const AnalysisConfig& config);

}  // namespace xling::metrics
