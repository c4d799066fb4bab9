// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "xling/metrics/metrics.hpp"
#include "xling/util.hpp"

using namespace xling;
using namespace xling::metrics;

namespace {

// Build an activation set by hand: `n` pairs, taps x dim values supplied by a
// generator fn(sentence, tap, dim).
template <typename F>
probes::ActivationSet make_set(int pairs, int taps, int dim, F fn) {
    probes::ActivationSet s;
    s.sentences = 2 * pairs;
    s.taps = taps;
    s.dim = dim;
    s.values.resize(size_t(s.sentences) * taps * dim);
    for (int i = 0; i < pairs; ++i) {
        s.labels.push_back("A");
        s.pair_ids.push_back(i);
    }
    for (int i = 0; i < pairs; ++i) {
        s.labels.push_back("B");
        s.pair_ids.push_back(i);
    }
    for (int sent = 0; sent < s.sentences; ++sent)
        for (int tap = 0; tap < taps; ++tap)
            for (int d = 0; d < dim; ++d) s.row(sent, tap)[d] = fn(sent, tap, d);
    return s;
}

// Brute-force AP: for every positive, precision at its rank; ranks by
// descending score with ascending-index tie-break, computed by counting.
double ap_oracle(const std::vector<double>& scores, const std::vector<int>& labels) {
    size_t n = scores.size();
    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b;
    });
    double sum = 0;
    int positives = 0, seen_pos = 0;
    for (int l : labels) positives += l;
    if (positives == 0) return 0.0;
    for (size_t rank = 0; rank < n; ++rank) {
        if (labels[order[rank]] == 1) {
            ++seen_pos;
            sum += double(seen_pos) / double(rank + 1);
        }
    }
    return sum / positives;
}

}  // namespace

TEST_CASE("average precision hand oracle") {
    double ap = average_precision({0.9, 0.8, 0.7, 0.6}, {1, 0, 1, 0});
    // precision 1/1 at rank 1 and 2/3 at rank 3, mean 5/6
    CHECK(ap == doctest::Approx(5.0 / 6.0).epsilon(1e-9));
}

TEST_CASE("average precision equals the brute-force oracle on random instances") {
    std::mt19937_64 rng(808);
    std::uniform_int_distribution<int> len(1, 40);
    std::uniform_int_distribution<int> coin(0, 1);
    std::uniform_int_distribution<int> bucket(0, 4);  // coarse scores force ties
    for (int trial = 0; trial < 1000; ++trial) {
        int n = len(rng);
        std::vector<double> scores(n);
        std::vector<int> labels(n);
        bool any_pos = false;
        for (int i = 0; i < n; ++i) {
            scores[i] = bucket(rng) * 0.25;
            labels[i] = coin(rng);
            any_pos |= labels[i] == 1;
        }
        if (!any_pos) labels[0] = 1;
        CHECK(average_precision(scores, labels) == doctest::Approx(ap_oracle(scores, labels)).epsilon(1e-12));
    }
}

TEST_CASE("pca separates well-separated language clusters") {
    std::mt19937_64 rng(31);
    std::normal_distribution<double> noise(0.0, 0.05);
    auto set = make_set(40, 2, 8, [&](int sent, int, int d) {
        double center = sent < 40 ? -2.0 : 2.0;  // language A first, then B
        return float((d == 0 ? center : 0.0) + noise(rng));
    });
    auto proj = pca_project2(set, 1);
    REQUIRE(proj.coords.size() == size_t(80) * 2);
    CHECK(proj.explained_variance[0] > 0.9);
    CHECK(proj.overlap_statistic > 5.0);  // clusters far apart relative to spread
    // languages land on opposite sides of the first component
    double sign_a = proj.coords[0] > 0 ? 1.0 : -1.0;
    for (int i = 0; i < 40; ++i) CHECK(proj.coords[2 * i] * sign_a > 0);
    for (int i = 40; i < 80; ++i) CHECK(proj.coords[2 * i] * sign_a < 0);
}

TEST_CASE("pca overlap statistic is small for mixed clusters") {
    std::mt19937_64 rng(32);
    std::normal_distribution<double> noise(0.0, 1.0);
    auto set = make_set(40, 1, 8, [&](int, int, int) { return float(noise(rng)); });
    auto proj = pca_project2(set, 0);
    CHECK(proj.overlap_statistic < 1.0);
}

TEST_CASE("pca rejects degenerate input") {
    auto set = make_set(5, 1, 4, [](int, int, int) { return 1.0f; });
    CHECK_THROWS_AS(pca_project2(set, 0), NumericError);
}

TEST_CASE("cosine curves: aligned pairs beat random baseline") {
    std::mt19937_64 rng(77);
    std::normal_distribution<double> noise(0.0, 0.1);
    std::vector<std::vector<double>> concepts(30, std::vector<double>(12));
    std::normal_distribution<double> unit(0.0, 1.0);
    for (auto& c : concepts)
        for (auto& v : c) v = unit(rng);
    auto set = make_set(30, 2, 12, [&](int sent, int tap, int d) {
        int pair = sent % 30;
        if (tap == 0) return float(unit(rng));             // tap 0: unrelated noise
        return float(concepts[pair][d] + noise(rng));      // tap 1: shared concept
    });
    AnalysisConfig cfg;
    cfg.baseline_samples = 10;
    auto curves = cosine_curves(set, cfg);
    REQUIRE(curves.translation.values.size() == 2);
    CHECK(curves.translation.values[1] > 0.8);
    CHECK(curves.translation.values[1] > curves.random_baseline.values[1] + 0.3);
    CHECK(std::abs(curves.translation.values[0]) < 0.4);
}

TEST_CASE("pwcca self-comparison is one") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> unit(0.0, 1.0);
    const int dim = 8, n = 200;
    std::vector<double> x(dim * n);
    for (auto& v : x) v = unit(rng);
    AnalysisConfig cfg;
    CHECK(pwcca_score(x, x, dim, dim, n, cfg) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("pwcca is invariant under invertible linear maps") {
    std::mt19937_64 rng(6);
    std::normal_distribution<double> unit(0.0, 1.0);
    const int dim = 8, n = 200;
    std::vector<double> x(dim * n);
    for (auto& v : x) v = unit(rng);
    AnalysisConfig cfg;

    for (int trial = 0; trial < 100; ++trial) {
        // diagonally dominant random matrix: invertible with probability 1
        std::vector<double> map(dim * dim);
        for (auto& v : map) v = 0.3 * unit(rng);
        for (int d = 0; d < dim; ++d) map[d * dim + d] += 2.0;
        std::vector<double> y(dim * n, 0.0);
        for (int r = 0; r < dim; ++r)
            for (int c = 0; c < dim; ++c)
                for (int j = 0; j < n; ++j) y[r * n + j] += map[r * dim + c] * x[c * n + j];
        double score = pwcca_score(x, y, dim, dim, n, cfg);
        CHECK(score == doctest::Approx(1.0).epsilon(1e-3));
    }
}

TEST_CASE("pwcca on independent views stays below the shuffle null") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> unit(0.0, 1.0);
    const int dim = 6, n = 300;
    std::vector<double> x(dim * n), y(dim * n);
    for (auto& v : x) v = unit(rng);
    for (auto& v : y) v = unit(rng);
    AnalysisConfig cfg;
    double independent = pwcca_score(x, y, dim, dim, n, cfg);

    // null distribution: pwcca of x against column-shuffled x
    std::vector<double> null_scores;
    for (int s = 0; s < 100; ++s) {
        std::vector<int> perm(n);
        for (int i = 0; i < n; ++i) perm[i] = i;
        std::shuffle(perm.begin(), perm.end(), rng);
        std::vector<double> xs(dim * n);
        for (int d = 0; d < dim; ++d)
            for (int j = 0; j < n; ++j) xs[d * n + j] = x[d * n + perm[j]];
        null_scores.push_back(pwcca_score(x, xs, dim, dim, n, cfg));
    }
    std::sort(null_scores.begin(), null_scores.end());
    double p99 = null_scores[98];
    CHECK(independent < std::max(p99, 0.999));
    CHECK(independent < 0.9);  // far from the self-similarity ceiling
}

TEST_CASE("pwcca curve: aligned sets score higher than shuffled pairs") {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> noise(0.0, 0.3);
    std::vector<std::vector<double>> concepts(60, std::vector<double>(6));
    for (auto& c : concepts)
        for (auto& v : c) v = unit(rng);
    auto set = make_set(60, 1, 6, [&](int sent, int, int d) {
        return float(concepts[sent % 60][d] + noise(rng));
    });
    AnalysisConfig cfg;
    auto aligned = pwcca_curve(set, cfg, false);
    auto shuffled = pwcca_curve(set, cfg, true);
    CHECK(aligned.values[0] > shuffled.values[0] + 0.1);
    CHECK(aligned.values[0] > 0.7);
}

TEST_CASE("neuron scoring finds planted language-selective units") {
    const int pairs = 25, layers = 2, hidden = 6;
    probes::NeuronTable t;
    t.sentences = 2 * pairs;
    t.layers = layers;
    t.hidden = hidden;
    t.values.assign(size_t(t.sentences) * layers * hidden, 0.0f);
    for (int i = 0; i < pairs; ++i) t.labels.push_back("A");
    for (int i = 0; i < pairs; ++i) t.labels.push_back("B");
    std::mt19937_64 rng(9);
    std::normal_distribution<double> unit(0.0, 1.0);
    for (int s = 0; s < t.sentences; ++s)
        for (int l = 0; l < layers; ++l)
            for (int h = 0; h < hidden; ++h) {
                double v = unit(rng) * 0.1;
                if (l == 1 && h == 2 && s < pairs) v += 3.0;   // A-selective unit
                if (l == 0 && h == 4 && s >= pairs) v += 3.0;  // B-selective unit
                t.values[(size_t(s) * layers + l) * hidden + h] = float(v);
            }
    auto table = score_neurons(t);
    REQUIRE(table.ap_a.size() == size_t(layers) * hidden);
    CHECK(table.ap_a[1 * hidden + 2] == doctest::Approx(1.0));
    CHECK(table.ap_b[0 * hidden + 4] == doctest::Approx(1.0));

    auto dist = neuron_layer_distribution(table, "A", 3);
    REQUIRE(dist.size() == layers);
    CHECK(dist[0] + dist[1] == 3);
    CHECK(dist[1] >= 1);  // the planted A unit lives in layer 1

    AnalysisConfig cfg;
    auto buckets = threshold_buckets(table, cfg);
    REQUIRE(buckets.thresholds.size() == 4);
    // monotone: higher thresholds admit no more neurons
    for (size_t i = 1; i < buckets.thresholds.size(); ++i) {
        CHECK(buckets.counts_a[i] <= buckets.counts_a[i - 1]);
        CHECK(buckets.counts_b[i] <= buckets.counts_b[i - 1]);
    }
    CHECK(buckets.counts_a.back() >= 1);
    CHECK(buckets.counts_b.back() >= 1);
}

TEST_CASE("threshold buckets equal a direct count on random tables") {
    std::mt19937_64 rng(10);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    NeuronScoreTable table;
    table.layers = 3;
    table.hidden = 10;
    table.language_a = "A";
    table.language_b = "B";
    table.ap_a.resize(30);
    table.ap_b.resize(30);
    for (int i = 0; i < 30; ++i) {
        table.ap_a[i] = u(rng);
        table.ap_b[i] = u(rng);
    }
    AnalysisConfig cfg;
    auto buckets = threshold_buckets(table, cfg);
    for (size_t t = 0; t < buckets.thresholds.size(); ++t) {
        int64_t ca = 0, cb = 0;
        for (int i = 0; i < 30; ++i) {
            if (table.ap_a[i] >= buckets.thresholds[t]) ++ca;
            if (table.ap_b[i] >= buckets.thresholds[t]) ++cb;
        }
        CHECK(buckets.counts_a[t] == ca);
        CHECK(buckets.counts_b[t] == cb);
    }
    int64_t shared = 0;
    for (int i = 0; i < 30; ++i)
        if (table.ap_a[i] <= cfg.shared_threshold && table.ap_b[i] <= cfg.shared_threshold)
            ++shared;
    CHECK(buckets.shared == shared);
}
