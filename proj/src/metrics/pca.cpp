// SPDX-License-Identifier: Apache-2.0
#include <Eigen/Dense>

#include "common.hpp"
#include "xling/metrics/metrics.hpp"

namespace xling::metrics {

PcaProjection pca_project2(const probes::ActivationSet& set, int tap) {
    if (set.sentences < 3) throw DataError("pca_project2: need at least 3 sentences");
    if (set.dim < 2) throw DataError("pca_project2: dim < 2");
    if (tap < 0 || tap >= set.taps) throw DataError("pca_project2: tap out of range");

    int n = set.sentences, d = set.dim;
    Eigen::MatrixXd data(n, d);
    for (int s = 0; s < n; ++s)
        for (int i = 0; i < d; ++i) data(s, i) = set.row(s, tap)[i];
    Eigen::RowVectorXd mean = data.colwise().mean();
    data.rowwise() -= mean;

    Eigen::MatrixXd cov = data.transpose() * data / static_cast<double>(n - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    double total = eig.eigenvalues().sum();
    if (!(total > 0) || !std::isfinite(total))
        throw NumericError("pca_project2: degenerate input (zero total variance)");

    PcaProjection out;
    out.labels = set.labels;
    out.coords.resize(static_cast<size_t>(n) * 2);
    // eigenvalues ascend in Eigen; take the last two, descending
    for (int c = 0; c < 2; ++c) {
        int col = d - 1 - c;
        Eigen::VectorXd v = eig.eigenvectors().col(col);
        int arg = 0;
        for (int i = 1; i < d; ++i)
            if (std::abs(v(i)) > std::abs(v(arg))) arg = i;
        if (v(arg) < 0) v = -v;
        Eigen::VectorXd proj = data * v;
        for (int s = 0; s < n; ++s) out.coords[static_cast<size_t>(s) * 2 + c] = proj(s);
        out.explained_variance[c] = std::max(0.0, eig.eigenvalues()(col)) / total;
    }

    auto [lang_a, lang_b] = detail::language_pair(set.labels);
    Eigen::Vector2d ca = Eigen::Vector2d::Zero(), cb = Eigen::Vector2d::Zero();
    int na = 0, nb = 0;
    for (int s = 0; s < n; ++s) {
        Eigen::Vector2d p(out.coords[s * 2], out.coords[s * 2 + 1]);
        if (set.labels[s] == lang_a) {
            ca += p;
            ++na;
        } else {
            cb += p;
            ++nb;
        }
    }
    ca /= na;
    cb /= nb;
    double spread_a = 0, spread_b = 0;
    for (int s = 0; s < n; ++s) {
        Eigen::Vector2d p(out.coords[s * 2], out.coords[s * 2 + 1]);
        if (set.labels[s] == lang_a)
            spread_a += (p - ca).norm();
        else
            spread_b += (p - cb).norm();
    }
    spread_a /= na;
    spread_b /= nb;
    double mean_spread = 0.5 * (spread_a + spread_b);
    if (mean_spread <= 0)
        throw NumericError("pca_project2: degenerate input (all points identical)");
    out.overlap_statistic = (ca - cb).norm() / mean_spread;
    return out;
}

}  // namespace xling::metrics
