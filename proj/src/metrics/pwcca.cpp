// SPDX-License-Identifier: Apache-2.0
#include <Eigen/Dense>
#include <random>

#include "common.hpp"
#include "xling/metrics/metrics.hpp"

namespace xling::metrics {

namespace {

// Rank-truncated principal coordinates: rows become the centered view
// projected onto the singular directions that retain `energy` of the
// squared-singular-value mass.
Eigen::MatrixXd truncate_view(const Eigen::MatrixXd& centered, double energy) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinU);
    const auto& s = svd.singularValues();
    double total = s.array().square().sum();
    if (!(total > 0)) throw NumericError("pwcca: zero-variance view");
    int keep = 0;
    double acc = 0;
    for (int i = 0; i < s.size(); ++i) {
        acc += s(i) * s(i);
        ++keep;
        if (acc >= energy * total) break;
    }
    // drop numerically dead directions regardless of the energy target
    while (keep > 1 && s(keep - 1) < 1e-10 * s(0)) --keep;
    return svd.matrixU().leftCols(keep).transpose() * centered;
}

Eigen::MatrixXd inverse_sqrt_psd(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
    Eigen::VectorXd vals = eig.eigenvalues();
    double floor = std::max(vals.maxCoeff(), 0.0) * 1e-12 + 1e-300;
    Eigen::VectorXd inv_sqrt(vals.size());
    for (int i = 0; i < vals.size(); ++i)
        inv_sqrt(i) = vals(i) > floor ? 1.0 / std::sqrt(vals(i)) : 0.0;
    return eig.eigenvectors() * inv_sqrt.asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace

double pwcca_score(const std::vector<double>& x, const std::vector<double>& y, int dim_x,
                   int dim_y, int n, const AnalysisConfig& config) {
    if (static_cast<int64_t>(x.size()) != static_cast<int64_t>(dim_x) * n ||
        static_cast<int64_t>(y.size()) != static_cast<int64_t>(dim_y) * n)
        throw DataError("pwcca_score: view size does not match dims");
    for (double v : x)
        if (!std::isfinite(v)) throw NumericError("pwcca_score: non-finite value in first view");
    for (double v : y)
        if (!std::isfinite(v)) throw NumericError("pwcca_score: non-finite value in second view");

    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
        xm(x.data(), dim_x, n), ym(y.data(), dim_y, n);
    Eigen::MatrixXd xc = xm;
    Eigen::MatrixXd yc = ym;
    xc.colwise() -= xm.rowwise().mean();
    yc.colwise() -= ym.rowwise().mean();

    Eigen::MatrixXd xt = truncate_view(xc, config.pwcca_energy);
    Eigen::MatrixXd yt = truncate_view(yc, config.pwcca_energy);
    int kx = static_cast<int>(xt.rows()), ky = static_cast<int>(yt.rows());
    if (n <= kx || n <= ky)
        throw DataError("pwcca_score: insufficient samples (" + std::to_string(n) +
                        ") for retained dims " + std::to_string(kx) + "/" + std::to_string(ky));

    double denom = n - 1;
    Eigen::MatrixXd sxx = xt * xt.transpose() / denom;
    Eigen::MatrixXd syy = yt * yt.transpose() / denom;
    Eigen::MatrixXd sxy = xt * yt.transpose() / denom;

    Eigen::MatrixXd sxx_is = inverse_sqrt_psd(sxx);
    Eigen::MatrixXd syy_is = inverse_sqrt_psd(syy);
    Eigen::MatrixXd m = sxx_is * sxy * syy_is;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU);
    int k = static_cast<int>(svd.singularValues().size());

    // canonical directions of the first view, in its truncated coordinates
    Eigen::MatrixXd dirs = sxx_is * svd.matrixU();  // kx x k

    Eigen::VectorXd weights(k);
    for (int i = 0; i < k; ++i)
        weights(i) = (dirs.col(i).transpose() * xt).array().abs().mean();
    double wsum = weights.sum();
    if (!(wsum > 0)) throw NumericError("pwcca_score: degenerate projection weights");
    weights /= wsum;

    double score = 0;
    for (int i = 0; i < k; ++i) {
        double rho = std::min(1.0, std::max(0.0, svd.singularValues()(i)));
        score += weights(i) * rho;
    }
    return score;
}

LayerCurve pwcca_curve(const probes::ActivationSet& set, const AnalysisConfig& config,
                       bool shuffle_pairs) {
    auto pairs = detail::matched_pairs(set);
    int n = static_cast<int>(pairs.size());
    int d = set.dim;

    std::vector<int> b_order(n);
    for (int i = 0; i < n; ++i) b_order[i] = i;
    if (shuffle_pairs) {
        std::mt19937_64 rng(mix_seed(config.seed, 50));
        std::shuffle(b_order.begin(), b_order.end(), rng);
    }

    LayerCurve curve;
    curve.metric = shuffle_pairs ? "pwcca_shuffled" : "pwcca";
    curve.values.resize(set.taps);
    std::vector<double> xv(static_cast<size_t>(d) * n), yv(static_cast<size_t>(d) * n);
    for (int tap = 0; tap < set.taps; ++tap) {
        // first view: language B (the "Finnish" side), per the reporting rule
        for (int j = 0; j < n; ++j) {
            const float* b = set.row(pairs[b_order[j]].second, tap);
            const float* a = set.row(pairs[j].first, tap);
            for (int i = 0; i < d; ++i) {
                xv[static_cast<size_t>(i) * n + j] = b[i];
                yv[static_cast<size_t>(i) * n + j] = a[i];
            }
        }
        curve.values[tap] = pwcca_score(xv, yv, d, d, n, config);
    }
    return curve;
}

}  // namespace xling::metrics
