// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "xling/lm/kernels.hpp"
#include "xling/util.hpp"

namespace xling::lm {

struct ModelConfig {
    int layers = 4;
    int model_dim = 64;
    int heads = 4;
    int head_dim = 16;
    int mlp_hidden = 176;
    int vocab_size = 512;
    int context_len = 256;
    double rotary_base = 10000.0;

    void validate() const {
        if (layers <= 0 || model_dim <= 0 || heads <= 0 || head_dim <= 0 || mlp_hidden <= 0 ||
            vocab_size <= 0 || context_len <= 0)
            throw ConfigError("ModelConfig: all counts must be positive");
        if (heads * head_dim != model_dim)
            throw ConfigError("ModelConfig: heads * head_dim != model_dim");
        if (mlp_hidden < model_dim)
            throw ConfigError("ModelConfig: mlp_hidden < model_dim");
        if (head_dim % 2 != 0)
            throw ConfigError("ModelConfig: head_dim must be even for rotary positions");
    }

    // embed V*D + per layer (4 D*D attention + 3 D*H mlp) + unembed D*V;
    // normalization is non-parametric and contributes nothing.
    int64_t param_count() const {
        int64_t d = model_dim, h = mlp_hidden, v = vocab_size, l = layers;
        return v * d + l * (4 * d * d + 3 * d * h) + d * v;
    }
};

constexpr double kLayerNormEps = 1e-5;

struct TensorInfo {
    std::string name;
    size_t offset = 0;
    int rows = 0;
    int cols = 0;
    size_t size() const { return static_cast<size_t>(rows) * cols; }
};

template <typename T>
struct Model {
    ModelConfig cfg;
    std::vector<T> params;
    std::vector<T> grads;
    std::vector<TensorInfo> tensors;

    // cached offsets
    size_t embed = 0, unembed = 0;
    std::vector<size_t> wq, wk, wv, wo, wg, wu, wd;

    const T* p(size_t off) const { return params.data() + off; }
    T* p(size_t off) { return params.data() + off; }
    T* g(size_t off) { return grads.data() + off; }

    const TensorInfo* find_tensor(const std::string& name) const {
        for (const auto& t : tensors)
            if (t.name == name) return &t;
        return nullptr;
    }
};

namespace detail {

template <typename T>
size_t add_tensor(Model<T>& m, const std::string& name, int rows, int cols, size_t& cursor) {
    TensorInfo info{name, cursor, rows, cols};
    m.tensors.push_back(info);
    cursor += info.size();
    return info.offset;
}

}  // namespace detail

// Deterministic under (config, seed). Residual-writing projections (wo, wd)
// are down-scaled by 1/sqrt(2*layers).
template <typename T>
Model<T> init_model(const ModelConfig& cfg, uint64_t seed) {
    cfg.validate();
    Model<T> m;
    m.cfg = cfg;
    size_t cursor = 0;
    m.embed = detail::add_tensor(m, "embed", cfg.vocab_size, cfg.model_dim, cursor);
    m.wq.resize(cfg.layers);
    m.wk.resize(cfg.layers);
    m.wv.resize(cfg.layers);
    m.wo.resize(cfg.layers);
    m.wg.resize(cfg.layers);
    m.wu.resize(cfg.layers);
    m.wd.resize(cfg.layers);
    for (int l = 0; l < cfg.layers; ++l) {
        std::string prefix = "layer" + std::to_string(l) + ".";
        m.wq[l] = detail::add_tensor(m, prefix + "attn.wq", cfg.model_dim, cfg.model_dim, cursor);
        m.wk[l] = detail::add_tensor(m, prefix + "attn.wk", cfg.model_dim, cfg.model_dim, cursor);
        m.wv[l] = detail::add_tensor(m, prefix + "attn.wv", cfg.model_dim, cfg.model_dim, cursor);
        m.wo[l] = detail::add_tensor(m, prefix + "attn.wo", cfg.model_dim, cfg.model_dim, cursor);
        m.wg[l] = detail::add_tensor(m, prefix + "mlp.wg", cfg.model_dim, cfg.mlp_hidden, cursor);
        m.wu[l] = detail::add_tensor(m, prefix + "mlp.wu", cfg.model_dim, cfg.mlp_hidden, cursor);
        m.wd[l] = detail::add_tensor(m, prefix + "mlp.wd", cfg.mlp_hidden, cfg.model_dim, cursor);
    }
    m.unembed = detail::add_tensor(m, "unembed", cfg.model_dim, cfg.vocab_size, cursor);

    if (static_cast<int64_t>(cursor) != cfg.param_count())
        throw NumericError("init_model: parameter layout does not match closed-form count");

    m.params.resize(cursor);
    m.grads.assign(cursor, T(0));

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist(0.0, 0.02);
    for (auto& w : m.params) w = static_cast<T>(dist(rng));
    double resid_scale = 1.0 / std::sqrt(2.0 * cfg.layers);
    for (int l = 0; l < cfg.layers; ++l) {
        for (size_t i = 0; i < static_cast<size_t>(cfg.model_dim) * cfg.model_dim; ++i)
            m.params[m.wo[l] + i] = static_cast<T>(m.params[m.wo[l] + i] * resid_scale);
        for (size_t i = 0; i < static_cast<size_t>(cfg.mlp_hidden) * cfg.model_dim; ++i)
            m.params[m.wd[l] + i] = static_cast<T>(m.params[m.wd[l] + i] * resid_scale);
    }
    return m;
}

// Per-layer steering vectors added to the residual stream after each block,
// at every position. vectors[l-1] steers tap l, l = 1..layers.
template <typename T>
struct Steering {
    const std::vector<std::vector<T>>* vectors = nullptr;
    T scale = T(0);
    bool active() const { return vectors != nullptr && scale != T(0); }
};

// Everything the backward pass needs, plus the residual taps (x[l] is the
// stream after block l, x[0] post-embedding) and post-activation MLP hidden
// units (mlp_h) used by the probes.
template <typename T>
struct Activations {
    int batch = 0, seq = 0;
    std::vector<std::vector<T>> x;        // L+1 of [B*T*D]
    std::vector<std::vector<T>> ln1, ln2; // [B*T*D]
    std::vector<std::vector<T>> ln1_rstd, ln2_rstd;  // [B*T]
    std::vector<std::vector<T>> q, k, v;  // post-rope q,k; [B*T*D]
    std::vector<std::vector<T>> att;      // [B*H*T*T]
    std::vector<std::vector<T>> att_mix;  // [B*T*D]
    std::vector<std::vector<T>> xmid;     // after attention residual
    std::vector<std::vector<T>> mlp_a, mlp_b, mlp_h;  // [B*T*H]
    std::vector<T> fin_ln, fin_rstd;      // [B*T*D], [B*T]
    std::vector<T> logits;                // [B*T*V]

    void resize(const ModelConfig& cfg, int B, int Tn) {
        batch = B;
        seq = Tn;
        size_t rows = static_cast<size_t>(B) * Tn;
        size_t bd = rows * cfg.model_dim;
        size_t bh = rows * cfg.mlp_hidden;
        size_t ba = static_cast<size_t>(B) * cfg.heads * Tn * Tn;
        auto sz = [&](std::vector<std::vector<T>>& vv, int n, size_t each) {
            vv.resize(n);
            for (auto& b : vv) b.assign(each, T(0));
        };
        sz(x, cfg.layers + 1, bd);
        sz(ln1, cfg.layers, bd);
        sz(ln2, cfg.layers, bd);
        sz(ln1_rstd, cfg.layers, rows);
        sz(ln2_rstd, cfg.layers, rows);
        sz(q, cfg.layers, bd);
        sz(k, cfg.layers, bd);
        sz(v, cfg.layers, bd);
        sz(att, cfg.layers, ba);
        sz(att_mix, cfg.layers, bd);
        sz(xmid, cfg.layers, bd);
        sz(mlp_a, cfg.layers, bh);
        sz(mlp_b, cfg.layers, bh);
        sz(mlp_h, cfg.layers, bh);
        fin_ln.assign(bd, T(0));
        fin_rstd.assign(rows, T(0));
        logits.assign(rows * cfg.vocab_size, T(0));
    }
};

namespace detail {

template <typename T>
void layernorm_rows(const T* x, T* y, T* rstd_out, size_t rows, int dim) {
#pragma omp parallel for schedule(static)
    for (long long r = 0; r < static_cast<long long>(rows); ++r) {
        const T* xr = x + static_cast<size_t>(r) * dim;
        T* yr = y + static_cast<size_t>(r) * dim;
        T mean = T(0);
        for (int i = 0; i < dim; ++i) mean += xr[i];
        mean /= T(dim);
        T var = T(0);
        for (int i = 0; i < dim; ++i) {
            T d = xr[i] - mean;
            var += d * d;
        }
        var /= T(dim);
        T rstd = T(1) / std::sqrt(var + T(kLayerNormEps));
        for (int i = 0; i < dim; ++i) yr[i] = (xr[i] - mean) * rstd;
        rstd_out[r] = rstd;
    }
}

// dx for a no-scale, no-bias layernorm; y is the normalized output.
template <typename T>
void layernorm_backward_rows(const T* y, const T* rstd, const T* dy, T* dx, size_t rows,
                             int dim) {
#pragma omp parallel for schedule(static)
    for (long long r = 0; r < static_cast<long long>(rows); ++r) {
        const T* yr = y + static_cast<size_t>(r) * dim;
        const T* dyr = dy + static_cast<size_t>(r) * dim;
        T* dxr = dx + static_cast<size_t>(r) * dim;
        T mean_dy = T(0), mean_dyy = T(0);
        for (int i = 0; i < dim; ++i) {
            mean_dy += dyr[i];
            mean_dyy += dyr[i] * yr[i];
        }
        mean_dy /= T(dim);
        mean_dyy /= T(dim);
        for (int i = 0; i < dim; ++i)
            dxr[i] = rstd[r] * (dyr[i] - mean_dy - yr[i] * mean_dyy);
    }
}

// In-place rotary rotation of q or k laid out [B*T, heads*head_dim].
// dir = +1 forward, -1 inverse (used by the backward pass).
template <typename T>
void rope_rows(T* qk, int B, int Tn, int heads, int head_dim, double base, int dir) {
    int dim = heads * head_dim;
#pragma omp parallel for schedule(static)
    for (long long row = 0; row < static_cast<long long>(B) * Tn; ++row) {
        int t = static_cast<int>(row % Tn);
        T* r = qk + static_cast<size_t>(row) * dim;
        for (int h = 0; h < heads; ++h) {
            T* hp = r + h * head_dim;
            for (int i = 0; i < head_dim / 2; ++i) {
                double theta = std::pow(base, -2.0 * i / head_dim);
                double angle = dir * t * theta;
                T c = static_cast<T>(std::cos(angle));
                T s = static_cast<T>(std::sin(angle));
                T x0 = hp[2 * i], x1 = hp[2 * i + 1];
                hp[2 * i] = x0 * c - x1 * s;
                hp[2 * i + 1] = x0 * s + x1 * c;
            }
        }
    }
}

}  // namespace detail

// Full forward pass over a [B, Tn] token batch. Fills acts; logits in
// acts.logits. Causal: row t of every attention softmax covers columns <= t.
template <typename T>
void forward(const Model<T>& m, const int* ids, int B, int Tn, Activations<T>& acts,
             const Steering<T>* steer = nullptr) {
    const ModelConfig& cfg = m.cfg;
    if (Tn > cfg.context_len) throw DataError("forward: sequence longer than context");
    if (steer && steer->vectors &&
        static_cast<int>(steer->vectors->size()) != cfg.layers)
        throw DataError("forward: steering set layer count mismatch");
    acts.resize(cfg, B, Tn);
    size_t rows = static_cast<size_t>(B) * Tn;
    int D = cfg.model_dim, H = cfg.heads, hd = cfg.head_dim, Hm = cfg.mlp_hidden;
    T att_scale = T(1) / std::sqrt(T(hd));

    for (size_t r = 0; r < rows; ++r) {
        int tok = ids[r];
        if (tok < 0 || tok >= cfg.vocab_size)
            throw DataError("forward: token id " + std::to_string(tok) + " out of vocabulary");
        const T* e = m.p(m.embed) + static_cast<size_t>(tok) * D;
        for (int i = 0; i < D; ++i) acts.x[0][r * D + i] = e[i];
    }

    for (int l = 0; l < cfg.layers; ++l) {
        detail::layernorm_rows(acts.x[l].data(), acts.ln1[l].data(), acts.ln1_rstd[l].data(),
                               rows, D);
        par::matmul(acts.ln1[l].data(), m.p(m.wq[l]), acts.q[l].data(), rows, D, D);
        par::matmul(acts.ln1[l].data(), m.p(m.wk[l]), acts.k[l].data(), rows, D, D);
        par::matmul(acts.ln1[l].data(), m.p(m.wv[l]), acts.v[l].data(), rows, D, D);
        detail::rope_rows(acts.q[l].data(), B, Tn, H, hd, cfg.rotary_base, +1);
        detail::rope_rows(acts.k[l].data(), B, Tn, H, hd, cfg.rotary_base, +1);

#pragma omp parallel for collapse(2) schedule(static)
        for (int b = 0; b < B; ++b) {
            for (int h = 0; h < H; ++h) {
                const T* qb = acts.q[l].data() + static_cast<size_t>(b) * Tn * D;
                const T* kb = acts.k[l].data() + static_cast<size_t>(b) * Tn * D;
                const T* vb = acts.v[l].data() + static_cast<size_t>(b) * Tn * D;
                T* pb = acts.att[l].data() +
                        (static_cast<size_t>(b) * H + h) * Tn * Tn;
                T* ob = acts.att_mix[l].data() + static_cast<size_t>(b) * Tn * D;
                for (int t = 0; t < Tn; ++t) {
                    T* prow = pb + static_cast<size_t>(t) * Tn;
                    const T* qt = qb + static_cast<size_t>(t) * D + h * hd;
                    T maxv = std::numeric_limits<T>::lowest();
                    for (int u = 0; u <= t; ++u) {
                        const T* ku = kb + static_cast<size_t>(u) * D + h * hd;
                        T s = T(0);
                        for (int i = 0; i < hd; ++i) s += qt[i] * ku[i];
                        s *= att_scale;
                        prow[u] = s;
                        if (s > maxv) maxv = s;
                    }
                    T denom = T(0);
                    for (int u = 0; u <= t; ++u) {
                        prow[u] = std::exp(prow[u] - maxv);
                        denom += prow[u];
                    }
                    for (int u = 0; u <= t; ++u) prow[u] /= denom;
                    for (int u = t + 1; u < Tn; ++u) prow[u] = T(0);
                    T* ot = ob + static_cast<size_t>(t) * D + h * hd;
                    for (int i = 0; i < hd; ++i) ot[i] = T(0);
                    for (int u = 0; u <= t; ++u) {
                        const T* vu = vb + static_cast<size_t>(u) * D + h * hd;
                        T pw = prow[u];
                        for (int i = 0; i < hd; ++i) ot[i] += pw * vu[i];
                    }
                }
            }
        }

        // attention residual
        par::matmul(acts.att_mix[l].data(), m.p(m.wo[l]), acts.xmid[l].data(), rows, D, D);
#pragma omp parallel for schedule(static)
        for (long long i = 0; i < static_cast<long long>(rows) * D; ++i)
            acts.xmid[l][i] += acts.x[l][i];

        detail::layernorm_rows(acts.xmid[l].data(), acts.ln2[l].data(),
                               acts.ln2_rstd[l].data(), rows, D);
        par::matmul(acts.ln2[l].data(), m.p(m.wg[l]), acts.mlp_a[l].data(), rows, D, Hm);
        par::matmul(acts.ln2[l].data(), m.p(m.wu[l]), acts.mlp_b[l].data(), rows, D, Hm);
#pragma omp parallel for schedule(static)
        for (long long i = 0; i < static_cast<long long>(rows) * Hm; ++i) {
            T a = acts.mlp_a[l][i];
            T s = T(1) / (T(1) + std::exp(-a));
            acts.mlp_h[l][i] = a * s * acts.mlp_b[l][i];
        }
        par::matmul(acts.mlp_h[l].data(), m.p(m.wd[l]), acts.x[l + 1].data(), rows, Hm, D);
#pragma omp parallel for schedule(static)
        for (long long i = 0; i < static_cast<long long>(rows) * D; ++i)
            acts.x[l + 1][i] += acts.xmid[l][i];

        if (steer && steer->active()) {
            const std::vector<T>& vec = (*steer->vectors)[l];
            if (static_cast<int>(vec.size()) != D)
                throw DataError("forward: steering vector dim mismatch at layer " +
                                std::to_string(l + 1));
            for (size_t r = 0; r < rows; ++r)
                for (int i = 0; i < D; ++i) acts.x[l + 1][r * D + i] += steer->scale * vec[i];
        }
    }

    detail::layernorm_rows(acts.x[cfg.layers].data(), acts.fin_ln.data(), acts.fin_rstd.data(),
                           rows, D);
    par::matmul(acts.fin_ln.data(), m.p(m.unembed), acts.logits.data(), rows, D,
                cfg.vocab_size);
}

// Mean cross entropy over positions with mask != 0; fills dlogits (normalized
// by the masked count) when non-null.
template <typename T>
T cross_entropy(const T* logits, const int* targets, const uint8_t* mask, size_t rows,
                int vocab, T* dlogits) {
    double total = 0.0;
    int64_t count = 0;
    for (size_t r = 0; r < rows; ++r)
        if (mask[r]) ++count;
    if (count == 0) throw DataError("cross_entropy: no unmasked target positions");
#pragma omp parallel for schedule(static) reduction(+ : total)
    for (long long r = 0; r < static_cast<long long>(rows); ++r) {
        const T* lr = logits + static_cast<size_t>(r) * vocab;
        T* dr = dlogits ? dlogits + static_cast<size_t>(r) * vocab : nullptr;
        if (!mask[r]) {
            if (dr)
                for (int i = 0; i < vocab; ++i) dr[i] = T(0);
            continue;
        }
        T maxv = lr[0];
        for (int i = 1; i < vocab; ++i) maxv = std::max(maxv, lr[i]);
        double denom = 0.0;
        for (int i = 0; i < vocab; ++i) denom += std::exp(static_cast<double>(lr[i] - maxv));
        int tgt = targets[r];
        double logp = static_cast<double>(lr[tgt] - maxv) - std::log(denom);
        total += -logp;
        if (dr) {
            for (int i = 0; i < vocab; ++i) {
                double p = std::exp(static_cast<double>(lr[i] - maxv)) / denom;
                dr[i] = static_cast<T>(p / count);
            }
            dr[tgt] -= static_cast<T>(1.0 / count);
        }
    }
    return static_cast<T>(total / count);
}

// Backward through the whole network, accumulating into m.grads.
// acts must come from a forward() on the same ids.
template <typename T>
void backward(Model<T>& m, const int* ids, int B, int Tn, const Activations<T>& acts,
              const T* dlogits) {
    const ModelConfig& cfg = m.cfg;
    size_t rows = static_cast<size_t>(B) * Tn;
    int D = cfg.model_dim, H = cfg.heads, hd = cfg.head_dim, Hm = cfg.mlp_hidden;
    T att_scale = T(1) / std::sqrt(T(hd));

    std::vector<T> dx(rows * D), dtmp(rows * D), dln(rows * D);
    std::vector<T> dh(rows * Hm), da(rows * Hm), db(rows * Hm);
    std::vector<T> dq(rows * D), dk(rows * D), dv(rows * D), dmix(rows * D);

    // head: dlogits -> unembed, final norm
    par::matmul_grad_weight(acts.fin_ln.data(), dlogits, m.g(m.unembed), rows, D,
                            cfg.vocab_size);
    par::matmul_grad_input(dlogits, m.p(m.unembed), dln.data(), rows, D, cfg.vocab_size);
    detail::layernorm_backward_rows(acts.fin_ln.data(), acts.fin_rstd.data(), dln.data(),
                                    dx.data(), rows, D);

    for (int l = cfg.layers - 1; l >= 0; --l) {
        // MLP: x_{l+1} = xmid + (silu(ln2 Wg) * (ln2 Wu)) Wd
        par::matmul_grad_weight(acts.mlp_h[l].data(), dx.data(), m.g(m.wd[l]), rows, Hm, D);
        par::matmul_grad_input(dx.data(), m.p(m.wd[l]), dh.data(), rows, Hm, D);
#pragma omp parallel for schedule(static)
        for (long long i = 0; i < static_cast<long long>(rows) * Hm; ++i) {
            T a = acts.mlp_a[l][i];
            T s = T(1) / (T(1) + std::exp(-a));
            T silu = a * s;
            db[i] = dh[i] * silu;
            da[i] = dh[i] * acts.mlp_b[l][i] * (s + a * s * (T(1) - s));
        }
        par::matmul_grad_weight(acts.ln2[l].data(), da.data(), m.g(m.wg[l]), rows, D, Hm);
        par::matmul_grad_weight(acts.ln2[l].data(), db.data(), m.g(m.wu[l]), rows, D, Hm);
        par::matmul_grad_input(da.data(), m.p(m.wg[l]), dln.data(), rows, D, Hm);
        par::matmul_grad_input(db.data(), m.p(m.wu[l]), dtmp.data(), rows, D, Hm);
#pragma omp parallel for schedule(static)
        for (long long i = 0; i < static_cast<long long>(rows) * D; ++i) dln[i] += dtmp[i];
        detail::layernorm_backward_rows(acts.ln2[l].data(), acts.ln2_rstd[l].data(), dln.data(),
                                        dtmp.data(), rows, D);
        // dx now means d(xmid): residual path + mlp input path
#pragma omp parallel for schedule(static)
        for (long long i = 0; i < static_cast<long long>(rows) * D; ++i) dx[i] += dtmp[i];

        // attention: xmid = x_l + (attn probs v) Wo
        par::matmul_grad_weight(acts.att_mix[l].data(), dx.data(), m.g(m.wo[l]), rows, D, D);
        par::matmul_grad_input(dx.data(), m.p(m.wo[l]), dmix.data(), rows, D, D);

#pragma omp parallel for collapse(2) schedule(static)
        for (int b = 0; b < B; ++b) {
            for (int h = 0; h < H; ++h) {
                const T* qb = acts.q[l].data() + static_cast<size_t>(b) * Tn * D;
                const T* kb = acts.k[l].data() + static_cast<size_t>(b) * Tn * D;
                const T* vb = acts.v[l].data() + static_cast<size_t>(b) * Tn * D;
                const T* pb = acts.att[l].data() + (static_cast<size_t>(b) * H + h) * Tn * Tn;
                const T* dmixb = dmix.data() + static_cast<size_t>(b) * Tn * D;
                T* dqb = dq.data() + static_cast<size_t>(b) * Tn * D;
                T* dkb = dk.data() + static_cast<size_t>(b) * Tn * D;
                T* dvb = dv.data() + static_cast<size_t>(b) * Tn * D;
                for (int t = 0; t < Tn; ++t) {
                    for (int i = 0; i < hd; ++i) {
                        dqb[static_cast<size_t>(t) * D + h * hd + i] = T(0);
                        dkb[static_cast<size_t>(t) * D + h * hd + i] = T(0);
                        dvb[static_cast<size_t>(t) * D + h * hd + i] = T(0);
                    }
                }
                std::vector<T> dprow(Tn);
                for (int t = 0; t < Tn; ++t) {
                    const T* prow = pb + static_cast<size_t>(t) * Tn;
                    const T* dot = dmixb + static_cast<size_t>(t) * D + h * hd;
                    // dv and dp
                    for (int u = 0; u <= t; ++u) {
                        const T* vu = vb + static_cast<size_t>(u) * D + h * hd;
                        T* dvu = dvb + static_cast<size_t>(u) * D + h * hd;
                        T dp = T(0);
                        for (int i = 0; i < hd; ++i) {
                            dp += dot[i] * vu[i];
                            dvu[i] += dot[i] * prow[u];
                        }
                        dprow[u] = dp;
                    }
                    // softmax backward
                    T dot_pp = T(0);
                    for (int u = 0; u <= t; ++u) dot_pp += dprow[u] * prow[u];
                    const T* qt = qb + static_cast<size_t>(t) * D + h * hd;
                    T* dqt = dqb + static_cast<size_t>(t) * D + h * hd;
                    for (int u = 0; u <= t; ++u) {
                        T ds = prow[u] * (dprow[u] - dot_pp) * att_scale;
                        const T* ku = kb + static_cast<size_t>(u) * D + h * hd;
                        T* dku = dkb + static_cast<size_t>(u) * D + h * hd;
                        for (int i = 0; i < hd; ++i) {
                            dqt[i] += ds * ku[i];
                            dku[i] += ds * qt[i];
                        }
                    }
                }
            }
        }

        detail::rope_rows(dq.data(), B, Tn, H, hd, cfg.rotary_base, -1);
        detail::rope_rows(dk.data(), B, Tn, H, hd, cfg.rotary_base, -1);

        par::matmul_grad_weight(acts.ln1[l].data(), dq.data(), m.g(m.wq[l]), rows, D, D);
        par::matmul_grad_weight(acts.ln1[l].data(), dk.data(), m.g(m.wk[l]), rows, D, D);
        par::matmul_grad_weight(acts.ln1[l].data(), dv.data(), m.g(m.wv[l]), rows, D, D);
        par::matmul_grad_input(dq.data(), m.p(m.wq[l]), dln.data(), rows, D, D);
        par::matmul_grad_input(dk.data(), m.p(m.wk[l]), dtmp.data(), rows, D, D);
#pragma omp parallel for schedule(static)
        for (long long i = 0; i < static_cast<long long>(rows) * D; ++i) dln[i] += dtmp[i];
        par::matmul_grad_input(dv.data(), m.p(m.wv[l]), dtmp.data(), rows, D, D);
#pragma omp parallel for schedule(static)
        for (long long i = 0; i < static_cast<long long>(rows) * D; ++i) dln[i] += dtmp[i];
        detail::layernorm_backward_rows(acts.ln1[l].data(), acts.ln1_rstd[l].data(), dln.data(),
                                        dtmp.data(), rows, D);
        // dx becomes d(x_l): residual passthrough + ln1 input path
#pragma omp parallel for schedule(static)
        for (long long i = 0; i < static_cast<long long>(rows) * D; ++i) dx[i] += dtmp[i];
    }

    // embedding gradient (serial: rows may share a token id)
    T* de = m.g(m.embed);
    for (size_t r = 0; r < rows; ++r) {
        int tok = ids[r];
        for (int i = 0; i < D; ++i) de[static_cast<size_t>(tok) * D + i] += dx[r * D + i];
    }
}

// Forward + loss + backward for one batch; next-token objective with pad
// targets masked out.
template <typename T>
T loss_and_grad(Model<T>& m, const int* ids, int B, int Tn, int pad_id, Activations<T>& acts) {
    forward(m, ids, B, Tn, acts);
    size_t rows = static_cast<size_t>(B) * Tn;
    std::vector<int> targets(rows, 0);
    std::vector<uint8_t> mask(rows, 0);
    for (int b = 0; b < B; ++b) {
        for (int t = 0; t + 1 < Tn; ++t) {
            size_t r = static_cast<size_t>(b) * Tn + t;
            int tgt = ids[r + 1];
            targets[r] = tgt;
            mask[r] = (tgt != pad_id && ids[r] != pad_id) ? 1 : 0;
        }
    }
    std::vector<T> dlogits(rows * m.cfg.vocab_size);
    T loss = cross_entropy(acts.logits.data(), targets.data(), mask.data(), rows,
                           m.cfg.vocab_size, dlogits.data());
    backward(m, ids, B, Tn, acts, dlogits.data());
    return loss;
}

}  // namespace xling::lm
