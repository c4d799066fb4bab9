// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstddef>

// Dense kernels behind the model. xling::lm::ref holds the plain serial
// reference loops; xling::lm::par holds the OpenMP versions. Both compute
// each output element with the identical inner-loop order, so results are
// bit-identical regardless of thread count.

namespace xling::lm::ref {

// out[M,N] = A[M,K] * W[K,N]
template <typename T>
void matmul(const T* a, const T* w, T* out, int m_rows, int k_dim, int n_cols) {
    for (int m = 0; m < m_rows; ++m) {
        T* o = out + static_cast<size_t>(m) * n_cols;
        for (int n = 0; n < n_cols; ++n) o[n] = T(0);
        const T* ar = a + static_cast<size_t>(m) * k_dim;
        for (int k = 0; k < k_dim; ++k) {
            T av = ar[k];
            const T* wr = w + static_cast<size_t>(k) * n_cols;
            for (int n = 0; n < n_cols; ++n) o[n] += av * wr[n];
        }
    }
}

// da[M,K] = dout[M,N] * W[K,N]^T
template <typename T>
void matmul_grad_input(const T* dout, const T* w, T* da, int m_rows, int k_dim, int n_cols) {
    for (int m = 0; m < m_rows; ++m) {
        const T* dr = dout + static_cast<size_t>(m) * n_cols;
        T* dar = da + static_cast<size_t>(m) * k_dim;
        for (int k = 0; k < k_dim; ++k) {
            const T* wr = w + static_cast<size_t>(k) * n_cols;
            T acc = T(0);
            for (int n = 0; n < n_cols; ++n) acc += dr[n] * wr[n];
            dar[k] = acc;
        }
    }
}

// dw[K,N] += A[M,K]^T * dout[M,N]
template <typename T>
void matmul_grad_weight(const T* a, const T* dout, T* dw, int m_rows, int k_dim, int n_cols) {
    for (int k = 0; k < k_dim; ++k) {
        T* dwr = dw + static_cast<size_t>(k) * n_cols;
        for (int m = 0; m < m_rows; ++m) {
            T av = a[static_cast<size_t>(m) * k_dim + k];
            const T* dr = dout + static_cast<size_t>(m) * n_cols;
            for (int n = 0; n < n_cols; ++n) dwr[n] += av * dr[n];
        }
    }
}

}  // namespace xling::lm::ref

namespace xling::lm::par {

template <typename T>
void matmul(const T* a, const T* w, T* out, int m_rows, int k_dim, int n_cols) {
#pragma omp parallel for schedule(static)
    for (int m = 0; m < m_rows; ++m) {
        T* o = out + static_cast<size_t>(m) * n_cols;
        for (int n = 0; n < n_cols; ++n) o[n] = T(0);
        const T* ar = a + static_cast<size_t>(m) * k_dim;
        for (int k = 0; k < k_dim; ++k) {
            T av = ar[k];
            const T* wr = w + static_cast<size_t>(k) * n_cols;
            for (int n = 0; n < n_cols; ++n) o[n] += av * wr[n];
        }
    }
}

template <typename T>
void matmul_grad_input(const T* dout, const T* w, T* da, int m_rows, int k_dim, int n_cols) {
#pragma omp parallel for schedule(static)
    for (int m = 0; m < m_rows; ++m) {
        const T* dr = dout + static_cast<size_t>(m) * n_cols;
        T* dar = da + static_cast<size_t>(m) * k_dim;
        for (int k = 0; k < k_dim; ++k) {
            const T* wr = w + static_cast<size_t>(k) * n_cols;
            T acc = T(0);
            for (int n = 0; n < n_cols; ++n) acc += dr[n] * wr[n];
            dar[k] = acc;
        }
    }
}

template <typename T>
void matmul_grad_weight(const T* a, const T* dout, T* dw, int m_rows, int k_dim, int n_cols) {
#pragma omp parallel for schedule(static)
    for (int k = 0; k < k_dim; ++k) {
        T* dwr = dw + static_cast<size_t>(k) * n_cols;
        for (int m = 0; m < m_rows; ++m) {
            T av = a[static_cast<size_t>(m) * k_dim + k];
            const T* dr = dout + static_cast<size_t>(m) * n_cols;
            for (int n = 0; n < n_cols; ++n) dwr[n] += av * dr[n];
        }
    }
}

}  // namespace xling::lm::par
