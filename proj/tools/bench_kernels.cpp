// SPDX-License-Identifier: Apache-2.0
//
// Compares the serial reference matmul kernels against the OpenMP versions
// and checks they agree bit-for-bit.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <cstdio>
#include <random>
#include <vector>

#include "xling/lm/kernels.hpp"

using clock_type = std::chrono::steady_clock;

namespace {

double time_ms(const std::function<void()>& fn, int reps) {
    fn();  // warmup
    auto t0 = clock_type::now();
    for (int i = 0; i < reps; ++i) fn();
    auto t1 = clock_type::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

}  // namespace

int main(int argc, char** argv) {
    int rows = argc > 1 ? std::atoi(argv[1]) : 512;
    int inner = argc > 2 ? std::atoi(argv[2]) : 256;
    int cols = argc > 3 ? std::atoi(argv[3]) : 256;
    int reps = argc > 4 ? std::atoi(argv[4]) : 10;

    std::mt19937_64 rng(12345);
    std::normal_distribution<float> dist(0.0f, 1.0f);
    std::vector<float> a(static_cast<size_t>(rows) * inner);
    std::vector<float> w(static_cast<size_t>(inner) * cols);
    for (auto& x : a) x = dist(rng);
    for (auto& x : w) x = dist(rng);

    std::vector<float> out_ref(static_cast<size_t>(rows) * cols);
    std::vector<float> out_par(out_ref.size());

    double t_ref = time_ms(
        [&] { xling::lm::ref::matmul(a.data(), w.data(), out_ref.data(), rows, inner, cols); },
        reps);
    double t_par = time_ms(
        [&] { xling::lm::par::matmul(a.data(), w.data(), out_par.data(), rows, inner, cols); },
        reps);

    size_t mismatches = 0;
    for (size_t i = 0; i < out_ref.size(); ++i)
        if (out_ref[i] != out_par[i]) ++mismatches;

    double gflop = 2.0 * rows * inner * cols / 1e9;
    std::printf("matmul %dx%dx%d (%.3f GFLOP)\n", rows, inner, cols, gflop);
    std::printf("  serial  %8.3f ms  %6.2f GFLOP/s\n", t_ref, gflop / (t_ref / 1e3));
    std::printf("  openmp  %8.3f ms  %6.2f GFLOP/s  speedup %.2fx\n", t_par,
                gflop / (t_par / 1e3), t_ref / t_par);
    std::printf("  bitwise mismatches: %zu\n", mismatches);
    return mismatches == 0 ? 0 : 1;
}
