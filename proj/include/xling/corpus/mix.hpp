// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

namespace xling::corpus {

// Token budgets for the three corpus streams. The parallel budget counts
// both language sides together; half of it is attributed to each side, so
//   english + parallel/2 = english_ratio * total
//   finnish + parallel/2 = (1 - english_ratio) * total
// hold exactly in integer token units.
struct MixSpec {
    int64_t total_tokens = 0;
    int64_t english_tokens = 0;
    int64_t finnish_tokens = 0;
    int64_t parallel_tokens = 0;
    double english_ratio = 0.0;
    double parallel_fraction = 0.0;

    bool valid() const {
        return english_tokens >= 0 && finnish_tokens >= 0 && parallel_tokens >= 0 &&
               english_tokens + finnish_tokens + parallel_tokens == total_tokens;
    }
};

// Parallel budget is rounded to the nearest even token count so the per-side
// half shares stay integral; monolingual budgets are then derived exactly.
// Throws ConfigError when a half share exceeds a language-side budget.
MixSpec compute_mix(int64_t total_tokens, double parallel_fraction, double english_ratio);

}  // namespace xling::corpus
