// SPDX-License-Identifier: Apache-2.0
#include "xling/corpus/mix.hpp"

#include <cmath>
#include <string>

#include "xling/util.hpp"

namespace xling::corpus {

MixSpec compute_mix(int64_t total_tokens, double parallel_fraction, double english_ratio) {
    if (total_tokens < 0) throw ConfigError("compute_mix: negative total");
    if (parallel_fraction < 0.0 || parallel_fraction > 1.0)
        throw ConfigError("compute_mix: parallel_fraction outside [0,1]");
    if (english_ratio < 0.0 || english_ratio > 1.0)
        throw ConfigError("compute_mix: english_ratio outside [0,1]");

    // Even parallel budget, half per language side.
    int64_t parallel = 2 * llround(parallel_fraction * static_cast<double>(total_tokens) / 2.0);
    int64_t half = parallel / 2;
    int64_t english_side = llround(english_ratio * static_cast<double>(total_tokens));

    int64_t english = english_side - half;
    int64_t finnish = (total_tokens - english_side) - half;
    if (english < 0 || finnish < 0)
        throw ConfigError(
            "compute_mix: infeasible ratios, parallel half-share " + std::to_string(half) +
            " exceeds a language-side budget (english side " + std::to_string(english_side) +
            ", finnish side " + std::to_string(total_tokens - english_side) + ")");

    MixSpec spec;
    spec.total_tokens = total_tokens;
    spec.english_tokens = english;
    spec.finnish_tokens = finnish;
    spec.parallel_tokens = parallel;
    spec.english_ratio = english_ratio;
    spec.parallel_fraction = parallel_fraction;
    return spec;
}

}  // namespace xling::corpus
