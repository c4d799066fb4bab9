// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "xling/probes/activations.hpp"
#include "xling/util.hpp"

namespace xling::metrics::detail {

// The two language labels in first-seen order.
inline std::pair<std::string, std::string> language_pair(
    const std::vector<std::string>& labels) {
    std::string a, b;
    for (const auto& l : labels) {
        if (a.empty()) {
            a = l;
        } else if (l != a && b.empty()) {
            b = l;
        } else if (l != a && l != b) {
            throw DataError("expected exactly two language labels, found a third: " + l);
        }
    }
    if (b.empty()) throw DataError("expected two language labels, found one");
    return {a, b};
}

// (index in A, index in B) for every complete pair id.
std::vector<std::pair<int, int>> matched_pairs(const probes::ActivationSet& set);

}  // namespace xling::metrics::detail
