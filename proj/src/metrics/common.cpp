// SPDX-License-Identifier: Apache-2.0
#include "common.hpp"

#include <map>

namespace xling::metrics::detail {

std::vector<std::pair<int, int>> matched_pairs(const probes::ActivationSet& set) {
    auto [lang_a, lang_b] = language_pair(set.labels);
    std::map<int64_t, std::pair<int, int>> by_id;  // pair id -> (idx in A, idx in B)
    for (int s = 0; s < set.sentences; ++s) {
        int64_t id = set.pair_ids[s];
        if (id < 0) continue;
        auto& slot = by_id[id];
        if (set.labels[s] == lang_a)
            slot.first = s + 1;  // store +1 so 0 means empty
        else
            slot.second = s + 1;
    }
    std::vector<std::pair<int, int>> out;
    for (const auto& [id, idx] : by_id) {
        if (idx.first == 0 || idx.second == 0)
            throw DataError("incomplete pairing for pair id " + std::to_string(id));
        out.emplace_back(idx.first - 1, idx.second - 1);
    }
    if (out.empty()) throw DataError("activation set has no paired sentences");
    return out;
}

}  // namespace xling::metrics::detail
