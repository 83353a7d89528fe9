#pragma once

#include <map>
#include <vector>

#include "hybridgp/hybrid_model.hpp"
#include "hybridgp/sliding_mass.hpp"

namespace test {

using namespace hybridgp;

/// Majority ground-truth mode of every learned cluster.
inline std::map<int, SlidingMode> majority_modes(const Dataset& data, const std::vector<std::vector<int>>& labels) {
    std::map<int, std::map<int, int>> votes;
    for (std::size_t i = 0; i < data.trials.size(); ++i)
        for (std::size_t t = 0; t < data.trials[i].size(); ++t) ++votes[labels[i][t]][data.trials[i].steps[t].true_mode];
    std::map<int, SlidingMode> out;
    for (const auto& [c, v] : votes) {
        int best = -1, n = -1;
        for (const auto& [m, k] : v)
            if (k > n) best = m, n = k;
        out[c] = static_cast<SlidingMode>(best);
    }
    return out;
}

/// True if some learned switch maps ground-truth mode a to b.
inline bool relation_has(const TransitionRelation& rel, const std::map<int, SlidingMode>& truth, SlidingMode a,
                         SlidingMode b) {
    for (const auto& [i, j] : rel.pairs())
        if (truth.at(i) == a && truth.at(j) == b) return true;
    return false;
}

/// First t with x_t in mode m, or -1.
inline int first_in_mode(const Trajectory& tr, SlidingMode m) {
    for (std::size_t t = 0; t < tr.size(); ++t)
        if (tr.steps[t].true_mode == static_cast<int>(m)) return static_cast<int>(t);
    return -1;
}

}  // namespace test
