#pragma once

#include <optional>
#include <vector>

#include "hybridgp/types.hpp"

namespace hybridgp {

struct Step {
    Vec x;
    Vec u;
    Vec x_next;
    /// Ground-truth mode, when the generator knows it (-1 otherwise). Only
    /// used for evaluation and diagnostics, never for learning.
    int true_mode = -1;
};

struct Trajectory {
    std::vector<Step> steps;
    std::size_t size() const { return steps.size(); }
};

/// Temporally ordered trials. Labels, when present, mirror the step layout.
struct Dataset {
    std::vector<Trajectory> trials;
    std::optional<std::vector<std::vector<int>>> labels;

    int state_dim() const;
    int action_dim() const;
    std::size_t total_steps() const;
    bool empty() const { return total_steps() == 0; }

    /// Throws ConfigError on ragged dimensions, non-finite values, or broken
    /// chaining (x_next of step t must equal x of step t+1 within 1e-12).
    void validate() const;

    /// All x_t in temporal order, one row per step.
    Mat state_rows() const;
};

/// Concatenation [x; u].
Vec join_state_action(const Vec& x, const Vec& u);

}  // namespace hybridgp
