#pragma once

#include <cstdint>
#include <vector>

#include "hybridgp/dataset.hpp"
#include "hybridgp/gp.hpp"
#include "hybridgp/policy.hpp"
#include "hybridgp/prediction.hpp"

namespace hybridgp {

/// Scores over t = 1..T of every test trial (t = 0 is the given x0 belief).
/// NLL uses the joint density of the full mixture; RMSE is taken per
/// (trial, step) over state dimensions from the most likely segment's mean.
struct ScoreReport {
    double avg_nll = 0.0;
    double nll_std = 0.0;
    double avg_rmse = 0.0;
    double rmse_std = 0.0;
    std::vector<double> per_step_nll;  // index t, averaged over trials; [0] unused
    std::vector<double> per_step_rmse;
    int trials = 0;
    int steps = 0;
};

/// State x_t of a trial for t = 0..size (the last one is the final x_next).
Vec trial_state(const Trajectory& trial, std::size_t t);

ScoreReport score(const PredictionTrace& trace, const Dataset& test);

/// One GP over the pooled, unclustered data: (x, u) -> x_next - x.
MultiOutputGp train_global_gp(const Dataset& data, const GpFitConfig& cfg);

struct BaselineConfig {
    int n_particles = 50;
    int k_max = 10;
    double alpha_concentration = 0.1;
    std::uint64_t seed = 0;
};

struct BaselineResult {
    PredictionTrace trace;
    /// Particle updates that produced non-finite states and were held at
    /// their previous value.
    int clamped_particles = 0;
};

/// Particle rollout of a single GP followed by DPGMM density estimation at
/// every step. Clouds too small or too degenerate for the mixture collapse
/// to their sample moments.
BaselineResult baseline_gp_rollout(const MultiOutputGp& gp, const Policy& policy, const GaussianBelief& x0,
                                   int horizon, const BaselineConfig& cfg);

}  // namespace hybridgp
