#pragma once

#include <cstdint>
#include <random>

#include "hybridgp/dataset.hpp"
#include "hybridgp/policy.hpp"

namespace hybridgp {

/// Ground-truth mode ids of the simulator.
enum class SlidingMode : int { Free = 0, Stuck = 1, Slip = 2 };

/// 1-D block pulled towards a friction patch. State is [position m; velocity m/s].
struct SlidingMassConfig {
    double mass = 1.0;
    double dt = 0.05;
    /// Semi-implicit Euler sub-steps per control step (force held constant).
    int substeps = 10;
    int horizon = 75;
    double patch_position = 3.0;
    /// Pull needed to break a stuck block loose. With the default policy a
    /// stuck block breaks away with probability ~3% per step.
    double static_break_force = 1.19;
    double kinetic_friction_force = 0.75;
    double slip_jump_velocity = 5.0;
    Vec process_noise_std = Vec::Constant(2, 1e-3);
    Vec init_mean = Vec::Zero(2);
    Mat init_cov = Mat::Identity(2, 2) * 1e-4;

    void check() const;
};

/// u = 1.0 - 0.1 v + e, e ~ N(0, 0.1^2).
LinearGaussianPolicy default_sliding_policy();

struct SlidingStep {
    Vec x_next;
    SlidingMode mode;  // mode of x_next
};

/// One semi-implicit Euler step. The caller tracks the mode of x because
/// a stuck block and a free block at rest at the patch share a state.
SlidingStep sliding_step(const Vec& x, SlidingMode mode, double force, const SlidingMassConfig& cfg,
                         std::mt19937_64& rng);

/// One rollout of cfg.horizon steps. Step::true_mode holds the mode of x_t.
Trajectory simulate_sliding_trial(const SlidingMassConfig& cfg, const Policy& policy, std::mt19937_64& rng);

struct DatasetSplit {
    Dataset train;
    Dataset test;
};

/// Trials draw from independent generators seeded by (seed, trial index);
/// test trials continue the index after the training ones.
DatasetSplit generate_sliding_dataset(const SlidingMassConfig& cfg, const Policy& policy, int n_train, int n_test,
                                      std::uint64_t seed);

/// splitmix64 finalizer, used to derive independent seeds.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace hybridgp
