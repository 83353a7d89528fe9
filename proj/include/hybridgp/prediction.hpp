#pragma once

#include <cstdint>
#include <vector>

#include "hybridgp/hybrid_model.hpp"
#include "hybridgp/policy.hpp"

namespace hybridgp {

struct PredictionConfig {
    SigmaPointConfig ut;
    /// Monte-Carlo samples per guard propagation.
    int guard_samples = 1000;
    GuardSampling guard_sampling = GuardSampling::Sobol;
    /// Next-mode probabilities below this are dropped before splitting.
    double min_split_prob = 0.01;
    double min_segment_weight = 1e-3;
    std::uint64_t seed = 0;
};

struct TraceEntry {
    int segment_id = 0;
    int mode = 0;
    double weight = 0.0;
    GaussianBelief belief;
};

/// steps[t] holds the weighted segments at time t = 0..T.
struct PredictionTrace {
    std::vector<std::vector<TraceEntry>> steps;

    int horizon() const { return static_cast<int>(steps.size()) - 1; }
    int state_dim() const;
    /// Throws NumericalError unless every step's weights sum to 1 (1e-6)
    /// and all beliefs pass the covariance invariants.
    void validate() const;
};

/// Long-term prediction with probabilistic switching. Each live segment is
/// split by the guard mass over next modes; same-mode branches go through
/// the mode GP, switches through the reset GP, and all branches landing in
/// one mode are moment-matched into that mode's single segment.
PredictionTrace predict(const HybridModel& model, const Policy& policy, const GaussianBelief& x0,
                        int initial_mode, int horizon, const PredictionConfig& cfg);

/// Collapse of step t to a single Gaussian.
GaussianBelief mixture_moments(const PredictionTrace& trace, int t);

/// Highest-weight entry per step; ties go to the lowest segment id.
std::vector<TraceEntry> most_likely_mode_sequence(const PredictionTrace& trace);

}  // namespace hybridgp
