#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "hybridgp/dataset.hpp"
#include "hybridgp/dpgmm.hpp"
#include "hybridgp/gp.hpp"
#include "hybridgp/guard.hpp"
#include "hybridgp/mode_discovery.hpp"
#include "hybridgp/policy.hpp"

namespace hybridgp {

using ModePair = std::pair<int, int>;

/// Learned hybrid automaton: per-mode delta dynamics, per-switch reset maps,
/// the guard and the set of switches seen in training.
struct HybridModel {
    int state_dim = 0;
    int action_dim = 0;
    std::map<int, MultiOutputGp> modes;  // (x, u) -> delta x
    std::map<ModePair, MultiOutputGp> resets;  // (x, u) -> x_next
    GuardModel guard;
    TransitionRelation relation;

    bool has_mode(int m) const { return modes.contains(m); }
    /// Throws ConfigError when a structural invariant is broken.
    void validate() const;
};

struct HybridLearnConfig {
    DpgmmConfig dpgmm;
    /// Mode and reset GPs model smooth dynamics within one cluster, whose
    /// input spread can be tiny (a stuck block). A lengthscale floor of half
    /// that spread keeps them from fitting process noise as structure.
    GpFitConfig gp = [] {
        GpFitConfig g;
        g.min_lengthscale_ratio = 2.0;
        return g;
    }();
    GuardConfig guard;
    /// Also train mode dynamics on the step right before a switch.
    bool include_pre_switch_steps = false;
    std::uint64_t seed = 0;
};

struct LearnReport {
    int clusters_found = 0;
    int modes = 0;
    int dpgmm_iterations = 0;
    bool dpgmm_converged = false;
    std::map<int, double> mode_lml;  // summed over outputs
    std::map<ModePair, double> reset_lml;
    std::map<int, int> mode_rows;
    std::map<ModePair, int> reset_rows;
    double guard_cv_accuracy = 0.0;
    SvmParams guard_params;
    std::vector<std::string> warnings;
};

struct LearnResult {
    HybridModel model;
    LearnReport report;
    std::vector<std::vector<int>> labels;  // final per-step mode labels
};

LearnResult learn(const Dataset& data, const HybridLearnConfig& cfg,
                  const FeatureMap& features = FeatureMap::identity());

/// x_{t+1} belief from one sigma-point pushforward of (x, u) -> x + delta(x, u).
GaussianBelief step_in_mode(const HybridModel& model, int mode, const GaussianBelief& joint,
                            const SigmaPointConfig& cfg);

/// x_{t+1} belief through the reset map of an allowed switch.
GaussianBelief step_reset(const HybridModel& model, ModePair pair, const GaussianBelief& joint,
                          const SigmaPointConfig& cfg);

/// Guard prediction at the x0 mean with the policy's mean action there.
int infer_initial_mode(const HybridModel& model, const Policy& policy, const GaussianBelief& x0);

}  // namespace hybridgp
