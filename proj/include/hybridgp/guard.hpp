#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <vector>

#include "hybridgp/dataset.hpp"
#include "hybridgp/gaussian.hpp"
#include "hybridgp/gp.hpp"
#include "hybridgp/mode_discovery.hpp"
#include "hybridgp/svm.hpp"

namespace hybridgp {

struct GuardConfig {
    std::vector<double> c_grid{0.1, 1.0, 10.0, 100.0};
    std::vector<double> gamma_grid{0.01, 0.1, 1.0, 10.0};
    int folds = 5;
    /// Rows used by the grid search (seeded subsample); the final fit uses all rows. 0 = all.
    int max_search_rows = 1500;
    std::uint64_t seed = 0;
};

/// Discrete distribution over next modes.
struct ModeDistribution {
    std::map<int, double> probabilities;

    double at(int mode) const;
    double total() const;
    /// Drops entries below `threshold` and rescales the rest to sum to one.
    void prune_and_normalize(double threshold);
};

/// Training rows for the guard: inputs (x_t, u_t), targets z_{t+1}. The
/// last step of each trial has no successor label and is skipped.
struct GuardRows {
    Mat inputs;
    std::vector<int> next_labels;
};
GuardRows guard_training_rows(const Dataset& labeled);

/// Deterministic next-mode classifier over standardized (x, u).
class GuardModel {
public:
    GuardModel() = default;
    GuardModel(Standardizer norm, MulticlassSvm svm, SvmParams params, double cv_accuracy);

    static GuardModel train(const Dataset& labeled, const GuardConfig& cfg);
    static GuardModel train(const GuardRows& rows, const GuardConfig& cfg);

    int predict(const Vec& xu) const;
    int predict_mode(const Vec& x, const Vec& u) const { return predict(join_state_action(x, u)); }

    const std::vector<int>& classes() const { return svm_.classes(); }
    const Standardizer& norm() const { return norm_; }
    const MulticlassSvm& svm() const { return svm_; }
    const SvmParams& params() const { return params_; }
    double cv_accuracy() const { return cv_accuracy_; }
    int input_dim() const { return static_cast<int>(norm_.shift.size()); }

private:
    Standardizer norm_;
    MulticlassSvm svm_;
    SvmParams params_;
    double cv_accuracy_ = 1.0;
};

struct GuardPropagation {
    ModeDistribution distribution;
    /// Joint (x, u) belief of the samples that landed in each surviving mode.
    std::map<int, GaussianBelief> conditionals;
};

/// How guard samples are drawn from the joint belief.
enum class GuardSampling {
    MonteCarlo,
    /// Sobol points under a random shift (randomized quasi-Monte-Carlo):
    /// still unbiased, with far smaller mass error at the same sample count.
    Sobol,
};

/// Monte-Carlo pushforward of a joint (x, u) belief through the guard.
/// Predictions of j != current_mode with (current_mode, j) outside the
/// relation count as current_mode. Modes below `min_probability` are dropped.
/// Classes with fewer than dim + 2 samples fall back to the joint moments.
GuardPropagation propagate_guard(const GuardModel& guard, const GaussianBelief& joint, int n_samples,
                                 int current_mode, const TransitionRelation& relation, std::mt19937_64& rng,
                                 double min_probability = 0.01, GuardSampling sampling = GuardSampling::MonteCarlo);

}  // namespace hybridgp
