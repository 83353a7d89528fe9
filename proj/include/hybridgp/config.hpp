#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "hybridgp/evaluation.hpp"
#include "hybridgp/hybrid_model.hpp"
#include "hybridgp/prediction.hpp"
#include "hybridgp/sliding_mass.hpp"

namespace hybridgp {

struct PolicySpec {
    Mat gain;
    Vec bias;
    Mat noise_cov;

    static PolicySpec sliding_default();
    LinearGaussianPolicy build() const { return LinearGaussianPolicy(gain, bias, noise_cov); }
};

/// Everything a CLI run needs. Sub-component seeds are derived from `seed`.
struct RunConfig {
    std::uint64_t seed = 0;
    SlidingMassConfig env;
    int n_train = 15;
    int n_test = 5;
    HybridLearnConfig learn;
    PredictionConfig prediction;
    BaselineConfig baseline;
    GpFitConfig baseline_gp;
    PolicySpec policy = PolicySpec::sliding_default();
    /// Initial belief for predict/baseline; defaults to the environment's.
    std::optional<GaussianBelief> x0;
    /// Prediction horizon; defaults to env.horizon.
    std::optional<int> horizon;
    /// Initial mode for predict; inferred by the guard when absent.
    std::optional<int> initial_mode;

    GaussianBelief initial_belief() const;
    int prediction_horizon() const { return horizon.value_or(env.horizon); }
    /// Propagates `seed` into every component config.
    void apply_seed(std::uint64_t s);
    void check() const;
};

nlohmann::json to_json(const RunConfig& cfg);
/// Missing keys keep their defaults; unknown top-level keys are rejected.
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::string& path);

/// 64-bit FNV-1a of a byte string, as 16 hex digits.
std::string fnv1a_hex(const std::string& bytes);

}  // namespace hybridgp
