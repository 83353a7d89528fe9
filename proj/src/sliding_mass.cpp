#include "hybridgp/sliding_mass.hpp"

#include <cmath>

namespace hybridgp {

void SlidingMassConfig::check() const {
    if (!(mass > 0.0)) throw ConfigError("sliding mass: mass must be > 0");
    if (!(dt > 0.0)) throw ConfigError("sliding mass: dt must be > 0");
    if (horizon < 1) throw ConfigError("sliding mass: horizon must be >= 1");
    if (substeps < 1) throw ConfigError("sliding mass: substeps must be >= 1");
    if (!std::isfinite(patch_position) || !std::isfinite(static_break_force) ||
        !std::isfinite(kinetic_friction_force) || !std::isfinite(slip_jump_velocity))
        throw ConfigError("sliding mass: non-finite parameter");
    if (process_noise_std.size() != 2 || (process_noise_std.array() < 0.0).any())
        throw ConfigError("sliding mass: process_noise_std must be two non-negative values");
    if (init_mean.size() != 2 || init_cov.rows() != 2 || init_cov.cols() != 2)
        throw ConfigError("sliding mass: initial state must be 2-D");
    GaussianBelief(init_mean, init_cov).validate("initial state covariance");
}

LinearGaussianPolicy default_sliding_policy() {
    Mat gain(1, 2);
    gain << 0.0, -0.1;
    return LinearGaussianPolicy(gain, Vec::Constant(1, 1.0), Mat::Constant(1, 1, 0.01));
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

SlidingStep sliding_step(const Vec& x, SlidingMode mode, double force, const SlidingMassConfig& cfg,
                         std::mt19937_64& rng) {
    const double p = x(0);
    const double v = x(1);
    double pn = p;
    double vn = v;
    SlidingMode next = mode;
    const double h = cfg.dt / cfg.substeps;
    switch (mode) {
        case SlidingMode::Free:
            for (int k = 0; k < cfg.substeps; ++k) {
                const double p0 = pn;
                vn += force / cfg.mass * h;
                pn += vn * h;
                if (p0 < cfg.patch_position && pn >= cfg.patch_position && vn > 0.0) {
                    pn = cfg.patch_position;
                    vn = 0.0;
                    next = SlidingMode::Stuck;
                    break;
                }
            }
            break;
        case SlidingMode::Stuck:
            if (force > cfg.static_break_force) {
                vn = cfg.slip_jump_velocity;
                pn = p + vn * cfg.dt;
                next = SlidingMode::Slip;
            } else {
                vn = 0.0;
            }
            break;
        case SlidingMode::Slip:
            for (int k = 0; k < cfg.substeps; ++k) {
                vn += (force - cfg.kinetic_friction_force) / cfg.mass * h;
                pn += vn * h;
            }
            break;
    }
    std::normal_distribution<double> normal(0.0, 1.0);
    Vec out(2);
    out << pn, vn;
    for (int k = 0; k < 2; ++k) {
        if (cfg.process_noise_std(k) > 0.0) out(k) += cfg.process_noise_std(k) * normal(rng);
    }
    return {out, next};
}

Trajectory simulate_sliding_trial(const SlidingMassConfig& cfg, const Policy& policy, std::mt19937_64& rng) {
    cfg.check();
    if (policy.state_dim() != 2 || policy.action_dim() != 1)
        throw ConfigError("sliding mass: policy must map 2-D states to 1-D forces");
    std::normal_distribution<double> normal(0.0, 1.0);
    Vec x = cfg.init_mean;
    if (cfg.init_cov.cwiseAbs().maxCoeff() > 0.0) {
        const Mat l = robust_cholesky(cfg.init_cov, "initial state covariance");
        Vec z(2);
        z << normal(rng), normal(rng);
        x += l * z;
    }
    SlidingMode mode = SlidingMode::Free;
    Trajectory tr;
    tr.steps.reserve(static_cast<std::size_t>(cfg.horizon));
    for (int t = 0; t < cfg.horizon; ++t) {
        const Vec u = policy.sample(x, rng);
        SlidingStep s = sliding_step(x, mode, u(0), cfg, rng);
        tr.steps.push_back(Step{x, u, s.x_next, static_cast<int>(mode)});
        x = std::move(s.x_next);
        mode = s.mode;
    }
    return tr;
}

DatasetSplit generate_sliding_dataset(const SlidingMassConfig& cfg, const Policy& policy, int n_train, int n_test,
                                      std::uint64_t seed) {
    if (n_train < 1 || n_test < 1) throw ConfigError("generate: trial counts must be >= 1");
    cfg.check();
    DatasetSplit out;
    for (int i = 0; i < n_train + n_test; ++i) {
        std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
        Trajectory tr = simulate_sliding_trial(cfg, policy, rng);
        (i < n_train ? out.train : out.test).trials.push_back(std::move(tr));
    }
    return out;
}

}  // namespace hybridgp
