#include "hybridgp/policy.hpp"

namespace hybridgp {

Vec Policy::sample(const Vec& x, std::mt19937_64& rng) const {
    const GaussianBelief a = action(x);
    std::normal_distribution<double> normal(0.0, 1.0);
    Vec z(a.dim());
    for (int k = 0; k < a.dim(); ++k) z(k) = normal(rng);
    if (a.cov().cwiseAbs().maxCoeff() == 0.0) return a.mean();
    return a.mean() + robust_cholesky(a.cov(), "policy noise covariance") * z;
}

LinearGaussianPolicy::LinearGaussianPolicy(Mat gain, Vec bias, Mat noise_cov)
    : gain_(std::move(gain)), bias_(std::move(bias)), noise_cov_(std::move(noise_cov)) {
    if (bias_.size() != gain_.rows() || noise_cov_.rows() != gain_.rows() || noise_cov_.cols() != gain_.rows()) {
        throw ConfigError("linear policy: gain/bias/noise dimensions disagree");
    }
    GaussianBelief(bias_, noise_cov_).validate("policy noise covariance");
}

GaussianBelief LinearGaussianPolicy::action(const Vec& x) const {
    if (x.size() != gain_.cols()) throw ConfigError("linear policy: state dimension mismatch");
    return GaussianBelief(gain_ * x + bias_, noise_cov_);
}

GaussianBelief joint_state_action(const Policy& policy, const GaussianBelief& state, const SigmaPointConfig& cfg) {
    const UtResult ut = propagate_probabilistic_full([&](const Vec& x) { return policy.action(x); }, state, cfg);
    const int dx = state.dim();
    const int du = ut.output.dim();
    if (du != policy.action_dim()) throw ConfigError("policy returned wrong action dimension");
    Vec mean(dx + du);
    mean << state.mean(), ut.output.mean();
    Mat cov(dx + du, dx + du);
    cov.topLeftCorner(dx, dx) = state.cov();
    cov.topRightCorner(dx, du) = ut.cross_cov;
    cov.bottomLeftCorner(du, dx) = ut.cross_cov.transpose();
    cov.bottomRightCorner(du, du) = ut.output.cov();
    return GaussianBelief(std::move(mean), repair_psd(cov));
}

}  // namespace hybridgp
