#pragma once

#include <random>

#include "hybridgp/gaussian.hpp"

namespace hybridgp {

/// Stochastic policy p(u | x).
class Policy {
public:
    virtual ~Policy() = default;
    virtual GaussianBelief action(const Vec& x) const = 0;
    virtual int state_dim() const = 0;
    virtual int action_dim() const = 0;

    Vec sample(const Vec& x, std::mt19937_64& rng) const;
};

/// u = gain x + bias + e, e ~ N(0, noise_cov).
class LinearGaussianPolicy final : public Policy {
public:
    LinearGaussianPolicy(Mat gain, Vec bias, Mat noise_cov);

    GaussianBelief action(const Vec& x) const override;
    int state_dim() const override { return static_cast<int>(gain_.cols()); }
    int action_dim() const override { return static_cast<int>(gain_.rows()); }

    const Mat& gain() const { return gain_; }
    const Vec& bias() const { return bias_; }
    const Mat& noise_cov() const { return noise_cov_; }

private:
    Mat gain_;
    Vec bias_;
    Mat noise_cov_;
};

/// p(x, u) = p(x) p(u | x): the action marginal and the state/action
/// cross-covariance both come from the sigma-point pushforward of p(x).
GaussianBelief joint_state_action(const Policy& policy, const GaussianBelief& state, const SigmaPointConfig& cfg);

}  // namespace hybridgp
