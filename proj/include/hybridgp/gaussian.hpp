#pragma once

#include <functional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "hybridgp/types.hpp"

namespace hybridgp {

/// Mean and covariance over a continuous vector; the unimodal building block
/// of every prediction.
class GaussianBelief {
public:
    GaussianBelief() = default;
    GaussianBelief(Vec mean, Mat cov);

    static GaussianBelief point_mass(const Vec& mean);

    const Vec& mean() const { return mean_; }
    const Mat& cov() const { return cov_; }
    int dim() const { return static_cast<int>(mean_.size()); }

    /// Throws NumericalError unless cov is symmetric (1e-10 relative) and
    /// PSD (eigenvalues >= -1e-10 * largest).
    void validate(std::string_view name = "covariance") const;
    bool is_valid() const;

    /// Marginal over the leading `n` coordinates.
    GaussianBelief head(int n) const;

private:
    Vec mean_;
    Mat cov_;
};

struct SigmaPointConfig {
    double alpha = 1e-3;
    double beta = 2.0;
    double kappa = 0.0;

    /// Throws ConfigError if the scaling is unusable for dimension n.
    void check(int n) const;
};

struct SigmaPoints {
    Mat points;  // n x (2n+1), column 0 is the mean
    Vec mean_weights;
    Vec cov_weights;
};

SigmaPoints make_sigma_points(const GaussianBelief& input, const SigmaPointConfig& cfg);

/// Pushforward estimate plus the input/output cross-covariance E[(x-mu)(y-ybar)^T].
struct UtResult {
    GaussianBelief output;
    Mat cross_cov;
};

using VectorMap = std::function<Vec(const Vec&)>;
using ProbabilisticMap = std::function<GaussianBelief(const Vec&)>;

UtResult unscented_transform_full(const VectorMap& f, const GaussianBelief& input,
                                  const SigmaPointConfig& cfg);
GaussianBelief unscented_transform(const VectorMap& f, const GaussianBelief& input,
                                   const SigmaPointConfig& cfg);

/// UT through a stochastic map. The spread of the per-point means forms the
/// UT moments; the per-point covariances are averaged with the mean weights
/// and added on top.
UtResult propagate_probabilistic_full(const ProbabilisticMap& f, const GaussianBelief& input,
                                      const SigmaPointConfig& cfg);
GaussianBelief propagate_probabilistic(const ProbabilisticMap& f, const GaussianBelief& input,
                                       const SigmaPointConfig& cfg);

/// Moment-matched collapse of a weighted set of Gaussians. Weights are
/// normalized internally.
GaussianBelief merge_weighted(std::span<const std::pair<double, GaussianBelief>> components);

/// -log N(point; mean, cov).
double gaussian_nll(const GaussianBelief& belief, const Vec& point);

/// log sum_k w_k N(point; mu_k, Sigma_k), weights used as given.
double mixture_log_density(std::span<const std::pair<double, GaussianBelief>> components,
                           const Vec& point);

// Numerical helpers shared across modules.

/// Symmetrize, then clip any negative eigenvalues to zero.
Mat repair_psd(const Mat& m);

/// Lower Cholesky factor; on failure retries with diagonal jitter
/// 1e-10, 1e-9, ..., 1e-6 and throws NumericalError naming `what`.
Mat robust_cholesky(const Mat& m, std::string_view what);

}  // namespace hybridgp
