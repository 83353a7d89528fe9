#pragma once

#include <cstdint>
#include <vector>

#include "hybridgp/gaussian.hpp"

namespace hybridgp {

/// SE-ARD hyperparameters, stored as logs so optimization is unconstrained.
struct GpHyperparams {
    Vec log_lengthscales;
    double log_signal_var = 0.0;
    double log_noise_var = 0.0;

    static GpHyperparams from_natural(const Vec& lengthscales, double signal_var, double noise_var);

    int input_dim() const { return static_cast<int>(log_lengthscales.size()); }
    Vec lengthscales() const { return log_lengthscales.array().exp(); }
    double signal_var() const;
    double noise_var() const;

    /// Packed as [log l_1..log l_d, log sf2, log sn2].
    Vec pack() const;
    static GpHyperparams unpack(const Vec& theta);
};

double se_ard_kernel(const Vec& a, const Vec& b, const GpHyperparams& hyp);

struct LmlResult {
    double value = 0.0;
    Vec gradient;  // d lml / d packed log-hyperparameters
};

/// Log evidence of a zero-mean SE-ARD GP and its analytic gradient.
LmlResult log_marginal_likelihood(const Mat& inputs, const Vec& targets, const GpHyperparams& hyp);

struct GpFitConfig {
    int restarts = 5;
    int max_iterations = 100;
    /// Training rows kept per GP (seeded subsample above this); 0 keeps all.
    int max_points = 300;
    /// Lengthscales are bounded below by input std / this ratio.
    double min_lengthscale_ratio = 30.0;
    /// Predictive variance includes the noise term.
    bool include_noise = true;
    std::uint64_t seed = 0;
};

/// Single-output zero-mean GP on the inputs exactly as given.
class GpModel {
public:
    GpModel() = default;
    GpModel(Mat inputs, Vec targets, GpHyperparams hyp, bool include_noise = true);

    /// Marginal-likelihood optimization over `cfg.restarts` starts. The first
    /// start uses per-dimension input std, target variance and 0.1 x target
    /// variance; the rest perturb it in log space.
    static GpModel fit(const Mat& inputs, const Vec& targets, const GpFitConfig& cfg);

    struct Prediction {
        double mean;
        double var;
    };
    Prediction predict(const Vec& x) const;
    double predict_mean(const Vec& x) const;

    const Mat& inputs() const { return inputs_; }
    const Vec& targets() const { return targets_; }
    const GpHyperparams& hyper() const { return hyp_; }
    const Mat& chol_factor() const { return chol_; }
    const Vec& alpha_weights() const { return alpha_; }
    bool include_noise() const { return include_noise_; }
    double lml() const { return lml_; }

private:
    Vec kernel_column(const Vec& x) const;

    Mat inputs_;  // N x d
    Vec targets_;
    GpHyperparams hyp_;
    Mat chol_;
    Vec alpha_;
    bool include_noise_ = true;
    double lml_ = 0.0;
};

/// Affine z-scoring of a vector space, fitted on training data.
struct Standardizer {
    Vec shift;
    Vec scale;

    static Standardizer fit(const Mat& rows);  // rows: N x d
    static Standardizer identity(int d);
    Vec apply(const Vec& x) const { return (x - shift).cwiseQuotient(scale); }
    Vec inverse(const Vec& z) const { return z.cwiseProduct(scale) + shift; }
    Mat apply_rows(const Mat& rows) const;
};

/// Independent GPs per output over a shared, standardized input set.
class MultiOutputGp {
public:
    MultiOutputGp() = default;
    MultiOutputGp(Standardizer input_norm, Standardizer target_norm, std::vector<GpModel> outputs);

    /// inputs: N x d, targets: N x m. Rows beyond cfg.max_points are dropped
    /// by seeded subsampling before anything else.
    static MultiOutputGp fit(const Mat& inputs, const Mat& targets, const GpFitConfig& cfg);

    /// Diagonal predictive belief in target units.
    GaussianBelief predict(const Vec& x) const;
    Vec predict_mean(const Vec& x) const;

    int input_dim() const { return static_cast<int>(input_norm_.shift.size()); }
    int output_dim() const { return static_cast<int>(outputs_.size()); }
    int training_size() const { return outputs_.empty() ? 0 : static_cast<int>(outputs_[0].inputs().rows()); }
    const Standardizer& input_norm() const { return input_norm_; }
    const Standardizer& target_norm() const { return target_norm_; }
    const std::vector<GpModel>& outputs() const { return outputs_; }

private:
    Standardizer input_norm_;
    Standardizer target_norm_;
    std::vector<GpModel> outputs_;
};

}  // namespace hybridgp
