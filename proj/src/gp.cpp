#include "hybridgp/gp.hpp"

#include <ceres/ceres.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>

namespace hybridgp {

GpHyperparams GpHyperparams::from_natural(const Vec& lengthscales, double signal_var, double noise_var) {
    GpHyperparams h;
    h.log_lengthscales = lengthscales.array().log();
    h.log_signal_var = std::log(signal_var);
    h.log_noise_var = std::log(noise_var);
    return h;
}

double GpHyperparams::signal_var() const { return std::exp(log_signal_var); }
double GpHyperparams::noise_var() const { return std::exp(log_noise_var); }

Vec GpHyperparams::pack() const {
    const int d = input_dim();
    Vec theta(d + 2);
    theta.head(d) = log_lengthscales;
    theta(d) = log_signal_var;
    theta(d + 1) = log_noise_var;
    return theta;
}

GpHyperparams GpHyperparams::unpack(const Vec& theta) {
    const auto d = theta.size() - 2;
    GpHyperparams h;
    h.log_lengthscales = theta.head(d);
    h.log_signal_var = theta(d);
    h.log_noise_var = theta(d + 1);
    return h;
}

double se_ard_kernel(const Vec& a, const Vec& b, const GpHyperparams& hyp) {
    const double r2 = ((a - b).array() / hyp.lengthscales().array()).square().sum();
    return hyp.signal_var() * std::exp(-0.5 * r2);
}

namespace {

Mat se_gram(const Mat& x, const Vec& inv_l2, double sf2) {
    const Eigen::Index n = x.rows();
    Mat k(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        k(i, i) = sf2;
        for (Eigen::Index j = 0; j < i; ++j) {
            const double r2 = ((x.row(i) - x.row(j)).array().square() * inv_l2.transpose().array()).sum();
            k(i, j) = k(j, i) = sf2 * std::exp(-0.5 * r2);
        }
    }
    return k;
}

Eigen::LLT<Mat> factor_kernel(Mat k) {
    Eigen::LLT<Mat> llt(k);
    if (llt.info() == Eigen::Success) return llt;
    const double scale = k.diagonal().mean();
    for (double jitter = 1e-10; jitter <= 1.01e-6; jitter *= 10.0) {
        Mat a = k;
        a.diagonal().array() += jitter * scale;
        llt.compute(a);
        if (llt.info() == Eigen::Success) return llt;
    }
    throw NumericalError("Cholesky failed for GP kernel matrix after jitter up to 1e-6");
}

}  // namespace

LmlResult log_marginal_likelihood(const Mat& inputs, const Vec& targets, const GpHyperparams& hyp) {
    const Eigen::Index n = inputs.rows();
    const int d = static_cast<int>(inputs.cols());
    if (n < 1) throw ConfigError("log_marginal_likelihood: no data");
    if (targets.size() != n || hyp.input_dim() != d) {
        throw ConfigError("log_marginal_likelihood: dimension mismatch");
    }
    const Vec inv_l2 = (-2.0 * hyp.log_lengthscales).array().exp();
    const double sf2 = hyp.signal_var();
    const double sn2 = hyp.noise_var();

    const Mat kse = se_gram(inputs, inv_l2, sf2);
    Mat ky = kse;
    ky.diagonal().array() += sn2;
    const Eigen::LLT<Mat> llt = factor_kernel(std::move(ky));
    const Mat l = llt.matrixL();
    const Vec alpha = llt.solve(targets);

    LmlResult r;
    r.value = -0.5 * targets.dot(alpha) - l.diagonal().array().log().sum() -
              0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);

    // W = alpha alpha^T - K^-1; dlml/dtheta = 0.5 tr(W dK/dtheta)
    Mat w = alpha * alpha.transpose() - llt.solve(Mat::Identity(n, n));
    const Mat wk = w.cwiseProduct(kse);
    r.gradient = Vec::Zero(d + 2);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < i; ++j) {
            const double c = wk(i, j);
            for (int k = 0; k < d; ++k) {
                const double diff = inputs(i, k) - inputs(j, k);
                r.gradient(k) += c * diff * diff;  // off-diagonal pairs counted once, x2 below
            }
        }
    }
    for (int k = 0; k < d; ++k) r.gradient(k) *= inv_l2(k);  // 0.5 * 2 * sum_{i>j}
    r.gradient(d) = 0.5 * wk.sum();
    r.gradient(d + 1) = 0.5 * sn2 * w.trace();
    return r;
}

namespace {

class NegLmlObjective final : public ceres::FirstOrderFunction {
public:
    NegLmlObjective(const Mat& x, const Vec& y, Vec lo, Vec hi)
        : x_(x), y_(y), lo_(std::move(lo)), hi_(std::move(hi)) {}

    bool Evaluate(const double* params, double* cost, double* gradient) const override {
        const Eigen::Map<const Vec> theta(params, lo_.size());
        LmlResult r;
        try {
            r = log_marginal_likelihood(x_, y_, GpHyperparams::unpack(theta));
        } catch (const NumericalError&) {
            return false;
        }
        if (!std::isfinite(r.value) || !r.gradient.allFinite()) return false;
        // quadratic wall outside the box, zero inside
        const double weight = 10.0 * static_cast<double>(y_.size());
        const Vec below = (lo_ - theta).cwiseMax(0.0);
        const Vec above = (theta - hi_).cwiseMax(0.0);
        cost[0] = -r.value + 0.5 * weight * (below.squaredNorm() + above.squaredNorm());
        if (gradient) {
            Eigen::Map<Vec> g(gradient, lo_.size());
            g = -r.gradient + weight * (above - below);
        }
        return true;
    }

    int NumParameters() const override { return static_cast<int>(lo_.size()); }

private:
    const Mat& x_;
    const Vec& y_;
    Vec lo_;
    Vec hi_;
};

double sample_std(const Eigen::Ref<const Vec>& v) {
    if (v.size() < 2) return 0.0;
    const double m = v.mean();
    return std::sqrt((v.array() - m).square().sum() / static_cast<double>(v.size() - 1));
}

}  // namespace

GpModel::GpModel(Mat inputs, Vec targets, GpHyperparams hyp, bool include_noise)
    : inputs_(std::move(inputs)), targets_(std::move(targets)), hyp_(std::move(hyp)),
      include_noise_(include_noise) {
    if (inputs_.rows() != targets_.size() || hyp_.input_dim() != inputs_.cols()) {
        throw ConfigError("GpModel: dimension mismatch");
    }
    const Vec inv_l2 = (-2.0 * hyp_.log_lengthscales).array().exp();
    Mat ky = se_gram(inputs_, inv_l2, hyp_.signal_var());
    ky.diagonal().array() += hyp_.noise_var();
    const Eigen::LLT<Mat> llt = factor_kernel(std::move(ky));
    chol_ = llt.matrixL();
    alpha_ = llt.solve(targets_);
    lml_ = -0.5 * targets_.dot(alpha_) - chol_.diagonal().array().log().sum() -
           0.5 * static_cast<double>(targets_.size()) * std::log(2.0 * std::numbers::pi);
}

GpModel GpModel::fit(const Mat& inputs, const Vec& targets, const GpFitConfig& cfg) {
    const Eigen::Index n = inputs.rows();
    const int d = static_cast<int>(inputs.cols());
    if (n < 2) throw ConfigError("GP fit needs at least 2 points");
    if (!(cfg.min_lengthscale_ratio >= 1.0)) throw ConfigError("GP fit: min_lengthscale_ratio must be >= 1");
    if (targets.size() != n) throw ConfigError("GP fit: inputs/targets row mismatch");
    if (!inputs.allFinite() || !targets.allFinite()) throw ConfigError("GP fit: non-finite data");

    Vec scale(d);
    for (int k = 0; k < d; ++k) {
        const double s = sample_std(inputs.col(k));
        scale(k) = s > 1e-12 ? s : 1.0;
    }
    double tvar = sample_std(targets);
    tvar = tvar > 1e-12 ? tvar * tvar : 1.0;

    const GpHyperparams init = GpHyperparams::from_natural(scale, tvar, 0.1 * tvar);
    const Vec theta0 = init.pack();
    Vec lo(d + 2), hi(d + 2);
    // The lengthscale floor keeps white noise from being fit as a rough signal.
    lo.head(d) = theta0.head(d).array() - std::log(cfg.min_lengthscale_ratio);
    hi.head(d) = theta0.head(d).array() + std::log(1e3);
    lo(d) = std::log(tvar * 1e-6);
    hi(d) = std::log(tvar * 1e4);
    // Noise floor: keeps K well conditioned so predictions stay smooth at the
    // sigma-point scale, where UT weights amplify round-off by ~1/alpha^2.
    lo(d + 1) = std::log(tvar * 1e-6);
    hi(d + 1) = std::log(tvar * 10.0);

    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    ceres::GradientProblemSolver::Options options;
    options.line_search_direction_type = ceres::LBFGS;
    options.max_num_iterations = cfg.max_iterations;
    options.logging_type = ceres::SILENT;
    options.minimizer_progress_to_stdout = false;

    double best_cost = std::numeric_limits<double>::infinity();
    Vec best = theta0;
    const int restarts = std::max(1, cfg.restarts);
    for (int r = 0; r < restarts; ++r) {
        Vec theta = theta0;
        if (r > 0) {
            for (int k = 0; k < d + 2; ++k) theta(k) += normal(rng);
        }
        ceres::GradientProblem problem(new NegLmlObjective(inputs, targets, lo, hi));
        ceres::GradientProblemSolver::Summary summary;
        ceres::Solve(options, problem, theta.data(), &summary);
        if (!theta.allFinite() || !std::isfinite(summary.final_cost)) continue;
        if (summary.termination_type == ceres::FAILURE && summary.iterations.size() <= 1) continue;
        if (summary.final_cost < best_cost) {
            best_cost = summary.final_cost;
            best = theta;
        }
    }
    if (!std::isfinite(best_cost)) {
        throw NumericalError("GP fit: all " + std::to_string(restarts) +
                             " restarts failed to produce a finite marginal likelihood");
    }
    return GpModel(inputs, targets, GpHyperparams::unpack(best.cwiseMax(lo).cwiseMin(hi)),
                   cfg.include_noise);
}

Vec GpModel::kernel_column(const Vec& x) const {
    if (x.size() != inputs_.cols()) throw ConfigError("GP predict: input dimension mismatch");
    const Vec inv_l2 = (-2.0 * hyp_.log_lengthscales).array().exp();
    const double sf2 = hyp_.signal_var();
    Vec k(inputs_.rows());
    for (Eigen::Index i = 0; i < inputs_.rows(); ++i) {
        const double r2 = ((inputs_.row(i).transpose() - x).array().square() * inv_l2.array()).sum();
        k(i) = sf2 * std::exp(-0.5 * r2);
    }
    return k;
}

GpModel::Prediction GpModel::predict(const Vec& x) const {
    const Vec k = kernel_column(x);
    const double mean = k.dot(alpha_);
    const Vec v = chol_.triangularView<Eigen::Lower>().solve(k);
    double var = hyp_.signal_var() - v.squaredNorm();
    if (include_noise_) var += hyp_.noise_var();
    return {mean, std::max(var, 1e-12)};
}

double GpModel::predict_mean(const Vec& x) const { return kernel_column(x).dot(alpha_); }

Standardizer Standardizer::fit(const Mat& rows) {
    Standardizer s;
    const auto d = rows.cols();
    s.shift = rows.colwise().mean().transpose();
    s.scale.resize(d);
    for (Eigen::Index k = 0; k < d; ++k) {
        const double sd = sample_std(rows.col(k));
        s.scale(k) = sd > 1e-12 ? sd : 1.0;
    }
    return s;
}

Standardizer Standardizer::identity(int d) { return {Vec::Zero(d), Vec::Ones(d)}; }

Mat Standardizer::apply_rows(const Mat& rows) const {
    return (rows.rowwise() - shift.transpose()).array().rowwise() / scale.transpose().array();
}

MultiOutputGp::MultiOutputGp(Standardizer input_norm, Standardizer target_norm, std::vector<GpModel> outputs)
    : input_norm_(std::move(input_norm)), target_norm_(std::move(target_norm)), outputs_(std::move(outputs)) {
    if (target_norm_.shift.size() != static_cast<Eigen::Index>(outputs_.size())) {
        throw ConfigError("MultiOutputGp: output count mismatch");
    }
}

MultiOutputGp MultiOutputGp::fit(const Mat& inputs, const Mat& targets, const GpFitConfig& cfg) {
    if (inputs.rows() != targets.rows()) throw ConfigError("MultiOutputGp fit: row mismatch");
    Mat x = inputs;
    Mat y = targets;
    if (cfg.max_points > 0 && inputs.rows() > cfg.max_points) {
        std::vector<Eigen::Index> idx(static_cast<std::size_t>(inputs.rows()));
        std::iota(idx.begin(), idx.end(), 0);
        std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
        std::shuffle(idx.begin(), idx.end(), rng);
        idx.resize(static_cast<std::size_t>(cfg.max_points));
        std::sort(idx.begin(), idx.end());
        x.resize(cfg.max_points, inputs.cols());
        y.resize(cfg.max_points, targets.cols());
        for (int i = 0; i < cfg.max_points; ++i) {
            x.row(i) = inputs.row(idx[static_cast<std::size_t>(i)]);
            y.row(i) = targets.row(idx[static_cast<std::size_t>(i)]);
        }
    }
    Standardizer in_norm = Standardizer::fit(x);
    Standardizer out_norm = Standardizer::fit(y);
    const Mat xs = in_norm.apply_rows(x);
    const Mat ys = out_norm.apply_rows(y);
    std::vector<GpModel> outs;
    outs.reserve(static_cast<std::size_t>(y.cols()));
    for (Eigen::Index j = 0; j < y.cols(); ++j) {
        GpFitConfig c = cfg;
        c.seed = cfg.seed + 7919ULL * static_cast<std::uint64_t>(j + 1);
        outs.push_back(GpModel::fit(xs, ys.col(j), c));
    }
    return MultiOutputGp(std::move(in_norm), std::move(out_norm), std::move(outs));
}

GaussianBelief MultiOutputGp::predict(const Vec& x) const {
    if (x.size() != input_dim()) throw ConfigError("MultiOutputGp predict: input dimension mismatch");
    const Vec xs = input_norm_.apply(x);
    const int m = output_dim();
    Vec mean(m);
    Mat cov = Mat::Zero(m, m);
    for (int j = 0; j < m; ++j) {
        const auto p = outputs_[static_cast<std::size_t>(j)].predict(xs);
        const double s = target_norm_.scale(j);
        mean(j) = p.mean * s + target_norm_.shift(j);
        cov(j, j) = p.var * s * s;
    }
    return GaussianBelief(std::move(mean), std::move(cov));
}

Vec MultiOutputGp::predict_mean(const Vec& x) const {
    if (x.size() != input_dim()) throw ConfigError("MultiOutputGp predict: input dimension mismatch");
    const Vec xs = input_norm_.apply(x);
    Vec mean(output_dim());
    for (int j = 0; j < output_dim(); ++j) {
        mean(j) = outputs_[static_cast<std::size_t>(j)].predict_mean(xs) * target_norm_.scale(j) +
                  target_norm_.shift(j);
    }
    return mean;
}

}  // namespace hybridgp
