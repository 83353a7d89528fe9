#include "hybridgp/evaluation.hpp"

#include <cmath>
#include <random>
#include <tuple>

#include "hybridgp/dpgmm.hpp"

namespace hybridgp {

Vec trial_state(const Trajectory& trial, std::size_t t) {
    if (t > trial.size() || trial.size() == 0) throw ConfigError("trial_state: step out of range");
    return t < trial.size() ? trial.steps[t].x : trial.steps.back().x_next;
}

namespace {

std::pair<double, double> mean_std(const std::vector<double>& v) {
    if (v.empty()) return {0.0, 0.0};
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return {m, std::sqrt(s / static_cast<double>(v.size()))};
}

}  // namespace

ScoreReport score(const PredictionTrace& trace, const Dataset& test) {
    if (test.empty()) throw ConfigError("score: empty test set");
    const int d = trace.state_dim();
    if (d != test.state_dim()) throw ConfigError("score: trace and test state dimensions differ");
    std::size_t len = 0;
    for (const auto& tr : test.trials) len = std::max(len, tr.size());
    if (static_cast<std::size_t>(trace.horizon()) < len) throw ConfigError("score: trace shorter than test trials");

    const auto best = most_likely_mode_sequence(trace);
    ScoreReport r;
    r.per_step_nll.assign(len + 1, 0.0);
    r.per_step_rmse.assign(len + 1, 0.0);
    std::vector<int> per_step_count(len + 1, 0);
    std::vector<double> nlls;
    std::vector<double> rmses;
    for (const auto& tr : test.trials) {
        for (std::size_t t = 1; t <= tr.size(); ++t) {
            const Vec x = trial_state(tr, t);
            std::vector<std::pair<double, GaussianBelief>> parts;
            for (const auto& e : trace.steps[t]) parts.emplace_back(e.weight, e.belief);
            const double nll = -mixture_log_density(parts, x);
            const double rmse = std::sqrt((best[t].belief.mean() - x).squaredNorm() / d);
            nlls.push_back(nll);
            rmses.push_back(rmse);
            r.per_step_nll[t] += nll;
            r.per_step_rmse[t] += rmse;
            ++per_step_count[t];
        }
    }
    for (std::size_t t = 1; t <= len; ++t) {
        if (per_step_count[t] == 0) continue;
        r.per_step_nll[t] /= per_step_count[t];
        r.per_step_rmse[t] /= per_step_count[t];
    }
    std::tie(r.avg_nll, r.nll_std) = mean_std(nlls);
    std::tie(r.avg_rmse, r.rmse_std) = mean_std(rmses);
    r.trials = static_cast<int>(test.trials.size());
    r.steps = static_cast<int>(nlls.size());
    return r;
}

MultiOutputGp train_global_gp(const Dataset& data, const GpFitConfig& cfg) {
    if (data.empty()) throw ConfigError("global GP: empty dataset");
    data.validate();
    const auto n = static_cast<Eigen::Index>(data.total_steps());
    const int dx = data.state_dim();
    Mat in(n, dx + data.action_dim());
    Mat out(n, dx);
    Eigen::Index r = 0;
    for (const auto& tr : data.trials) {
        for (const auto& s : tr.steps) {
            in.row(r) = join_state_action(s.x, s.u).transpose();
            out.row(r) = (s.x_next - s.x).transpose();
            ++r;
        }
    }
    return MultiOutputGp::fit(in, out, cfg);
}

namespace {

std::vector<TraceEntry> density_estimate(const Mat& particles, const BaselineConfig& cfg, std::uint64_t seed) {
    const auto n = particles.rows();
    const auto d = particles.cols();
    const Vec mean = particles.colwise().mean().transpose();
    const Mat centered = particles.rowwise() - mean.transpose();
    const Mat cov = n > 1 ? Mat((centered.transpose() * centered) / static_cast<double>(n - 1)) : Mat::Zero(d, d);
    const bool degenerate = cov.cwiseAbs().maxCoeff() < 1e-14 * std::max(1.0, mean.cwiseAbs().maxCoeff());
    if (n < cfg.k_max + 1 || degenerate) {
        return {TraceEntry{0, 0, 1.0, GaussianBelief(mean, repair_psd(cov))}};
    }
    DpgmmConfig dc;
    dc.k_max = cfg.k_max;
    dc.alpha_concentration = cfg.alpha_concentration;
    dc.seed = seed;
    const DpgmmResult fit = fit_dpgmm(particles, dc);
    std::vector<TraceEntry> out;
    double total = 0.0;
    for (const auto& c : fit.components) total += c.weight;
    for (std::size_t k = 0; k < fit.components.size(); ++k) {
        const auto& c = fit.components[k];
        out.push_back(TraceEntry{static_cast<int>(k), static_cast<int>(k), c.weight / total,
                                 GaussianBelief(c.belief.mean(), repair_psd(c.belief.cov()))});
    }
    return out;
}

}  // namespace

BaselineResult baseline_gp_rollout(const MultiOutputGp& gp, const Policy& policy, const GaussianBelief& x0,
                                   int horizon, const BaselineConfig& cfg) {
    if (horizon < 1) throw ConfigError("baseline: horizon must be >= 1");
    if (cfg.n_particles < 1) throw ConfigError("baseline: need at least one particle");
    const int dx = x0.dim();
    if (gp.output_dim() != dx || gp.input_dim() != dx + policy.action_dim())
        throw ConfigError("baseline: GP dimensions do not match policy and x0");
    x0.validate("x0 covariance");

    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Mat particles(cfg.n_particles, dx);
    const bool point = x0.cov().cwiseAbs().maxCoeff() == 0.0;
    const Mat l = point ? Mat::Zero(dx, dx) : robust_cholesky(x0.cov(), "x0 covariance");
    for (int i = 0; i < cfg.n_particles; ++i) {
        Vec z(dx);
        for (int k = 0; k < dx; ++k) z(k) = normal(rng);
        particles.row(i) = (x0.mean() + l * z).transpose();
    }

    BaselineResult res;
    res.trace.steps.push_back(density_estimate(particles, cfg, cfg.seed ^ 0xa5a5a5a5ULL));
    for (int t = 0; t < horizon; ++t) {
        for (int i = 0; i < cfg.n_particles; ++i) {
            const Vec x = particles.row(i).transpose();
            const Vec u = policy.sample(x, rng);
            const GaussianBelief delta = gp.predict(join_state_action(x, u));
            Vec next = x + delta.mean();
            for (int k = 0; k < dx; ++k) next(k) += std::sqrt(delta.cov()(k, k)) * normal(rng);
            if (!next.allFinite()) {
                ++res.clamped_particles;
                continue;
            }
            particles.row(i) = next.transpose();
        }
        res.trace.steps.push_back(
            density_estimate(particles, cfg, cfg.seed + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(t + 1)));
    }
    return res;
}

}  // namespace hybridgp
