// Acceptance run on the sliding mass. Prints one PASS/FAIL line per criterion
// and exits non-zero if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "hybridgp/cli.hpp"
#include "hybridgp/evaluation.hpp"
#include "hybridgp/serialization.hpp"
#include "sliding_support.hpp"
#include "test_util.hpp"

using namespace hybridgp;
namespace fs = std::filesystem;

namespace {

/// ACCEPTANCE_SEED overrides the default run seed.
const std::uint64_t kSeed = [] {
    const char* s = std::getenv("ACCEPTANCE_SEED");
    return s ? std::strtoull(s, nullptr, 10) : std::uint64_t{2026};
}();

int failures = 0;
const bool verbose = std::getenv("ACCEPTANCE_VERBOSE") != nullptr;

void report(int id, bool pass, const std::string& detail) {
    std::printf("criterion %d: %s  %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
    failures += !pass;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c, d);
    return buf;
}

struct Pipeline {
    fs::path dir;
    double seconds = 0.0;
    std::string file(const std::string& f) const { return (dir / f).string(); }
};

/// generate -> train -> predict -> baseline through the command entry points.
Pipeline run_pipeline(const RunConfig& cfg, const fs::path& dir) {
    std::ostringstream log;
    const auto t0 = std::chrono::steady_clock::now();
    Pipeline p{dir};
    cmd_generate(cfg, dir.string(), log);
    cmd_train(cfg, p.file("train.csv"), p.file("model.json"), log);
    cmd_predict(cfg, p.file("model.json"), p.file("trace.csv"), log);
    cmd_baseline(cfg, p.file("train.csv"), p.file("baseline.csv"), log);
    p.seconds = seconds_since(t0);
    return p;
}

/// Segments of `step` whose cluster maps to ground-truth mode m.
double best_weight(const std::vector<TraceEntry>& step, const std::map<int, SlidingMode>& truth, SlidingMode m) {
    double w = 0.0;
    for (const auto& e : step)
        if (truth.at(e.mode) == m) w = std::max(w, e.weight);
    return w;
}

void criterion_1(const Pipeline& p) {
    const Dataset test = read_dataset_csv(p.file("test.csv"));
    const ScoreReport h = score(read_trace(p.file("trace.csv")), test);
    const ScoreReport g = score(read_trace(p.file("baseline.csv")), test);
    const bool nll_ok = h.avg_nll <= g.avg_nll - 1.5;
    const bool rmse_ok = 2.0 * h.avg_rmse <= g.avg_rmse;
    const bool time_ok = p.seconds <= 600.0;
    report(1, nll_ok && rmse_ok && time_ok,
           fmt("NLL hybrid %.3f vs GP %.3f, ", h.avg_nll, g.avg_nll) +
               fmt("RMSE hybrid %.3f vs GP %.3f (ratio %.2f), ", h.avg_rmse, g.avg_rmse, g.avg_rmse / h.avg_rmse) +
               fmt("pipeline %.0f s", p.seconds));
}

void criterion_2(const Pipeline& p) {
    const Dataset test = read_dataset_csv(p.file("test.csv"));
    const PredictionTrace trace = read_trace(p.file("trace.csv"));
    const auto ml = most_likely_mode_sequence(trace);
    int stick_events = 0, stick_ok = 0, slip_events = 0, slip_ok = 0;
    for (const auto& tr : test.trials) {
        const int ts = test::first_in_mode(tr, SlidingMode::Stuck);
        if (ts >= 0) {
            ++stick_events;
            bool ok = false;
            for (int t = std::max(0, ts - 2); t <= std::min(trace.horizon(), ts + 2); ++t)
                ok = ok || std::abs(ml[static_cast<std::size_t>(t)].belief.mean()(1)) < 0.3;
            stick_ok += ok;
        }
        const int tk = test::first_in_mode(tr, SlidingMode::Slip);
        if (tk >= 0) {
            ++slip_events;
            bool ok = false;
            for (int t = std::max(0, tk - 2); t <= std::min(trace.horizon(), tk + 2); ++t)
                for (const auto& e : trace.steps[static_cast<std::size_t>(t)])
                    ok = ok || std::abs(e.belief.mean()(1) - 5.0) < 0.5;
            slip_ok += ok;
        }
    }
    const bool pass = stick_events > 0 && slip_events > 0 && stick_ok == stick_events && slip_ok == slip_events;
    report(2, pass,
           fmt("stick captured %.0f/%.0f, slip captured %.0f/%.0f", stick_ok, stick_events, slip_ok, slip_events));
}

void criterion_3(const RunConfig& base) {
    RunConfig cfg = base;
    cfg.n_train = 40;
    const auto t0 = std::chrono::steady_clock::now();
    const DatasetSplit d = generate_sliding_dataset(cfg.env, cfg.policy.build(), cfg.n_train, cfg.n_test, cfg.seed);
    int stuck_trials = 0, slip_trials = 0;
    for (const auto& tr : d.test.trials) {
        const bool s = test::first_in_mode(tr, SlidingMode::Stuck) >= 0;
        const bool k = test::first_in_mode(tr, SlidingMode::Slip) >= 0;
        stuck_trials += s && !k;
        slip_trials += k;
    }
    const LearnResult lr = learn(d.train, cfg.learn);
    const auto truth = test::majority_modes(d.train, lr.labels);
    const LinearGaussianPolicy pol = cfg.policy.build();
    const GaussianBelief x0 = cfg.initial_belief();
    const PredictionTrace trace =
        predict(lr.model, pol, x0, infer_initial_mode(lr.model, pol, x0), cfg.prediction_horizon(), cfg.prediction);
    int run = 0, longest = 0;
    for (const auto& step : trace.steps) {
        const bool both = best_weight(step, truth, SlidingMode::Stuck) >= 0.1 && best_weight(step, truth, SlidingMode::Slip) >= 0.1;
        run = both ? run + 1 : 0;
        longest = std::max(longest, run);
    }
    const bool pre = stuck_trials > 0 && slip_trials > 0;
    report(3, pre && longest >= 5,
           fmt("D40: %.0f modes, test trials stuck-only %.0f / slipped %.0f, ", static_cast<double>(lr.model.modes.size()),
               stuck_trials, slip_trials) +
               fmt("longest stuck+slip co-occurrence %.0f steps (%.0f s)", longest, seconds_since(t0)));
}

/// Direct Monte-Carlo simulation of the learned automaton.
struct McStep {
    Vec mean, var;
    std::map<int, double> mode_fraction;
};

std::vector<McStep> sample_rollout(const HybridModel& m, const Policy& pol, const GaussianBelief& x0,
                                                int mode0, int horizon, int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    auto draw = [&](const GaussianBelief& g) {
        const Mat l = robust_cholesky(g.cov(), "oracle sample");
        Vec z(g.dim());
        for (int k = 0; k < g.dim(); ++k) z(k) = nd(rng);
        return Vec(g.mean() + l * z);
    };
    const int dx = m.state_dim;
    std::vector<Vec> xs(static_cast<std::size_t>(n));
    std::vector<int> modes(static_cast<std::size_t>(n), mode0);
    const bool x0_point = x0.cov().cwiseAbs().maxCoeff() == 0.0;
    for (auto& x : xs) x = x0_point ? x0.mean() : draw(x0);

    std::vector<McStep> moments;
    for (int t = 1; t <= horizon; ++t) {
        for (int i = 0; i < n; ++i) {
            Vec& x = xs[static_cast<std::size_t>(i)];
            int& mode = modes[static_cast<std::size_t>(i)];
            const GaussianBelief ub = pol.action(x);
            const Vec u = ub.cov().cwiseAbs().maxCoeff() == 0.0 ? ub.mean() : draw(ub);
            const Vec xu = join_state_action(x, u);
            int j = m.guard.predict(xu);
            if (j != mode && !m.relation.contains(mode, j)) j = mode;
            if (j == mode) {
                x += draw(m.modes.at(mode).predict(xu));
            } else {
                x = draw(m.resets.at({mode, j}).predict(xu));
                mode = j;
            }
        }
        Vec mean = Vec::Zero(dx), var = Vec::Zero(dx);
        for (const auto& x : xs) mean += x;
        mean /= n;
        for (const auto& x : xs) var += (x - mean).cwiseAbs2();
        var /= (n - 1);
        std::map<int, double> frac;
        for (int md : modes) frac[md] += 1.0 / n;
        moments.push_back({mean, var, frac});
    }
    return moments;
}

void criterion_4(const Pipeline& p, const RunConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    const HybridModel model = load_model(p.file("model.json"));
    const PredictionTrace trace = read_trace(p.file("trace.csv"));
    const LinearGaussianPolicy pol = cfg.policy.build();
    const GaussianBelief x0 = cfg.initial_belief();
    constexpr int n = 10000;
    const auto mc = sample_rollout(model, pol, x0, infer_initial_mode(model, pol, x0), trace.horizon(), n,
                                   derive_seed(kSeed, 4));
    int ok = 0, worst_t = 0;
    double worst_z = 0.0;
    for (int t = 1; t <= trace.horizon(); ++t) {
        const Vec& mean = mc[static_cast<std::size_t>(t - 1)].mean;
        const Vec& var = mc[static_cast<std::size_t>(t - 1)].var;
        const Vec diff = (mixture_moments(trace, t).mean() - mean).cwiseAbs();
        double z = 0.0;
        for (int k = 0; k < diff.size(); ++k) {
            const double se = std::sqrt(var(k) / n);
            z = std::max(z, se > 0.0 ? diff(k) / se : (diff(k) > 0.0 ? INFINITY : 0.0));
        }
        ok += z <= 3.0;
        if (verbose) {
            const Vec m = mixture_moments(trace, t).mean();
            std::printf("  t=%2d  trace (%.4f, %.4f)  mc (%.4f, %.4f)  se (%.1e, %.1e)  z %.1f  segments %zu\n", t,
                        m(0), m(1), mean(0), mean(1), std::sqrt(var(0) / n), std::sqrt(var(1) / n), z,
                        trace.steps[static_cast<std::size_t>(t)].size());
            std::printf("        weights");
            for (const auto& e : trace.steps[static_cast<std::size_t>(t)]) std::printf(" %d:%.4f", e.mode, e.weight);
            std::printf("  mc");
            for (const auto& [md, f] : mc[static_cast<std::size_t>(t - 1)].mode_fraction) std::printf(" %d:%.4f", md, f);
            std::printf("\n");
        }
        if (z > worst_z) worst_z = z, worst_t = t;
    }
    report(4, ok == trace.horizon(),
           fmt("%.0f/%.0f steps within 3 SE, worst %.1f SE at t=%.0f", ok, trace.horizon(), worst_z, worst_t) +
               fmt(" (%.0f s)", seconds_since(t0)));
}

void criterion_5(const Pipeline& p) {
    std::mt19937_64 rng(kSeed);
    std::vector<std::string> bad;

    double ut_err = 0.0;
    for (int n = 1; n <= 12; ++n) {
        const GaussianBelief in(test::random_vec(n, rng), test::random_spd(n, rng));
        const Mat a = test::random_mat(3, n, rng);
        const Vec b = test::random_vec(3, rng);
        const GaussianBelief out = unscented_transform([&](const Vec& x) { return Vec(a * x + b); }, in, {});
        ut_err = std::max({ut_err, test::rel_err(out.mean(), Vec(a * in.mean() + b)),
                           test::rel_err(out.cov(), Mat(a * in.cov() * a.transpose()))});
    }
    if (ut_err > 1e-9) bad.push_back(fmt("UT affine error %.2e", ut_err));

    double grad_err = 0.0;
    std::uniform_real_distribution<double> uth(-0.7, 0.7);
    for (int inst = 0; inst < 20; ++inst) {
        const int d = 1 + inst % 3;
        const Mat x = test::random_mat(20, d, rng);
        const Vec y = test::random_vec(20, rng);
        Vec theta(d + 2);
        for (int k = 0; k < d + 2; ++k) theta(k) = uth(rng);
        theta(d + 1) -= 1.5;
        const Vec g = log_marginal_likelihood(x, y, GpHyperparams::unpack(theta)).gradient;
        for (int k = 0; k < d + 2; ++k) {
            const double h = 1e-5;
            Vec tp = theta, tm = theta;
            tp(k) += h;
            tm(k) -= h;
            const double fd = (log_marginal_likelihood(x, y, GpHyperparams::unpack(tp)).value -
                               log_marginal_likelihood(x, y, GpHyperparams::unpack(tm)).value) /
                              (2.0 * h);
            grad_err = std::max(grad_err, std::abs(g(k) - fd) / std::max(1.0, std::abs(fd)));
        }
    }
    if (grad_err > 1e-4) bad.push_back(fmt("lml gradient relative error %.2e", grad_err));

    double merge_err = 0.0;
    std::uniform_real_distribution<double> uw(1e-3, 3.0);
    for (int inst = 0; inst < 20; ++inst) {
        const int d = 1 + inst % 5;
        std::vector<std::pair<double, GaussianBelief>> parts;
        for (int i = 0; i < 1 + inst % 4; ++i)
            parts.emplace_back(uw(rng), GaussianBelief(test::random_vec(d, rng), test::random_spd(d, rng)));
        double total = 0.0;
        Vec mean = Vec::Zero(d);
        Mat second = Mat::Zero(d, d);
        for (const auto& [w, g] : parts) total += w;
        for (const auto& [w, g] : parts) {
            mean += w / total * g.mean();
            second += w / total * (g.cov() + g.mean() * g.mean().transpose());
        }
        const GaussianBelief m = merge_weighted(parts);
        merge_err = std::max({merge_err, test::rel_err(m.mean(), mean),
                              test::rel_err(m.cov(), Mat(second - mean * mean.transpose()))});
    }
    if (merge_err > 1e-9) bad.push_back(fmt("merge moment error %.2e", merge_err));

    for (const char* f : {"trace.csv", "baseline.csv"}) {
        try {
            read_trace(p.file(f)).validate();
        } catch (const std::exception& e) {
            bad.push_back(std::string(f) + ": " + e.what());
        }
    }
    std::string detail = fmt("UT %.1e, lml grad %.1e, merge %.1e, trace weights and PSD checked", ut_err, grad_err, merge_err);
    for (const auto& b : bad) detail += "; " + b;
    report(5, bad.empty(), detail);
}

void criterion_6(const Pipeline& p, const RunConfig& cfg) {
    const Dataset train = read_dataset_csv(p.file("train.csv"));
    const HybridModel saved = load_model(p.file("model.json"));
    const LearnResult lr = learn(train, cfg.learn);
    const auto truth = test::majority_modes(train, lr.labels);
    const bool same = lr.model.relation.pairs() == saved.relation.pairs() && lr.model.modes.size() == saved.modes.size();
    const bool fs = test::relation_has(lr.model.relation, truth, SlidingMode::Free, SlidingMode::Stuck);
    const bool ss = test::relation_has(lr.model.relation, truth, SlidingMode::Stuck, SlidingMode::Slip);
    const int k = static_cast<int>(lr.model.modes.size());
    std::string map;
    for (const auto& [c, m] : truth) map += " " + std::to_string(c) + ":" + "FKS"[static_cast<int>(m)];
    report(6, k >= 3 && fs && ss && same,
           fmt("K=%.0f (k_max %.0f, alpha %.2f), ", k, cfg.learn.dpgmm.k_max, cfg.learn.dpgmm.alpha_concentration) +
               "free->stuck " + (fs ? "yes" : "no") + ", stuck->slip " + (ss ? "yes" : "no") + ", clusters" + map +
               " (F free, K stuck, S slip)");
}

void criterion_7(const Pipeline& a, const Pipeline& b) {
    std::vector<std::string> differ;
    int compared = 0;
    for (const auto& e : fs::directory_iterator(a.dir)) {
        const std::string name = e.path().filename().string();
        ++compared;
        if (!fs::exists(b.dir / name) || read_file(e.path().string()) != read_file(b.file(name))) differ.push_back(name);
    }
    std::string detail = std::to_string(compared) + " files compared";
    for (const auto& d : differ) detail += ", differs: " + d;
    report(7, differ.empty() && compared >= 9, detail);
}

}  // namespace

/// Optional arguments restrict the run to the listed criteria.
int main(int argc, char** argv) {
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
    auto want = [&](int c) { return only.empty() || only.count(c) > 0; };
    try {
        RunConfig cfg;
        cfg.apply_seed(kSeed);
        cfg.check();
        const fs::path root = fs::temp_directory_path() / ("hybridgp_acceptance_" + std::to_string(std::random_device{}()));
        fs::create_directories(root);

        const Pipeline a = run_pipeline(cfg, root / "a");
        if (want(1)) criterion_1(a);
        if (want(2)) criterion_2(a);
        if (want(3)) criterion_3(cfg);
        if (want(4)) criterion_4(a, cfg);
        if (want(5)) criterion_5(a);
        if (want(6)) criterion_6(a, cfg);
        if (want(7)) criterion_7(a, run_pipeline(cfg, root / "b"));
        fs::remove_all(root);
    } catch (const std::exception& e) {
        std::printf("acceptance aborted: %s\n", e.what());
        return 2;
    }
    std::printf("%d criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
