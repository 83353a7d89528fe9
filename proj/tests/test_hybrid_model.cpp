#include <doctest.h>

#include <algorithm>
#include <random>

#include "hybridgp/hybrid_model.hpp"
#include "synthetic.hpp"
#include "test_util.hpp"

using namespace hybridgp;

namespace {

/// Stationary AR(1) data: every state comes from the same Gaussian.
Dataset linear_dataset(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    Dataset d;
    for (int i = 0; i < 10; ++i) {
        Trajectory tr;
        Vec x(2);
        x << nd(rng), nd(rng);
        for (int t = 0; t < 50; ++t) {
            Vec u(1);
            u << nd(rng);
            Vec next = 0.9 * x + Vec::Constant(2, 0.1 * u(0));
            next(0) += 0.43 * nd(rng);
            next(1) += 0.43 * nd(rng);
            tr.steps.push_back(Step{x, u, next, 0});
            x = next;
        }
        d.trials.push_back(std::move(tr));
    }
    return d;
}

HybridLearnConfig fast_config(std::uint64_t seed) {
    HybridLearnConfig cfg;
    cfg.seed = seed;
    cfg.gp.max_points = 150;
    cfg.gp.restarts = 2;
    cfg.guard.c_grid = {1.0, 10.0};
    cfg.guard.gamma_grid = {0.1, 1.0};
    return cfg;
}

/// One-mode model whose dynamics GP fits `f` on [-2, 2]^3 (2-D state, 1-D action).
template <class F>
HybridModel one_mode_model(F f) {
    HybridModel m;
    m.state_dim = 2;
    m.action_dim = 1;
    m.modes.emplace(0, test::fit_on_box(f, 2, 1, -2.0, 2.0, 120, 3));
    m.guard = test::constant_guard(3, 0);
    return m;
}

GaussianBelief small_joint(const Vec& mean) { return GaussianBelief(mean, Mat::Identity(3, 3) * 0.01); }

}  // namespace

TEST_CASE("single-mode linear data gives one mode and no resets") {
    const LearnResult r = learn(linear_dataset(1), fast_config(1));
    CHECK(r.model.modes.size() == 1);
    CHECK(r.model.resets.empty());
    CHECK(r.model.relation.empty());
    CHECK_NOTHROW(r.model.validate());
}

TEST_CASE("step_in_mode with zero dynamics returns the state marginal") {
    const HybridModel m = one_mode_model([](const Vec&) { return Vec::Zero(2); });
    Vec mean(3);
    mean << 0.3, -0.4, 0.2;
    const GaussianBelief joint = small_joint(mean);
    const GaussianBelief out = step_in_mode(m, 0, joint, {});
    CHECK((out.mean() - mean.head(2)).cwiseAbs().maxCoeff() < 1e-3);
    CHECK(test::rel_err(out.cov(), joint.cov().topLeftCorner(2, 2)) < 1e-3);
}

TEST_CASE("step_in_mode with constant delta shifts the mean") {
    Vec c(2);
    c << 0.7, -1.2;
    const HybridModel m = one_mode_model([&](const Vec&) { return c; });
    Vec mean(3);
    mean << -0.5, 1.0, 0.0;
    const GaussianBelief out = step_in_mode(m, 0, small_joint(mean), {});
    CHECK((out.mean() - mean.head(2) - c).cwiseAbs().maxCoeff() < 1e-2);
}

TEST_CASE("step_in_mode on a point mass carries the GP predictive variance") {
    const HybridModel m = one_mode_model([](const Vec& xu) { Vec d(2); d << std::sin(xu(0)), xu(1) * xu(2); return d; });
    Vec mean(3);
    mean << 0.1, 0.5, -0.3;
    const GaussianBelief out = step_in_mode(m, 0, GaussianBelief::point_mass(mean), {});
    const GaussianBelief gp = m.modes.at(0).predict(mean);
    CHECK((out.mean() - mean.head(2) - gp.mean()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((out.cov() - gp.cov()).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("step_in_mode rejects unknown modes and bad dimensions") {
    const HybridModel m = one_mode_model([](const Vec&) { return Vec::Zero(2); });
    CHECK_THROWS_AS(step_in_mode(m, 5, small_joint(Vec::Zero(3)), {}), ConfigError);
    CHECK_THROWS_AS(step_in_mode(m, 0, GaussianBelief::point_mass(Vec::Zero(2)), {}), ConfigError);
}

TEST_CASE("step_reset through a constant map stays at the target") {
    Vec target(2);
    target << 3.0, -1.0;
    HybridModel m = one_mode_model([](const Vec&) { return Vec::Zero(2); });
    m.modes.emplace(1, m.modes.at(0));
    m.relation.insert(0, 1);
    m.resets.emplace(ModePair{0, 1}, test::fit_on_box([&](const Vec&) { return target; }, 2, 1, -2.0, 2.0, 60, 4));
    std::mt19937_64 rng(5);
    for (int i = 0; i < 5; ++i) {
        const GaussianBelief out = step_reset(m, {0, 1}, small_joint(test::random_vec(3, rng)), {});
        for (int k = 0; k < 2; ++k) CHECK(std::abs(out.mean()(k) - target(k)) <= 2.0 * std::sqrt(out.cov()(k, k)) + 1e-9);
    }
    CHECK_THROWS_AS(step_reset(m, {1, 0}, small_joint(Vec::Zero(3)), {}), ConfigError);
}

TEST_CASE("step_reset of a point mass at a training input reproduces the target") {
    auto f = [](const Vec& xu) { Vec y(2); y << xu(0) + xu(2), 2.0 * std::cos(xu(1)); return y; };
    HybridModel m = one_mode_model([](const Vec&) { return Vec::Zero(2); });
    m.modes.emplace(1, m.modes.at(0));
    m.relation.insert(0, 1);
    m.resets.emplace(ModePair{0, 1}, test::fit_on_box(f, 2, 1, -2.0, 2.0, 80, 6));
    const MultiOutputGp& gp = m.resets.at({0, 1});
    for (int i = 0; i < 5; ++i) {
        const Vec xu = gp.input_norm().inverse(gp.outputs()[0].inputs().row(i).transpose());
        const GaussianBelief out = step_reset(m, {0, 1}, GaussianBelief::point_mass(xu), {});
        CHECK((out.mean() - f(xu)).cwiseAbs().maxCoeff() < 1e-2);
    }
}

TEST_CASE("two-mode data: relation, partition and reproducibility") {
    const Dataset d = test::two_mode_dataset(8, 30, 7);
    const LearnResult a = learn(d, fast_config(3));
    CHECK(a.model.modes.size() == 2);
    CHECK(a.model.relation.size() == 1);
    CHECK(a.model.relation.contains(0, 1));
    CHECK(a.model.resets.size() == 1);
    CHECK_NOTHROW(a.model.validate());

    // Within-mode and switching tuples partition the labelled transitions.
    int tuples = 0;
    for (const auto& tr : d.trials) tuples += static_cast<int>(tr.size()) - 1;
    int used = 0;
    for (const auto& [m, n] : a.report.mode_rows) used += n;
    for (const auto& [p, n] : a.report.reset_rows) used += n;
    CHECK(used == tuples);
    int switches = 0;
    for (const auto& tr : a.labels)
        for (std::size_t t = 0; t + 1 < tr.size(); ++t) switches += tr[t] != tr[t + 1];
    CHECK(a.report.reset_rows.at({0, 1}) == switches);

    const LearnResult b = learn(d, fast_config(3));
    CHECK(a.labels == b.labels);
    CHECK(a.report.mode_lml == b.report.mode_lml);
    CHECK(a.report.guard_params.c == b.report.guard_params.c);
    CHECK(a.report.guard_params.gamma == b.report.guard_params.gamma);
}

TEST_CASE("shuffling trial order leaves the relation unchanged") {
    Dataset d = test::two_mode_dataset(8, 30, 8);
    const LearnResult a = learn(d, fast_config(4));
    std::mt19937_64 rng(9);
    std::shuffle(d.trials.begin(), d.trials.end(), rng);
    const LearnResult b = learn(d, fast_config(4));
    CHECK(a.model.relation.pairs() == b.model.relation.pairs());
}

TEST_CASE("a cluster with no within-mode steps is merged with a warning") {
    std::mt19937_64 rng(10);
    std::normal_distribution<double> nd(0.0, 1.0);
    Dataset d;
    for (int i = 0; i < 10; ++i) {
        Trajectory tr;
        Vec x = Vec::Constant(2, 0.0);
        for (int t = 0; t < 30; ++t) {
            Vec u(1);
            u << nd(rng);
            Vec next(2);
            if (t == 14) {
                next << 8.0 + 0.1 * nd(rng), 8.0 + 0.1 * nd(rng);
            } else {
                next << 0.3 * nd(rng), 0.3 * nd(rng);
            }
            tr.steps.push_back(Step{x, u, next, -1});
            x = next;
        }
        d.trials.push_back(std::move(tr));
    }
    const LearnResult r = learn(d, fast_config(5));
    CHECK(r.report.clusters_found >= 2);
    CHECK(r.model.modes.size() == 1);
    CHECK(r.model.relation.empty());
    const bool warned = std::any_of(r.report.warnings.begin(), r.report.warnings.end(),
                                    [](const std::string& w) { return w.find("merged") != std::string::npos; });
    CHECK(warned);
}

TEST_CASE("initial mode comes from the guard at the x0 mean") {
    const Dataset d = test::two_mode_dataset(8, 30, 11);
    const LearnResult r = learn(d, fast_config(6));
    const LinearGaussianPolicy pol(Mat::Zero(1, 2), Vec::Zero(1), Mat::Identity(1, 1));
    CHECK(infer_initial_mode(r.model, pol, GaussianBelief::point_mass(Vec::Zero(2))) == 0);
    CHECK(infer_initial_mode(r.model, pol, GaussianBelief::point_mass(Vec::Constant(2, 10.0))) == 1);
}
