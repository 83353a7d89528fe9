#include "hybridgp/config.hpp"

#include <cstdio>
#include <set>

#include "hybridgp/serialization.hpp"

namespace hybridgp {

using nlohmann::json;

PolicySpec PolicySpec::sliding_default() {
    const LinearGaussianPolicy p = default_sliding_policy();
    return PolicySpec{p.gain(), p.bias(), p.noise_cov()};
}

GaussianBelief RunConfig::initial_belief() const {
    return x0 ? *x0 : GaussianBelief(env.init_mean, env.init_cov);
}

void RunConfig::apply_seed(std::uint64_t s) {
    seed = s;
    learn.seed = derive_seed(s, 101);
    prediction.seed = derive_seed(s, 202);
    baseline.seed = derive_seed(s, 303);
    baseline_gp.seed = derive_seed(s, 404);
}

void RunConfig::check() const {
    env.check();
    if (n_train < 1 || n_test < 1) throw ConfigError("config: n_train and n_test must be >= 1");
    learn.dpgmm.check();
    if (learn.gp.restarts < 1) throw ConfigError("config: gp.restarts must be >= 1");
    if (prediction.guard_samples < 100) throw ConfigError("config: prediction.guard_samples must be >= 100");
    if (!(prediction.min_segment_weight >= 0.0 && prediction.min_segment_weight < 1.0))
        throw ConfigError("config: prediction.min_segment_weight must be in [0, 1)");
    if (baseline.n_particles < 1) throw ConfigError("config: baseline.n_particles must be >= 1");
    if (prediction_horizon() < 1) throw ConfigError("config: horizon must be >= 1");
    policy.build();
    initial_belief().validate("x0 covariance");
}

namespace {

json gp_cfg_json(const GpFitConfig& g) {
    return {{"restarts", g.restarts}, {"max_iterations", g.max_iterations}, {"max_points", g.max_points},
            {"include_noise", g.include_noise}, {"min_lengthscale_ratio", g.min_lengthscale_ratio}};
}

void gp_cfg_read(const json& j, GpFitConfig& g) {
    g.restarts = j.value("restarts", g.restarts);
    g.max_iterations = j.value("max_iterations", g.max_iterations);
    g.max_points = j.value("max_points", g.max_points);
    g.include_noise = j.value("include_noise", g.include_noise);
    g.min_lengthscale_ratio = j.value("min_lengthscale_ratio", g.min_lengthscale_ratio);
}

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError("config: " + where + " must be an object");
    for (const auto& [k, v] : j.items())
        if (!allowed.contains(k)) throw ConfigError("config: unknown key '" + k + "' in " + where);
}

}  // namespace

json to_json(const RunConfig& c) {
    json j;
    j["seed"] = c.seed;
    j["env"] = {{"mass", c.env.mass},
                {"dt", c.env.dt},
                {"substeps", c.env.substeps},
                {"horizon", c.env.horizon},
                {"patch_position", c.env.patch_position},
                {"static_break_force", c.env.static_break_force},
                {"kinetic_friction_force", c.env.kinetic_friction_force},
                {"slip_jump_velocity", c.env.slip_jump_velocity},
                {"process_noise_std", vec_to_json(c.env.process_noise_std)},
                {"init_mean", vec_to_json(c.env.init_mean)},
                {"init_cov", mat_to_json(c.env.init_cov)}};
    j["n_train"] = c.n_train;
    j["n_test"] = c.n_test;
    j["dpgmm"] = {{"k_max", c.learn.dpgmm.k_max},
                  {"alpha_concentration", c.learn.dpgmm.alpha_concentration},
                  {"max_iter", c.learn.dpgmm.max_iter},
                  {"tol", c.learn.dpgmm.tol},
                  {"min_cluster_weight", c.learn.dpgmm.min_cluster_weight},
                  {"n_init", c.learn.dpgmm.n_init}};
    j["gp"] = gp_cfg_json(c.learn.gp);
    j["guard"] = {{"c_grid", c.learn.guard.c_grid},
                  {"gamma_grid", c.learn.guard.gamma_grid},
                  {"folds", c.learn.guard.folds},
                  {"max_search_rows", c.learn.guard.max_search_rows}};
    j["include_pre_switch_steps"] = c.learn.include_pre_switch_steps;
    j["prediction"] = {{"alpha", c.prediction.ut.alpha},
                       {"beta", c.prediction.ut.beta},
                       {"kappa", c.prediction.ut.kappa},
                       {"guard_samples", c.prediction.guard_samples},
                       {"guard_sampling", c.prediction.guard_sampling == GuardSampling::Sobol ? "sobol" : "monte_carlo"},
                       {"min_split_prob", c.prediction.min_split_prob},
                       {"min_segment_weight", c.prediction.min_segment_weight}};
    j["baseline"] = {{"n_particles", c.baseline.n_particles},
                     {"k_max", c.baseline.k_max},
                     {"alpha_concentration", c.baseline.alpha_concentration},
                     {"gp", gp_cfg_json(c.baseline_gp)}};
    j["policy"] = {{"gain", mat_to_json(c.policy.gain)},
                   {"bias", vec_to_json(c.policy.bias)},
                   {"noise_cov", mat_to_json(c.policy.noise_cov)}};
    if (c.x0) j["x0"] = {{"mean", vec_to_json(c.x0->mean())}, {"cov", mat_to_json(c.x0->cov())}};
    if (c.horizon) j["horizon"] = *c.horizon;
    if (c.initial_mode) j["initial_mode"] = *c.initial_mode;
    return j;
}

RunConfig run_config_from_json(const json& j) {
    RunConfig c;
    try {
        reject_unknown(j,
                       {"seed", "env", "n_train", "n_test", "dpgmm", "gp", "guard", "include_pre_switch_steps",
                        "prediction", "baseline", "policy", "x0", "horizon", "initial_mode"},
                       "top level");
        c.apply_seed(j.value("seed", std::uint64_t{0}));
        if (j.contains("env")) {
            const json& e = j.at("env");
            c.env.mass = e.value("mass", c.env.mass);
            c.env.dt = e.value("dt", c.env.dt);
            c.env.substeps = e.value("substeps", c.env.substeps);
            c.env.horizon = e.value("horizon", c.env.horizon);
            c.env.patch_position = e.value("patch_position", c.env.patch_position);
            c.env.static_break_force = e.value("static_break_force", c.env.static_break_force);
            c.env.kinetic_friction_force = e.value("kinetic_friction_force", c.env.kinetic_friction_force);
            c.env.slip_jump_velocity = e.value("slip_jump_velocity", c.env.slip_jump_velocity);
            if (e.contains("process_noise_std")) c.env.process_noise_std = vec_from_json(e.at("process_noise_std"));
            if (e.contains("init_mean")) c.env.init_mean = vec_from_json(e.at("init_mean"));
            if (e.contains("init_cov")) c.env.init_cov = mat_from_json(e.at("init_cov"));
        }
        c.n_train = j.value("n_train", c.n_train);
        c.n_test = j.value("n_test", c.n_test);
        if (j.contains("dpgmm")) {
            const json& d = j.at("dpgmm");
            auto& g = c.learn.dpgmm;
            g.k_max = d.value("k_max", g.k_max);
            g.alpha_concentration = d.value("alpha_concentration", g.alpha_concentration);
            g.max_iter = d.value("max_iter", g.max_iter);
            g.tol = d.value("tol", g.tol);
            g.min_cluster_weight = d.value("min_cluster_weight", g.min_cluster_weight);
            g.n_init = d.value("n_init", g.n_init);
        }
        if (j.contains("gp")) gp_cfg_read(j.at("gp"), c.learn.gp);
        if (j.contains("guard")) {
            const json& g = j.at("guard");
            auto& s = c.learn.guard;
            if (g.contains("c_grid")) s.c_grid = g.at("c_grid").get<std::vector<double>>();
            if (g.contains("gamma_grid")) s.gamma_grid = g.at("gamma_grid").get<std::vector<double>>();
            s.folds = g.value("folds", s.folds);
            s.max_search_rows = g.value("max_search_rows", s.max_search_rows);
        }
        c.learn.include_pre_switch_steps = j.value("include_pre_switch_steps", c.learn.include_pre_switch_steps);
        if (j.contains("prediction")) {
            const json& p = j.at("prediction");
            auto& s = c.prediction;
            s.ut.alpha = p.value("alpha", s.ut.alpha);
            s.ut.beta = p.value("beta", s.ut.beta);
            s.ut.kappa = p.value("kappa", s.ut.kappa);
            s.guard_samples = p.value("guard_samples", s.guard_samples);
            if (p.contains("guard_sampling")) {
                const std::string m = p.at("guard_sampling").get<std::string>();
                if (m == "sobol") s.guard_sampling = GuardSampling::Sobol;
                else if (m == "monte_carlo") s.guard_sampling = GuardSampling::MonteCarlo;
                else throw ConfigError("config: prediction.guard_sampling must be \"sobol\" or \"monte_carlo\"");
            }
            s.min_split_prob = p.value("min_split_prob", s.min_split_prob);
            s.min_segment_weight = p.value("min_segment_weight", s.min_segment_weight);
        }
        if (j.contains("baseline")) {
            const json& b = j.at("baseline");
            c.baseline.n_particles = b.value("n_particles", c.baseline.n_particles);
            c.baseline.k_max = b.value("k_max", c.baseline.k_max);
            c.baseline.alpha_concentration = b.value("alpha_concentration", c.baseline.alpha_concentration);
            if (b.contains("gp")) gp_cfg_read(b.at("gp"), c.baseline_gp);
        }
        if (j.contains("policy")) {
            const json& p = j.at("policy");
            c.policy = PolicySpec{mat_from_json(p.at("gain")), vec_from_json(p.at("bias")),
                                  mat_from_json(p.at("noise_cov"))};
        }
        if (j.contains("x0")) c.x0 = GaussianBelief(vec_from_json(j.at("x0").at("mean")), mat_from_json(j.at("x0").at("cov")));
        if (j.contains("horizon")) c.horizon = j.at("horizon").get<int>();
        if (j.contains("initial_mode")) c.initial_mode = j.at("initial_mode").get<int>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    } catch (const IoError& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    c.check();
    return c;
}

RunConfig load_run_config(const std::string& path) {
    return run_config_from_json(parse_json(read_file(path), path));
}

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : bytes) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace hybridgp
