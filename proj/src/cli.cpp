#include "hybridgp/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "hybridgp/serialization.hpp"

namespace hybridgp {

using nlohmann::json;

namespace {

std::string config_hash(const RunConfig& cfg) { return fnv1a_hex(to_json(cfg).dump()); }

std::string format_pm(double m, double s) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%8.3f +- %-7.3f", m, s);
    return buf;
}

}  // namespace

void cmd_generate(const RunConfig& cfg, const std::string& out_dir, std::ostream& log) {
    cfg.check();
    const LinearGaussianPolicy policy = cfg.policy.build();
    const DatasetSplit split = generate_sliding_dataset(cfg.env, policy, cfg.n_train, cfg.n_test, cfg.seed);
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create " + out_dir + ": " + ec.message());
    const std::string hash = config_hash(cfg);
    const json meta = {{"seed", cfg.seed}, {"dt", cfg.env.dt}, {"config_hash", hash}};
    write_dataset_csv(split.train, meta, out_dir + "/train.csv");
    write_dataset_csv(split.test, meta, out_dir + "/test.csv");
    const json manifest = {{"format_version", kDatasetFormatVersion},
                           {"kind", "sliding_mass_dataset"},
                           {"seed", cfg.seed},
                           {"config_hash", hash},
                           {"config", to_json(cfg)},
                           {"state_dim", 2},
                           {"action_dim", 1},
                           {"dt", cfg.env.dt},
                           {"horizon", cfg.env.horizon},
                           {"train", {{"file", "train.csv"}, {"trials", cfg.n_train}}},
                           {"test", {{"file", "test.csv"}, {"trials", cfg.n_test}}}};
    write_file(out_dir + "/manifest.json", manifest.dump(1) + "\n");
    log << "wrote " << cfg.n_train << " training and " << cfg.n_test << " test trials of " << cfg.env.horizon
        << " steps to " << out_dir << "\n";
}

void cmd_train(const RunConfig& cfg, const std::string& dataset, const std::string& model_out, std::ostream& log) {
    cfg.check();
    const Dataset data = read_dataset_csv(dataset);
    if (data.empty()) throw ConfigError("train: dataset is empty");
    const LearnResult res = learn(data, cfg.learn);
    const LearnReport& r = res.report;

    json relation = json::array();
    for (const auto& [a, b] : res.model.relation.pairs()) relation.push_back({a, b});
    json mode_lml = json::object();
    for (const auto& [m, v] : r.mode_lml) mode_lml[std::to_string(m)] = {{"lml", v}, {"rows", r.mode_rows.at(m)}};
    json reset_lml = json::object();
    for (const auto& [p, v] : r.reset_lml)
        reset_lml[std::to_string(p.first) + "->" + std::to_string(p.second)] = {{"lml", v},
                                                                              {"rows", r.reset_rows.at(p)}};
    const json meta = {{"seed", cfg.seed},
                       {"config_hash", config_hash(cfg)},
                       {"dataset_hash", fnv1a_hex(read_file(dataset))},
                       {"clusters_found", r.clusters_found},
                       {"modes", r.modes},
                       {"dpgmm_iterations", r.dpgmm_iterations},
                       {"dpgmm_converged", r.dpgmm_converged},
                       {"relation", relation},
                       {"mode_lml", mode_lml},
                       {"reset_lml", reset_lml},
                       {"guard_cv_accuracy", r.guard_cv_accuracy},
                       {"guard_c", r.guard_params.c},
                       {"guard_gamma", r.guard_params.gamma},
                       {"warnings", r.warnings}};
    save_model(res.model, meta, model_out);

    log << "clusters: " << r.clusters_found << ", modes: " << r.modes << " (DPGMM " << r.dpgmm_iterations
        << " iterations" << (r.dpgmm_converged ? "" : ", not converged") << ")\n";
    log << "relation:";
    for (const auto& [a, b] : res.model.relation.pairs()) log << ' ' << a << "->" << b;
    log << "\n";
    for (const auto& [m, v] : r.mode_lml) log << "  mode " << m << ": " << r.mode_rows.at(m) << " rows, lml " << v << "\n";
    for (const auto& [p, v] : r.reset_lml)
        log << "  reset " << p.first << "->" << p.second << ": " << r.reset_rows.at(p) << " rows, lml " << v << "\n";
    log << "guard: C=" << r.guard_params.c << " gamma=" << r.guard_params.gamma << " cv accuracy "
        << r.guard_cv_accuracy << "\n";
    for (const auto& w : r.warnings) log << "warning: " << w << "\n";
    log << "wrote " << model_out << "\n";
}

void cmd_predict(const RunConfig& cfg, const std::string& model_path, const std::string& trace_out, std::ostream& log) {
    cfg.check();
    const HybridModel model = load_model(model_path);
    const LinearGaussianPolicy policy = cfg.policy.build();
    const GaussianBelief x0 = cfg.initial_belief();
    const int mode = cfg.initial_mode ? *cfg.initial_mode : infer_initial_mode(model, policy, x0);
    const PredictionTrace trace = predict(model, policy, x0, mode, cfg.prediction_horizon(), cfg.prediction);
    std::size_t max_segments = 0;
    for (const auto& s : trace.steps) max_segments = std::max(max_segments, s.size());
    const json meta = {{"method", "hybrid"},
                       {"seed", cfg.seed},
                       {"config_hash", config_hash(cfg)},
                       {"model_hash", fnv1a_hex(read_file(model_path))},
                       {"initial_mode", mode},
                       {"max_concurrent_segments", max_segments}};
    write_trace(trace, meta, trace_out);
    log << "predicted " << trace.horizon() << " steps from mode " << mode << ", up to " << max_segments
        << " concurrent segments; wrote " << trace_out << "\n";
}

void cmd_baseline(const RunConfig& cfg, const std::string& dataset, const std::string& trace_out, std::ostream& log) {
    cfg.check();
    const Dataset data = read_dataset_csv(dataset);
    if (data.empty()) throw ConfigError("baseline: dataset is empty");
    const MultiOutputGp gp = train_global_gp(data, cfg.baseline_gp);
    const LinearGaussianPolicy policy = cfg.policy.build();
    const BaselineResult res =
        baseline_gp_rollout(gp, policy, cfg.initial_belief(), cfg.prediction_horizon(), cfg.baseline);
    const json meta = {{"method", "gp_particles"},
                       {"seed", cfg.seed},
                       {"config_hash", config_hash(cfg)},
                       {"dataset_hash", fnv1a_hex(read_file(dataset))},
                       {"particles", cfg.baseline.n_particles},
                       {"clamped_particles", res.clamped_particles}};
    write_trace(res.trace, meta, trace_out);
    log << "baseline: " << cfg.baseline.n_particles << " particles over " << res.trace.horizon() << " steps";
    if (res.clamped_particles > 0) log << ", " << res.clamped_particles << " non-finite updates clamped";
    log << "; wrote " << trace_out << "\n";
}

void cmd_score(const std::string& trace, const std::string& baseline_trace, const std::string& test_dataset,
               const std::string& report_out, std::ostream& log) {
    const Dataset test = read_dataset_csv(test_dataset);
    json report = {{"format_version", kReportFormatVersion}, {"test_hash", fnv1a_hex(read_file(test_dataset))}};
    std::vector<std::pair<std::string, ScoreReport>> rows;
    if (!trace.empty()) rows.emplace_back("hybrid", score(read_trace(trace), test));
    if (!baseline_trace.empty()) rows.emplace_back("GP", score(read_trace(baseline_trace), test));
    if (rows.empty()) throw ConfigError("score: no trace given");
    for (const auto& [name, r] : rows) report[name] = report_to_json(r);
    write_file(report_out, report.dump(1) + "\n");

    log << "method  | NLL                  | RMSE\n";
    log << "--------+----------------------+---------------------\n";
    for (const auto& [name, r] : rows) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "%-7s", name.c_str());
        log << buf << " | " << format_pm(r.avg_nll, r.nll_std) << " | " << format_pm(r.avg_rmse, r.rmse_std) << "\n";
    }
    log << "wrote " << report_out << "\n";
}

int run_cli(int argc, char** argv) {
    CLI::App app{"Hybrid-automaton GP dynamics: generate, train, predict, baseline, score"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string dataset;
    std::string model;
    std::optional<int> horizon;
    std::optional<int> particles;
    std::string trace;
    std::string baseline_trace;
    bool verbose = false;

    auto common = [&](CLI::App* c) {
        c->add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
        c->add_option("--seed", seed, "Master seed (overrides the config)");
        c->add_flag("--verbose", verbose, "Print progress and diagnostics");
    };
    CLI::App* gen = app.add_subcommand("generate", "Simulate sliding-mass train/test trials");
    common(gen);
    gen->add_option("--out", out, "Output directory")->required();

    CLI::App* train = app.add_subcommand("train", "Learn the hybrid model from a dataset");
    common(train);
    train->add_option("--dataset", dataset, "Training dataset CSV")->required();
    train->add_option("--out", out, "Model file")->required();

    CLI::App* pred = app.add_subcommand("predict", "Long-term prediction with probabilistic switching");
    common(pred);
    pred->add_option("--model", model, "Model file")->required();
    pred->add_option("--horizon", horizon, "Prediction steps");
    pred->add_option("--out", out, "Trace CSV")->required();

    CLI::App* base = app.add_subcommand("baseline", "Single-GP particle baseline");
    common(base);
    base->add_option("--dataset", dataset, "Training dataset CSV")->required();
    base->add_option("--horizon", horizon, "Prediction steps");
    base->add_option("--particles", particles, "Number of particles");
    base->add_option("--out", out, "Trace CSV")->required();

    CLI::App* sc = app.add_subcommand("score", "Score traces against a test dataset");
    sc->add_option("--trace", trace, "Hybrid trace CSV");
    sc->add_option("--baseline-trace", baseline_trace, "Baseline trace CSV");
    sc->add_option("--dataset", dataset, "Test dataset CSV")->required();
    sc->add_option("--out", out, "Report JSON")->required();
    sc->add_flag("--verbose", verbose, "Print progress and diagnostics");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    std::ostream& log = std::cout;
    try {
        RunConfig cfg = config_path.empty() ? RunConfig{} : load_run_config(config_path);
        cfg.apply_seed(seed.value_or(cfg.seed));
        if (horizon) cfg.horizon = *horizon;
        if (particles) cfg.baseline.n_particles = *particles;
        cfg.check();
        if (verbose) log << "config hash " << fnv1a_hex(to_json(cfg).dump()) << ", seed " << cfg.seed << "\n";

        if (gen->parsed()) cmd_generate(cfg, out, log);
        else if (train->parsed()) cmd_train(cfg, dataset, out, log);
        else if (pred->parsed()) cmd_predict(cfg, model, out, log);
        else if (base->parsed()) cmd_baseline(cfg, dataset, out, log);
        else if (sc->parsed()) {
            if (trace.empty() && baseline_trace.empty()) throw ConfigError("score: give --trace and/or --baseline-trace");
            cmd_score(trace, baseline_trace, dataset, out, log);
        }
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitComputation;
    }
    return kExitOk;
}

}  // namespace hybridgp
