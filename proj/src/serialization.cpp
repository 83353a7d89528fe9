#include "hybridgp/serialization.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace hybridgp {

using nlohmann::json;

json vec_to_json(const Vec& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

Vec vec_from_json(const json& j) {
    if (!j.is_array()) throw IoError("expected a numeric array");
    Vec v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    return v;
}

json mat_to_json(const Mat& m) {
    json a = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) a.push_back(vec_to_json(m.row(r).transpose()));
    if (m.rows() == 0) return json{{"rows", 0}, {"cols", m.cols()}};
    return a;
}

Mat mat_from_json(const json& j) {
    if (j.is_object()) return Mat(0, j.at("cols").get<Eigen::Index>());
    if (!j.is_array()) throw IoError("expected a nested numeric array");
    if (j.empty()) return Mat(0, 0);
    const auto cols = static_cast<Eigen::Index>(j[0].size());
    Mat m(static_cast<Eigen::Index>(j.size()), cols);
    for (std::size_t r = 0; r < j.size(); ++r) {
        if (static_cast<Eigen::Index>(j[r].size()) != cols) throw IoError("ragged matrix rows");
        for (Eigen::Index c = 0; c < cols; ++c) m(static_cast<Eigen::Index>(r), c) = j[r][static_cast<std::size_t>(c)].get<double>();
    }
    return m;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path);
    out << contents;
    out.flush();
    if (!out) throw IoError("write failed for " + path);
}

json parse_json(const std::string& text, const std::string& what) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        int line = 1;
        int col = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw IoError(what + ": JSON parse error at line " + std::to_string(line) + ", column " +
                      std::to_string(col) + ": " + e.what());
    }
}

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void check_version(const json& j, int expected, const std::string& what) {
    if (!j.contains("format_version")) throw IoError(what + ": missing format_version");
    const int v = j.at("format_version").get<int>();
    if (v != expected) throw IoError(what + ": unsupported format_version " + std::to_string(v));
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream ss(line);
    while (std::getline(ss, cur, ',')) out.push_back(cur);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_double(const std::string& s, int line, const std::string& path) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw IoError(path + ":" + std::to_string(line) + ": not a number: '" + s + "'");
    }
}

}  // namespace

void write_dataset_csv(const Dataset& data, const json& metadata, const std::string& path) {
    const int dx = data.empty() ? 0 : data.state_dim();
    const int du = data.empty() ? 0 : data.action_dim();
    std::ostringstream os;
    os << "trial_id,t";
    for (int k = 0; k < dx; ++k) os << ",x_" << k;
    for (int k = 0; k < du; ++k) os << ",u_" << k;
    for (int k = 0; k < dx; ++k) os << ",x_next_" << k;
    os << ",true_mode\n";
    for (std::size_t i = 0; i < data.trials.size(); ++i) {
        const auto& steps = data.trials[i].steps;
        for (std::size_t t = 0; t < steps.size(); ++t) {
            const Step& s = steps[t];
            os << i << ',' << t;
            for (int k = 0; k < dx; ++k) os << ',' << fmt(s.x(k));
            for (int k = 0; k < du; ++k) os << ',' << fmt(s.u(k));
            for (int k = 0; k < dx; ++k) os << ',' << fmt(s.x_next(k));
            os << ',' << s.true_mode << '\n';
        }
    }
    write_file(path, os.str());
    const json side = {{"format_version", kDatasetFormatVersion}, {"state_dim", dx}, {"action_dim", du},
                       {"trials", data.trials.size()}, {"metadata", metadata}};
    write_file(path + ".json", side.dump(1) + "\n");
}

Dataset read_dataset_csv(const std::string& path) {
    const json side = parse_json(read_file(path + ".json"), path + ".json");
    check_version(side, kDatasetFormatVersion, path + ".json");
    std::istringstream in(read_file(path));
    std::string line;
    if (!std::getline(in, line)) throw IoError(path + ":1: empty file");
    const auto header = split_csv(line);
    int dx = 0;
    int du = 0;
    int dn = 0;
    for (const auto& h : header) {
        if (h.rfind("x_next_", 0) == 0) ++dn;
        else if (h.rfind("x_", 0) == 0) ++dx;
        else if (h.rfind("u_", 0) == 0) ++du;
    }
    const std::size_t expected = 2 + static_cast<std::size_t>(2 * dx + du) + 1;
    if (header.size() != expected || header[0] != "trial_id" || header[1] != "t" || dn != dx ||
        header.back() != "true_mode")
        throw IoError(path + ":1: unexpected header");
    if (side.value("state_dim", -1) != dx || side.value("action_dim", -1) != du)
        throw IoError(path + ".json: dimensions disagree with the CSV header");

    Dataset data;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto f = split_csv(line);
        if (f.size() != expected)
            throw IoError(path + ":" + std::to_string(lineno) + ": expected " + std::to_string(expected) + " fields");
        const auto trial = static_cast<std::size_t>(parse_double(f[0], lineno, path));
        const auto t = static_cast<std::size_t>(parse_double(f[1], lineno, path));
        if (trial == data.trials.size()) data.trials.emplace_back();
        if (trial + 1 != data.trials.size() || t != data.trials.back().size())
            throw IoError(path + ":" + std::to_string(lineno) + ": rows out of order");
        Step s{Vec(dx), Vec(du), Vec(dx), -1};
        std::size_t c = 2;
        for (int k = 0; k < dx; ++k) s.x(k) = parse_double(f[c++], lineno, path);
        for (int k = 0; k < du; ++k) s.u(k) = parse_double(f[c++], lineno, path);
        for (int k = 0; k < dx; ++k) s.x_next(k) = parse_double(f[c++], lineno, path);
        s.true_mode = static_cast<int>(parse_double(f[c], lineno, path));
        data.trials.back().steps.push_back(std::move(s));
    }
    data.validate();
    return data;
}

namespace {

json standardizer_to_json(const Standardizer& s) { return {{"shift", vec_to_json(s.shift)}, {"scale", vec_to_json(s.scale)}}; }

Standardizer standardizer_from_json(const json& j) {
    return Standardizer{vec_from_json(j.at("shift")), vec_from_json(j.at("scale"))};
}

json gp_to_json(const MultiOutputGp& gp) {
    json outs = json::array();
    for (const auto& o : gp.outputs()) {
        outs.push_back({{"inputs", mat_to_json(o.inputs())},
                        {"targets", vec_to_json(o.targets())},
                        {"log_lengthscales", vec_to_json(o.hyper().log_lengthscales)},
                        {"log_signal_var", o.hyper().log_signal_var},
                        {"log_noise_var", o.hyper().log_noise_var},
                        {"include_noise", o.include_noise()},
                        {"lml", o.lml()}});
    }
    return {{"input_norm", standardizer_to_json(gp.input_norm())},
            {"target_norm", standardizer_to_json(gp.target_norm())},
            {"outputs", outs}};
}

MultiOutputGp gp_from_json(const json& j) {
    std::vector<GpModel> outs;
    for (const auto& o : j.at("outputs")) {
        GpHyperparams h;
        h.log_lengthscales = vec_from_json(o.at("log_lengthscales"));
        h.log_signal_var = o.at("log_signal_var").get<double>();
        h.log_noise_var = o.at("log_noise_var").get<double>();
        outs.emplace_back(mat_from_json(o.at("inputs")), vec_from_json(o.at("targets")), h,
                          o.at("include_noise").get<bool>());
    }
    return MultiOutputGp(standardizer_from_json(j.at("input_norm")), standardizer_from_json(j.at("target_norm")),
                         std::move(outs));
}

json guard_to_json(const GuardModel& g) {
    return {{"norm", standardizer_to_json(g.norm())},
            {"classes", g.svm().classes()},
            {"gamma", g.svm().gamma()},
            {"support_vectors", mat_to_json(g.svm().support_vectors())},
            {"coef", mat_to_json(g.svm().coef())},
            {"rho", vec_to_json(g.svm().rho())},
            {"c", g.params().c},
            {"grid_gamma", g.params().gamma},
            {"cv_accuracy", g.cv_accuracy()}};
}

GuardModel guard_from_json(const json& j) {
    MulticlassSvm svm(j.at("classes").get<std::vector<int>>(), j.at("gamma").get<double>(),
                      mat_from_json(j.at("support_vectors")), mat_from_json(j.at("coef")),
                      vec_from_json(j.at("rho")));
    return GuardModel(standardizer_from_json(j.at("norm")), std::move(svm),
                      SvmParams{j.at("c").get<double>(), j.at("grid_gamma").get<double>()},
                      j.at("cv_accuracy").get<double>());
}

}  // namespace

json model_to_json(const HybridModel& model) {
    json modes = json::array();
    for (const auto& [m, gp] : model.modes) modes.push_back({{"mode", m}, {"gp", gp_to_json(gp)}});
    json resets = json::array();
    for (const auto& [p, gp] : model.resets)
        resets.push_back({{"from", p.first}, {"to", p.second}, {"gp", gp_to_json(gp)}});
    json rel = json::array();
    for (const auto& [a, b] : model.relation.pairs()) rel.push_back({a, b});
    return {{"state_dim", model.state_dim}, {"action_dim", model.action_dim}, {"modes", modes},
            {"resets", resets},           {"relation", rel},                 {"guard", guard_to_json(model.guard)}};
}

HybridModel model_from_json(const json& j) {
    HybridModel m;
    try {
        m.state_dim = j.at("state_dim").get<int>();
        m.action_dim = j.at("action_dim").get<int>();
        for (const auto& e : j.at("modes")) m.modes.emplace(e.at("mode").get<int>(), gp_from_json(e.at("gp")));
        for (const auto& e : j.at("resets"))
            m.resets.emplace(ModePair{e.at("from").get<int>(), e.at("to").get<int>()}, gp_from_json(e.at("gp")));
        for (const auto& p : j.at("relation")) m.relation.insert(p.at(0).get<int>(), p.at(1).get<int>());
        m.guard = guard_from_json(j.at("guard"));
    } catch (const json::exception& e) {
        throw IoError(std::string("model file: ") + e.what());
    }
    m.validate();
    return m;
}

void save_model(const HybridModel& model, const json& metadata, const std::string& path) {
    json j = {{"format_version", kModelFormatVersion}, {"kind", "hybrid_model"}, {"metadata", metadata},
              {"model", model_to_json(model)}};
    write_file(path, j.dump(1) + "\n");
}

HybridModel load_model(const std::string& path) {
    const json j = parse_json(read_file(path), path);
    check_version(j, kModelFormatVersion, path);
    if (j.value("kind", "") != "hybrid_model") throw IoError(path + ": not a hybrid model file");
    return model_from_json(j.at("model"));
}

void write_trace(const PredictionTrace& trace, const json& metadata, const std::string& path, bool full_covariance) {
    const int d = trace.state_dim();
    std::ostringstream os;
    os << "t,segment_id,mode,weight";
    for (int k = 0; k < d; ++k) os << ",mean_" << k;
    for (int k = 0; k < d; ++k) os << ",var_" << k;
    os << '\n';
    json covs = json::array();
    for (std::size_t t = 0; t < trace.steps.size(); ++t) {
        for (const auto& e : trace.steps[t]) {
            os << t << ',' << e.segment_id << ',' << e.mode << ',' << fmt(e.weight);
            for (int k = 0; k < d; ++k) os << ',' << fmt(e.belief.mean()(k));
            for (int k = 0; k < d; ++k) os << ',' << fmt(e.belief.cov()(k, k));
            os << '\n';
            if (full_covariance) covs.push_back(mat_to_json(e.belief.cov()));
        }
    }
    write_file(path, os.str());
    json side = {{"format_version", kTraceFormatVersion}, {"horizon", trace.horizon()}, {"state_dim", d},
                 {"metadata", metadata}};
    if (full_covariance) side["covariances"] = covs;
    write_file(path + ".json", side.dump(1) + "\n");
}

PredictionTrace read_trace(const std::string& path) {
    const json side = parse_json(read_file(path + ".json"), path + ".json");
    check_version(side, kTraceFormatVersion, path + ".json");
    const int d = side.at("state_dim").get<int>();
    const int horizon = side.at("horizon").get<int>();
    const json* covs = side.contains("covariances") ? &side.at("covariances") : nullptr;

    std::istringstream in(read_file(path));
    std::string line;
    if (!std::getline(in, line)) throw IoError(path + ":1: empty file");
    const std::size_t expected = 4 + 2 * static_cast<std::size_t>(d);
    if (split_csv(line).size() != expected) throw IoError(path + ":1: unexpected header");
    PredictionTrace trace;
    trace.steps.resize(static_cast<std::size_t>(horizon) + 1);
    int lineno = 1;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto f = split_csv(line);
        if (f.size() != expected) throw IoError(path + ":" + std::to_string(lineno) + ": wrong field count");
        const auto t = static_cast<std::size_t>(parse_double(f[0], lineno, path));
        if (t >= trace.steps.size()) throw IoError(path + ":" + std::to_string(lineno) + ": t beyond horizon");
        Vec mean(d);
        Mat cov = Mat::Zero(d, d);
        for (int k = 0; k < d; ++k) mean(k) = parse_double(f[4 + static_cast<std::size_t>(k)], lineno, path);
        if (covs) {
            if (row >= covs->size()) throw IoError(path + ".json: fewer covariances than rows");
            cov = mat_from_json((*covs)[row]);
        } else {
            for (int k = 0; k < d; ++k)
                cov(k, k) = parse_double(f[4 + static_cast<std::size_t>(d + k)], lineno, path);
        }
        trace.steps[t].push_back(TraceEntry{static_cast<int>(parse_double(f[1], lineno, path)),
                                            static_cast<int>(parse_double(f[2], lineno, path)),
                                            parse_double(f[3], lineno, path), GaussianBelief(mean, cov)});
        ++row;
    }
    for (std::size_t t = 0; t < trace.steps.size(); ++t)
        if (trace.steps[t].empty()) throw IoError(path + ": no rows for t=" + std::to_string(t));
    return trace;
}

json report_to_json(const ScoreReport& r) {
    return {{"format_version", kReportFormatVersion},
            {"avg_nll", r.avg_nll},           {"nll_std", r.nll_std},
            {"avg_rmse", r.avg_rmse},         {"rmse_std", r.rmse_std},
            {"per_step_nll", r.per_step_nll}, {"per_step_rmse", r.per_step_rmse},
            {"trials", r.trials},             {"steps", r.steps},
            {"nll_density", "joint over state dimensions, full mixture"},
            {"rmse_segment", "most likely segment mean"}};
}

}  // namespace hybridgp
