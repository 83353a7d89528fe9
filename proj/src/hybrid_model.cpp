#include "hybridgp/hybrid_model.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

namespace hybridgp {

void HybridModel::validate() const {
    const int din = state_dim + action_dim;
    if (modes.empty()) throw ConfigError("hybrid model: no modes");
    for (const auto& [m, gp] : modes) {
        if (gp.input_dim() != din || gp.output_dim() != state_dim)
            throw ConfigError("hybrid model: mode " + std::to_string(m) + " GP has wrong dimensions");
        if (gp.training_size() < 2)
            throw ConfigError("hybrid model: mode " + std::to_string(m) + " trained on < 2 points");
    }
    if (resets.size() != relation.size()) throw ConfigError("hybrid model: resets do not match relation");
    for (const auto& [p, gp] : resets) {
        if (!relation.contains(p.first, p.second)) throw ConfigError("hybrid model: reset outside relation");
        if (!modes.contains(p.first) || !modes.contains(p.second))
            throw ConfigError("hybrid model: reset refers to unknown mode");
        if (gp.input_dim() != din || gp.output_dim() != state_dim)
            throw ConfigError("hybrid model: reset GP has wrong dimensions");
    }
    if (guard.input_dim() != din) throw ConfigError("hybrid model: guard has wrong input dimension");
}

namespace {

using Labels = std::vector<std::vector<int>>;

void relabel_by_first_appearance(Labels& labels) {
    std::map<int, int> map;
    for (const auto& tr : labels)
        for (int l : tr)
            if (!map.contains(l)) map.emplace(l, static_cast<int>(map.size()));
    for (auto& tr : labels)
        for (int& l : tr) l = map.at(l);
}

std::map<int, int> within_mode_counts(const Labels& labels) {
    std::map<int, int> counts;
    for (const auto& tr : labels) {
        for (int l : tr) counts.try_emplace(l, 0);
        for (std::size_t t = 0; t + 1 < tr.size(); ++t)
            if (tr[t] == tr[t + 1]) ++counts[tr[t]];
    }
    return counts;
}

struct ClusterStats {
    Vec mean;
    Mat cov;
};

std::map<int, ClusterStats> cluster_stats(const Dataset& data, const Labels& labels, const FeatureMap& features) {
    std::map<int, std::vector<Vec>> pts;
    for (std::size_t i = 0; i < data.trials.size(); ++i)
        for (std::size_t t = 0; t < data.trials[i].size(); ++t)
            pts[labels[i][t]].push_back(features(data.trials[i].steps[t].x));
    std::map<int, ClusterStats> out;
    for (const auto& [l, v] : pts) {
        const auto d = v.front().size();
        Vec mean = Vec::Zero(d);
        for (const auto& p : v) mean += p;
        mean /= static_cast<double>(v.size());
        Mat cov = Mat::Zero(d, d);
        for (const auto& p : v) cov += (p - mean) * (p - mean).transpose();
        cov /= static_cast<double>(std::max<std::size_t>(v.size() - 1, 1));
        cov.diagonal().array() += std::max(cov.trace() / d, 1.0) * 1e-9;
        out.emplace(l, ClusterStats{mean, cov});
    }
    return out;
}

// Folds clusters with fewer than two within-mode steps into the nearest
// remaining cluster (Mahalanobis distance under the receiving cluster).
void merge_starved_modes(const Dataset& data, Labels& labels, const FeatureMap& features,
                         std::vector<std::string>& warnings) {
    for (;;) {
        const auto counts = within_mode_counts(labels);
        int starved = -1;
        for (const auto& [m, c] : counts)
            if (c < 2) {
                starved = m;
                break;
            }
        if (starved < 0) return;
        if (counts.size() == 1) throw NumericalError("learn: the only mode has fewer than 2 within-mode steps");
        const auto stats = cluster_stats(data, labels, features);
        const Vec& mu = stats.at(starved).mean;
        int target = -1;
        double best = std::numeric_limits<double>::infinity();
        for (const auto& [m, s] : stats) {
            if (m == starved) continue;
            const Vec diff = mu - s.mean;
            const double d2 = diff.dot(s.cov.ldlt().solve(diff));
            if (d2 < best) {
                best = d2;
                target = m;
            }
        }
        std::ostringstream os;
        os << "learn: cluster " << starved << " has " << counts.at(starved)
           << " within-mode steps, merged into cluster " << target;
        warnings.push_back(os.str());
        for (auto& tr : labels)
            for (int& l : tr)
                if (l == starved) l = target;
    }
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    std::uint64_t h = seed ^ (0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
    h ^= 0xc2b2ae3d27d4eb4fULL * (b + 1);
    return h;
}

}  // namespace

LearnResult learn(const Dataset& data, const HybridLearnConfig& cfg, const FeatureMap& features) {
    if (data.empty()) throw ConfigError("learn: empty dataset");
    data.validate();
    const int dx = data.state_dim();
    const int du = data.action_dim();

    LearnResult result;
    LearnReport& report = result.report;

    DpgmmConfig dcfg = cfg.dpgmm;
    dcfg.seed = mix_seed(cfg.seed, 1, 0);
    ClusterResult cr = cluster(data, dcfg, features);
    report.clusters_found = cr.k;
    report.dpgmm_iterations = cr.mixture.iterations;
    report.dpgmm_converged = cr.mixture.converged;
    for (const auto& w : cr.mixture.warnings) report.warnings.push_back(w);

    Labels labels = std::move(cr.labels);
    merge_starved_modes(data, labels, features, report.warnings);
    relabel_by_first_appearance(labels);

    HybridModel& model = result.model;
    model.state_dim = dx;
    model.action_dim = du;
    model.relation = extract_transition_relation(labels);

    // Partition the transition tuples by (z_t, z_{t+1}).
    std::map<int, std::vector<std::pair<Vec, Vec>>> mode_rows;
    std::map<ModePair, std::vector<std::pair<Vec, Vec>>> reset_rows;
    for (std::size_t i = 0; i < data.trials.size(); ++i) {
        const auto& steps = data.trials[i].steps;
        for (std::size_t t = 0; t + 1 < steps.size(); ++t) {
            const int a = labels[i][t];
            const int b = labels[i][t + 1];
            const Vec xu = join_state_action(steps[t].x, steps[t].u);
            if (a == b || cfg.include_pre_switch_steps) {
                mode_rows[a].emplace_back(xu, steps[t].x_next - steps[t].x);
            }
            if (a != b) reset_rows[{a, b}].emplace_back(xu, steps[t].x_next);
        }
    }

    auto to_mats = [](const std::vector<std::pair<Vec, Vec>>& rows) {
        Mat in(static_cast<Eigen::Index>(rows.size()), rows.front().first.size());
        Mat out(static_cast<Eigen::Index>(rows.size()), rows.front().second.size());
        for (std::size_t r = 0; r < rows.size(); ++r) {
            in.row(static_cast<Eigen::Index>(r)) = rows[r].first.transpose();
            out.row(static_cast<Eigen::Index>(r)) = rows[r].second.transpose();
        }
        return std::pair{in, out};
    };

    for (const auto& [m, rows] : mode_rows) {
        GpFitConfig gcfg = cfg.gp;
        gcfg.seed = mix_seed(cfg.seed, 2, static_cast<std::uint64_t>(m));
        const auto [in, out] = to_mats(rows);
        MultiOutputGp gp = MultiOutputGp::fit(in, out, gcfg);
        double lml = 0.0;
        for (const auto& o : gp.outputs()) lml += o.lml();
        report.mode_lml[m] = lml;
        report.mode_rows[m] = static_cast<int>(rows.size());
        model.modes.emplace(m, std::move(gp));
    }

    for (const auto& [p, rows] : reset_rows) {
        if (rows.size() < 2) {
            std::ostringstream os;
            os << "learn: switch " << p.first << "->" << p.second << " has " << rows.size()
               << " example(s), removed from the relation";
            report.warnings.push_back(os.str());
            model.relation.erase(p.first, p.second);
            continue;
        }
        GpFitConfig gcfg = cfg.gp;
        gcfg.seed = mix_seed(cfg.seed, 3, static_cast<std::uint64_t>(p.first * 1000 + p.second));
        const auto [in, out] = to_mats(rows);
        MultiOutputGp gp = MultiOutputGp::fit(in, out, gcfg);
        double lml = 0.0;
        for (const auto& o : gp.outputs()) lml += o.lml();
        report.reset_lml[p] = lml;
        report.reset_rows[p] = static_cast<int>(rows.size());
        model.resets.emplace(p, std::move(gp));
    }

    Dataset labeled = data;
    labeled.labels = labels;
    GuardConfig gcfg = cfg.guard;
    gcfg.seed = mix_seed(cfg.seed, 4, 0);
    model.guard = GuardModel::train(labeled, gcfg);
    report.guard_cv_accuracy = model.guard.cv_accuracy();
    report.guard_params = model.guard.params();
    report.modes = static_cast<int>(model.modes.size());

    model.validate();
    result.labels = std::move(labels);
    return result;
}

GaussianBelief step_in_mode(const HybridModel& model, int mode, const GaussianBelief& joint,
                            const SigmaPointConfig& cfg) {
    const auto it = model.modes.find(mode);
    if (it == model.modes.end()) throw ConfigError("step_in_mode: unknown mode " + std::to_string(mode));
    const MultiOutputGp& gp = it->second;
    const int dx = model.state_dim;
    if (joint.dim() != dx + model.action_dim) throw ConfigError("step_in_mode: joint dimension mismatch");
    return propagate_probabilistic(
        [&](const Vec& xu) {
            const GaussianBelief delta = gp.predict(xu);
            return GaussianBelief(xu.head(dx) + delta.mean(), delta.cov());
        },
        joint, cfg);
}

GaussianBelief step_reset(const HybridModel& model, ModePair pair, const GaussianBelief& joint,
                          const SigmaPointConfig& cfg) {
    const auto it = model.resets.find(pair);
    if (it == model.resets.end() || !model.relation.contains(pair.first, pair.second)) {
        throw ConfigError("step_reset: switch " + std::to_string(pair.first) + "->" + std::to_string(pair.second) +
                          " is not in the transition relation");
    }
    if (joint.dim() != model.state_dim + model.action_dim) throw ConfigError("step_reset: joint dimension mismatch");
    const MultiOutputGp& gp = it->second;
    return propagate_probabilistic([&](const Vec& xu) { return gp.predict(xu); }, joint, cfg);
}

int infer_initial_mode(const HybridModel& model, const Policy& policy, const GaussianBelief& x0) {
    const Vec u = policy.action(x0.mean()).mean();
    const int m = model.guard.predict_mode(x0.mean(), u);
    if (!model.has_mode(m)) return model.modes.begin()->first;
    return m;
}

}  // namespace hybridgp
