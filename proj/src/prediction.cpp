#include "hybridgp/prediction.hpp"

#include <cmath>
#include <map>
#include <random>

namespace hybridgp {

int PredictionTrace::state_dim() const {
    if (steps.empty() || steps.front().empty()) return 0;
    return steps.front().front().belief.dim();
}

void PredictionTrace::validate() const {
    for (std::size_t t = 0; t < steps.size(); ++t) {
        double s = 0.0;
        for (const auto& e : steps[t]) {
            if (!(e.weight >= 0.0)) throw NumericalError("trace: negative weight at t=" + std::to_string(t));
            s += e.weight;
            e.belief.validate("trace belief at t=" + std::to_string(t));
        }
        if (std::abs(s - 1.0) > 1e-6) throw NumericalError("trace: weights do not sum to one at t=" + std::to_string(t));
    }
}

PredictionTrace predict(const HybridModel& model, const Policy& policy, const GaussianBelief& x0, int initial_mode,
                        int horizon, const PredictionConfig& cfg) {
    if (horizon < 1) throw ConfigError("predict: horizon must be >= 1");
    if (!model.has_mode(initial_mode)) throw ConfigError("predict: unknown initial mode " + std::to_string(initial_mode));
    if (x0.dim() != model.state_dim) throw ConfigError("predict: x0 dimension mismatch");
    if (policy.state_dim() != model.state_dim || policy.action_dim() != model.action_dim)
        throw ConfigError("predict: policy dimensions do not match the model");
    x0.validate("x0 covariance");

    std::mt19937_64 rng(cfg.seed);
    PredictionTrace trace;
    trace.steps.reserve(static_cast<std::size_t>(horizon) + 1);
    trace.steps.push_back({TraceEntry{0, initial_mode, 1.0, x0}});
    int next_id = 1;

    for (int t = 0; t < horizon; ++t) {
        const auto& live = trace.steps.back();
        std::map<int, int> id_of_mode;
        for (const auto& s : live) id_of_mode[s.mode] = s.segment_id;

        std::map<int, std::vector<std::pair<double, GaussianBelief>>> incoming;
        for (const auto& s : live) {
            const GaussianBelief joint = joint_state_action(policy, s.belief, cfg.ut);
            const GuardPropagation g =
                propagate_guard(model.guard, joint, cfg.guard_samples, s.mode, model.relation, rng,
                                cfg.min_split_prob, cfg.guard_sampling);
            for (const auto& [j, p] : g.distribution.probabilities) {
                const GaussianBelief& cond = g.conditionals.at(j);
                GaussianBelief next = j == s.mode ? step_in_mode(model, s.mode, cond, cfg.ut)
                                                  : step_reset(model, {s.mode, j}, cond, cfg.ut);
                incoming[j].emplace_back(p * s.weight, std::move(next));
            }
        }

        std::vector<TraceEntry> step;
        double total = 0.0;
        for (const auto& [j, parts] : incoming) {
            double w = 0.0;
            for (const auto& [pw, b] : parts) w += pw;
            if (w < cfg.min_segment_weight) continue;
            const auto it = id_of_mode.find(j);
            const int id = it != id_of_mode.end() ? it->second : next_id++;
            step.push_back(TraceEntry{id, j, w, merge_weighted(parts)});
            total += w;
        }
        if (step.empty() || !(total > 0.0))
            throw NumericalError("predict: total segment weight collapsed at t=" + std::to_string(t + 1));
        for (auto& e : step) e.weight /= total;
        trace.steps.push_back(std::move(step));
    }
    return trace;
}

GaussianBelief mixture_moments(const PredictionTrace& trace, int t) {
    if (t < 0 || t > trace.horizon()) throw ConfigError("mixture_moments: t out of range");
    std::vector<std::pair<double, GaussianBelief>> parts;
    for (const auto& e : trace.steps[static_cast<std::size_t>(t)]) parts.emplace_back(e.weight, e.belief);
    return merge_weighted(parts);
}

std::vector<TraceEntry> most_likely_mode_sequence(const PredictionTrace& trace) {
    std::vector<TraceEntry> out;
    out.reserve(trace.steps.size());
    for (const auto& step : trace.steps) {
        if (step.empty()) throw ConfigError("most_likely_mode_sequence: empty step");
        const TraceEntry* best = &step.front();
        for (const auto& e : step) {
            if (e.weight > best->weight || (e.weight == best->weight && e.segment_id < best->segment_id)) best = &e;
        }
        out.push_back(*best);
    }
    return out;
}

}  // namespace hybridgp
