#include "hybridgp/mode_discovery.hpp"

namespace hybridgp {

void TransitionRelation::insert(int from, int to) {
    if (from == to) throw ConfigError("transition relation cannot contain self-pairs");
    pairs_.emplace(from, to);
}

FeatureMap FeatureMap::identity() { return FeatureMap(); }

FeatureMap::FeatureMap(std::function<Vec(const Vec&)> fn, int output_dim, std::string name)
    : fn_(std::move(fn)), output_dim_(output_dim), name_(std::move(name)) {
    if (!fn_) throw ConfigError("feature map: empty function");
    if (output_dim_ < 1) throw ConfigError("feature map: output dimension must be >= 1");
}

Vec FeatureMap::operator()(const Vec& x) const { return fn_ ? fn_(x) : x; }

void FeatureMap::check(const Vec& probe) const {
    const Vec y = (*this)(probe);
    const int expected = output_dim(static_cast<int>(probe.size()));
    if (y.size() != expected) {
        throw ConfigError("feature map '" + name_ + "' returned dimension " + std::to_string(y.size()) +
                          ", declared " + std::to_string(expected));
    }
}

ClusterResult cluster(const Dataset& data, const DpgmmConfig& cfg, const FeatureMap& features) {
    if (data.empty()) throw ConfigError("cluster: empty dataset");
    const Vec probe = data.trials.front().steps.front().x;
    features.check(probe);
    const int fd = features.output_dim(static_cast<int>(probe.size()));

    Mat rows(static_cast<Eigen::Index>(data.total_steps()), fd);
    Eigen::Index r = 0;
    for (const auto& tr : data.trials)
        for (const auto& s : tr.steps) rows.row(r++) = features(s.x).transpose();

    ClusterResult out;
    out.mixture = fit_dpgmm(rows, cfg);
    out.k = out.mixture.k;
    out.labels.reserve(data.trials.size());
    std::size_t i = 0;
    for (const auto& tr : data.trials) {
        std::vector<int> lab(tr.size());
        for (auto& l : lab) l = out.mixture.labels[i++];
        out.labels.push_back(std::move(lab));
    }
    return out;
}

TransitionRelation extract_transition_relation(const std::vector<std::vector<int>>& labels) {
    TransitionRelation rel;
    for (const auto& trial : labels)
        for (std::size_t t = 0; t + 1 < trial.size(); ++t)
            if (trial[t] != trial[t + 1]) rel.insert(trial[t], trial[t + 1]);
    return rel;
}

}  // namespace hybridgp
