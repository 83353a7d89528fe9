#pragma once

#include <functional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "hybridgp/dataset.hpp"
#include "hybridgp/dpgmm.hpp"

namespace hybridgp {

/// Allowed mode switches (from, to), never containing self-pairs.
class TransitionRelation {
public:
    void insert(int from, int to);
    bool contains(int from, int to) const { return pairs_.contains({from, to}); }
    void erase(int from, int to) { pairs_.erase({from, to}); }
    const std::set<std::pair<int, int>>& pairs() const { return pairs_; }
    std::size_t size() const { return pairs_.size(); }
    bool empty() const { return pairs_.empty(); }

    friend bool operator==(const TransitionRelation&, const TransitionRelation&) = default;

private:
    std::set<std::pair<int, int>> pairs_;
};

/// Map from state to the space clustered for mode discovery.
class FeatureMap {
public:
    static FeatureMap identity();
    FeatureMap(std::function<Vec(const Vec&)> fn, int output_dim, std::string name);

    Vec operator()(const Vec& x) const;
    /// Output dimension for a given state dimension (identity: the same).
    int output_dim(int state_dim) const { return output_dim_ < 0 ? state_dim : output_dim_; }
    /// Evaluates the map on a probe state and throws ConfigError if the
    /// result does not have the declared dimension.
    void check(const Vec& probe) const;
    const std::string& name() const { return name_; }

private:
    FeatureMap() = default;
    std::function<Vec(const Vec&)> fn_;
    int output_dim_ = -1;
    std::string name_ = "identity";
};

struct ClusterResult {
    std::vector<std::vector<int>> labels;  // per trial, per step
    int k = 0;
    DpgmmResult mixture;
};

/// Clusters feature-mapped states of every step; labels keep temporal order.
ClusterResult cluster(const Dataset& data, const DpgmmConfig& cfg,
                      const FeatureMap& features = FeatureMap::identity());

/// Switches between consecutive steps within a trial; trial boundaries are
/// never bridged.
TransitionRelation extract_transition_relation(const std::vector<std::vector<int>>& labels);

}  // namespace hybridgp
