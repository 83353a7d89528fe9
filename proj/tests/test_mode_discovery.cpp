#include <doctest.h>

#include <map>
#include <random>

#include "hybridgp/mode_discovery.hpp"
#include "test_util.hpp"

using namespace hybridgp;

namespace {

/// One trial whose states visit `points` in order (actions are zero).
Dataset chain_dataset(const std::vector<Vec>& points) {
    Dataset d;
    d.trials.emplace_back();
    for (std::size_t t = 0; t + 1 < points.size(); ++t)
        d.trials[0].steps.push_back(Step{points[t], Vec::Zero(1), points[t + 1], -1});
    return d;
}

std::vector<Vec> two_clouds(int n, std::mt19937_64& rng, double sep) {
    std::vector<Vec> pts;
    for (int i = 0; i < n; ++i) {
        Vec p = test::random_vec(2, rng);
        if (i >= n / 2) p(0) += sep;
        pts.push_back(p);
    }
    return pts;
}

std::vector<int> kmeans2(const std::vector<Vec>& pts) {
    Vec c0 = pts.front();
    Vec c1 = pts.back();
    std::vector<int> lab(pts.size());
    for (int it = 0; it < 50; ++it) {
        Vec s0 = Vec::Zero(c0.size()), s1 = Vec::Zero(c0.size());
        int n0 = 0, n1 = 0;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            lab[i] = (pts[i] - c0).squaredNorm() <= (pts[i] - c1).squaredNorm() ? 0 : 1;
            if (lab[i] == 0) { s0 += pts[i]; ++n0; } else { s1 += pts[i]; ++n1; }
        }
        c0 = s0 / std::max(n0, 1);
        c1 = s1 / std::max(n1, 1);
    }
    return lab;
}

bool same_partition(const std::vector<int>& a, const std::vector<int>& b) {
    std::map<int, int> ab, ba;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (ab.contains(a[i]) && ab[a[i]] != b[i]) return false;
        if (ba.contains(b[i]) && ba[b[i]] != a[i]) return false;
        ab[a[i]] = b[i];
        ba[b[i]] = a[i];
    }
    return true;
}

std::vector<int> flat(const std::vector<std::vector<int>>& l) {
    std::vector<int> out;
    for (const auto& t : l) out.insert(out.end(), t.begin(), t.end());
    return out;
}

}  // namespace

TEST_CASE("identity feature map returns the state") {
    const FeatureMap f = FeatureMap::identity();
    Vec x(3);
    x << 1.0, -2.0, 0.5;
    CHECK(f(x) == x);
    CHECK(f.output_dim(3) == 3);
    CHECK_NOTHROW(f.check(x));
}

TEST_CASE("feature map returning the wrong dimension is a setup error") {
    const FeatureMap bad([](const Vec& x) { return Vec(x.head(1)); }, 2, "truncate");
    CHECK_THROWS_AS(bad.check(Vec::Zero(2)), ConfigError);
    std::mt19937_64 rng(1);
    const Dataset d = chain_dataset(two_clouds(40, rng, 100.0));
    CHECK_THROWS_AS(cluster(d, DpgmmConfig{}, bad), ConfigError);
}

TEST_CASE("two far-apart clouds give K=2 matching a k-means oracle") {
    std::mt19937_64 rng(2);
    const auto pts = two_clouds(200, rng, 100.0);
    const Dataset d = chain_dataset(pts);
    const ClusterResult r = cluster(d, DpgmmConfig{});
    CHECK(r.k == 2);
    std::vector<Vec> used(pts.begin(), pts.end() - 1);
    CHECK(same_partition(flat(r.labels), kmeans2(used)));
}

TEST_CASE("scaling feature map leaves well-separated assignments unchanged") {
    std::mt19937_64 rng(3);
    const Dataset d = chain_dataset(two_clouds(120, rng, 100.0));
    const ClusterResult a = cluster(d, DpgmmConfig{});
    const ClusterResult b = cluster(d, DpgmmConfig{}, FeatureMap([](const Vec& x) { return Vec(2.0 * x); }, 2, "x2"));
    CHECK(a.k == b.k);
    CHECK(same_partition(flat(a.labels), flat(b.labels)));
}

TEST_CASE("a single isotropic blob collapses to one cluster on most seeds") {
    int single = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        std::mt19937_64 rng(1000 + seed);
        std::vector<Vec> pts;
        for (int i = 0; i < 501; ++i) pts.push_back(test::random_vec(2, rng));
        DpgmmConfig cfg;
        cfg.seed = seed;
        if (cluster(chain_dataset(pts), cfg).k == 1) ++single;
    }
    CHECK(single >= 8);
}

TEST_CASE("clustering is deterministic and every cluster keeps two points") {
    std::mt19937_64 rng(4);
    std::vector<Vec> pts;
    for (int i = 0; i < 300; ++i) {
        Vec p = test::random_vec(2, rng) * 0.5;
        p(0) += (i % 3) * 4.0;
        pts.push_back(p);
    }
    const Dataset d = chain_dataset(pts);
    DpgmmConfig cfg;
    cfg.seed = 9;
    const ClusterResult a = cluster(d, cfg);
    const ClusterResult b = cluster(d, cfg);
    CHECK(a.labels == b.labels);
    std::map<int, int> counts;
    for (int l : flat(a.labels)) ++counts[l];
    CHECK(static_cast<int>(counts.size()) == a.k);
    for (const auto& [l, c] : counts) CHECK(c >= 2);
}

TEST_CASE("too few points for the truncation level is rejected") {
    std::mt19937_64 rng(5);
    std::vector<Vec> pts;
    for (int i = 0; i < 10; ++i) pts.push_back(test::random_vec(2, rng));
    CHECK_THROWS_AS(cluster(chain_dataset(pts), DpgmmConfig{}), ConfigError);
    DpgmmConfig bad;
    bad.k_max = 0;
    CHECK_THROWS_AS(bad.check(), ConfigError);
}

TEST_CASE("transition relation from label sequences") {
    CHECK(extract_transition_relation({{0, 0, 0}, {0, 0}}).empty());
    const TransitionRelation r = extract_transition_relation({{0, 0, 1, 1}});
    CHECK(r.size() == 1);
    CHECK(r.contains(0, 1));
    CHECK_FALSE(r.contains(1, 0));
}

TEST_CASE("transition relation never bridges trials and has no self-pairs") {
    const TransitionRelation r = extract_transition_relation({{0, 0, 1}, {2, 2}, {1, 3}});
    CHECK(r.contains(0, 1));
    CHECK(r.contains(1, 3));
    CHECK_FALSE(r.contains(1, 2));
    CHECK(r.size() == 2);
    for (const auto& [a, b] : r.pairs()) CHECK(a != b);
    TransitionRelation t;
    CHECK_THROWS_AS(t.insert(1, 1), ConfigError);
}
