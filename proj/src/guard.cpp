#include "hybridgp/guard.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/normal.hpp>
#include <boost/random/sobol.hpp>

namespace hybridgp {

double ModeDistribution::at(int mode) const {
    const auto it = probabilities.find(mode);
    return it == probabilities.end() ? 0.0 : it->second;
}

double ModeDistribution::total() const {
    double s = 0.0;
    for (const auto& [m, p] : probabilities) s += p;
    return s;
}

void ModeDistribution::prune_and_normalize(double threshold) {
    std::erase_if(probabilities, [&](const auto& kv) { return kv.second < threshold || kv.second <= 0.0; });
    const double s = total();
    if (!(s > 0.0)) throw NumericalError("mode distribution: no mass left after pruning");
    for (auto& [m, p] : probabilities) p /= s;
}

GuardRows guard_training_rows(const Dataset& labeled) {
    if (!labeled.labels) throw ConfigError("guard: dataset has no labels");
    std::size_t count = 0;
    for (const auto& tr : labeled.trials) count += tr.size() > 0 ? tr.size() - 1 : 0;
    const int dx = labeled.state_dim();
    const int du = labeled.action_dim();
    GuardRows rows;
    rows.inputs.resize(static_cast<Eigen::Index>(count), dx + du);
    rows.next_labels.reserve(count);
    Eigen::Index r = 0;
    for (std::size_t i = 0; i < labeled.trials.size(); ++i) {
        const auto& steps = labeled.trials[i].steps;
        const auto& lab = (*labeled.labels)[i];
        for (std::size_t t = 0; t + 1 < steps.size(); ++t) {
            rows.inputs.row(r++) = join_state_action(steps[t].x, steps[t].u).transpose();
            rows.next_labels.push_back(lab[t + 1]);
        }
    }
    return rows;
}

GuardModel::GuardModel(Standardizer norm, MulticlassSvm svm, SvmParams params, double cv_accuracy)
    : norm_(std::move(norm)), svm_(std::move(svm)), params_(params), cv_accuracy_(cv_accuracy) {}

GuardModel GuardModel::train(const Dataset& labeled, const GuardConfig& cfg) {
    return train(guard_training_rows(labeled), cfg);
}

GuardModel GuardModel::train(const GuardRows& rows, const GuardConfig& cfg) {
    if (rows.inputs.rows() == 0) throw ConfigError("guard: no training rows");
    Standardizer norm = Standardizer::fit(rows.inputs);
    const Mat xs = norm.apply_rows(rows.inputs);

    std::vector<int> classes = rows.next_labels;
    std::sort(classes.begin(), classes.end());
    classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
    if (classes.size() == 1) {
        return GuardModel(std::move(norm), MulticlassSvm::train(xs, rows.next_labels, SvmParams{}), SvmParams{}, 1.0);
    }

    const auto n = static_cast<int>(xs.rows());
    Mat search_x = xs;
    std::vector<int> search_y = rows.next_labels;
    if (cfg.max_search_rows > 0 && n > cfg.max_search_rows) {
        std::vector<int> idx(static_cast<std::size_t>(n));
        std::iota(idx.begin(), idx.end(), 0);
        std::mt19937_64 rng(cfg.seed ^ 0x5bd1e995ULL);
        std::shuffle(idx.begin(), idx.end(), rng);
        idx.resize(static_cast<std::size_t>(cfg.max_search_rows));
        std::sort(idx.begin(), idx.end());
        search_x.resize(cfg.max_search_rows, xs.cols());
        search_y.clear();
        for (int r = 0; r < cfg.max_search_rows; ++r) {
            search_x.row(r) = xs.row(idx[static_cast<std::size_t>(r)]);
            search_y.push_back(rows.next_labels[static_cast<std::size_t>(idx[static_cast<std::size_t>(r)])]);
        }
    }
    const GridSearchResult gs = grid_search(search_x, search_y, cfg.c_grid, cfg.gamma_grid, cfg.folds, cfg.seed);
    MulticlassSvm svm = MulticlassSvm::train(xs, rows.next_labels, gs.best);
    return GuardModel(std::move(norm), std::move(svm), gs.best, gs.cv_accuracy);
}

int GuardModel::predict(const Vec& xu) const {
    if (xu.size() != input_dim()) throw ConfigError("guard predict: dimension mismatch");
    return svm_.predict(norm_.apply(xu));
}

GuardPropagation propagate_guard(const GuardModel& guard, const GaussianBelief& joint, int n_samples,
                                 int current_mode, const TransitionRelation& relation, std::mt19937_64& rng,
                                 double min_probability, GuardSampling sampling) {
    if (n_samples < 1) throw ConfigError("propagate_guard: n_samples must be positive");
    joint.validate("guard input covariance");
    auto fold = [&](int j) {
        return (j != current_mode && !relation.contains(current_mode, j)) ? current_mode : j;
    };

    GuardPropagation out;
    if (joint.cov().cwiseAbs().maxCoeff() == 0.0) {
        const int j = fold(guard.predict(joint.mean()));
        out.distribution.probabilities[j] = 1.0;
        out.conditionals.emplace(j, joint);
        return out;
    }

    const int d = joint.dim();
    const Mat l = robust_cholesky(joint.cov(), "guard input covariance");
    Mat z(d, n_samples);
    if (sampling == GuardSampling::Sobol) {
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        Vec shift(d);
        for (int k = 0; k < d; ++k) shift(k) = unif(rng);
        boost::random::sobol qrng(static_cast<std::size_t>(d));
        const boost::math::normal_distribution<double> std_normal;
        for (int s = 0; s < n_samples; ++s) {
            for (int k = 0; k < d; ++k) {
                double u = std::ldexp(static_cast<double>(qrng()), -64) + shift(k);
                u -= std::floor(u);
                z(k, s) = boost::math::quantile(std_normal, std::clamp(u, 1e-12, 1.0 - 1e-12));
            }
        }
    } else {
        std::normal_distribution<double> normal(0.0, 1.0);
        for (int s = 0; s < n_samples; ++s)
            for (int k = 0; k < d; ++k) z(k, s) = normal(rng);
    }
    Mat samples = (l * z).colwise() + joint.mean();
    std::vector<int> cls(static_cast<std::size_t>(n_samples));
    std::map<int, int> counts;
    for (int s = 0; s < n_samples; ++s) {
        cls[static_cast<std::size_t>(s)] = fold(guard.predict(samples.col(s)));
        ++counts[cls[static_cast<std::size_t>(s)]];
    }
    for (const auto& [m, c] : counts) out.distribution.probabilities[m] = static_cast<double>(c) / n_samples;
    out.distribution.prune_and_normalize(min_probability);

    // Conditioning on an event of probability one leaves the joint unchanged;
    // its sample moments would only add Monte-Carlo noise.
    if (out.distribution.probabilities.size() == 1) {
        out.conditionals.emplace(out.distribution.probabilities.begin()->first, joint);
        return out;
    }
    for (const auto& [m, p] : out.distribution.probabilities) {
        const int c = counts.at(m);
        if (c < d + 2) {
            out.conditionals.emplace(m, joint);
            continue;
        }
        Vec mean = Vec::Zero(d);
        for (int s = 0; s < n_samples; ++s)
            if (cls[static_cast<std::size_t>(s)] == m) mean += samples.col(s);
        mean /= c;
        Mat cov = Mat::Zero(d, d);
        for (int s = 0; s < n_samples; ++s) {
            if (cls[static_cast<std::size_t>(s)] != m) continue;
            const Vec dv = samples.col(s) - mean;
            cov.noalias() += dv * dv.transpose();
        }
        cov /= (c - 1);
        out.conditionals.emplace(m, GaussianBelief(std::move(mean), repair_psd(cov)));
    }

    // Control variate: the most likely class takes whatever moments make the
    // recombined conditionals reproduce the joint exactly.
    int big = out.distribution.probabilities.begin()->first;
    for (const auto& [m, p] : out.distribution.probabilities)
        if (p > out.distribution.probabilities.at(big)) big = m;
    if (counts.at(big) < d + 2) return out;
    Vec mean = joint.mean();
    Mat second = joint.cov() + joint.mean() * joint.mean().transpose();
    for (const auto& [m, p] : out.distribution.probabilities) {
        if (m == big) continue;
        const GaussianBelief& g = out.conditionals.at(m);
        mean -= p * g.mean();
        second -= p * (g.cov() + g.mean() * g.mean().transpose());
    }
    const double pb = out.distribution.probabilities.at(big);
    mean /= pb;
    Mat cov = second / pb - mean * mean.transpose();
    out.conditionals.at(big) = GaussianBelief(std::move(mean), repair_psd(cov));
    return out;
}

}  // namespace hybridgp
