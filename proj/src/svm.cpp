#include "hybridgp/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>

namespace hybridgp {

Mat rbf_gram(const Mat& rows, double gamma) {
    const Vec sq = rows.rowwise().squaredNorm();
    Mat d2 = -2.0 * rows * rows.transpose();
    d2.colwise() += sq;
    d2.rowwise() += sq.transpose();
    Mat g = (-gamma * d2.array().max(0.0)).exp().matrix();
    g.diagonal().setOnes();
    return g;
}

BinarySvmSolution solve_binary_svm(const Mat& gram, std::span<const int> subset, std::span<const int> y,
                                   double c, double eps, long max_iter) {
    constexpr double kTau = 1e-12;
    const int n = static_cast<int>(subset.size());
    if (static_cast<int>(y.size()) != n) throw ConfigError("svm: label count mismatch");
    auto q = [&](int a, int b) { return y[a] * y[b] * gram(subset[a], subset[b]); };

    Vec alpha = Vec::Zero(n);
    Vec grad = Vec::Constant(n, -1.0);
    auto is_upper = [&](int t) { return alpha(t) >= c; };
    auto is_lower = [&](int t) { return alpha(t) <= 0.0; };
    auto in_up = [&](int t) { return y[t] > 0 ? !is_upper(t) : !is_lower(t); };
    auto in_low = [&](int t) { return y[t] > 0 ? !is_lower(t) : !is_upper(t); };

    BinarySvmSolution sol;
    long iter = 0;
    for (; iter < max_iter; ++iter) {
        // first-order pick of i, second-order pick of j
        double gmax = -std::numeric_limits<double>::infinity();
        int i = -1;
        for (int t = 0; t < n; ++t)
            if (in_up(t) && -y[t] * grad(t) >= gmax) {
                gmax = -y[t] * grad(t);
                i = t;
            }
        double gmax2 = -std::numeric_limits<double>::infinity();
        int j = -1;
        double obj_min = std::numeric_limits<double>::infinity();
        for (int t = 0; t < n; ++t) {
            if (!in_low(t)) continue;
            const double yg = y[t] * grad(t);
            gmax2 = std::max(gmax2, yg);
            if (i < 0) continue;
            const double b = gmax + yg;
            if (b > 0.0) {
                double a = gram(subset[i], subset[i]) + gram(subset[t], subset[t]) -
                           2.0 * gram(subset[i], subset[t]);
                if (a <= 0.0) a = kTau;
                const double obj = -(b * b) / a;
                if (obj <= obj_min) {
                    obj_min = obj;
                    j = t;
                }
            }
        }
        if (i < 0 || j < 0 || gmax + gmax2 < eps) break;

        const double ai = alpha(i);
        const double aj = alpha(j);
        if (y[i] != y[j]) {
            double quad = q(i, i) + q(j, j) + 2.0 * q(i, j);
            if (quad <= 0.0) quad = kTau;
            const double delta = (-grad(i) - grad(j)) / quad;
            const double diff = alpha(i) - alpha(j);
            alpha(i) += delta;
            alpha(j) += delta;
            if (diff > 0.0) {
                if (alpha(j) < 0.0) {
                    alpha(j) = 0.0;
                    alpha(i) = diff;
                }
            } else if (alpha(i) < 0.0) {
                alpha(i) = 0.0;
                alpha(j) = -diff;
            }
            if (diff > 0.0) {
                if (alpha(i) > c) {
                    alpha(i) = c;
                    alpha(j) = c - diff;
                }
            } else if (alpha(j) > c) {
                alpha(j) = c;
                alpha(i) = c + diff;
            }
        } else {
            double quad = q(i, i) + q(j, j) - 2.0 * q(i, j);
            if (quad <= 0.0) quad = kTau;
            const double delta = (grad(i) - grad(j)) / quad;
            const double sum = alpha(i) + alpha(j);
            alpha(i) -= delta;
            alpha(j) += delta;
            if (sum > c) {
                if (alpha(i) > c) {
                    alpha(i) = c;
                    alpha(j) = sum - c;
                }
            } else if (alpha(j) < 0.0) {
                alpha(j) = 0.0;
                alpha(i) = sum;
            }
            if (sum > c) {
                if (alpha(j) > c) {
                    alpha(j) = c;
                    alpha(i) = sum - c;
                }
            } else if (alpha(i) < 0.0) {
                alpha(i) = 0.0;
                alpha(j) = sum;
            }
        }
        const double di = alpha(i) - ai;
        const double dj = alpha(j) - aj;
        for (int t = 0; t < n; ++t) grad(t) += q(t, i) * di + q(t, j) * dj;
    }
    sol.iterations = static_cast<int>(iter);

    // rho: average over free vectors, else midpoint of the feasible interval
    double ub = std::numeric_limits<double>::infinity();
    double lb = -std::numeric_limits<double>::infinity();
    double sum_free = 0.0;
    int n_free = 0;
    for (int t = 0; t < n; ++t) {
        const double yg = y[t] * grad(t);
        if (is_upper(t)) {
            if (y[t] < 0) ub = std::min(ub, yg);
            else lb = std::max(lb, yg);
        } else if (is_lower(t)) {
            if (y[t] > 0) ub = std::min(ub, yg);
            else lb = std::max(lb, yg);
        } else {
            ++n_free;
            sum_free += yg;
        }
    }
    sol.rho = n_free > 0 ? sum_free / n_free : 0.5 * (ub + lb);
    sol.coef.resize(n);
    for (int t = 0; t < n; ++t) sol.coef(t) = y[t] * alpha(t);
    return sol;
}

namespace {

struct PairSolution {
    int positive;
    int negative;
    std::vector<int> subset;  // global row indices
    BinarySvmSolution sol;
};

std::vector<int> sorted_classes(const std::vector<int>& labels, std::span<const int> subset) {
    std::vector<int> cls;
    for (int idx : subset) cls.push_back(labels[static_cast<std::size_t>(idx)]);
    std::sort(cls.begin(), cls.end());
    cls.erase(std::unique(cls.begin(), cls.end()), cls.end());
    return cls;
}

std::vector<PairSolution> train_pairs(const std::vector<int>& labels, const std::vector<int>& classes,
                                      double c, const Mat& gram, std::span<const int> subset) {
    std::vector<PairSolution> out;
    for (std::size_t a = 0; a < classes.size(); ++a) {
        for (std::size_t b = a + 1; b < classes.size(); ++b) {
            PairSolution p{classes[a], classes[b], {}, {}};
            std::vector<int> y;
            for (int idx : subset) {
                const int l = labels[static_cast<std::size_t>(idx)];
                if (l == p.positive || l == p.negative) {
                    p.subset.push_back(idx);
                    y.push_back(l == p.positive ? 1 : -1);
                }
            }
            p.sol = solve_binary_svm(gram, p.subset, y, c);
            out.push_back(std::move(p));
        }
    }
    return out;
}

int vote(const std::vector<int>& classes, const std::vector<double>& decisions,
         const std::vector<std::pair<int, int>>& pairs) {
    std::map<int, int> votes;
    for (int c : classes) votes[c] = 0;
    for (std::size_t p = 0; p < pairs.size(); ++p)
        ++votes[decisions[p] > 0.0 ? pairs[p].first : pairs[p].second];
    int best = classes.front();
    for (int c : classes)
        if (votes[c] > votes[best]) best = c;
    return best;
}

MulticlassSvm assemble(const Mat& rows, const std::vector<int>& classes, double gamma,
                       const std::vector<PairSolution>& pairs) {
    std::map<int, int> sv_slot;
    for (const auto& p : pairs)
        for (std::size_t t = 0; t < p.subset.size(); ++t)
            if (p.sol.coef(static_cast<Eigen::Index>(t)) != 0.0 && !sv_slot.contains(p.subset[t]))
                sv_slot.emplace(p.subset[t], 0);
    int slot = 0;
    for (auto& [idx, s] : sv_slot) s = slot++;
    Mat sv(slot, rows.cols());
    for (const auto& [idx, s] : sv_slot) sv.row(s) = rows.row(idx);
    Mat coef = Mat::Zero(slot, static_cast<Eigen::Index>(pairs.size()));
    Vec rho(static_cast<Eigen::Index>(pairs.size()));
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        const auto& ps = pairs[p];
        for (std::size_t t = 0; t < ps.subset.size(); ++t) {
            const double cf = ps.sol.coef(static_cast<Eigen::Index>(t));
            if (cf != 0.0) coef(sv_slot.at(ps.subset[t]), static_cast<Eigen::Index>(p)) = cf;
        }
        rho(static_cast<Eigen::Index>(p)) = ps.sol.rho;
    }
    return MulticlassSvm(classes, gamma, std::move(sv), std::move(coef), std::move(rho));
}

}  // namespace

MulticlassSvm::MulticlassSvm(std::vector<int> classes, double gamma, Mat support_vectors, Mat coef, Vec rho)
    : classes_(std::move(classes)), gamma_(gamma), sv_(std::move(support_vectors)), coef_(std::move(coef)),
      rho_(std::move(rho)) {
    if (classes_.empty()) throw ConfigError("svm: no classes");
    const auto n_pairs = static_cast<Eigen::Index>(classes_.size() * (classes_.size() - 1) / 2);
    if (rho_.size() != n_pairs || coef_.cols() != n_pairs || coef_.rows() != sv_.rows()) {
        throw ConfigError("svm: inconsistent model shapes");
    }
}

std::vector<std::pair<int, int>> MulticlassSvm::class_pairs() const {
    std::vector<std::pair<int, int>> out;
    for (std::size_t a = 0; a < classes_.size(); ++a)
        for (std::size_t b = a + 1; b < classes_.size(); ++b) out.emplace_back(classes_[a], classes_[b]);
    return out;
}

MulticlassSvm MulticlassSvm::train(const Mat& rows, const std::vector<int>& labels, const SvmParams& p) {
    std::vector<int> all(static_cast<std::size_t>(rows.rows()));
    std::iota(all.begin(), all.end(), 0);
    const Mat gram = rbf_gram(rows, p.gamma);
    return train(rows, labels, p, gram, all);
}

MulticlassSvm MulticlassSvm::train(const Mat& rows, const std::vector<int>& labels, const SvmParams& p,
                                   const Mat& gram, std::span<const int> subset) {
    if (static_cast<Eigen::Index>(labels.size()) != rows.rows()) throw ConfigError("svm: label count mismatch");
    if (subset.empty()) throw ConfigError("svm: empty training set");
    const auto classes = sorted_classes(labels, subset);
    if (classes.size() == 1) {
        return MulticlassSvm(classes, p.gamma, Mat(0, rows.cols()), Mat(0, 0), Vec(0));
    }
    return assemble(rows, classes, p.gamma, train_pairs(labels, classes, p.c, gram, subset));
}

int MulticlassSvm::predict(const Vec& x) const {
    if (classes_.size() == 1) return classes_.front();
    if (x.size() != sv_.cols()) throw ConfigError("svm predict: dimension mismatch");
    const Vec k = (-gamma_ * (sv_.rowwise() - x.transpose()).rowwise().squaredNorm()).array().exp();
    const Vec dec = coef_.transpose() * k - rho_;
    const std::vector<double> decisions(dec.data(), dec.data() + dec.size());
    return vote(classes_, decisions, class_pairs());
}

GridSearchResult grid_search(const Mat& rows, const std::vector<int>& labels, std::span<const double> cs,
                             std::span<const double> gammas, int folds, std::uint64_t seed) {
    const int n = static_cast<int>(rows.rows());
    if (cs.empty() || gammas.empty()) throw ConfigError("grid search: empty grid");
    folds = std::clamp(folds, 2, std::max(2, n));
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<int> fold_of(static_cast<std::size_t>(n));
    for (int r = 0; r < n; ++r) fold_of[static_cast<std::size_t>(order[static_cast<std::size_t>(r)])] = r % folds;

    GridSearchResult res;
    res.cv_accuracy = -1.0;
    std::vector<Mat> grams;
    for (double g : gammas) grams.push_back(rbf_gram(rows, g));
    for (double c : cs) {
        for (std::size_t gi = 0; gi < gammas.size(); ++gi) {
            const Mat& gram = grams[gi];
            int correct = 0;
            for (int f = 0; f < folds; ++f) {
                std::vector<int> train, held;
                for (int r = 0; r < n; ++r) (fold_of[static_cast<std::size_t>(r)] == f ? held : train).push_back(r);
                if (train.empty() || held.empty()) continue;
                const auto classes = sorted_classes(labels, train);
                if (classes.size() == 1) {
                    for (int h : held) correct += labels[static_cast<std::size_t>(h)] == classes.front();
                    continue;
                }
                const auto pairs = train_pairs(labels, classes, c, gram, train);
                std::vector<std::pair<int, int>> pair_ids;
                for (const auto& p : pairs) pair_ids.emplace_back(p.positive, p.negative);
                for (int h : held) {
                    std::vector<double> dec;
                    for (const auto& p : pairs) {
                        double s = -p.sol.rho;
                        for (std::size_t t = 0; t < p.subset.size(); ++t) {
                            const double cf = p.sol.coef(static_cast<Eigen::Index>(t));
                            if (cf != 0.0) s += cf * gram(h, p.subset[t]);
                        }
                        dec.push_back(s);
                    }
                    correct += vote(classes, dec, pair_ids) == labels[static_cast<std::size_t>(h)];
                }
            }
            const double acc = static_cast<double>(correct) / n;
            const SvmParams sp{c, gammas[gi]};
            res.table.emplace_back(sp, acc);
            if (acc > res.cv_accuracy) {
                res.cv_accuracy = acc;
                res.best = sp;
            }
        }
    }
    return res;
}

}  // namespace hybridgp
