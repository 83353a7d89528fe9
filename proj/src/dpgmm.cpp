#include "hybridgp/dpgmm.hpp"

#include <boost/math/special_functions/digamma.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <random>

namespace hybridgp {

void DpgmmConfig::check() const {
    if (k_max < 1) throw ConfigError("dpgmm: k_max must be >= 1");
    if (!(alpha_concentration > 0.0)) throw ConfigError("dpgmm: concentration must be positive");
    if (!(min_cluster_weight > 0.0 && min_cluster_weight < 1.0))
        throw ConfigError("dpgmm: min_cluster_weight must lie in (0, 1)");
    if (max_iter < 1) throw ConfigError("dpgmm: max_iter must be >= 1");
    if (n_init < 0) throw ConfigError("dpgmm: n_init must be >= 0");
}

namespace {

using boost::math::digamma;

double log_beta_fn(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }

double kl_beta(double a, double b, double a0, double b0) {
    return log_beta_fn(a0, b0) - log_beta_fn(a, b) + (a - a0) * digamma(a) + (b - b0) * digamma(b) +
           (a0 - a + b0 - b) * digamma(a + b);
}

// Seeded k-means++ followed by a few Lloyd sweeps; returns hard labels.
std::vector<int> kmeans_init(const Mat& x, int k, std::mt19937_64& rng) {
    const Eigen::Index n = x.rows();
    Mat centers(k, x.cols());
    std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
    centers.row(0) = x.row(pick(rng));
    Vec d2 = (x.rowwise() - centers.row(0)).rowwise().squaredNorm();
    for (int c = 1; c < k; ++c) {
        const double total = d2.sum();
        Eigen::Index chosen = pick(rng);
        if (total > 0.0) {
            std::uniform_real_distribution<double> u(0.0, total);
            double target = u(rng);
            for (Eigen::Index i = 0; i < n; ++i) {
                target -= d2(i);
                if (target <= 0.0) {
                    chosen = i;
                    break;
                }
            }
        }
        centers.row(c) = x.row(chosen);
        d2 = d2.cwiseMin((x.rowwise() - centers.row(c)).rowwise().squaredNorm());
    }
    std::vector<int> labels(static_cast<std::size_t>(n), 0);
    for (int sweep = 0; sweep < 10; ++sweep) {
        for (Eigen::Index i = 0; i < n; ++i) {
            Eigen::Index best;
            (centers.rowwise() - x.row(i)).rowwise().squaredNorm().minCoeff(&best);
            labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
        }
        Mat sums = Mat::Zero(k, x.cols());
        Vec counts = Vec::Zero(k);
        for (Eigen::Index i = 0; i < n; ++i) {
            sums.row(labels[static_cast<std::size_t>(i)]) += x.row(i);
            counts(labels[static_cast<std::size_t>(i)]) += 1.0;
        }
        for (int c = 0; c < k; ++c)
            if (counts(c) > 0) centers.row(c) = sums.row(c) / counts(c);
    }
    return labels;
}

struct Posterior {
    Vec nk;
    std::vector<Vec> m;
    std::vector<Mat> psi;  // inverse-Wishart scale
    Vec beta;
    Vec nu;
};

class Variational {
public:
    Variational(const Mat& x, const DpgmmConfig& cfg) : x_(x), cfg_(cfg) {
        const auto n = x.rows();
        d_ = static_cast<int>(x.cols());
        m0_ = x.colwise().mean().transpose();
        const Mat centered = x.rowwise() - m0_.transpose();
        psi0_ = centered.transpose() * centered / static_cast<double>(std::max<Eigen::Index>(n - 1, 1));
        const double ridge = std::max(psi0_.trace() / d_, 1e-12) * 1e-9;
        psi0_.diagonal().array() += ridge;
        nu0_ = d_ + 2.0;
    }

    Posterior m_step(const Mat& resp) const {
        const int k = static_cast<int>(resp.cols());
        Posterior p;
        p.nk = resp.colwise().sum().transpose().array() + 10.0 * std::numeric_limits<double>::epsilon();
        p.m.resize(k);
        p.psi.resize(k);
        p.beta = p.nk.array() + beta0_;
        p.nu = p.nk.array() + nu0_;
        for (int c = 0; c < k; ++c) {
            const Vec xbar = (x_.transpose() * resp.col(c)) / p.nk(c);
            const Mat centered = x_.rowwise() - xbar.transpose();
            const Mat scatter = centered.transpose() * resp.col(c).asDiagonal() * centered;
            const Vec dm = xbar - m0_;
            p.m[c] = (beta0_ * m0_ + p.nk(c) * xbar) / p.beta(c);
            p.psi[c] = psi0_ + scatter + (beta0_ * p.nk(c) / (beta0_ + p.nk(c))) * dm * dm.transpose();
            p.psi[c] = 0.5 * (p.psi[c] + p.psi[c].transpose());
        }
        return p;
    }

    // Unnormalized log responsibilities, N x k.
    Mat log_rho(const Posterior& p) const {
        const int k = static_cast<int>(p.nk.size());
        const auto n = x_.rows();
        Vec e_log_pi(k);
        double acc_log_rest = 0.0;
        for (int c = 0; c < k; ++c) {
            const double g1 = 1.0 + p.nk(c);
            const double g2 = cfg_.alpha_concentration + p.nk.tail(k - c - 1).sum();
            const double dsum = digamma(g1 + g2);
            const bool last = c == k - 1;
            e_log_pi(c) = (last ? 0.0 : digamma(g1) - dsum) + acc_log_rest;
            if (!last) acc_log_rest += digamma(g2) - dsum;
        }
        Mat out(n, k);
        for (int c = 0; c < k; ++c) {
            const Eigen::LLT<Mat> llt(p.psi[c]);
            const Mat l = llt.matrixL();
            const double e_ld = e_log_det(p.psi[c], p.nu(c));
            const Mat diff = (x_.rowwise() - p.m[c].transpose()).transpose();
            const Mat z = l.triangularView<Eigen::Lower>().solve(diff);
            const Vec maha = z.colwise().squaredNorm().transpose();
            out.col(c) = (e_log_pi(c) + 0.5 * e_ld - 0.5 * d_ * std::log(2.0 * std::numbers::pi) -
                          0.5 * d_ / p.beta(c)) -
                         0.5 * p.nu(c) * maha.array();
        }
        return out;
    }

    // Lower bound at (resp, post) where post = m_step(resp).
    double elbo(const Mat& resp, const Posterior& p, const Mat& log_rho) const {
        const int k = static_cast<int>(p.nk.size());
        double out = 0.0;
        for (Eigen::Index i = 0; i < resp.rows(); ++i)
            for (int c = 0; c < k; ++c) {
                const double r = resp(i, c);
                if (r > 0.0) out += r * (log_rho(i, c) - std::log(r));
            }
        for (int c = 0; c + 1 < k; ++c)
            out -= kl_beta(1.0 + p.nk(c), cfg_.alpha_concentration + p.nk.tail(k - c - 1).sum(), 1.0,
                           cfg_.alpha_concentration);
        const double log_det_psi0 = log_det(psi0_);
        for (int c = 0; c < k; ++c) {
            const Eigen::LLT<Mat> llt(p.psi[c]);
            const double log_det_psi = log_det(p.psi[c]);
            const double e_ld = e_log_det(p.psi[c], p.nu(c));
            const Vec dm = p.m[c] - m0_;
            const double maha = dm.dot(llt.solve(dm));
            double kl = 0.5 * (d_ * beta0_ / p.beta(c) - d_ + d_ * std::log(p.beta(c) / beta0_) +
                               beta0_ * p.nu(c) * maha);
            // Wishart over the precision, scale W = psi^-1.
            const double tr = (llt.solve(psi0_)).trace();
            const double e_log_q = log_wishart_norm(-log_det_psi, p.nu(c)) + 0.5 * (p.nu(c) - d_ - 1.0) * e_ld -
                                   0.5 * p.nu(c) * d_;
            const double e_log_p = log_wishart_norm(-log_det_psi0, nu0_) + 0.5 * (nu0_ - d_ - 1.0) * e_ld -
                                   0.5 * p.nu(c) * tr;
            kl += e_log_q - e_log_p;
            out -= kl;
        }
        return out;
    }

    Mat normalize(const Mat& log_rho) const {
        Mat resp(log_rho.rows(), log_rho.cols());
        for (Eigen::Index i = 0; i < log_rho.rows(); ++i) {
            const double top = log_rho.row(i).maxCoeff();
            const Eigen::RowVectorXd e = (log_rho.row(i).array() - top).exp();
            resp.row(i) = e / e.sum();
        }
        return resp;
    }

    int dim() const { return d_; }

private:
    static double log_det(const Mat& a) {
        const Eigen::LLT<Mat> llt(a);
        return 2.0 * Mat(llt.matrixL()).diagonal().array().log().sum();
    }

    // E[log |Lambda|] for Lambda ~ Wishart(psi^-1, nu).
    double e_log_det(const Mat& psi, double nu) const {
        double out = d_ * std::log(2.0) - log_det(psi);
        for (int i = 1; i <= d_; ++i) out += digamma(0.5 * (nu + 1.0 - i));
        return out;
    }

    // log B(W, nu) of the Wishart density given log |W|.
    double log_wishart_norm(double log_det_w, double nu) const {
        double out = -0.5 * nu * log_det_w - 0.5 * nu * d_ * std::log(2.0) -
                     0.25 * d_ * (d_ - 1.0) * std::log(std::numbers::pi);
        for (int i = 1; i <= d_; ++i) out -= std::lgamma(0.5 * (nu + 1.0 - i));
        return out;
    }

    const Mat& x_;
    const DpgmmConfig& cfg_;
    int d_ = 0;
    Vec m0_;
    Mat psi0_;
    double beta0_ = 1.0;
    double nu0_ = 0.0;
};

}  // namespace

DpgmmResult fit_dpgmm(const Mat& points, const DpgmmConfig& cfg) {
    cfg.check();
    const Eigen::Index n = points.rows();
    if (n < cfg.k_max + 1) {
        throw ConfigError("dpgmm: need at least k_max + 1 = " + std::to_string(cfg.k_max + 1) +
                          " points, got " + std::to_string(n));
    }
    if (!points.allFinite()) throw ConfigError("dpgmm: non-finite data");
    const int k = cfg.k_max;
    std::mt19937_64 rng(cfg.seed);

    Variational vb(points, cfg);
    struct Run {
        Posterior post;
        int iterations = 0;
        bool converged = false;
        double elbo = -std::numeric_limits<double>::infinity();
    };
    auto run = [&](Mat resp) {
        Run r;
        r.post = vb.m_step(resp);
        for (int it = 1; it <= cfg.max_iter; ++it) {
            resp = vb.normalize(vb.log_rho(r.post));
            Posterior next = vb.m_step(resp);
            const double change = (next.nk - r.post.nk).cwiseAbs().maxCoeff() / static_cast<double>(n);
            r.post = std::move(next);
            r.iterations = it;
            if (change < cfg.tol) {
                r.converged = true;
                break;
            }
        }
        r.elbo = vb.elbo(resp, r.post, vb.log_rho(r.post));
        return r;
    };

    std::vector<Run> runs;
    {
        Mat resp = Mat::Zero(n, k);
        resp.col(0).setOnes();
        runs.push_back(run(std::move(resp)));
    }
    for (int s = 0; s < cfg.n_init; ++s) {
        Mat resp = Mat::Zero(n, k);
        const auto init = kmeans_init(points, k, rng);
        for (Eigen::Index i = 0; i < n; ++i) resp(i, init[static_cast<std::size_t>(i)]) = 1.0;
        runs.push_back(run(std::move(resp)));
    }
    std::size_t chosen = 0;
    for (std::size_t r = 1; r < runs.size(); ++r)
        if (runs[r].elbo > runs[chosen].elbo) chosen = r;

    DpgmmResult result;
    const Posterior& post = runs[chosen].post;
    result.iterations = runs[chosen].iterations;
    result.converged = runs[chosen].converged;
    result.elbo = runs[chosen].elbo;
    if (!result.converged) {
        result.warnings.push_back("dpgmm: no convergence after " + std::to_string(cfg.max_iter) +
                                  " iterations, returning last iterate");
    }
    const Mat log_rho = vb.log_rho(post);

    std::vector<int> alive;
    for (int c = 0; c < k; ++c)
        if (post.nk(c) / static_cast<double>(n) >= cfg.min_cluster_weight) alive.push_back(c);

    std::vector<int> raw(static_cast<std::size_t>(n));
    for (;;) {
        if (alive.empty()) throw NumericalError("dpgmm: no surviving components after pruning");
        std::map<int, int> counts;
        for (Eigen::Index i = 0; i < n; ++i) {
            int best = alive.front();
            for (int c : alive)
                if (log_rho(i, c) > log_rho(i, best)) best = c;
            raw[static_cast<std::size_t>(i)] = best;
            ++counts[best];
        }
        std::vector<int> keep;
        for (int c : alive)
            if (counts[c] >= 2) keep.push_back(c);
        if (keep.size() == alive.size()) break;
        alive = std::move(keep);
    }

    // Relabel by first appearance.
    std::map<int, int> relabel;
    for (int c : raw)
        if (!relabel.contains(c)) relabel.emplace(c, static_cast<int>(relabel.size()));
    result.k = static_cast<int>(relabel.size());
    result.labels.resize(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i)
        result.labels[static_cast<std::size_t>(i)] = relabel.at(raw[static_cast<std::size_t>(i)]);

    result.components.resize(static_cast<std::size_t>(result.k));
    double mass = 0.0;
    for (const auto& [c, _] : relabel) mass += post.nk(c);
    const int d = vb.dim();
    for (const auto& [c, label] : relabel) {
        const double dof = post.nu(c) - d - 1.0;
        Mat cov = post.psi[c] / std::max(dof, 1e-12);
        result.components[static_cast<std::size_t>(label)] = {post.nk(c) / mass,
                                                              GaussianBelief(post.m[c], repair_psd(cov))};
    }
    return result;
}

}  // namespace hybridgp
