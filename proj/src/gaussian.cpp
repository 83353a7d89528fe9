#include "hybridgp/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace hybridgp {

namespace {

constexpr double kSymTol = 1e-10;
constexpr double kPsdTol = 1e-10;

std::string dims_message(std::string_view what, Eigen::Index a, Eigen::Index b) {
    std::ostringstream os;
    os << what << ": dimension mismatch (" << a << " vs " << b << ")";
    return os.str();
}

}  // namespace

GaussianBelief::GaussianBelief(Vec mean, Mat cov) : mean_(std::move(mean)), cov_(std::move(cov)) {
    if (cov_.rows() != mean_.size() || cov_.cols() != mean_.size()) {
        throw ConfigError(dims_message("GaussianBelief", mean_.size(), cov_.rows()));
    }
}

GaussianBelief GaussianBelief::point_mass(const Vec& mean) {
    return GaussianBelief(mean, Mat::Zero(mean.size(), mean.size()));
}

bool GaussianBelief::is_valid() const {
    try {
        validate();
        return true;
    } catch (const NumericalError&) {
        return false;
    }
}

void GaussianBelief::validate(std::string_view name) const {
    if (!mean_.allFinite() || !cov_.allFinite()) {
        throw NumericalError(std::string(name) + ": non-finite entries");
    }
    if (cov_.size() == 0) return;
    const double scale = std::max(cov_.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
    if ((cov_ - cov_.transpose()).cwiseAbs().maxCoeff() > kSymTol * scale) {
        throw NumericalError(std::string(name) + ": not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(cov_, Eigen::EigenvaluesOnly);
    const Vec& ev = es.eigenvalues();
    const double largest = std::max(ev.maxCoeff(), 0.0);
    if (ev.minCoeff() < -kPsdTol * largest) {
        std::ostringstream os;
        os << name << ": not positive semi-definite (min eigenvalue " << ev.minCoeff()
           << ", max " << largest << ")";
        throw NumericalError(os.str());
    }
}

GaussianBelief GaussianBelief::head(int n) const {
    return GaussianBelief(mean_.head(n), cov_.topLeftCorner(n, n));
}

void SigmaPointConfig::check(int n) const {
    if (!(alpha > 0.0)) throw ConfigError("sigma points: alpha must be positive");
    if (alpha * alpha * (n + kappa) == 0.0) {
        throw ConfigError("sigma points: alpha^2 (n + kappa) must be non-zero");
    }
}

Mat repair_psd(const Mat& m) {
    Mat sym = 0.5 * (m + m.transpose());
    if (sym.size() == 0) return sym;
    Eigen::SelfAdjointEigenSolver<Mat> es(sym);
    if (es.eigenvalues().minCoeff() >= 0.0) return sym;
    const Vec clipped = es.eigenvalues().cwiseMax(0.0);
    return es.eigenvectors() * clipped.asDiagonal() * es.eigenvectors().transpose();
}

Mat robust_cholesky(const Mat& m, std::string_view what) {
    Eigen::LLT<Mat> llt(m);
    if (llt.info() == Eigen::Success) return llt.matrixL();
    const double scale = std::max(m.diagonal().cwiseAbs().mean(), 1e-300);
    for (double jitter = 1e-10; jitter <= 1.01e-6; jitter *= 10.0) {
        Mat a = m;
        a.diagonal().array() += jitter * scale;
        llt.compute(a);
        if (llt.info() == Eigen::Success) return llt.matrixL();
    }
    throw NumericalError("Cholesky failed for " + std::string(what) + " after jitter up to 1e-6");
}

SigmaPoints make_sigma_points(const GaussianBelief& input, const SigmaPointConfig& cfg) {
    input.validate("unscented transform input covariance");
    const int n = input.dim();
    cfg.check(n);
    const double a2 = cfg.alpha * cfg.alpha;
    const double c = a2 * (n + cfg.kappa);  // n + lambda
    const double lambda = c - n;

    SigmaPoints sp;
    sp.points.resize(n, 2 * n + 1);
    sp.mean_weights = Vec::Constant(2 * n + 1, 0.5 / c);
    sp.cov_weights = sp.mean_weights;
    sp.mean_weights(0) = lambda / c;
    sp.cov_weights(0) = lambda / c + (1.0 - a2 + cfg.beta);

    Mat root = Mat::Zero(n, n);
    if (input.cov().cwiseAbs().maxCoeff() > 0.0) {
        root = robust_cholesky(input.cov(), "sigma point covariance") * std::sqrt(c);
    }
    sp.points.col(0) = input.mean();
    for (int i = 0; i < n; ++i) {
        sp.points.col(1 + i) = input.mean() + root.col(i);
        sp.points.col(1 + n + i) = input.mean() - root.col(i);
    }
    return sp;
}

namespace {

UtResult moments_from_images(const SigmaPoints& sp, const Vec& input_mean, const Mat& images,
                             const Mat* intrinsic) {
    const Eigen::Index m = images.rows();
    Vec mean = images * sp.mean_weights;
    Mat cov = Mat::Zero(m, m);
    Mat cross = Mat::Zero(sp.points.rows(), m);
    for (Eigen::Index k = 0; k < images.cols(); ++k) {
        const Vec dy = images.col(k) - mean;
        const Vec dx = sp.points.col(k) - input_mean;
        cov.noalias() += sp.cov_weights(k) * dy * dy.transpose();
        cross.noalias() += sp.cov_weights(k) * dx * dy.transpose();
    }
    if (intrinsic) cov += *intrinsic;
    return {GaussianBelief(std::move(mean), repair_psd(cov)), std::move(cross)};
}

bool is_point_mass(const GaussianBelief& b) {
    return b.cov().size() == 0 || b.cov().cwiseAbs().maxCoeff() == 0.0;
}

}  // namespace

UtResult unscented_transform_full(const VectorMap& f, const GaussianBelief& input,
                                  const SigmaPointConfig& cfg) {
    if (is_point_mass(input)) {
        input.validate("unscented transform input covariance");
        cfg.check(input.dim());
        Vec y = f(input.mean());
        const Eigen::Index m = y.size();
        return {GaussianBelief(std::move(y), Mat::Zero(m, m)), Mat::Zero(input.dim(), m)};
    }
    const SigmaPoints sp = make_sigma_points(input, cfg);
    Mat images;
    for (Eigen::Index k = 0; k < sp.points.cols(); ++k) {
        Vec y = f(sp.points.col(k));
        if (k == 0) images.resize(y.size(), sp.points.cols());
        if (y.size() != images.rows()) throw ConfigError("unscented transform: map output size varies");
        images.col(k) = y;
    }
    return moments_from_images(sp, input.mean(), images, nullptr);
}

GaussianBelief unscented_transform(const VectorMap& f, const GaussianBelief& input,
                                   const SigmaPointConfig& cfg) {
    return unscented_transform_full(f, input, cfg).output;
}

UtResult propagate_probabilistic_full(const ProbabilisticMap& f, const GaussianBelief& input,
                                      const SigmaPointConfig& cfg) {
    if (is_point_mass(input)) {
        // All sigma points coincide; evaluating once avoids the cancellation
        // between the large positive and negative weights.
        input.validate("unscented transform input covariance");
        cfg.check(input.dim());
        const GaussianBelief y = f(input.mean());
        return {GaussianBelief(y.mean(), repair_psd(y.cov())), Mat::Zero(input.dim(), y.dim())};
    }
    const SigmaPoints sp = make_sigma_points(input, cfg);
    Mat images;
    Mat intrinsic;
    for (Eigen::Index k = 0; k < sp.points.cols(); ++k) {
        const GaussianBelief y = f(sp.points.col(k));
        if (k == 0) {
            images.resize(y.dim(), sp.points.cols());
            intrinsic = Mat::Zero(y.dim(), y.dim());
        }
        if (y.dim() != images.rows()) throw ConfigError("propagate: map output size varies");
        images.col(k) = y.mean();
        intrinsic.noalias() += sp.mean_weights(k) * y.cov();
    }
    return moments_from_images(sp, input.mean(), images, &intrinsic);
}

GaussianBelief propagate_probabilistic(const ProbabilisticMap& f, const GaussianBelief& input,
                                       const SigmaPointConfig& cfg) {
    return propagate_probabilistic_full(f, input, cfg).output;
}

GaussianBelief merge_weighted(std::span<const std::pair<double, GaussianBelief>> components) {
    if (components.empty()) throw ConfigError("merge_weighted: no components");
    const int d = components.front().second.dim();
    double total = 0.0;
    for (const auto& [w, g] : components) {
        if (w < 0.0 || !std::isfinite(w)) throw ConfigError("merge_weighted: negative weight");
        if (g.dim() != d) throw ConfigError(dims_message("merge_weighted", d, g.dim()));
        total += w;
    }
    if (!(total > 0.0)) throw NumericalError("merge_weighted: all weights are zero");

    Vec mean = Vec::Zero(d);
    for (const auto& [w, g] : components) mean += (w / total) * g.mean();
    Mat cov = Mat::Zero(d, d);
    for (const auto& [w, g] : components) {
        if (w == 0.0) continue;
        const Vec dm = g.mean() - mean;
        cov += (w / total) * (g.cov() + dm * dm.transpose());
    }
    return GaussianBelief(std::move(mean), repair_psd(cov));
}

double gaussian_nll(const GaussianBelief& belief, const Vec& point) {
    if (point.size() != belief.dim()) {
        throw ConfigError(dims_message("gaussian_nll", belief.dim(), point.size()));
    }
    const Mat l = robust_cholesky(belief.cov(), "density covariance");
    const Vec z = l.triangularView<Eigen::Lower>().solve(point - belief.mean());
    const double log_det = 2.0 * l.diagonal().array().log().sum();
    return 0.5 * (belief.dim() * std::log(2.0 * std::numbers::pi) + log_det + z.squaredNorm());
}

double mixture_log_density(std::span<const std::pair<double, GaussianBelief>> components,
                           const Vec& point) {
    std::vector<double> terms;
    terms.reserve(components.size());
    for (const auto& [w, g] : components) {
        if (w <= 0.0) continue;
        terms.push_back(std::log(w) - gaussian_nll(g, point));
    }
    if (terms.empty()) return -std::numeric_limits<double>::infinity();
    const double top = *std::max_element(terms.begin(), terms.end());
    double acc = 0.0;
    for (double t : terms) acc += std::exp(t - top);
    return top + std::log(acc);
}

}  // namespace hybridgp
