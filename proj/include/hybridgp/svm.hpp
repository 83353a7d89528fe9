#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "hybridgp/types.hpp"

namespace hybridgp {

struct SvmParams {
    double c = 1.0;
    double gamma = 1.0;  // RBF: exp(-gamma |a - b|^2)
};

Mat rbf_gram(const Mat& rows, double gamma);

/// Dual solution of one binary C-SVC: f(x) = sum_i coef_i K(x_i, x) - rho.
struct BinarySvmSolution {
    Vec coef;  // y_i alpha_i, aligned with the subset passed in
    double rho = 0.0;
    int iterations = 0;
};

/// SMO with second-order working-set selection on a precomputed Gram
/// matrix restricted to `subset`; y holds +1/-1 per subset entry.
BinarySvmSolution solve_binary_svm(const Mat& gram, std::span<const int> subset, std::span<const int> y,
                                   double c, double eps = 1e-3, long max_iter = 2000000);

/// One-vs-one RBF classifier; votes are tallied and ties go to the smallest class.
class MulticlassSvm {
public:
    MulticlassSvm() = default;
    MulticlassSvm(std::vector<int> classes, double gamma, Mat support_vectors, Mat coef, Vec rho);

    static MulticlassSvm train(const Mat& rows, const std::vector<int>& labels, const SvmParams& p);
    /// Same, reusing a Gram matrix over all rows and training on `subset` only.
    static MulticlassSvm train(const Mat& rows, const std::vector<int>& labels, const SvmParams& p,
                               const Mat& gram, std::span<const int> subset);

    int predict(const Vec& x) const;

    const std::vector<int>& classes() const { return classes_; }
    double gamma() const { return gamma_; }
    const Mat& support_vectors() const { return sv_; }
    const Mat& coef() const { return coef_; }  // n_sv x n_pairs
    const Vec& rho() const { return rho_; }
    std::vector<std::pair<int, int>> class_pairs() const;

private:
    std::vector<int> classes_;
    double gamma_ = 1.0;
    Mat sv_;
    Mat coef_;
    Vec rho_;
};

struct GridSearchResult {
    SvmParams best;
    double cv_accuracy = 0.0;
    std::vector<std::pair<SvmParams, double>> table;
};

/// k-fold cross-validated accuracy over the C x gamma grid; ties keep the
/// earliest grid entry (C outer, gamma inner).
GridSearchResult grid_search(const Mat& rows, const std::vector<int>& labels, std::span<const double> cs,
                             std::span<const double> gammas, int folds, std::uint64_t seed);

}  // namespace hybridgp
