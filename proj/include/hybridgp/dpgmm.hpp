#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hybridgp/gaussian.hpp"

namespace hybridgp {

struct DpgmmConfig {
    int k_max = 10;
    double alpha_concentration = 0.1;
    int max_iter = 500;
    double tol = 1e-6;
    double min_cluster_weight = 0.02;
    /// Seeded k-means++ starts; the run with the highest evidence lower
    /// bound wins. A single-component start is always tried as well.
    int n_init = 3;
    std::uint64_t seed = 0;

    void check() const;
};

struct DpgmmComponent {
    double weight = 0.0;  // responsibility mass fraction among survivors
    GaussianBelief belief;  // posterior mean and expected covariance
};

struct DpgmmResult {
    std::vector<int> labels;  // per input row, 0..k-1 in order of first appearance
    int k = 0;
    std::vector<DpgmmComponent> components;
    bool converged = false;
    int iterations = 0;
    double elbo = 0.0;  // of the selected run, before pruning
    std::vector<std::string> warnings;
};

/// Variational Dirichlet-process Gaussian mixture with truncated
/// stick-breaking weights and Normal-inverse-Wishart components
/// (mean prior = data mean, scale prior = data covariance, dof = d + 2),
/// initialized from seeded k-means++ plus one single-component start, keeping
/// the run with the best evidence lower bound. Components whose responsibility mass
/// fraction is below cfg.min_cluster_weight, or that end up with fewer than
/// two points, are pruned and their points reassigned.
DpgmmResult fit_dpgmm(const Mat& points, const DpgmmConfig& cfg);

}  // namespace hybridgp
