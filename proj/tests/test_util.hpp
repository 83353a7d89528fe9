#pragma once

#include <algorithm>
#include <random>

#include "hybridgp/types.hpp"

namespace test {

using hybridgp::Mat;
using hybridgp::Vec;

inline Vec random_vec(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> nd(0.0, 1.0);
    Vec v(n);
    for (int i = 0; i < n; ++i) v(i) = nd(rng);
    return v;
}

inline Mat random_mat(int r, int c, std::mt19937_64& rng) {
    std::normal_distribution<double> nd(0.0, 1.0);
    Mat m(r, c);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) m(i, j) = nd(rng);
    return m;
}

/// Well-conditioned random SPD matrix.
inline Mat random_spd(int n, std::mt19937_64& rng) {
    const Mat a = random_mat(n, n, rng);
    return a * a.transpose() / n + Mat::Identity(n, n) * 0.1;
}

template <class A, class B>
double rel_err(const A& got, const B& want) {
    const double scale = std::max(1.0, want.cwiseAbs().maxCoeff());
    if (got.size() == 0) return 0.0;
    return (got - want).cwiseAbs().maxCoeff() / scale;
}

}  // namespace test
