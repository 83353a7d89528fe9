#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace hybridgp {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Numerical breakdown: Cholesky failure, non-PSD input, weight collapse.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Inconsistent arguments: dimension mismatch, unknown mode, bad config value.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// File or format problems (missing file, bad schema, unknown version).
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace hybridgp
