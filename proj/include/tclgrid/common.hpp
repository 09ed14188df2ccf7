#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <stdexcept>
#include <string>

namespace tclgrid {

inline constexpr const char* kVersion = "0.1.0";

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Input could not be parsed or fails basic validation (CLI exit code 2).
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Problem is well-formed but has no solution, or an iteration failed to
/// converge (CLI exit code 3).
struct InfeasibleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Internal invariant broken (CLI exit code 4).
struct InternalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace tclgrid
