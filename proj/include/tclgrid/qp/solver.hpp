#pragma once

#include "tclgrid/qp/program.hpp"

namespace tclgrid::qp {

enum class SolveStatus { kOptimal, kInfeasible, kUnbounded, kMaxIter };

const char* to_string(SolveStatus s);

struct SolverConfig {
    double tol = 1e-8;
    int max_iter = 100;
};

struct Solution {
    SolveStatus status = SolveStatus::kMaxIter;
    Vec x;
    Vec eq_duals;    // y  (free sign; stationarity uses Q x + c + a_eq'y + a_in'z ...)
    Vec ineq_duals;  // z >= 0 for a_in rows
    Vec lower_duals; // >= 0, zero where the bound is -inf
    Vec upper_duals; // >= 0, zero where the bound is +inf
    double objective = 0.0;
    double dual_objective = 0.0;
    double gap = 0.0;
    int iterations = 0;

    // Farkas-type certificate when status == kInfeasible: multipliers
    // (y, z, zu, zl) with z,zu,zl >= 0 proving the constraint system empty.
    Vec farkas_eq, farkas_in, farkas_upper, farkas_lower;
    double farkas_residual = kInf;
};

/// Primal-dual interior-point solve (Mehrotra predictor-corrector) with a
/// sparse quasi-definite KKT factorization and static regularization.
/// Deterministic: identical inputs and config produce identical iterates.
Solution solve(const ConvexProgram& program, const SolverConfig& config = {});

struct KktReport {
    double stationarity = 0.0;   // ||Qx + c + A_eq'y + A_in'z + zu - zl||_inf
    double primal_eq = 0.0;      // ||A_eq x - b_eq||_inf
    double primal_ineq = 0.0;    // max violation of A_in x <= b_in
    double bounds = 0.0;         // max bound violation
    double complementarity = 0.0;// max |dual * slack| over all pairs
    double tol = 0.0;
    bool passed = false;

    double max_residual() const;
};

KktReport verify_kkt(const ConvexProgram& program, const Solution& sol, double tol);

} // namespace tclgrid::qp
