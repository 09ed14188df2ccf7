#pragma once

#include "tclgrid/common.hpp"

#include <iosfwd>
#include <utility>
#include <vector>

namespace tclgrid::qp {

/// Sparse convex quadratic program
///
///   min  1/2 x'Qx + c'x + obj_constant
///   s.t. a_eq x  = b_eq
///        a_in x <= b_in
///        lower <= x <= upper     (entries may be +-inf)
///
/// Q is stored full-symmetric. Programs are immutable once built; use
/// ProgramBuilder to assemble one.
struct ConvexProgram {
    int n = 0;
    SpMat Q;
    Vec c;
    double obj_constant = 0.0;
    SpMat a_eq;
    Vec b_eq;
    SpMat a_in;
    Vec b_in;
    Vec lower;
    Vec upper;
    std::vector<std::string> var_names;

    int num_eq() const { return static_cast<int>(b_eq.size()); }
    int num_ineq() const { return static_cast<int>(b_in.size()); }

    double objective(const Vec& x) const;

    /// Throws InternalError on dimension inconsistencies.
    void validate() const;

    /// Text dump: COO triplets per matrix, one file. Used for cross-checking
    /// against external solvers.
    void dump_coo(std::ostream& os) const;
};

using LinTerm = std::pair<int, double>;
using LinTerms = std::vector<LinTerm>;

class ProgramBuilder {
  public:
    int add_variable(std::string name, double lb = -kInf, double ub = kInf);
    int num_vars() const { return static_cast<int>(names_.size()); }
    const std::string& name(int var) const { return names_[var]; }

    void set_lower(int var, double lb) { lower_[var] = lb; }
    void set_upper(int var, double ub) { upper_[var] = ub; }

    void add_constant_cost(double v) { constant_ += v; }
    void add_linear_cost(int var, double coef);
    /// Adds coef * x_i * x_j to the objective (i == j allowed).
    void add_product_cost(int vi, int vj, double coef);
    /// Adds weight * (terms'x + constant)^2, weight >= 0. PSD by construction.
    void add_square_cost(const LinTerms& terms, double constant, double weight);

    /// terms'x = rhs
    int add_eq(const LinTerms& terms, double rhs);
    /// terms'x <= ub
    int add_ineq(const LinTerms& terms, double ub);

    int num_eq() const { return static_cast<int>(b_eq_.size()); }
    int num_ineq() const { return static_cast<int>(b_in_.size()); }

    ConvexProgram build() const;

  private:
    std::vector<std::string> names_;
    std::vector<double> lower_, upper_;
    std::vector<Triplet> q_;  // stored as 1/2 x'Qx contributions
    std::vector<double> c_;
    double constant_ = 0.0;
    std::vector<Triplet> eq_, in_;
    std::vector<double> b_eq_, b_in_;
};

} // namespace tclgrid::qp
