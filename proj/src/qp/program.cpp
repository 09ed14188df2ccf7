#include "tclgrid/qp/program.hpp"

#include <ostream>

namespace tclgrid::qp {

double ConvexProgram::objective(const Vec& x) const {
    return 0.5 * x.dot(Q * x) + c.dot(x) + obj_constant;
}

void ConvexProgram::validate() const {
    auto fail = [](const std::string& what) { throw InternalError("qp: " + what); };
    if (n < 0) fail("negative variable count");
    if (Q.rows() != n || Q.cols() != n) fail("Q dimension mismatch");
    if (c.size() != n) fail("c dimension mismatch");
    if (a_eq.rows() != b_eq.size() || (a_eq.rows() > 0 && a_eq.cols() != n))
        fail("equality system dimension mismatch");
    if (a_in.rows() != b_in.size() || (a_in.rows() > 0 && a_in.cols() != n))
        fail("inequality system dimension mismatch");
    if (lower.size() != n || upper.size() != n) fail("bounds dimension mismatch");
    if (!var_names.empty() && static_cast<int>(var_names.size()) != n)
        fail("name table size mismatch");
}

namespace {

void dump_matrix(std::ostream& os, const char* tag, const SpMat& m) {
    os << tag << " " << m.rows() << " " << m.cols() << " " << m.nonZeros() << "\n";
    for (int k = 0; k < m.outerSize(); ++k)
        for (SpMat::InnerIterator it(m, k); it; ++it)
            os << it.row() << " " << it.col() << " " << it.value() << "\n";
}

void dump_vector(std::ostream& os, const char* tag, const Vec& v) {
    os << tag << " " << v.size() << "\n";
    for (int i = 0; i < v.size(); ++i)
        if (v[i] != 0.0) os << i << " " << v[i] << "\n";
}

} // namespace

void ConvexProgram::dump_coo(std::ostream& os) const {
    os.precision(17);
    os << "# tclgrid qp dump v1\n";
    os << "n " << n << " m_eq " << num_eq() << " m_in " << num_ineq() << "\n";
    os << "obj_constant " << obj_constant << "\n";
    dump_matrix(os, "Q", Q);
    dump_vector(os, "c", c);
    dump_matrix(os, "A_eq", a_eq);
    dump_vector(os, "b_eq", b_eq);
    dump_matrix(os, "A_in", a_in);
    dump_vector(os, "b_in", b_in);
    os << "lower " << n << "\n";
    for (int i = 0; i < n; ++i)
        if (lower[i] != -kInf) os << i << " " << lower[i] << "\n";
    os << "upper " << n << "\n";
    for (int i = 0; i < n; ++i)
        if (upper[i] != kInf) os << i << " " << upper[i] << "\n";
}

int ProgramBuilder::add_variable(std::string name, double lb, double ub) {
    names_.push_back(std::move(name));
    lower_.push_back(lb);
    upper_.push_back(ub);
    c_.push_back(0.0);
    return static_cast<int>(names_.size()) - 1;
}

void ProgramBuilder::add_linear_cost(int var, double coef) {
    c_[var] += coef;
}

void ProgramBuilder::add_product_cost(int vi, int vj, double coef) {
    // objective carries 1/2 x'Qx, so x_i x_j needs Q_ij = Q_ji = coef
    // (diagonal: Q_ii = 2 coef).
    if (vi == vj) {
        q_.emplace_back(vi, vi, 2.0 * coef);
    } else {
        q_.emplace_back(vi, vj, coef);
        q_.emplace_back(vj, vi, coef);
    }
}

void ProgramBuilder::add_square_cost(const LinTerms& terms, double constant, double weight) {
    if (weight < 0.0) throw InternalError("qp: negative square-cost weight");
    if (weight == 0.0) return;
    for (const auto& [i, ai] : terms) {
        for (const auto& [j, aj] : terms) q_.emplace_back(i, j, 2.0 * weight * ai * aj);
        c_[i] += 2.0 * weight * constant * ai;
    }
    constant_ += weight * constant * constant;
}

int ProgramBuilder::add_eq(const LinTerms& terms, double rhs) {
    const int row = static_cast<int>(b_eq_.size());
    for (const auto& [v, coef] : terms) eq_.emplace_back(row, v, coef);
    b_eq_.push_back(rhs);
    return row;
}

int ProgramBuilder::add_ineq(const LinTerms& terms, double ub) {
    const int row = static_cast<int>(b_in_.size());
    for (const auto& [v, coef] : terms) in_.emplace_back(row, v, coef);
    b_in_.push_back(ub);
    return row;
}

ConvexProgram ProgramBuilder::build() const {
    ConvexProgram p;
    p.n = num_vars();
    p.Q.resize(p.n, p.n);
    p.Q.setFromTriplets(q_.begin(), q_.end());
    p.c = Eigen::Map<const Vec>(c_.data(), p.n);
    p.obj_constant = constant_;
    p.a_eq.resize(num_eq(), p.n);
    p.a_eq.setFromTriplets(eq_.begin(), eq_.end());
    p.b_eq = Eigen::Map<const Vec>(b_eq_.data(), num_eq());
    p.a_in.resize(num_ineq(), p.n);
    p.a_in.setFromTriplets(in_.begin(), in_.end());
    p.b_in = Eigen::Map<const Vec>(b_in_.data(), num_ineq());
    p.lower = Eigen::Map<const Vec>(lower_.data(), p.n);
    p.upper = Eigen::Map<const Vec>(upper_.data(), p.n);
    p.var_names = names_;
    p.validate();
    return p;
}

} // namespace tclgrid::qp
