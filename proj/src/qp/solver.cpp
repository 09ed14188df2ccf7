#include "tclgrid/qp/solver.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>

namespace tclgrid::qp {

const char* to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::kOptimal: return "OPTIMAL";
        case SolveStatus::kInfeasible: return "INFEASIBLE";
        case SolveStatus::kUnbounded: return "UNBOUNDED";
        case SolveStatus::kMaxIter: return "MAX_ITER";
    }
    return "?";
}

namespace {

constexpr double kStaticReg = 1e-9;

// Canonical inequality system G x <= h: user rows first, then finite upper
// bounds, then finite lower bounds (as -x <= -l). Row order is fixed so solves
// are reproducible and duals can be split back.
struct Canonical {
    SpMat g;
    Vec h;
    int m_user = 0;
    std::vector<int> upper_vars; // variable owning each upper-bound row
    std::vector<int> lower_vars;
};

Canonical canonicalize(const ConvexProgram& p) {
    Canonical c;
    c.m_user = p.num_ineq();
    for (int i = 0; i < p.n; ++i)
        if (p.upper[i] < kInf) c.upper_vars.push_back(i);
    for (int i = 0; i < p.n; ++i)
        if (p.lower[i] > -kInf) c.lower_vars.push_back(i);

    const int m = c.m_user + static_cast<int>(c.upper_vars.size() + c.lower_vars.size());
    std::vector<Triplet> t;
    t.reserve(p.a_in.nonZeros() + c.upper_vars.size() + c.lower_vars.size());
    for (int k = 0; k < p.a_in.outerSize(); ++k)
        for (SpMat::InnerIterator it(p.a_in, k); it; ++it)
            t.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
    c.h.resize(m);
    c.h.head(c.m_user) = p.b_in;
    int row = c.m_user;
    for (int v : c.upper_vars) {
        t.emplace_back(row, v, 1.0);
        c.h[row++] = p.upper[v];
    }
    for (int v : c.lower_vars) {
        t.emplace_back(row, v, -1.0);
        c.h[row++] = -p.lower[v];
    }
    c.g.resize(m, p.n);
    c.g.setFromTriplets(t.begin(), t.end());
    return c;
}

void split_ineq_duals(const ConvexProgram& p, const Canonical& c, const Vec& z, Solution& sol) {
    sol.ineq_duals = z.head(c.m_user);
    sol.upper_duals = Vec::Zero(p.n);
    sol.lower_duals = Vec::Zero(p.n);
    int row = c.m_user;
    for (int v : c.upper_vars) sol.upper_duals[v] = z[row++];
    for (int v : c.lower_vars) sol.lower_duals[v] = z[row++];
}

// KKT system assembler for
//   [ Q + dp I     A'        G'      ] [dx]
//   [ A          -dd I       0       ] [dy]
//   [ G            0     -(S/Z)-dd I ] [dz]
// The (3,3) diagonal changes each iteration; the rest is fixed.
class KktSystem {
  public:
    KktSystem(const SpMat& q, const SpMat& a, const SpMat& g, double reg)
        : n_(static_cast<int>(q.rows())), me_(static_cast<int>(a.rows())),
          mi_(static_cast<int>(g.rows())), reg_(reg) {
        const int dim = n_ + me_ + mi_;
        base_.reserve(q.nonZeros() + 2 * a.nonZeros() + 2 * g.nonZeros() + dim);
        for (int k = 0; k < q.outerSize(); ++k)
            for (SpMat::InnerIterator it(q, k); it; ++it)
                base_.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()),
                                   it.value());
        for (int i = 0; i < n_; ++i) base_.emplace_back(i, i, reg_);
        for (int k = 0; k < a.outerSize(); ++k)
            for (SpMat::InnerIterator it(a, k); it; ++it) {
                const int r = n_ + static_cast<int>(it.row());
                const int col = static_cast<int>(it.col());
                base_.emplace_back(r, col, it.value());
                base_.emplace_back(col, r, it.value());
            }
        for (int i = 0; i < me_; ++i) base_.emplace_back(n_ + i, n_ + i, -reg_);
        for (int k = 0; k < g.outerSize(); ++k)
            for (SpMat::InnerIterator it(g, k); it; ++it) {
                const int r = n_ + me_ + static_cast<int>(it.row());
                const int col = static_cast<int>(it.col());
                base_.emplace_back(r, col, it.value());
                base_.emplace_back(col, r, it.value());
            }
        kkt_.resize(dim, dim);
    }

    // diag33: values for the (3,3) block diagonal, already negative.
    bool factorize(const Vec& diag33) {
        std::vector<Triplet> t = base_;
        for (int i = 0; i < mi_; ++i)
            t.emplace_back(n_ + me_ + i, n_ + me_ + i, diag33[i] - reg_);
        kkt_.setFromTriplets(t.begin(), t.end());
        if (!analyzed_) {
            ldlt_.analyzePattern(kkt_);
            analyzed_ = true;
        }
        ldlt_.factorize(kkt_);
        return ldlt_.info() == Eigen::Success;
    }

    // Solve with one round of iterative refinement against the factored
    // matrix (cleans up the static regularization bias on the solution).
    Vec solve(const Vec& rhs) const {
        Vec sol = ldlt_.solve(rhs);
        Vec resid = rhs - kkt_.selfadjointView<Eigen::Lower>() * sol;
        sol += ldlt_.solve(resid);
        return sol;
    }

  private:
    int n_, me_, mi_;
    double reg_;
    std::vector<Triplet> base_;
    SpMat kkt_;
    Eigen::SimplicialLDLT<SpMat, Eigen::Lower> ldlt_;
    bool analyzed_ = false;
};

double max_step(const Vec& v, const Vec& dv) {
    double a = 1.0;
    for (int i = 0; i < v.size(); ++i)
        if (dv[i] < 0.0) a = std::min(a, -v[i] / dv[i]);
    return a;
}

Vec shift_positive(const Vec& v) {
    if (v.size() == 0) return v;
    const double m = v.minCoeff();
    if (m > 0.0) return v;
    return v.array() + (1.0 + std::abs(m));
}

// Equality-constrained (or unconstrained) QP: a single regularized KKT solve
// with refinement. Also classifies inconsistent/unbounded cases.
Solution solve_equality_qp(const ConvexProgram& p, const SolverConfig& cfg) {
    const int n = p.n, me = p.num_eq();
    std::vector<Triplet> t;
    for (int k = 0; k < p.Q.outerSize(); ++k)
        for (SpMat::InnerIterator it(p.Q, k); it; ++it)
            t.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
    for (int i = 0; i < n; ++i) t.emplace_back(i, i, kStaticReg);
    for (int k = 0; k < p.a_eq.outerSize(); ++k)
        for (SpMat::InnerIterator it(p.a_eq, k); it; ++it) {
            const int r = n + static_cast<int>(it.row());
            t.emplace_back(r, static_cast<int>(it.col()), it.value());
            t.emplace_back(static_cast<int>(it.col()), r, it.value());
        }
    for (int i = 0; i < me; ++i) t.emplace_back(n + i, n + i, -kStaticReg);
    SpMat kkt(n + me, n + me);
    kkt.setFromTriplets(t.begin(), t.end());

    Eigen::SimplicialLDLT<SpMat, Eigen::Lower> ldlt(kkt);
    Solution sol;
    if (ldlt.info() != Eigen::Success) {
        sol.status = SolveStatus::kMaxIter;
        return sol;
    }
    Vec rhs(n + me);
    rhs.head(n) = -p.c;
    rhs.tail(me) = p.b_eq;
    Vec v = ldlt.solve(rhs);
    for (int r = 0; r < 20; ++r) {
        Vec resid = rhs - kkt.selfadjointView<Eigen::Lower>() * v;
        if (resid.lpNorm<Eigen::Infinity>() < 1e-14) break;
        v += ldlt.solve(resid);
    }
    sol.x = v.head(n);
    sol.eq_duals = v.tail(me);
    sol.ineq_duals.resize(0);
    sol.lower_duals = Vec::Zero(n);
    sol.upper_duals = Vec::Zero(n);
    sol.objective = p.objective(sol.x);
    sol.dual_objective = sol.objective;
    sol.iterations = 1;

    const double scale = std::max({1.0, p.c.lpNorm<Eigen::Infinity>(),
                                   me ? p.b_eq.lpNorm<Eigen::Infinity>() : 0.0});
    const Vec r_eq = me ? Vec(p.a_eq * sol.x - p.b_eq) : Vec();
    const Vec r_st = p.Q * sol.x + p.c +
                     (me ? Vec(p.a_eq.transpose() * sol.eq_duals) : Vec::Zero(n));
    const double tol = std::max(cfg.tol, 1e3 * kStaticReg) * scale;
    if (me && r_eq.lpNorm<Eigen::Infinity>() > tol)
        sol.status = SolveStatus::kInfeasible;
    else if (r_st.lpNorm<Eigen::Infinity>() > tol)
        sol.status = SolveStatus::kUnbounded;
    else
        sol.status = SolveStatus::kOptimal;
    return sol;
}

} // namespace

Solution solve(const ConvexProgram& p, const SolverConfig& cfg) {
    p.validate();

    // Inconsistent box bounds never reach the iteration.
    for (int i = 0; i < p.n; ++i)
        if (p.lower[i] > p.upper[i] + cfg.tol) {
            Solution sol;
            sol.status = SolveStatus::kInfeasible;
            sol.x = Vec::Zero(p.n);
            sol.farkas_upper = Vec::Zero(p.n);
            sol.farkas_lower = Vec::Zero(p.n);
            sol.farkas_upper[i] = 1.0; // x_i <= u_i and -x_i <= -l_i sum to u_i - l_i < 0
            sol.farkas_lower[i] = 1.0;
            sol.farkas_eq = Vec::Zero(p.num_eq());
            sol.farkas_in = Vec::Zero(p.num_ineq());
            sol.farkas_residual = 0.0;
            return sol;
        }

    const Canonical can = canonicalize(p);
    const int n = p.n, me = p.num_eq(), mi = static_cast<int>(can.h.size());

    if (mi == 0) return solve_equality_qp(p, cfg);

    KktSystem kkt(p.Q, p.a_eq, can.g, kStaticReg);

    // Starting point: one KKT solve with unit (3,3) block, then shift the
    // slack/dual pair strictly positive.
    Vec x, y, s, z;
    {
        if (!kkt.factorize(Vec::Constant(mi, -1.0)))
            throw InternalError("qp: initial KKT factorization failed");
        Vec rhs(n + me + mi);
        rhs.head(n) = -p.c;
        rhs.segment(n, me) = p.b_eq;
        rhs.tail(mi) = can.h;
        Vec v = kkt.solve(rhs);
        x = v.head(n);
        y = v.segment(n, me);
        Vec z_raw = v.tail(mi);
        s = shift_positive(-z_raw);
        z = shift_positive(z_raw);
    }

    const double scale_d = std::max(1.0, p.c.lpNorm<Eigen::Infinity>());
    const double scale_pe = std::max(1.0, me ? p.b_eq.lpNorm<Eigen::Infinity>() : 0.0);
    const double scale_pi = std::max(1.0, can.h.lpNorm<Eigen::Infinity>());

    Solution sol;
    sol.status = SolveStatus::kMaxIter;
    auto finish = [&](SolveStatus st, int iters) {
        sol.status = st;
        sol.x = x;
        sol.eq_duals = y;
        split_ineq_duals(p, can, z, sol);
        sol.objective = p.objective(x);
        sol.gap = s.dot(z);
        sol.dual_objective = sol.objective + (me ? y.dot(p.a_eq * x - p.b_eq) : 0.0) +
                             z.dot(can.g * x - can.h);
        sol.iterations = iters;
    };

    for (int iter = 0; iter < cfg.max_iter; ++iter) {
        const Vec r_d = p.Q * x + p.c + p.a_eq.transpose() * y + can.g.transpose() * z;
        const Vec r_p = p.a_eq * x - p.b_eq;
        const Vec r_g = can.g * x + s - can.h;
        const double mu = s.dot(z) / mi;
        const double obj = p.objective(x);

        const bool conv_d = r_d.lpNorm<Eigen::Infinity>() <= cfg.tol * scale_d;
        const bool conv_p = me == 0 || r_p.lpNorm<Eigen::Infinity>() <= cfg.tol * scale_pe;
        const bool conv_g = r_g.lpNorm<Eigen::Infinity>() <= cfg.tol * scale_pi;
        const bool conv_mu = s.dot(z) <= cfg.tol * std::max(1.0, std::abs(obj));
        if (conv_d && conv_p && conv_g && conv_mu) {
            finish(SolveStatus::kOptimal, iter);
            return sol;
        }

        // A valid Farkas certificate proves primal infeasibility outright.
        {
            const double nrm =
                std::max(me ? y.lpNorm<Eigen::Infinity>() : 0.0, z.lpNorm<Eigen::Infinity>());
            if (nrm > 1.0) {
                const Vec yc = y / nrm, zc = z / nrm;
                const double res =
                    (p.a_eq.transpose() * yc + can.g.transpose() * zc).lpNorm<Eigen::Infinity>();
                const double gain = (me ? p.b_eq.dot(yc) : 0.0) + can.h.dot(zc);
                if (res <= 1e-8 && gain < -1e-8) {
                    finish(SolveStatus::kInfeasible, iter);
                    sol.farkas_eq = yc;
                    sol.farkas_in = zc.head(can.m_user);
                    sol.farkas_upper = Vec::Zero(p.n);
                    sol.farkas_lower = Vec::Zero(p.n);
                    int row = can.m_user;
                    for (int v : can.upper_vars) sol.farkas_upper[v] = zc[row++];
                    for (int v : can.lower_vars) sol.farkas_lower[v] = zc[row++];
                    sol.farkas_residual = res;
                    return sol;
                }
            }
        }

        // Divergence along a feasible descent ray means the problem is
        // unbounded below.
        if (x.lpNorm<Eigen::Infinity>() > 1e10) {
            const Vec d = x / x.lpNorm<Eigen::Infinity>();
            const bool flat = (p.Q * d).lpNorm<Eigen::Infinity>() <= 1e-6 &&
                              (me == 0 || (p.a_eq * d).lpNorm<Eigen::Infinity>() <= 1e-6) &&
                              (can.g * d).maxCoeff() <= 1e-6;
            if (flat && p.c.dot(d) < -1e-10) {
                finish(SolveStatus::kUnbounded, iter);
                return sol;
            }
        }

        // Factor with the current barrier diagonal; on numerical failure
        // retry with a larger shift.
        Vec diag33 = -(s.array() / z.array());
        bool ok = kkt.factorize(diag33);
        for (double bump = 1e-7; !ok && bump <= 1e-3; bump *= 100.0)
            ok = kkt.factorize(diag33.array() - bump);
        if (!ok) {
            finish(SolveStatus::kMaxIter, iter);
            return sol;
        }

        // Affine predictor.
        Vec rhs(n + me + mi);
        rhs.head(n) = -r_d;
        rhs.segment(n, me) = -r_p;
        rhs.tail(mi) = -r_g + s;
        Vec v = kkt.solve(rhs);
        const Vec dx_a = v.head(n);
        const Vec dz_a = v.tail(mi);
        const Vec ds_a = -s - (s.array() / z.array()).matrix().cwiseProduct(dz_a);

        const double ap_a = max_step(s, ds_a);
        const double ad_a = max_step(z, dz_a);
        const double mu_aff = (s + ap_a * ds_a).dot(z + ad_a * dz_a) / mi;
        double sigma = std::pow(mu_aff / mu, 3);
        sigma = std::clamp(sigma, 0.0, 1.0);

        // Corrector with centering.
        rhs.tail(mi) = -r_g + s - (sigma * mu / z.array()).matrix() +
                       (ds_a.array() * dz_a.array() / z.array()).matrix();
        v = kkt.solve(rhs);
        const Vec dx = v.head(n);
        const Vec dy = v.segment(n, me);
        const Vec dz = v.tail(mi);
        const Vec ds = -s + (sigma * mu / z.array()).matrix() -
                       (ds_a.array() * dz_a.array() / z.array()).matrix() -
                       (s.array() / z.array()).matrix().cwiseProduct(dz);

        const double tau = 0.995;
        const double ap = std::min(1.0, tau * max_step(s, ds));
        const double ad = std::min(1.0, tau * max_step(z, dz));
        x += ap * dx;
        s += ap * ds;
        y += ad * dy;
        z += ad * dz;
    }

    finish(SolveStatus::kMaxIter, cfg.max_iter);
    return sol;
}

double KktReport::max_residual() const {
    return std::max({stationarity, primal_eq, primal_ineq, bounds, complementarity});
}

KktReport verify_kkt(const ConvexProgram& p, const Solution& sol, double tol) {
    KktReport r;
    r.tol = tol;
    const Vec& x = sol.x;

    Vec stat = p.Q * x + p.c;
    if (p.num_eq()) stat += p.a_eq.transpose() * sol.eq_duals;
    if (p.num_ineq()) stat += p.a_in.transpose() * sol.ineq_duals;
    stat += sol.upper_duals - sol.lower_duals;
    r.stationarity = stat.lpNorm<Eigen::Infinity>();

    r.primal_eq = p.num_eq() ? (p.a_eq * x - p.b_eq).lpNorm<Eigen::Infinity>() : 0.0;
    if (p.num_ineq()) {
        const Vec viol = (p.a_in * x - p.b_in).cwiseMax(0.0);
        r.primal_ineq = viol.lpNorm<Eigen::Infinity>();
    }

    double bv = 0.0, comp = 0.0;
    for (int i = 0; i < p.n; ++i) {
        if (p.lower[i] > -kInf) {
            bv = std::max(bv, p.lower[i] - x[i]);
            comp = std::max(comp, std::abs(sol.lower_duals[i] * (x[i] - p.lower[i])));
        }
        if (p.upper[i] < kInf) {
            bv = std::max(bv, x[i] - p.upper[i]);
            comp = std::max(comp, std::abs(sol.upper_duals[i] * (p.upper[i] - x[i])));
        }
    }
    for (int i = 0; i < p.num_ineq(); ++i) {
        const double slack = p.b_in[i] - p.a_in.row(i).dot(x);
        comp = std::max(comp, std::abs(sol.ineq_duals[i] * slack));
    }
    r.bounds = bv;
    r.complementarity = comp;
    r.passed = r.max_residual() <= tol;
    return r;
}

} // namespace tclgrid::qp
