#include "netalloc/gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "netalloc/errors.hpp"

namespace netalloc {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

Monomial& Monomial::mul(VarId v, double e) {
    auto it = std::lower_bound(exponents.begin(), exponents.end(), v,
                               [](const auto& p, VarId id) { return p.first < id; });
    if (it != exponents.end() && it->first == v) {
        it->second += e;
        if (it->second == 0.0) exponents.erase(it);
    } else {
        exponents.insert(it, {v, e});
    }
    return *this;
}

double Monomial::eval(const Eigen::VectorXd& x) const {
    double v = coeff;
    for (const auto& [var, e] : exponents) v *= std::pow(x(var), e);
    return v;
}

Posynomial& Posynomial::operator+=(const Posynomial& p) {
    terms.insert(terms.end(), p.terms.begin(), p.terms.end());
    return *this;
}

double Posynomial::eval(const Eigen::VectorXd& x) const {
    double s = 0.0;
    for (const Monomial& m : terms) s += m.eval(x);
    return s;
}

double eval(const Posynomial& p, const Eigen::VectorXd& x) {
    if (p.empty()) throw InputError("eval: posynomial has no terms");
    if ((x.array() <= 0.0).any())
        throw InputError("eval: posynomial argument must be strictly positive");
    for (const Monomial& m : p.terms)
        if (!(m.coeff > 0.0))
            throw InputError("eval: monomial coefficients must be positive");
    return p.eval(x);
}

double LogSumExpFn::eval(const Eigen::VectorXd& y, Eigen::VectorXd* grad,
                         Eigen::MatrixXd* hess) const {
    Eigen::VectorXd z = a * y + b;
    double zmax = z.maxCoeff();
    Eigen::VectorXd w = (z.array() - zmax).exp();
    double s = w.sum();
    double val = zmax + std::log(s);
    if (grad || hess) {
        w /= s;  // softmax weights
        if (grad) grad->noalias() = a.transpose() * w;
        if (hess) {
            Eigen::VectorXd aw = a.transpose() * w;
            hess->noalias() = a.transpose() * w.asDiagonal() * a;
            hess->noalias() -= aw * aw.transpose();
        }
    }
    return val;
}

VarId GpProblem::add_variable(std::string name) {
    VarId id = static_cast<VarId>(names_.size());
    if (name.empty()) name = "x" + std::to_string(id);
    names_.push_back(std::move(name));
    bounds_.push_back({0.0, kInf});
    return id;
}

void GpProblem::set_objective(Posynomial p, double constant_offset) {
    objective_ = std::move(p);
    offset_ = constant_offset;
}

void GpProblem::add_ineq_constraint(Posynomial p) {
    if (p.empty()) throw InputError("add_ineq_constraint: empty posynomial");
    ineqs_.push_back(std::move(p));
}

void GpProblem::add_eq_constraint(Monomial m) {
    if (!(m.coeff > 0.0))
        throw InputError("add_eq_constraint: monomial coefficient must be positive");
    eqs_.push_back(std::move(m));
}

void GpProblem::set_bounds(VarId v, double lo, double hi) {
    if (!(lo > 0.0) || !(hi >= lo))
        throw InputError("set_bounds: need 0 < lo <= hi for variable " + names_[v]);
    bounds_[v] = {lo, hi};
}

std::vector<Posynomial> GpProblem::compiled_inequalities() const {
    std::vector<Posynomial> out = ineqs_;
    for (VarId v = 0; v < variable_count(); ++v) {
        auto [lo, hi] = bounds_[v];
        if (lo > 0.0) {
            Monomial m(lo);
            m.mul(v, -1.0);  // lo / x <= 1
            out.push_back(Posynomial{m});
        }
        if (hi < kInf) {
            Monomial m(1.0 / hi);
            m.mul(v, 1.0);  // x / hi <= 1
            out.push_back(Posynomial{m});
        }
    }
    return out;
}

namespace {

LogSumExpFn to_lse(const Posynomial& p, int n_vars) {
    LogSumExpFn f;
    const int k = static_cast<int>(p.terms.size());
    f.a = Eigen::MatrixXd::Zero(k, n_vars);
    f.b.resize(k);
    for (int t = 0; t < k; ++t) {
        const Monomial& m = p.terms[t];
        if (!(m.coeff > 0.0))
            throw InputError("log_transform: monomial coefficient must be positive");
        for (const auto& [v, e] : m.exponents) f.a(t, v) = e;
        f.b(t) = std::log(m.coeff);
    }
    return f;
}

}  // namespace

LogConvexProgram log_transform(const GpProblem& p) {
    const int n = p.variable_count();
    if (n == 0) throw InputError("log_transform: problem has no variables");
    if (p.objective().empty())
        throw InputError("log_transform: objective is empty");

    LogConvexProgram cp;
    cp.objective = to_lse(p.objective(), n);
    for (const Posynomial& q : p.compiled_inequalities())
        cp.ineqs.push_back(to_lse(q, n));

    const auto& eqs = p.eq_constraints();
    cp.a_eq = Eigen::MatrixXd::Zero(static_cast<int>(eqs.size()), n);
    cp.b_eq.resize(static_cast<int>(eqs.size()));
    for (size_t i = 0; i < eqs.size(); ++i) {
        for (const auto& [v, e] : eqs[i].exponents) cp.a_eq(static_cast<int>(i), v) = e;
        cp.b_eq(static_cast<int>(i)) = -std::log(eqs[i].coeff);
    }
    return cp;
}

namespace {

struct IpmResult {
    Eigen::VectorXd y;
    SolveStatus status = SolveStatus::max_iter;
    double kkt_residual = 0.0;
    double gap = 0.0;
    int iterations = 0;
};

struct IpmWork {
    std::vector<Eigen::VectorXd> grads;
    Eigen::VectorXd fvals;
};

// Values and gradients of all inequality functions at y; returns false if
// any constraint is not strictly satisfied.
bool eval_ineqs(const LogConvexProgram& cp, const Eigen::VectorXd& y,
                IpmWork& w, bool with_grad) {
    const int m = static_cast<int>(cp.ineqs.size());
    w.fvals.resize(m);
    if (with_grad) w.grads.resize(m);
    bool strict = true;
    for (int i = 0; i < m; ++i) {
        if (with_grad) {
            w.grads[i].resize(y.size());
            w.fvals(i) = cp.ineqs[i].eval(y, &w.grads[i]);
        } else {
            w.fvals(i) = cp.ineqs[i].eval(y);
        }
        if (!(w.fvals(i) < 0.0)) strict = false;
    }
    return strict;
}

// Infeasible-start primal-dual interior-point method on the transformed
// program (Boyd & Vandenberghe, section 11.7). Iterates keep F_i(y) < 0
// strictly; equality residuals are driven to zero by the Newton step.
// Each centering step targets a surrogate-gap reduction by 1/mu (0.2).
IpmResult ipm_solve(const LogConvexProgram& cp, const Eigen::VectorXd& y0,
                    const SolveOptions& opts,
                    double stop_when_objective_below = -kInf) {
    const int n = static_cast<int>(y0.size());
    const int m = static_cast<int>(cp.ineqs.size());
    const int p = static_cast<int>(cp.a_eq.rows());

    IpmResult res;
    res.y = y0;

    Eigen::VectorXd y = y0;
    Eigen::VectorXd lam = Eigen::VectorXd::Ones(m);
    Eigen::VectorXd nu = Eigen::VectorXd::Zero(p);

    IpmWork w;
    if (m > 0 && !eval_ineqs(cp, y, w, false))
        throw InputError("ipm_solve: start point is not strictly feasible");
    if (m > 0) lam = (-w.fvals.array()).inverse().matrix();  // center-ish start

    Eigen::VectorXd g0(n), gi(n);
    Eigen::MatrixXd h0(n, n), hi(n, n);

    auto residual_norm = [&](const Eigen::VectorXd& yv, const Eigen::VectorXd& lv,
                             const Eigen::VectorXd& nv, double t,
                             Eigen::VectorXd* r_dual_out = nullptr,
                             double* r_pri_inf = nullptr) {
        Eigen::VectorXd grad(n);
        cp.objective.eval(yv, &grad);
        Eigen::VectorXd r_dual = grad;
        IpmWork wl;
        eval_ineqs(cp, yv, wl, true);
        for (int i = 0; i < m; ++i) r_dual += lv(i) * wl.grads[i];
        if (p > 0) r_dual += cp.a_eq.transpose() * nv;
        double sq = r_dual.squaredNorm();
        for (int i = 0; i < m; ++i) {
            double rc = -lv(i) * wl.fvals(i) - 1.0 / t;
            sq += rc * rc;
        }
        double rp = 0.0;
        if (p > 0) {
            Eigen::VectorXd r_pri = cp.a_eq * yv - cp.b_eq;
            sq += r_pri.squaredNorm();
            rp = r_pri.lpNorm<Eigen::Infinity>();
        }
        if (r_dual_out) *r_dual_out = r_dual;
        if (r_pri_inf) *r_pri_inf = rp;
        return std::sqrt(sq);
    };

    for (int iter = 0; iter < opts.max_iter; ++iter) {
        eval_ineqs(cp, y, w, true);

        double eta = m > 0 ? -w.fvals.dot(lam) : 0.0;
        double t = m > 0 ? opts.mu * m / eta : 1.0;

        // Assemble H_pd and the dual residual.
        double f0 = cp.objective.eval(y, &g0, &h0);
        (void)f0;
        Eigen::MatrixXd h = h0;
        Eigen::VectorXd r_dual = g0;
        for (int i = 0; i < m; ++i) {
            cp.ineqs[i].eval(y, &gi, &hi);
            h += lam(i) * hi;
            h += (lam(i) / (-w.fvals(i))) * (w.grads[i] * w.grads[i].transpose());
            r_dual += lam(i) * w.grads[i];
        }
        if (p > 0) r_dual += cp.a_eq.transpose() * nu;

        Eigen::VectorXd r_pri =
            p > 0 ? (cp.a_eq * y - cp.b_eq).eval() : Eigen::VectorXd();

        double gap_ok = m > 0 ? eta : 0.0;
        double rp_inf = p > 0 ? r_pri.lpNorm<Eigen::Infinity>() : 0.0;
        double rd_inf = r_dual.lpNorm<Eigen::Infinity>();
        res.y = y;
        res.kkt_residual = rd_inf;
        res.gap = gap_ok;
        res.iterations = iter;
        if (gap_ok <= opts.opt_tol && rp_inf <= opts.feas_tol &&
            rd_inf <= opts.opt_tol) {
            res.status = SolveStatus::optimal;
            return res;
        }
        if (stop_when_objective_below > -kInf &&
            cp.objective.eval(y) < stop_when_objective_below && rp_inf <= opts.feas_tol) {
            res.status = SolveStatus::optimal;  // early exit hook (phase I)
            return res;
        }

        // rhs for the reduced system (lambda eliminated).
        Eigen::VectorXd rhs = -r_dual;
        for (int i = 0; i < m; ++i) {
            double r_cent = -lam(i) * w.fvals(i) - 1.0 / t;
            rhs -= w.grads[i] * (r_cent / w.fvals(i));
        }

        Eigen::VectorXd dy(n), dnu(p);
        if (p > 0) {
            Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + p, n + p);
            kkt.topLeftCorner(n, n) = h;
            kkt.topRightCorner(n, p) = cp.a_eq.transpose();
            kkt.bottomLeftCorner(p, n) = cp.a_eq;
            Eigen::VectorXd full_rhs(n + p);
            full_rhs.head(n) = rhs;
            full_rhs.tail(p) = -r_pri;
            // Tiny diagonal regularization keeps the factorization stable
            // when constraint curvature vanishes along some direction.
            kkt.topLeftCorner(n, n).diagonal().array() += 1e-12;
            Eigen::VectorXd sol = kkt.partialPivLu().solve(full_rhs);
            dy = sol.head(n);
            dnu = sol.tail(p);
        } else {
            Eigen::MatrixXd hreg = h;
            hreg.diagonal().array() += 1e-12;
            dy = hreg.ldlt().solve(rhs);
        }

        Eigen::VectorXd dlam(m);
        for (int i = 0; i < m; ++i) {
            double r_cent = -lam(i) * w.fvals(i) - 1.0 / t;
            dlam(i) = (r_cent - lam(i) * w.grads[i].dot(dy)) / w.fvals(i);
        }

        // Longest multiplier-feasible step, then backtrack on strict
        // inequality feasibility and on the residual norm.
        double s = 1.0;
        for (int i = 0; i < m; ++i)
            if (dlam(i) < 0.0) s = std::min(s, -lam(i) / dlam(i));
        s = std::min(1.0, 0.99 * s);

        double r_now = residual_norm(y, lam, nu, t);
        IpmWork wt;
        int bt = 0;
        for (; bt < 60; ++bt) {
            Eigen::VectorXd yt = y + s * dy;
            if (m == 0 || eval_ineqs(cp, yt, wt, false)) {
                double r_new =
                    residual_norm(yt, lam + s * dlam, nu + s * dnu, t);
                if (r_new <= (1.0 - opts.ls_alpha * s) * r_now) break;
            }
            s *= opts.ls_beta;
        }
        if (bt == 60) {
            // No progress possible: numerical floor reached.
            res.status = SolveStatus::max_iter;
            res.iterations = iter + 1;
            return res;
        }
        y += s * dy;
        lam += s * dlam;
        nu += s * dnu;
    }
    res.status = SolveStatus::max_iter;
    res.iterations = opts.max_iter;
    return res;
}

// Phase I: minimize s subject to F_i(y) - s <= 0 (an LSE in (y, s) since
// the extra -s folds into every exponent row) and the original equalities.
// Any iterate with max_i F_i(y) < 0 certifies strict feasibility.
bool phase_one(const LogConvexProgram& cp, Eigen::VectorXd& y,
               const SolveOptions& opts) {
    const int n = static_cast<int>(y.size());
    const int m = static_cast<int>(cp.ineqs.size());
    if (m == 0) return true;

    LogConvexProgram ph;
    ph.objective.a = Eigen::MatrixXd::Zero(1, n + 1);
    ph.objective.a(0, n) = 1.0;
    ph.objective.b = Eigen::VectorXd::Zero(1);
    for (const LogSumExpFn& f : cp.ineqs) {
        LogSumExpFn g;
        g.a = Eigen::MatrixXd::Zero(f.a.rows(), n + 1);
        g.a.leftCols(n) = f.a;
        g.a.col(n).setConstant(-1.0);
        g.b = f.b;
        ph.ineqs.push_back(std::move(g));
    }
    {
        // s >= -1 keeps the phase from overshooting into the deep
        // interior; any s < 0 already certifies feasibility.
        LogSumExpFn floor;
        floor.a = Eigen::MatrixXd::Zero(1, n + 1);
        floor.a(0, n) = -1.0;
        floor.b = Eigen::VectorXd::Constant(1, -1.0);
        ph.ineqs.push_back(std::move(floor));
    }
    if (cp.a_eq.rows() > 0) {
        ph.a_eq = Eigen::MatrixXd::Zero(cp.a_eq.rows(), n + 1);
        ph.a_eq.leftCols(n) = cp.a_eq;
        ph.b_eq = cp.b_eq;
    }

    double fmax = -kInf;
    for (const LogSumExpFn& f : cp.ineqs) fmax = std::max(fmax, f.eval(y));

    Eigen::VectorXd z(n + 1);
    z.head(n) = y;
    z(n) = fmax + 1.0;

    SolveOptions popts = opts;
    popts.opt_tol = std::min(opts.opt_tol, 1e-9);
    popts.max_iter = std::max(opts.max_iter, 300);  // bootstrap budget
    IpmResult r = ipm_solve(ph, z, popts, /*stop_when_objective_below=*/-1e-3);

    y = r.y.head(n);
    double new_max = -kInf;
    for (const LogSumExpFn& f : cp.ineqs) new_max = std::max(new_max, f.eval(y));
    return new_max < 0.0;
}

}  // namespace

GpSolution solve(const GpProblem& p, const SolveOptions& opts) {
    LogConvexProgram cp = log_transform(p);
    const int n = p.variable_count();

    Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
    if (p.initial_point().size() == n &&
        (p.initial_point().array() > 0.0).all())
        y = p.initial_point().array().log().matrix();

    // Project the start onto the equality constraints (they are affine in
    // log space) so phase I does not fight them.
    if (cp.a_eq.rows() > 0) {
        Eigen::VectorXd r = cp.a_eq * y - cp.b_eq;
        y -= cp.a_eq.transpose() *
             (cp.a_eq * cp.a_eq.transpose()).ldlt().solve(r);
    }

    bool strict = cp.ineqs.empty() || [&] {
        for (const LogSumExpFn& f : cp.ineqs)
            if (!(f.eval(y) < -1e-10)) return false;
        return true;
    }();

    GpSolution sol;
    if (!strict && !phase_one(cp, y, opts)) {
        sol.status = SolveStatus::infeasible;
        sol.x_star = y.array().exp().matrix();
        return sol;
    }

    IpmResult r = ipm_solve(cp, y, opts);
    sol.x_star = r.y.array().exp().matrix();
    sol.objective_value = p.objective().eval(sol.x_star);
    sol.status = r.status;
    sol.kkt_residual = r.kkt_residual;
    sol.surrogate_gap = r.gap;
    sol.iterations = r.iterations;
    return sol;
}

GpSolution solve(const GpProblem& p, double opt_tol, double feas_tol) {
    SolveOptions o;
    o.opt_tol = opt_tol;
    o.feas_tol = feas_tol;
    return solve(p, o);
}

}  // namespace netalloc
