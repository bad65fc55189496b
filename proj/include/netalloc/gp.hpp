#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace netalloc {

using VarId = int;

// d * x_1^a1 * ... * x_n^an with d > 0. Exponents are kept sparse and
// sorted by variable id.
struct Monomial {
    double coeff = 1.0;
    std::vector<std::pair<VarId, double>> exponents;

    Monomial() = default;
    explicit Monomial(double c) : coeff(c) {}

    // Multiplies by v^e, merging with an existing exponent if present.
    Monomial& mul(VarId v, double e);
    double eval(const Eigen::VectorXd& x) const;
};

// Sum of monomials; strictly positive on the positive orthant.
struct Posynomial {
    std::vector<Monomial> terms;

    Posynomial() = default;
    Posynomial(std::initializer_list<Monomial> t) : terms(t) {}

    Posynomial& operator+=(const Monomial& m) {
        terms.push_back(m);
        return *this;
    }
    Posynomial& operator+=(const Posynomial& p);
    bool empty() const { return terms.empty(); }
    double eval(const Eigen::VectorXd& x) const;
};

// Evaluates p at a strictly positive point; throws InputError otherwise.
double eval(const Posynomial& p, const Eigen::VectorXd& x);

// F(y) = log sum_k exp(A.row(k) . y + b(k)); the log-scale image of a
// posynomial. One-row instances are affine (the image of a monomial).
struct LogSumExpFn {
    Eigen::MatrixXd a;
    Eigen::VectorXd b;

    // Value; optionally gradient and Hessian (pass nullptr to skip).
    double eval(const Eigen::VectorXd& y, Eigen::VectorXd* grad = nullptr,
                Eigen::MatrixXd* hess = nullptr) const;
};

// The convex program obtained from a GP by y = log x: minimize F0(y)
// subject to F_i(y) <= 0 and A_eq y = b_eq.
struct LogConvexProgram {
    LogSumExpFn objective;
    std::vector<LogSumExpFn> ineqs;
    Eigen::MatrixXd a_eq;  // p x n (p may be 0)
    Eigen::VectorXd b_eq;
};

enum class SolveStatus { optimal, infeasible, max_iter };

struct GpSolution {
    Eigen::VectorXd x_star;
    double objective_value = 0.0;  // posynomial part, offset excluded
    SolveStatus status = SolveStatus::max_iter;
    double kkt_residual = 0.0;
    double surrogate_gap = 0.0;  // bounds every complementary-slackness product
    int iterations = 0;
};

// Geometric program in standard form:
//   minimize   objective(x) (+ objective_offset, excluded from the solve)
//   subject to ineq_i(x) <= 1, eq_i(x) = 1, lo_v <= x_v <= hi_v.
// Box bounds are compiled to monomial inequalities at solve time.
class GpProblem {
public:
    VarId add_variable(std::string name = "");
    int variable_count() const { return static_cast<int>(names_.size()); }
    const std::string& variable_name(VarId v) const { return names_[v]; }

    void set_objective(Posynomial p, double constant_offset = 0.0);
    void add_ineq_constraint(Posynomial p);   // p(x) <= 1
    void add_eq_constraint(Monomial m);       // m(x) = 1
    void set_bounds(VarId v, double lo, double hi);
    void set_initial_point(Eigen::VectorXd x0) { initial_ = std::move(x0); }

    const Posynomial& objective() const { return objective_; }
    double objective_offset() const { return offset_; }
    const std::vector<Posynomial>& ineq_constraints() const { return ineqs_; }
    const std::vector<Monomial>& eq_constraints() const { return eqs_; }
    const Eigen::VectorXd& initial_point() const { return initial_; }

    // Inequalities including the compiled box constraints.
    std::vector<Posynomial> compiled_inequalities() const;

private:
    std::vector<std::string> names_;
    Posynomial objective_;
    double offset_ = 0.0;
    std::vector<Posynomial> ineqs_;
    std::vector<Monomial> eqs_;
    std::vector<std::pair<double, double>> bounds_;  // (0, inf) = none
    Eigen::VectorXd initial_;
};

// Log-scale convexification of the problem (Eq-16-style): posynomials map
// to log-sum-exp functions, monomial equalities to affine rows.
LogConvexProgram log_transform(const GpProblem& p);

struct SolveOptions {
    double opt_tol = 1e-8;    // surrogate duality gap target
    double feas_tol = 1e-8;   // primal (equality) feasibility target
    int max_iter = 200;
    double mu = 5.0;          // gap reduction factor 0.2 per centering step
    double ls_alpha = 0.01;   // backtracking acceptance slope
    double ls_beta = 0.5;     // backtracking shrink factor
};

// Primal-dual interior-point solve of the log-transformed program. A
// strictly feasible start is taken from the problem's initial point when
// it qualifies; otherwise a phase-I program is solved first.
GpSolution solve(const GpProblem& p, const SolveOptions& opts = {});
GpSolution solve(const GpProblem& p, double opt_tol, double feas_tol);

// Least-squares posynomial fit in log-log coordinates. Terms are refined by
// alternating proportional residual splits with per-term affine
// regressions. Returns the fitted posynomial; max relative error over the
// samples is written to *max_rel_error when given.
Posynomial fit_posynomial(const std::vector<std::pair<Eigen::VectorXd, double>>& samples,
                          int n_terms, double* max_rel_error = nullptr);

}  // namespace netalloc
