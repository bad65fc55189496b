#include <doctest.h>

#include <chrono>
#include <random>

#include "netalloc/errors.hpp"
#include "netalloc/gp.hpp"
#include "oracles.hpp"

using namespace netalloc;

namespace {

Posynomial random_posynomial(std::mt19937_64& rng, int n_vars, int n_terms) {
    std::uniform_real_distribution<double> coeff(0.1, 3.0);
    std::uniform_real_distribution<double> expo(-2.0, 2.0);
    Posynomial p;
    for (int t = 0; t < n_terms; ++t) {
        Monomial m(coeff(rng));
        for (int v = 0; v < n_vars; ++v) m.mul(v, expo(rng));
        p += m;
    }
    return p;
}

}  // namespace

TEST_CASE("posynomial evaluation") {
    Monomial three_x(3.0);
    three_x.mul(0, 1.0);
    Eigen::VectorXd x(1);
    x << 2.0;
    CHECK(eval(Posynomial{three_x}, x) == doctest::Approx(6.0).epsilon(1e-14));

    Monomial inv(1.0), lin(1.0);
    inv.mul(0, -1.0);
    lin.mul(0, 1.0);
    Posynomial q{inv, lin};
    x << 1.0;
    CHECK(eval(q, x) == doctest::Approx(2.0).epsilon(1e-14));

    Monomial m2(2.0);
    m2.mul(0, 0.5);
    m2.mul(1, -1.3);
    Eigen::VectorXd xy(2);
    xy << 4.0, 2.0;
    CHECK(eval(Posynomial{m2}, xy) ==
          doctest::Approx(2.0 * std::pow(4.0, 0.5) * std::pow(2.0, -1.3))
              .epsilon(1e-13));

    Eigen::VectorXd bad(1);
    bad << -1.0;
    CHECK_THROWS_AS(eval(q, bad), InputError);
    CHECK_THROWS_AS(eval(Posynomial{}, x), InputError);
}

TEST_CASE("log_transform: monomial becomes affine") {
    GpProblem p;
    VarId v = p.add_variable();
    Monomial m(5.0);
    m.mul(v, 2.5);
    p.set_objective(Posynomial{m});
    LogConvexProgram cp = log_transform(p);

    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int i = 0; i < 10; ++i) {
        Eigen::VectorXd y(1);
        y << u(rng);
        Eigen::VectorXd grad(1);
        Eigen::MatrixXd hess(1, 1);
        double val = cp.objective.eval(y, &grad, &hess);
        CHECK(val == doctest::Approx(2.5 * y(0) + std::log(5.0)).epsilon(1e-14));
        CHECK(grad(0) == doctest::Approx(2.5).epsilon(1e-14));
        CHECK(std::abs(hess(0, 0)) < 1e-14);
    }
}

TEST_CASE("log_transform: x + 1/x at y=0 has value log 2 and zero gradient") {
    GpProblem p;
    VarId v = p.add_variable();
    Monomial inv(1.0), lin(1.0);
    inv.mul(v, -1.0);
    lin.mul(v, 1.0);
    p.set_objective(Posynomial{inv, lin});
    LogConvexProgram cp = log_transform(p);
    Eigen::VectorXd y = Eigen::VectorXd::Zero(1), grad(1);
    double val = cp.objective.eval(y, &grad);
    CHECK(val == doctest::Approx(std::log(2.0)).epsilon(1e-14));
    CHECK(std::abs(grad(0)) < 1e-14);
}

TEST_CASE("log_transform gradient matches central finite differences") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        int n = 2 + static_cast<int>(rng() % 3);
        GpProblem p;
        for (int v = 0; v < n; ++v) p.add_variable();
        p.set_objective(random_posynomial(rng, n, 4));
        LogConvexProgram cp = log_transform(p);

        Eigen::VectorXd y(n), grad(n);
        for (int v = 0; v < n; ++v) y(v) = u(rng);
        cp.objective.eval(y, &grad);
        const double h = 1e-6;
        for (int v = 0; v < n; ++v) {
            Eigen::VectorXd yp = y, ym = y;
            yp(v) += h;
            ym(v) -= h;
            double fd = (cp.objective.eval(yp) - cp.objective.eval(ym)) / (2 * h);
            CHECK(grad(v) == doctest::Approx(fd).epsilon(1e-6));
        }
    }
}

TEST_CASE("log-scale convexity: transformed Hessians are PSD") {
    std::mt19937_64 rng(19);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    int checked = 0;
    while (checked < 100) {
        int n = 2 + static_cast<int>(rng() % 3);
        GpProblem p;
        for (int v = 0; v < n; ++v) p.add_variable();
        p.set_objective(random_posynomial(rng, n, 5));
        LogConvexProgram cp = log_transform(p);
        Eigen::VectorXd y(n);
        for (int v = 0; v < n; ++v) y(v) = u(rng);
        Eigen::MatrixXd hess(n, n);
        cp.objective.eval(y, nullptr, &hess);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hess);
        CHECK(es.eigenvalues().minCoeff() >= -1e-8);
        ++checked;
    }
}

TEST_CASE("solve: minimize x subject to 1/x <= 1") {
    auto t0 = std::chrono::steady_clock::now();
    GpProblem p;
    VarId x = p.add_variable("x");
    Monomial obj(1.0);
    obj.mul(x, 1.0);
    p.set_objective(Posynomial{obj});
    Monomial con(1.0);
    con.mul(x, -1.0);
    p.add_ineq_constraint(Posynomial{con});
    GpSolution s = solve(p);
    auto ms = std::chrono::duration<double, std::milli>(
                  std::chrono::steady_clock::now() - t0)
                  .count();
    REQUIRE(s.status == SolveStatus::optimal);
    CHECK(std::abs(s.x_star(0) - 1.0) < 1e-8);
    CHECK(std::abs(s.objective_value - 1.0) < 1e-8);
    CHECK(s.kkt_residual <= 1e-8);
    CHECK(ms < 100.0);
}

TEST_CASE("solve: minimize x+y subject to 1/(xy) <= 1") {
    GpProblem p;
    VarId x = p.add_variable("x");
    VarId y = p.add_variable("y");
    Monomial mx(1.0), my(1.0);
    mx.mul(x, 1.0);
    my.mul(y, 1.0);
    p.set_objective(Posynomial{mx, my});
    Monomial con(1.0);
    con.mul(x, -1.0);
    con.mul(y, -1.0);
    p.add_ineq_constraint(Posynomial{con});
    // The duality gap bounds the objective error, so a 1e-8 answer needs a
    // slightly tighter gap target.
    GpSolution s = solve(p, 1e-10, 1e-10);
    REQUIRE(s.status == SolveStatus::optimal);
    CHECK(std::abs(s.objective_value - 2.0) < 1e-8);
    CHECK(std::abs(s.x_star(0) - 1.0) < 1e-6);
    CHECK(std::abs(s.x_star(1) - 1.0) < 1e-6);
}

TEST_CASE("solve: smallest eigenvalue bound of a symmetric 2x2 via GP") {
    // min lambda s.t. (beta u2 + dhat u1)/(lambda u1) <= 1,
    //                 (beta u1 + dhat u2)/(lambda u2) <= 1, u1 = 1.
    // The optimum is lambda1([[dhat, beta], [beta, dhat]]) = dhat + beta.
    const double beta = 0.3, dhat = 1.2;
    GpProblem p;
    VarId lam = p.add_variable("lambda");
    VarId u1 = p.add_variable("u1");
    VarId u2 = p.add_variable("u2");
    Monomial obj(1.0);
    obj.mul(lam, 1.0);
    p.set_objective(Posynomial{obj});
    for (int row = 0; row < 2; ++row) {
        VarId ui = row == 0 ? u1 : u2;
        VarId uj = row == 0 ? u2 : u1;
        Monomial off(beta);
        off.mul(uj, 1.0);
        off.mul(ui, -1.0);
        off.mul(lam, -1.0);
        Monomial diag(dhat);
        diag.mul(lam, -1.0);
        p.add_ineq_constraint(Posynomial{off, diag});
    }
    Monomial norm(1.0);
    norm.mul(u1, 1.0);
    p.add_eq_constraint(norm);

    GpSolution s = solve(p);
    REQUIRE(s.status == SolveStatus::optimal);
    CHECK(s.x_star(lam) == doctest::Approx(dhat + beta).epsilon(1e-6));
}

TEST_CASE("solve-eval consistency and complementary slackness at optimum") {
    std::mt19937_64 rng(29);
    for (int trial = 0; trial < 10; ++trial) {
        GpProblem p;
        for (int v = 0; v < 3; ++v) p.add_variable();
        p.set_objective(random_posynomial(rng, 3, 3));
        // Random box keeps the problem bounded.
        for (int v = 0; v < 3; ++v) p.set_bounds(v, 0.2, 5.0);
        GpSolution s = solve(p);
        REQUIRE(s.status == SolveStatus::optimal);
        CHECK(eval(p.objective(), s.x_star) ==
              doctest::Approx(s.objective_value).epsilon(1e-10));
        CHECK(s.kkt_residual <= 1e-8);
        CHECK(s.surrogate_gap <= 1e-8);  // bounds every slackness product
        for (const Posynomial& q : p.compiled_inequalities())
            CHECK(q.eval(s.x_star) <= 1.0 + 1e-8);
    }
}

TEST_CASE("solve: infeasible boxes are reported, not solved") {
    GpProblem p;
    VarId x = p.add_variable("x");
    Monomial obj(1.0);
    obj.mul(x, 1.0);
    p.set_objective(Posynomial{obj});
    Monomial ge2(2.0);
    ge2.mul(x, -1.0);  // x >= 2
    p.add_ineq_constraint(Posynomial{ge2});
    Monomial le_half(2.0);
    le_half.mul(x, 1.0);  // x <= 1/2
    p.add_ineq_constraint(Posynomial{le_half});
    GpSolution s = solve(p);
    CHECK(s.status == SolveStatus::infeasible);
}

TEST_CASE("solve: iteration cap yields max_iter status with best iterate") {
    GpProblem p;
    VarId x = p.add_variable("x");
    VarId y = p.add_variable("y");
    Monomial mx(1.0), my(1.0);
    mx.mul(x, 1.0);
    my.mul(y, 1.0);
    p.set_objective(Posynomial{mx, my});
    Monomial con(1.0);
    con.mul(x, -1.0);
    con.mul(y, -1.0);
    p.add_ineq_constraint(Posynomial{con});
    SolveOptions opts;
    opts.max_iter = 1;
    GpSolution s = solve(p, opts);
    CHECK(s.status == SolveStatus::max_iter);
    CHECK(s.x_star.size() == 2);
    CHECK((s.x_star.array() > 0.0).all());
}

TEST_CASE("spectral-style ratio constraints are invariant to u rescaling") {
    std::mt19937_64 rng(91);
    for (int trial = 0; trial < 10; ++trial) {
        int n = 4;
        Eigen::MatrixXd a = oracle::random_positive_matrix(rng, n);
        // Build the ratio rows (sum_j a_ij u_j + d u_i) / (lam u_i) as
        // posynomials over variables [lam, u_0..u_{n-1}].
        GpProblem p;
        VarId lam = p.add_variable("lam");
        std::vector<VarId> u;
        for (int i = 0; i < n; ++i) u.push_back(p.add_variable());
        std::vector<Posynomial> rows;
        for (int i = 0; i < n; ++i) {
            Posynomial row;
            for (int j = 0; j < n; ++j) {
                Monomial m(a(i, j));
                m.mul(u[j], 1.0);
                m.mul(u[i], -1.0);
                m.mul(lam, -1.0);
                row += m;
            }
            rows.push_back(row);
        }
        std::uniform_real_distribution<double> uu(0.3, 3.0);
        Eigen::VectorXd x(n + 1);
        x(0) = 2.0;
        for (int i = 0; i < n; ++i) x(i + 1) = uu(rng);
        double scale = 7.3;
        Eigen::VectorXd xs = x;
        xs.tail(n) *= scale;
        for (const Posynomial& row : rows)
            CHECK(row.eval(x) == doctest::Approx(row.eval(xs)).epsilon(1e-12));
    }
}
