// Allocation programs.
//
// Both problems are driven by the Perron-Frobenius bound: for a nonnegative
// irreducible M, rho(M) <= lam iff M u <= lam u for some positive u. With
// D_hat = (Delta+1) I - D the matrix B A + D_hat is nonnegative and
// lambda_1(B A + D_hat) = lambda_1(B A - D) + Delta + 1, so spectral-decay
// requirements become posynomial rows (beta_i sum_j A_ij u_j + dhat_i u_i)
// over monomial denominators.
//
// Antidote costs need care. An increasing cost in delta cannot enter a GP
// as an increasing posynomial of a variable that is only capped from above:
// the optimizer would push the variable to zero and take the recovery rate
// for free. We therefore charge the antidote cost in the surrogate
// t = 1 - delta, where reference-style costs are *decreasing* posynomials
// (t^-1 blows up as t -> 0). The linking row (t_i + Delta)/dhat_i <= 1
// caps t_i at dhat_i - Delta = 1 - delta_i; since lowering t_i only raises
// the charge, t_i sits at the cap at optimality and the charge equals the
// true cost g(delta_i).
#include "netalloc/allocate.hpp"

#include <algorithm>
#include <cmath>

#include "netalloc/errors.hpp"
#include "netalloc/spectral.hpp"

namespace netalloc {

void validate_bounds(const std::vector<NodeBounds>& bounds) {
    for (size_t i = 0; i < bounds.size(); ++i) {
        const NodeBounds& b = bounds[i];
        if (!(b.beta_lo > 0.0 && b.beta_lo <= b.beta_hi))
            throw InputError("bounds node " + std::to_string(i) +
                             ": need 0 < beta_lo <= beta_hi");
        if (!(b.delta_lo > 0.0 && b.delta_lo <= b.delta_hi))
            throw InputError("bounds node " + std::to_string(i) +
                             ": need 0 < delta_lo <= delta_hi");
    }
}

double CostCurve::eval(double arg) const {
    if (!(arg > 0.0)) throw InputError("cost curve argument must be positive");
    Eigen::VectorXd x(1);
    x(0) = arg;
    return poly.eval(x) + offset;
}

void CostModel::validate(const std::vector<NodeBounds>& bounds) const {
    if (vax.size() != bounds.size() || antidote.size() != bounds.size())
        throw InputError("cost model size does not match node count");
    const int samples = 32;
    for (size_t i = 0; i < bounds.size(); ++i) {
        const NodeBounds& b = bounds[i];
        double prev = vax_cost(static_cast<int>(i), b.beta_lo);
        for (int s = 1; s < samples; ++s) {
            double beta = b.beta_lo + (b.beta_hi - b.beta_lo) * s / (samples - 1);
            double c = vax_cost(static_cast<int>(i), beta);
            if (c > prev + 1e-9)
                throw InputError("vaccination cost for node " + std::to_string(i) +
                                 " is not decreasing over its box");
            prev = c;
        }
        // The antidote charge must keep falling as t grows, including below
        // the box image, or the linking cap stops binding. Sample from a
        // small positive t up to 1 - delta_lo.
        double t_hi = 1.0 - b.delta_lo;
        double t_start = std::min(1.0 - b.delta_hi, t_hi) / 32.0;
        if (!(t_hi > 0.0))
            throw InputError("antidote cost for node " + std::to_string(i) +
                             " needs delta_lo < 1");
        prev = antidote[i].eval(t_start);
        for (int s = 1; s < samples; ++s) {
            double t = t_start + (t_hi - t_start) * s / (samples - 1);
            double c = antidote[i].eval(t);
            if (c > prev + 1e-9)
                throw InputError("antidote cost for node " + std::to_string(i) +
                                 " is not increasing over its box");
            prev = c;
        }
    }
}

CostModel CostModel::restricted_to(const std::vector<int>& nodes) const {
    CostModel out;
    out.vax.reserve(nodes.size());
    out.antidote.reserve(nodes.size());
    for (int v : nodes) {
        out.vax.push_back(vax[v]);
        out.antidote.push_back(antidote[v]);
    }
    return out;
}

CostModel default_costs(const std::vector<NodeBounds>& bounds) {
    validate_bounds(bounds);
    CostModel model;
    for (size_t i = 0; i < bounds.size(); ++i) {
        const NodeBounds& b = bounds[i];
        if (!(b.delta_hi < 1.0))
            throw InputError("default costs need delta_hi < 1 (node " +
                             std::to_string(i) + ")");
        if (!(b.beta_lo < b.beta_hi) || !(b.delta_lo < b.delta_hi))
            throw InputError("default costs need strict rate boxes (node " +
                             std::to_string(i) + ")");

        double cf = 1.0 / b.beta_lo - 1.0 / b.beta_hi;
        CostCurve f;
        Monomial mf(1.0 / cf);
        mf.mul(0, -1.0);
        f.poly += mf;
        f.offset = -(1.0 / b.beta_hi) / cf;
        model.vax.push_back(std::move(f));

        double cg = 1.0 / (1.0 - b.delta_hi) - 1.0 / (1.0 - b.delta_lo);
        CostCurve gcost;
        Monomial mg(1.0 / cg);
        mg.mul(0, -1.0);
        gcost.poly += mg;
        gcost.offset = -(1.0 / (1.0 - b.delta_lo)) / cg;
        model.antidote.push_back(std::move(gcost));
    }
    return model;
}

SupportSplit split_by_support(const WeightedDigraph& g,
                              const std::vector<NodeBounds>& bounds,
                              const CostModel& costs,
                              std::optional<double> budget) {
    validate_bounds(bounds);
    if (bounds.size() != static_cast<size_t>(g.node_count()))
        throw InputError("bounds size does not match node count");

    SupportSplit split;
    split.support = zero_support_set(g);
    split.reduced = g.induced_subgraph(split.support.positive_nodes);
    for (int v : split.support.positive_nodes)
        split.reduced_bounds.push_back(bounds[v]);
    split.reduced_costs = costs.restricted_to(split.support.positive_nodes);

    split.fixed_spend = 0.0;
    for (int v : split.support.zero_nodes)
        split.fixed_spend += costs.vax_cost(v, bounds[v].beta_hi) +
                             costs.antidote_cost(v, bounds[v].delta_lo);

    if (budget) {
        split.remaining_budget = *budget - split.fixed_spend;
        double floor = 0.0;
        for (size_t k = 0; k < split.reduced_bounds.size(); ++k) {
            const NodeBounds& b = split.reduced_bounds[k];
            floor += split.reduced_costs.vax_cost(static_cast<int>(k), b.beta_hi) +
                     split.reduced_costs.antidote_cost(static_cast<int>(k), b.delta_lo);
        }
        if (split.remaining_budget < floor - 1e-12)
            throw InfeasibleError(
                "budget below the minimal spend of the positive-support part");
    }
    return split;
}

namespace {

// Single-variable curve re-indexed onto a GP variable.
Posynomial substitute(const Posynomial& curve, VarId target) {
    Posynomial out;
    for (const Monomial& m : curve.terms) {
        Monomial t(m.coeff);
        for (const auto& [v, e] : m.exponents) {
            if (v != 0) throw InputError("cost curve must be single-variable");
            t.mul(target, e);
        }
        out += t;
    }
    return out;
}

std::vector<std::vector<int>> weak_components(const WeightedDigraph& g) {
    const int n = g.node_count();
    std::vector<int> comp(n, -1);
    std::vector<std::vector<int>> out;
    for (int s = 0; s < n; ++s) {
        if (comp[s] != -1) continue;
        int id = static_cast<int>(out.size());
        out.emplace_back();
        std::vector<int> queue = {s};
        comp[s] = id;
        for (size_t qi = 0; qi < queue.size(); ++qi) {
            int v = queue[qi];
            out[id].push_back(v);
            for (const auto& [w, wt] : g.out_edges(v))
                if (comp[w] == -1) comp[w] = id, queue.push_back(w);
            for (const auto& [w, wt] : g.in_edges(v))
                if (comp[w] == -1) comp[w] = id, queue.push_back(w);
        }
    }
    return out;
}

Eigen::VectorXd full_rate_vector(const AllocationBuild& build,
                                 const Eigen::VectorXd& reduced, bool is_beta) {
    Eigen::VectorXd full(build.full_graph.node_count());
    for (size_t k = 0; k < build.gp_nodes.size(); ++k)
        full(build.gp_nodes[k]) = reduced(static_cast<int>(k));
    for (int z : build.z_nodes)
        full(z) = is_beta ? build.full_bounds[z].beta_hi
                          : build.full_bounds[z].delta_lo;
    return full;
}

AllocationBuild build_core(const WeightedDigraph& g,
                           const std::vector<NodeBounds>& bounds,
                           const CostModel& costs, ProblemKind kind,
                           double eps_bar, double budget,
                           double shift_override) {
    costs.validate(bounds);

    AllocationBuild build;
    build.kind = kind;
    build.eps_bar = eps_bar;
    build.budget = budget;
    build.full_graph = g;
    build.full_bounds = bounds;
    build.full_costs = costs;

    SupportSplit split = split_by_support(
        g, bounds, costs,
        kind == ProblemKind::budget_constrained ? std::optional<double>(budget)
                                                : std::nullopt);
    build.gp_nodes = split.support.positive_nodes;
    build.z_nodes = split.support.zero_nodes;

    const WeightedDigraph& rg = split.reduced;
    const std::vector<NodeBounds>& rb = split.reduced_bounds;
    const CostModel& rc = split.reduced_costs;
    const int n = rg.node_count();

    double delta_hi_max = 0.0;
    for (const NodeBounds& b : bounds) delta_hi_max = std::max(delta_hi_max, b.delta_hi);
    double shift = kind == ProblemKind::rate_constrained
                       ? std::max(eps_bar, delta_hi_max)
                       : delta_hi_max;
    if (shift_override > 0.0) shift = shift_override;
    build.shift = shift;

    GpProblem& gp = build.gp;
    if (kind == ProblemKind::budget_constrained)
        build.lambda_var = gp.add_variable("lambda");
    for (int i = 0; i < n; ++i) {
        const std::string& l = rg.label(i);
        build.u_var.push_back(gp.add_variable("u_" + l));
        build.beta_var.push_back(gp.add_variable("beta_" + l));
        build.delta_var.push_back(gp.add_variable("dhat_" + l));
        build.t_var.push_back(gp.add_variable("t_" + l));
    }

    for (int i = 0; i < n; ++i) {
        const NodeBounds& b = rb[i];
        gp.set_bounds(build.beta_var[i], b.beta_lo, b.beta_hi);
        gp.set_bounds(build.delta_var[i], shift + 1.0 - b.delta_hi,
                      shift + 1.0 - b.delta_lo);
    }

    // Spectral rows: (beta_i sum_j A_ij u_j + dhat_i u_i) / (denom u_i) <= 1,
    // with denom = shift+1-eps_bar for the rate problem and the variable
    // lambda for the budget problem.
    const double rate_denom = shift + 1.0 - eps_bar;
    for (int i = 0; i < n; ++i) {
        Posynomial row;
        for (const auto& [j, w] : rg.in_edges(i)) {
            Monomial m(w);
            m.mul(build.beta_var[i], 1.0);
            m.mul(build.u_var[j], 1.0);
            m.mul(build.u_var[i], -1.0);
            if (kind == ProblemKind::rate_constrained)
                m.coeff /= rate_denom;
            else
                m.mul(build.lambda_var, -1.0);
            row += m;
        }
        Monomial md(1.0);
        md.mul(build.delta_var[i], 1.0);
        if (kind == ProblemKind::rate_constrained)
            md.coeff /= rate_denom;
        else
            md.mul(build.lambda_var, -1.0);
        row += md;
        gp.add_ineq_constraint(std::move(row));
    }

    // Linking rows (t_i + shift) / dhat_i <= 1, i.e. t_i <= 1 - delta_i.
    for (int i = 0; i < n; ++i) {
        Posynomial row;
        Monomial mt(1.0);
        mt.mul(build.t_var[i], 1.0);
        mt.mul(build.delta_var[i], -1.0);
        row += mt;
        Monomial ms(shift);
        ms.mul(build.delta_var[i], -1.0);
        row += ms;
        gp.add_ineq_constraint(std::move(row));
    }

    // Total charge, objective or budget row.
    Posynomial charge;
    double offset_sum = 0.0;
    for (int i = 0; i < n; ++i) {
        charge += substitute(rc.vax[i].poly, build.beta_var[i]);
        charge += substitute(rc.antidote[i].poly, build.t_var[i]);
        offset_sum += rc.vax[i].offset + rc.antidote[i].offset;
    }
    if (kind == ProblemKind::rate_constrained) {
        gp.set_objective(charge, offset_sum);
    } else {
        double c_prime = split.remaining_budget - offset_sum;
        if (!(c_prime > 0.0))
            throw InfeasibleError("offset-adjusted budget is not positive");
        build.budget_scaled = c_prime;
        Posynomial brow = charge;
        for (Monomial& m : brow.terms) m.coeff /= c_prime;
        gp.add_ineq_constraint(std::move(brow));
        Posynomial obj;
        Monomial ml(1.0);
        ml.mul(build.lambda_var, 1.0);
        obj += ml;
        gp.set_objective(obj, 0.0);
    }

    // One u normalization per weak component of the reduced graph; without
    // it the eigenvector variables have a free common scale.
    for (const auto& comp : weak_components(rg)) {
        int anchor = *std::min_element(comp.begin(), comp.end());
        Monomial m(1.0);
        m.mul(build.u_var[anchor], 1.0);
        gp.add_eq_constraint(std::move(m));
    }

    // Strictly feasible start: rates nudged a little inside the box from
    // the spectral-friendly corner, u from the Perron vector of the start
    // matrix (spectral rows then evaluate to lambda1/denom < 1).
    Eigen::VectorXd beta0(n), delta0(n);
    for (int i = 0; i < n; ++i) {
        const NodeBounds& b = rb[i];
        if (kind == ProblemKind::rate_constrained) {
            beta0(i) = b.beta_lo * std::pow(b.beta_hi / b.beta_lo, 0.02);
            delta0(i) = b.delta_hi * std::pow(b.delta_lo / b.delta_hi, 0.02);
        } else {
            beta0(i) = b.beta_hi * std::pow(b.beta_lo / b.beta_hi, 0.05);
            delta0(i) = b.delta_lo * std::pow(b.delta_hi / b.delta_lo, 0.05);
        }
    }
    Eigen::MatrixXd m0 = beta0.asDiagonal() * rg.adjacency_matrix();
    m0.diagonal() += (shift + 1.0 - delta0.array()).matrix();
    Eigen::VectorXd u0 = Eigen::VectorXd::Ones(n);
    for (int it = 0; it < 200; ++it) {
        Eigen::VectorXd next = m0 * u0;
        u0 = next / next.lpNorm<Eigen::Infinity>();
    }
    u0 = u0.cwiseMax(1e-12);

    Eigen::VectorXd x0(gp.variable_count());
    double lam0 = (m0 * u0).cwiseQuotient(u0).maxCoeff() * 1.05;
    if (build.lambda_var >= 0) x0(build.lambda_var) = lam0;
    for (int i = 0; i < n; ++i) {
        x0(build.u_var[i]) = u0(i);
        x0(build.beta_var[i]) = beta0(i);
        x0(build.delta_var[i]) = shift + 1.0 - delta0(i);
        x0(build.t_var[i]) = 0.5 * (1.0 - delta0(i));
    }
    gp.set_initial_point(std::move(x0));
    return build;
}

}  // namespace

AllocationBuild build_rate_gp(const WeightedDigraph& g,
                              const std::vector<NodeBounds>& bounds,
                              const CostModel& costs, double eps_bar,
                              double shift_override) {
    if (!(eps_bar > 0.0)) throw InputError("eps_bar must be positive");
    validate_bounds(bounds);
    if (bounds.size() != static_cast<size_t>(g.node_count()))
        throw InputError("bounds size does not match node count");

    // Feasibility precheck on the full graph at the best reachable rates:
    // zero-support nodes are pinned at minimum investment, so they
    // contribute (beta_hi, delta_lo) rather than the friendly corner.
    SupportSet support = zero_support_set(g);
    Eigen::VectorXd beta_best(g.node_count()), delta_best(g.node_count());
    for (int v : support.positive_nodes) {
        beta_best(v) = bounds[v].beta_lo;
        delta_best(v) = bounds[v].delta_hi;
    }
    for (int v : support.zero_nodes) {
        beta_best(v) = bounds[v].beta_hi;
        delta_best(v) = bounds[v].delta_lo;
    }
    double best = effective_eigenvalue(g, beta_best, delta_best);
    if (best > -eps_bar)
        throw InfeasibleError(
            "target decay rate unreachable: lambda_1 at the best reachable "
            "rates is " +
            std::to_string(best) + " > " + std::to_string(-eps_bar));

    return build_core(g, bounds, costs, ProblemKind::rate_constrained, eps_bar,
                      0.0, shift_override);
}

AllocationBuild build_budget_gp(const WeightedDigraph& g,
                                const std::vector<NodeBounds>& bounds,
                                const CostModel& costs, double budget,
                                double shift_override) {
    validate_bounds(bounds);
    if (bounds.size() != static_cast<size_t>(g.node_count()))
        throw InputError("bounds size does not match node count");
    return build_core(g, bounds, costs, ProblemKind::budget_constrained, 0.0,
                      budget, shift_override);
}

Allocation recover_rates(const AllocationBuild& build, const GpSolution& sol,
                         double feas_tol) {
    if (sol.status == SolveStatus::infeasible)
        throw InfeasibleError("cannot recover rates from an infeasible solve");

    const int n = static_cast<int>(build.gp_nodes.size());
    Eigen::VectorXd beta_r(n), delta_r(n);
    for (int i = 0; i < n; ++i) {
        double beta = sol.x_star(build.beta_var[i]);
        double delta = build.shift + 1.0 - sol.x_star(build.delta_var[i]);
        const NodeBounds& b = build.full_bounds[build.gp_nodes[i]];
        double tol_b = feas_tol * std::max(1.0, b.beta_hi);
        double tol_d = feas_tol * std::max(1.0, b.delta_hi);
        if (beta < b.beta_lo - tol_b || beta > b.beta_hi + tol_b ||
            delta < b.delta_lo - tol_d || delta > b.delta_hi + tol_d)
            throw InputError("recovered rate escapes its box on node " +
                             build.full_graph.label(build.gp_nodes[i]));
        beta_r(i) = std::clamp(beta, b.beta_lo, b.beta_hi);
        delta_r(i) = std::clamp(delta, b.delta_lo, b.delta_hi);
    }

    Allocation a;
    a.status = sol.status;
    a.iterations = sol.iterations;
    a.beta_star = full_rate_vector(build, beta_r, true);
    a.delta_star = full_rate_vector(build, delta_r, false);
    if (build.lambda_var >= 0) a.gp_lambda = sol.x_star(build.lambda_var);

    const int fn = build.full_graph.node_count();
    a.vax_spend.resize(fn);
    a.antidote_spend.resize(fn);
    a.total_cost = 0.0;
    a.total_cost_raw = 0.0;
    Eigen::VectorXd x1(1);
    for (int v = 0; v < fn; ++v) {
        const CostCurve& f = build.full_costs.vax[v];
        const CostCurve& gc = build.full_costs.antidote[v];
        x1(0) = a.beta_star(v);
        double raw_f = f.poly.eval(x1);
        x1(0) = 1.0 - a.delta_star(v);
        double raw_g = gc.poly.eval(x1);
        a.vax_spend(v) = std::max(0.0, raw_f + f.offset);
        a.antidote_spend(v) = std::max(0.0, raw_g + gc.offset);
        a.total_cost += a.vax_spend(v) + a.antidote_spend(v);
        a.total_cost_raw += raw_f + raw_g;
    }

    a.lambda1_check = effective_eigenvalue(build.full_graph, a.beta_star,
                                           a.delta_star);
    a.epsilon_achieved = -a.lambda1_check;
    return a;
}

namespace {

Allocation endpoint_allocation(const WeightedDigraph& g,
                               const std::vector<NodeBounds>& bounds,
                               const CostModel& costs) {
    const int n = g.node_count();
    Allocation a;
    a.beta_star.resize(n);
    a.delta_star.resize(n);
    a.vax_spend = Eigen::VectorXd::Zero(n);
    a.antidote_spend = Eigen::VectorXd::Zero(n);
    for (int v = 0; v < n; ++v) {
        a.beta_star(v) = bounds[v].beta_hi;
        a.delta_star(v) = bounds[v].delta_lo;
        a.vax_spend(v) = std::max(0.0, costs.vax_cost(v, bounds[v].beta_hi));
        a.antidote_spend(v) =
            std::max(0.0, costs.antidote_cost(v, bounds[v].delta_lo));
        a.total_cost += a.vax_spend(v) + a.antidote_spend(v);
    }
    a.status = SolveStatus::optimal;
    a.lambda1_check = effective_eigenvalue(g, a.beta_star, a.delta_star);
    a.epsilon_achieved = -a.lambda1_check;
    a.gp_lambda = 0.0;
    return a;
}

}  // namespace

Allocation solve_rate_allocation(const WeightedDigraph& g,
                                 const std::vector<NodeBounds>& bounds,
                                 const CostModel& costs, double eps_bar,
                                 const SolveOptions& opts) {
    AllocationBuild build = build_rate_gp(g, bounds, costs, eps_bar);
    GpSolution sol = solve(build.gp, opts);
    if (sol.status == SolveStatus::infeasible)
        throw InfeasibleError("rate-constrained GP reported infeasible");
    return recover_rates(build, sol, opts.feas_tol);
}

Allocation solve_budget_allocation(const WeightedDigraph& g,
                                   const std::vector<NodeBounds>& bounds,
                                   const CostModel& costs, double budget,
                                   const SolveOptions& opts) {
    // A budget at (or within tolerance of) the floor forces the cheapest
    // endpoints outright; the GP has no interior there.
    validate_bounds(bounds);
    double floor = 0.0;
    for (int v = 0; v < g.node_count(); ++v)
        floor += costs.vax_cost(v, bounds[v].beta_hi) +
                 costs.antidote_cost(v, bounds[v].delta_lo);
    if (budget < floor - 1e-12)
        throw InfeasibleError("budget below the minimal total spend");
    if (budget <= floor + 1e-10 * std::max(1.0, std::abs(floor)))
        return endpoint_allocation(g, bounds, costs);

    AllocationBuild build = build_budget_gp(g, bounds, costs, budget);
    GpSolution sol = solve(build.gp, opts);
    if (sol.status == SolveStatus::infeasible)
        throw InfeasibleError("budget-constrained GP reported infeasible");
    return recover_rates(build, sol, opts.feas_tol);
}

}  // namespace netalloc
