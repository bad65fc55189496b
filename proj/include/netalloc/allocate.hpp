#pragma once

#include <optional>
#include <vector>

#include "netalloc/gp.hpp"
#include "netalloc/graph.hpp"

namespace netalloc {

// Feasible interval for one node's rates: beta can be tuned down to
// beta_lo by vaccination, delta up to delta_hi by antidotes.
struct NodeBounds {
    double beta_lo = 0.0;
    double beta_hi = 0.0;
    double delta_lo = 0.0;
    double delta_hi = 0.0;
};

void validate_bounds(const std::vector<NodeBounds>& bounds);

// One cost curve as posynomial-plus-known-constant in a single surrogate
// variable (exponents refer to variable id 0).
struct CostCurve {
    Posynomial poly;
    double offset = 0.0;
    double eval(double arg) const;
};

// Per-node cost model. The vaccination curve is a function of beta itself.
// The antidote curve is a function of the surrogate t = 1 - delta: an
// increasing cost in delta becomes a decreasing posynomial in t, which is
// what keeps the geometric programs sound (see allocate.cpp).
class CostModel {
public:
    std::vector<CostCurve> vax;       // argument beta
    std::vector<CostCurve> antidote;  // argument t = 1 - delta

    double vax_cost(int node, double beta) const { return vax[node].eval(beta); }
    double antidote_cost(int node, double delta) const {
        return antidote[node].eval(1.0 - delta);
    }

    // Sampled monotonicity check (32 points per curve): vaccination cost
    // decreasing over [beta_lo, beta_hi], antidote cost increasing over
    // [delta_lo, delta_hi]. Throws InputError on violation.
    void validate(const std::vector<NodeBounds>& bounds) const;

    CostModel restricted_to(const std::vector<int>& nodes) const;
};

// Normalized reference cost curves:
//   f_i(beta)  = (beta^-1 - beta_hi^-1) / (beta_lo^-1 - beta_hi^-1)
//   g_i(delta) = ((1-delta)^-1 - (1-delta_lo)^-1)
//                / ((1-delta_hi)^-1 - (1-delta_lo)^-1)
// Both span [0,1] over their boxes with diminishing returns. Requires
// delta_hi < 1 (pole) and strict boxes. g is exact here: in the surrogate
// t = 1 - delta it is the monomial t^-1 (scaled) minus a constant.
CostModel default_costs(const std::vector<NodeBounds>& bounds);

// Result of fixing the zero-support nodes and restricting the problem to
// the positive-support subgraph.
struct SupportSplit {
    SupportSet support;
    WeightedDigraph reduced;
    std::vector<NodeBounds> reduced_bounds;
    CostModel reduced_costs;
    double fixed_spend = 0.0;        // total spend on zero-support nodes
    double remaining_budget = 0.0;   // C-bar, when a budget was given
};

// Zero-support nodes always take (beta_hi, delta_lo) -- the minimum
// possible investment -- and drop out of the spectral constraints. Throws
// InfeasibleError when a given budget cannot cover the reduced problem's
// cheapest point.
SupportSplit split_by_support(const WeightedDigraph& g,
                              const std::vector<NodeBounds>& bounds,
                              const CostModel& costs,
                              std::optional<double> budget = std::nullopt);

enum class ProblemKind { rate_constrained, budget_constrained };

// Everything needed to map a GP solution back to physical rates.
struct AllocationBuild {
    ProblemKind kind = ProblemKind::rate_constrained;
    GpProblem gp;
    double shift = 0.0;      // Delta-tilde (rate) or Delta-bar (budget)
    double eps_bar = 0.0;
    double budget = 0.0;     // original budget C (budget problems)
    double budget_scaled = 0.0;  // offset-adjusted right-hand side C'

    WeightedDigraph full_graph;
    std::vector<NodeBounds> full_bounds;
    CostModel full_costs;
    std::vector<int> gp_nodes;  // full-graph ids in GP local order
    std::vector<int> z_nodes;   // nodes fixed at (beta_hi, delta_lo)

    std::vector<VarId> u_var, beta_var, delta_var, t_var;  // per local node
    VarId lambda_var = -1;  // budget problems only
};

struct Allocation {
    Eigen::VectorXd beta_star;
    Eigen::VectorXd delta_star;
    Eigen::VectorXd vax_spend;
    Eigen::VectorXd antidote_spend;
    double epsilon_achieved = 0.0;
    double total_cost = 0.0;      // offset-restored (true) total
    double total_cost_raw = 0.0;  // posynomial parts only
    double lambda1_check = 0.0;   // recomputed on the full graph
    double gp_lambda = 0.0;       // lambda* (budget problems)
    SolveStatus status = SolveStatus::max_iter;
    int iterations = 0;
};

// Builds the rate-constrained GP on the positive-support part of g.
// Precheck: the best reachable rates (beta_lo / delta_hi on the positive
// part, the fixed minimum investment on zero-support nodes) must meet
// lambda_1 <= -eps_bar, else InfeasibleError before any GP is built.
// shift_override, when positive, replaces the computed Delta-tilde
// (used to exercise the shift-equivalence property).
AllocationBuild build_rate_gp(const WeightedDigraph& g,
                              const std::vector<NodeBounds>& bounds,
                              const CostModel& costs, double eps_bar,
                              double shift_override = 0.0);

// Budget-constrained GP; precheck: budget covers the minimal spend.
AllocationBuild build_budget_gp(const WeightedDigraph& g,
                                const std::vector<NodeBounds>& bounds,
                                const CostModel& costs, double budget,
                                double shift_override = 0.0);

// Inverts the delta substitution, restores cost offsets, merges the fixed
// zero-support assignment back in, and recomputes the effective eigenvalue
// on the full graph through the spectral module. Throws InputError if a
// recovered rate leaves its box by more than feas_tol.
Allocation recover_rates(const AllocationBuild& build, const GpSolution& sol,
                         double feas_tol = 1e-8);

// build + solve + recover, as one call.
Allocation solve_rate_allocation(const WeightedDigraph& g,
                                 const std::vector<NodeBounds>& bounds,
                                 const CostModel& costs, double eps_bar,
                                 const SolveOptions& opts = {});
Allocation solve_budget_allocation(const WeightedDigraph& g,
                                   const std::vector<NodeBounds>& bounds,
                                   const CostModel& costs, double budget,
                                   const SolveOptions& opts = {});

}  // namespace netalloc
