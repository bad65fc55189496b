#pragma once

#include <cstdint>
#include <vector>

#include "netalloc/graph.hpp"

namespace netalloc {

struct EpidemicParams {
    Eigen::VectorXd beta;   // per-node infection rates, 1/time
    Eigen::VectorXd delta;  // per-node recovery rates, 1/time
};

void validate_params(const WeightedDigraph& g, const EpidemicParams& p);

// Time-indexed infection-probability vectors.
struct Trajectory {
    std::vector<double> times;
    std::vector<Eigen::VectorXd> states;
};

// dp_i/dt = (1 - p_i) beta_i sum_j a_ij p_j - delta_i p_i  (component form).
Eigen::VectorXd meanfield_rhs(const WeightedDigraph& g, const EpidemicParams& params,
                              const Eigen::VectorXd& p);

// Matrix form (B A - D) p - diag(p) B A p; numerically independent path
// from the component form.
Eigen::VectorXd meanfield_rhs_matrix(const WeightedDigraph& g,
                                     const EpidemicParams& params,
                                     const Eigen::VectorXd& p);

// Adaptive Dormand-Prince 5(4); local error per step <= tol. States are
// saved on a uniform grid of save_points+1 times including both ends.
// Mean-field states are clamped to [0,1]; the linearized system
// pdot = (B A - D) p is positivity-preserving but not bounded above, so
// only the lower clamp applies there.
Trajectory integrate_meanfield(const WeightedDigraph& g, const EpidemicParams& params,
                               const Eigen::VectorXd& p0, double t_end,
                               double tol = 1e-8, int save_points = 200);
Trajectory integrate_linearized(const WeightedDigraph& g, const EpidemicParams& params,
                                const Eigen::VectorXd& p0, double t_end,
                                double tol = 1e-8, int save_points = 200);

// Least-squares slope of log ||p(t)||_2 over saved times in
// [window_lo, window_hi], negated. Throws InputError when the trajectory
// does not decay over the window (vanishing or growing norm).
double decay_rate_estimate(const Trajectory& traj, double window_lo,
                           double window_hi);

// Exact Kolmogorov marginals of the 2^n-state Markov process, for n <= 12.
// p0 gives independent per-node initial infection probabilities.
Trajectory exact_marginals(const WeightedDigraph& g, const EpidemicParams& params,
                           const Eigen::VectorXd& p0, double t_end,
                           double tol = 1e-8, int save_points = 200);

// Forward generator application dpi = Q^T pi for the 2^n chain; the
// OpenMP gather form is the production kernel, the serial scatter form is
// the reference the tests and the benchmark compare against.
struct CtmcModel {
    int n = 0;
    Eigen::VectorXd beta, delta;
    std::vector<std::vector<std::pair<int, double>>> in_edges;

    CtmcModel(const WeightedDigraph& g, const EpidemicParams& params);
    std::size_t state_count() const { return std::size_t(1) << n; }
};
void ctmc_apply(const CtmcModel& m, const Eigen::VectorXd& pi, Eigen::VectorXd& dpi);
void ctmc_apply_serial(const CtmcModel& m, const Eigen::VectorXd& pi,
                       Eigen::VectorXd& dpi);

// Event-driven stochastic simulation (exponential clocks, next-event
// sampling). Returns empirical marginals over `trials` runs on a uniform
// grid. Each trial draws from an independent substream derived from
// (seed, trial index); per-grid-point tallies are integers, so the result
// is bit-identical for any scheduling, parallel or serial.
Trajectory simulate_stochastic(const WeightedDigraph& g, const EpidemicParams& params,
                               const std::vector<std::uint8_t>& x0, double t_end,
                               int trials, std::uint64_t seed,
                               int save_points = 200, bool parallel = true);

}  // namespace netalloc
