// Exact Kolmogorov forward dynamics of the 2^n-state chain. States are
// bitmasks (bit i set = node i infected). The generator is never stored:
// both kernels stream over states.
//
// Gather form (OpenMP): each output entry dpi[s] is assembled from the
// probabilities that flow into s and the outflow of s itself; entries are
// independent, so the loop parallelizes without races and the result does
// not depend on the schedule.
// Scatter form (serial): each source state pushes probability to its
// successors. Kept as the reference path the tests compare against.
#include <omp.h>

#include "netalloc/dynamics.hpp"
#include "netalloc/errors.hpp"
#include "rk45.hpp"

namespace netalloc {

CtmcModel::CtmcModel(const WeightedDigraph& g, const EpidemicParams& params)
    : n(g.node_count()), beta(params.beta), delta(params.delta) {
    validate_params(g, params);
    in_edges.resize(n);
    for (int i = 0; i < n; ++i) in_edges[i] = g.in_edges(i);
}

namespace {

// Infection rate of susceptible node i in state s: beta_i * sum of in-edge
// weights from infected neighbors.
inline double infection_rate(const CtmcModel& m, int i, std::uint64_t s) {
    double pressure = 0.0;
    for (const auto& [j, w] : m.in_edges[i])
        if (s >> j & 1u) pressure += w;
    return m.beta(i) * pressure;
}

}  // namespace

void ctmc_apply(const CtmcModel& m, const Eigen::VectorXd& pi,
                Eigen::VectorXd& dpi) {
    const std::int64_t size = static_cast<std::int64_t>(m.state_count());
    dpi.resize(size);
#pragma omp parallel for schedule(static)
    for (std::int64_t s = 0; s < size; ++s) {
        const std::uint64_t state = static_cast<std::uint64_t>(s);
        double acc = 0.0;
        double outflow = 0.0;
        for (int i = 0; i < m.n; ++i) {
            if (state >> i & 1u) {
                // Inflow: s minus i was susceptible at i and got infected.
                acc += pi(s ^ (std::int64_t(1) << i)) *
                       infection_rate(m, i, state ^ (std::uint64_t(1) << i));
                outflow += m.delta(i);
            } else {
                // Inflow: s plus i recovered at i.
                acc += pi(s | (std::int64_t(1) << i)) * m.delta(i);
                outflow += infection_rate(m, i, state);
            }
        }
        dpi(s) = acc - outflow * pi(s);
    }
}

void ctmc_apply_serial(const CtmcModel& m, const Eigen::VectorXd& pi,
                       Eigen::VectorXd& dpi) {
    const std::int64_t size = static_cast<std::int64_t>(m.state_count());
    dpi.setZero(size);
    for (std::int64_t s = 0; s < size; ++s) {
        const std::uint64_t state = static_cast<std::uint64_t>(s);
        double outflow = 0.0;
        for (int i = 0; i < m.n; ++i) {
            double rate;
            std::int64_t target;
            if (state >> i & 1u) {
                rate = m.delta(i);
                target = s ^ (std::int64_t(1) << i);
            } else {
                rate = infection_rate(m, i, state);
                target = s | (std::int64_t(1) << i);
            }
            dpi(target) += rate * pi(s);
            outflow += rate;
        }
        dpi(s) -= outflow * pi(s);
    }
}

Trajectory exact_marginals(const WeightedDigraph& g, const EpidemicParams& params,
                           const Eigen::VectorXd& p0, double t_end, double tol,
                           int save_points) {
    const int n = g.node_count();
    if (n > 12)
        throw InputError("exact_marginals: refusing n > 12 (2^n states)");
    if (p0.size() != n || (p0.array() < 0.0).any() || (p0.array() > 1.0).any())
        throw InputError("exact_marginals: p0 must lie in [0,1]^n");

    CtmcModel model(g, params);
    const std::int64_t size = static_cast<std::int64_t>(model.state_count());

    // Independent product initial distribution.
    Eigen::VectorXd pi0(size);
    for (std::int64_t s = 0; s < size; ++s) {
        double prob = 1.0;
        for (int i = 0; i < n; ++i)
            prob *= (s >> i & 1) ? p0(i) : 1.0 - p0(i);
        pi0(s) = prob;
    }

    Eigen::VectorXd scratch;
    Trajectory full = detail::integrate_rk45(
        [&](const Eigen::VectorXd& pi) {
            ctmc_apply(model, pi, scratch);
            return scratch;
        },
        pi0, t_end, tol, save_points);

    // Reduce the state distribution to per-node marginals.
    Trajectory out;
    out.times = full.times;
    out.states.reserve(full.states.size());
    for (const Eigen::VectorXd& pi : full.states) {
        Eigen::VectorXd marg = Eigen::VectorXd::Zero(n);
        for (std::int64_t s = 0; s < size; ++s) {
            if (pi(s) == 0.0) continue;
            for (int i = 0; i < n; ++i)
                if (s >> i & 1) marg(i) += pi(s);
        }
        out.states.push_back(marg.cwiseMax(0.0).cwiseMin(1.0));
    }
    return out;
}

}  // namespace netalloc
