#include "netalloc/dynamics.hpp"

#include <cmath>

#include "netalloc/errors.hpp"
#include "rk45.hpp"

namespace netalloc {

void validate_params(const WeightedDigraph& g, const EpidemicParams& p) {
    if (p.beta.size() != g.node_count() || p.delta.size() != g.node_count())
        throw InputError("rate vectors must have length n");
    if ((p.beta.array() <= 0.0).any() || (p.delta.array() <= 0.0).any())
        throw InputError("rates must be strictly positive");
}

Eigen::VectorXd meanfield_rhs(const WeightedDigraph& g, const EpidemicParams& params,
                              const Eigen::VectorXd& p) {
    const int n = g.node_count();
    Eigen::VectorXd out(n);
    for (int i = 0; i < n; ++i) {
        double pressure = 0.0;
        for (const auto& [j, w] : g.in_edges(i)) pressure += w * p(j);
        out(i) = (1.0 - p(i)) * params.beta(i) * pressure - params.delta(i) * p(i);
    }
    return out;
}

Eigen::VectorXd meanfield_rhs_matrix(const WeightedDigraph& g,
                                     const EpidemicParams& params,
                                     const Eigen::VectorXd& p) {
    Eigen::MatrixXd ba = params.beta.asDiagonal() * g.adjacency_matrix();
    Eigen::VectorXd bap = ba * p;
    return bap - params.delta.cwiseProduct(p) - p.cwiseProduct(bap);
}

Trajectory integrate_meanfield(const WeightedDigraph& g, const EpidemicParams& params,
                               const Eigen::VectorXd& p0, double t_end, double tol,
                               int save_points) {
    validate_params(g, params);
    if (p0.size() != g.node_count() ||
        (p0.array() < 0.0).any() || (p0.array() > 1.0).any())
        throw InputError("p0 must lie in [0,1]^n");
    Trajectory traj = detail::integrate_rk45(
        [&](const Eigen::VectorXd& p) { return meanfield_rhs(g, params, p); }, p0,
        t_end, tol, save_points);
    for (Eigen::VectorXd& p : traj.states)
        p = p.cwiseMax(0.0).cwiseMin(1.0);
    return traj;
}

Trajectory integrate_linearized(const WeightedDigraph& g, const EpidemicParams& params,
                                const Eigen::VectorXd& p0, double t_end, double tol,
                                int save_points) {
    validate_params(g, params);
    if (p0.size() != g.node_count() || (p0.array() < 0.0).any())
        throw InputError("p0 must be nonnegative");
    Eigen::MatrixXd sys = params.beta.asDiagonal() * g.adjacency_matrix();
    sys -= Eigen::MatrixXd(params.delta.asDiagonal());
    Trajectory traj = detail::integrate_rk45(
        [&](const Eigen::VectorXd& p) -> Eigen::VectorXd { return sys * p; }, p0,
        t_end, tol, save_points);
    for (Eigen::VectorXd& p : traj.states) p = p.cwiseMax(0.0);
    return traj;
}

double decay_rate_estimate(const Trajectory& traj, double window_lo,
                           double window_hi) {
    if (!(window_hi > window_lo))
        throw InputError("decay_rate_estimate: empty window");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int count = 0;
    double first_norm = -1.0, last_norm = -1.0;
    for (size_t k = 0; k < traj.times.size(); ++k) {
        double t = traj.times[k];
        if (t < window_lo || t > window_hi) continue;
        double nrm = traj.states[k].norm();
        if (!(nrm > 0.0))
            throw InputError("decay_rate_estimate: trajectory norm vanishes "
                             "inside the window");
        if (first_norm < 0.0) first_norm = nrm;
        last_norm = nrm;
        double ln = std::log(nrm);
        sx += t;
        sy += ln;
        sxx += t * t;
        sxy += t * ln;
        ++count;
    }
    if (count < 2)
        throw InputError("decay_rate_estimate: window contains fewer than two "
                         "saved points");
    double denom = count * sxx - sx * sx;
    double slope = (count * sxy - sx * sy) / denom;
    if (last_norm >= first_norm || slope >= 0.0)
        throw InputError("decay_rate_estimate: trajectory does not decay over "
                         "the window");
    return -slope;
}

}  // namespace netalloc
