// Event-driven simulation of the 2^n-state jump process. Exponential
// clocks with state-dependent rates: susceptible node i fires at
// beta_i * (infected in-pressure), infected node i recovers at delta_i.
// Next-event sampling is exact for the chain; no time discretization.
//
// Trials run independently, each on an RNG substream derived from
// (seed, trial). Tallies are integer counts per (grid point, node), so the
// merged result is identical no matter how trials are scheduled; the
// OpenMP and serial paths produce the same bytes.
#include <omp.h>

#include <cmath>
#include <random>

#include "netalloc/dynamics.hpp"
#include "netalloc/errors.hpp"

namespace netalloc {

namespace {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Uniform in (0,1]; exact given the engine stream, no library variance.
inline double uniform01(std::mt19937_64& rng) {
    return (static_cast<double>(rng() >> 11) + 1.0) * 0x1p-53;
}

struct TrialScratch {
    std::vector<std::uint8_t> state;
    std::vector<double> pressure;  // infected in-weight per node
    std::vector<double> rates;
};

void run_trial(const WeightedDigraph& g, const EpidemicParams& params,
               const std::vector<std::uint8_t>& x0, double t_end,
               int save_points, std::uint64_t trial_seed,
               TrialScratch& ws, std::vector<std::int64_t>& counts) {
    const int n = g.node_count();
    std::mt19937_64 rng(trial_seed);

    ws.state = x0;
    ws.pressure.assign(n, 0.0);
    ws.rates.assign(n, 0.0);
    for (int j = 0; j < n; ++j) {
        if (!ws.state[j]) continue;
        for (const auto& [i, w] : g.out_edges(j)) ws.pressure[i] += w;
    }
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        ws.rates[i] = ws.state[i] ? params.delta(i) : params.beta(i) * ws.pressure[i];
        total += ws.rates[i];
    }

    auto record_until = [&](int& grid_idx, double horizon) {
        while (grid_idx <= save_points &&
               t_end * grid_idx / save_points < horizon) {
            std::int64_t base = static_cast<std::int64_t>(grid_idx) * n;
            for (int i = 0; i < n; ++i) counts[base + i] += ws.state[i];
            ++grid_idx;
        }
    };

    double t = 0.0;
    int grid_idx = 0;
    while (true) {
        if (!(total > 0.0)) break;  // absorbed (all susceptible)
        double dt = -std::log(uniform01(rng)) / total;
        double t_next = t + dt;
        if (t_next > t_end) break;
        record_until(grid_idx, t_next);

        // Pick the firing node by cumulative rate, fixed scan order.
        double u = uniform01(rng) * total;
        int node = n - 1;
        double acc = 0.0;
        for (int i = 0; i < n; ++i) {
            acc += ws.rates[i];
            if (u <= acc) {
                node = i;
                break;
            }
        }

        bool newly_infected = !ws.state[node];
        ws.state[node] = newly_infected ? 1 : 0;
        double sign = newly_infected ? 1.0 : -1.0;
        for (const auto& [i, w] : g.out_edges(node)) {
            ws.pressure[i] += sign * w;
            if (ws.pressure[i] < 0.0) ws.pressure[i] = 0.0;
        }
        // Refresh affected rates and keep the running total exact enough;
        // rebuild the total from scratch to stop drift.
        ws.rates[node] = ws.state[node] ? params.delta(node)
                                        : params.beta(node) * ws.pressure[node];
        for (const auto& [i, w] : g.out_edges(node)) {
            (void)w;
            if (!ws.state[i]) ws.rates[i] = params.beta(i) * ws.pressure[i];
        }
        total = 0.0;
        for (int i = 0; i < n; ++i) total += ws.rates[i];
        t = t_next;
    }
    // Tail of the grid keeps the final (absorbed or t_end) state.
    record_until(grid_idx, std::nextafter(t_end, 2.0 * t_end + 1.0));
}

}  // namespace

Trajectory simulate_stochastic(const WeightedDigraph& g, const EpidemicParams& params,
                               const std::vector<std::uint8_t>& x0, double t_end,
                               int trials, std::uint64_t seed, int save_points,
                               bool parallel) {
    validate_params(g, params);
    const int n = g.node_count();
    if (static_cast<int>(x0.size()) != n)
        throw InputError("simulate_stochastic: x0 must have length n");
    if (trials < 1) throw InputError("simulate_stochastic: trials must be >= 1");
    if (!(t_end > 0.0)) throw InputError("simulate_stochastic: t_end must be positive");
    if (save_points < 1) throw InputError("simulate_stochastic: save_points >= 1");

    const std::int64_t cells = static_cast<std::int64_t>(save_points + 1) * n;
    std::vector<std::int64_t> counts(cells, 0);

#pragma omp parallel if (parallel)
    {
        std::vector<std::int64_t> local(cells, 0);
        TrialScratch ws;
#pragma omp for schedule(static) nowait
        for (int trial = 0; trial < trials; ++trial) {
            std::uint64_t ts = splitmix64(seed ^ splitmix64(0x5eed0000ull + trial));
            run_trial(g, params, x0, t_end, save_points, ts, ws, local);
        }
#pragma omp critical
        {
            for (std::int64_t c = 0; c < cells; ++c) counts[c] += local[c];
        }
    }

    Trajectory out;
    out.times.reserve(save_points + 1);
    out.states.reserve(save_points + 1);
    for (int gidx = 0; gidx <= save_points; ++gidx) {
        out.times.push_back(t_end * gidx / save_points);
        Eigen::VectorXd p(n);
        std::int64_t base = static_cast<std::int64_t>(gidx) * n;
        for (int i = 0; i < n; ++i)
            p(i) = static_cast<double>(counts[base + i]) / trials;
        out.states.push_back(std::move(p));
    }
    return out;
}

}  // namespace netalloc
