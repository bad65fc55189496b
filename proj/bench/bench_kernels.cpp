// Wall-clock comparison of the OpenMP kernels against their serial
// reference implementations: the event-driven Monte-Carlo simulator
// (parallel over trials) and the 2^n generator application (gather vs
// scatter form).
#include <omp.h>

#include <chrono>
#include <cstdio>
#include <random>

#include "netalloc/dynamics.hpp"
#include "netalloc/graph.hpp"

using namespace netalloc;
namespace chrono = std::chrono;

namespace {

double seconds_since(chrono::steady_clock::time_point t0) {
    return chrono::duration<double>(chrono::steady_clock::now() - t0).count();
}

WeightedDigraph random_graph(std::mt19937_64& rng, int n, double p) {
    std::uniform_real_distribution<double> u(0.0, 1.0), w(0.2, 1.5);
    std::vector<Edge> edges;
    for (int i = 0; i < n; ++i) {
        edges.push_back({i, (i + 1) % n, w(rng)});
        for (int j = 0; j < n; ++j)
            if (j != i && j != (i + 1) % n && u(rng) < p)
                edges.push_back({i, j, w(rng)});
    }
    return WeightedDigraph(n, std::move(edges));
}

}  // namespace

int main() {
    std::mt19937_64 rng(12345);
    std::printf("threads: %d\n\n", omp_get_max_threads());

    {
        const int n = 24, trials = 60000;
        WeightedDigraph g = random_graph(rng, n, 0.15);
        EpidemicParams params{Eigen::VectorXd::Constant(n, 0.08),
                              Eigen::VectorXd::Constant(n, 0.5)};
        std::vector<std::uint8_t> x0(n, 1);

        auto t0 = chrono::steady_clock::now();
        Trajectory ser = simulate_stochastic(g, params, x0, 8.0, trials, 42, 100,
                                             /*parallel=*/false);
        double t_ser = seconds_since(t0);

        t0 = chrono::steady_clock::now();
        Trajectory par = simulate_stochastic(g, params, x0, 8.0, trials, 42, 100,
                                             /*parallel=*/true);
        double t_par = seconds_since(t0);

        bool identical = true;
        for (size_t k = 0; k < ser.states.size(); ++k)
            if (ser.states[k] != par.states[k]) identical = false;
        std::printf("monte-carlo  n=%d trials=%d   serial %.3fs   openmp %.3fs"
                    "   speedup %.2fx   identical %s\n",
                    n, trials, t_ser, t_par, t_ser / t_par,
                    identical ? "yes" : "NO");
    }

    {
        const int n = 12, reps = 200;
        WeightedDigraph g = random_graph(rng, n, 0.3);
        EpidemicParams params{Eigen::VectorXd::Constant(n, 0.1),
                              Eigen::VectorXd::Constant(n, 0.6)};
        CtmcModel model(g, params);
        Eigen::VectorXd pi = Eigen::VectorXd::Random(model.state_count()).cwiseAbs();
        pi /= pi.sum();
        Eigen::VectorXd out;

        auto t0 = chrono::steady_clock::now();
        for (int r = 0; r < reps; ++r) ctmc_apply_serial(model, pi, out);
        double t_ser = seconds_since(t0);

        t0 = chrono::steady_clock::now();
        for (int r = 0; r < reps; ++r) ctmc_apply(model, pi, out);
        double t_par = seconds_since(t0);

        std::printf("ctmc matvec  n=%d (2^%d states) x%d   scatter %.3fs"
                    "   gather+omp %.3fs   speedup %.2fx\n",
                    n, n, reps, t_ser, t_par, t_ser / t_par);
    }
    return 0;
}
