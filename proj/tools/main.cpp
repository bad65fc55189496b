// netalloc command-line front-end: graph analysis, protection-resource
// allocation, epidemic simulation, and budget sweeps.
#include <omp.h>

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "netalloc/allocate.hpp"
#include "netalloc/dynamics.hpp"
#include "netalloc/errors.hpp"
#include "netalloc/graph.hpp"
#include "netalloc/io.hpp"
#include "netalloc/spectral.hpp"

namespace fs = std::filesystem;
using namespace netalloc;

namespace {

constexpr int kExitInfeasible = 2;
constexpr int kExitNoConvergence = 3;
constexpr int kExitInputError = 4;

struct CommonOpts {
    std::string graph_path;
    std::string params_path;
    std::string out_dir = ".";
    std::string vax_cost_path;
    std::string antidote_cost_path;
    double tol_opt = 1e-8;
    double tol_feas = 1e-8;
    std::uint64_t seed = 0;
};

void ensure_out_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw InputError("cannot create output directory: " + dir);
}

CostModel load_costs(const WeightedDigraph& g, const std::vector<NodeBounds>& bounds,
                     const CommonOpts& opts) {
    std::map<std::string, std::vector<std::pair<double, double>>> vax, anti;
    if (!opts.vax_cost_path.empty()) vax = load_cost_samples(opts.vax_cost_path);
    if (!opts.antidote_cost_path.empty())
        anti = load_cost_samples(opts.antidote_cost_path);
    return build_cost_model(g, bounds, vax, anti);
}

std::vector<ManifestEntry> base_entries(const CommonOpts& opts) {
    return {{"tol_opt", format_real(opts.tol_opt)},
            {"tol_feas", format_real(opts.tol_feas)},
            {"seed", std::to_string(opts.seed)}};
}

std::vector<std::string> input_files(const CommonOpts& opts) {
    std::vector<std::string> files;
    if (!opts.graph_path.empty()) files.push_back(opts.graph_path);
    if (!opts.params_path.empty()) files.push_back(opts.params_path);
    if (!opts.vax_cost_path.empty()) files.push_back(opts.vax_cost_path);
    if (!opts.antidote_cost_path.empty()) files.push_back(opts.antidote_cost_path);
    return files;
}

int run_analyze(const CommonOpts& opts) {
    ensure_out_dir(opts.out_dir);
    WeightedDigraph g = load_edge_list_file(opts.graph_path);
    const int n = g.node_count();

    auto comps = strongly_connected_components(g);
    bool strongly_connected = comps.size() == 1;
    double rho = g.edges().empty() ? 0.0 : dominant_pair(g.adjacency_matrix()).lambda1;
    Eigen::VectorXd din = weighted_in_degree(g);
    Eigen::VectorXd dout = weighted_out_degree(g);
    Eigen::VectorXd pr = pagerank(g);

    SupportSet support;
    if (!g.edges().empty() && rho > 0.0) support = zero_support_set(g);
    std::vector<char> in_zero(n, 0);
    for (int v : support.zero_nodes) in_zero[v] = 1;

    std::ostringstream nodes;
    nodes << "label,weighted_in_degree,weighted_out_degree,pagerank,zero_support\n";
    for (int v = 0; v < n; ++v)
        nodes << g.label(v) << ',' << format_real(din(v)) << ','
              << format_real(dout(v)) << ',' << format_real(pr(v)) << ','
              << int(in_zero[v]) << '\n';
    write_text_file((fs::path(opts.out_dir) / "analyze_nodes.csv").string(),
                    nodes.str());

    nlohmann::json summary;
    summary["n"] = n;
    summary["edges"] = g.edges().size();
    summary["strongly_connected"] = strongly_connected;
    summary["scc_count"] = comps.size();
    summary["spectral_radius"] = rho;
    summary["zero_support_labels"] = nlohmann::json::array();
    for (int v : support.zero_nodes)
        summary["zero_support_labels"].push_back(g.label(v));
    write_text_file((fs::path(opts.out_dir) / "analyze_summary.json").string(),
                    summary.dump(2) + "\n");
    write_text_file((fs::path(opts.out_dir) / "manifest.json").string(),
                    manifest_json("analyze", base_entries(opts), input_files(opts)));

    std::cout << "n=" << n << " edges=" << g.edges().size()
              << " strongly_connected=" << (strongly_connected ? "yes" : "no")
              << " rho=" << format_real(rho) << " |Z|=" << support.zero_nodes.size()
              << "\n";
    return 0;
}

int run_allocate(const CommonOpts& opts, bool rate_problem, double eps_bar,
                 double budget) {
    ensure_out_dir(opts.out_dir);
    WeightedDigraph g = load_edge_list_file(opts.graph_path);
    auto bounds = load_params_file(opts.params_path, g);
    CostModel costs = load_costs(g, bounds, opts);

    SolveOptions sopts;
    sopts.opt_tol = opts.tol_opt;
    sopts.feas_tol = opts.tol_feas;

    Allocation a = rate_problem
                       ? solve_rate_allocation(g, bounds, costs, eps_bar, sopts)
                       : solve_budget_allocation(g, bounds, costs, budget, sopts);

    write_allocation_csv((fs::path(opts.out_dir) / "allocation.csv").string(), g, a);
    write_scatter_files(opts.out_dir, g, a);
    write_text_file(
        (fs::path(opts.out_dir) / "summary.json").string(),
        allocation_summary_json(
            a, rate_problem ? "rate-constrained" : "budget-constrained",
            rate_problem ? std::optional<double>(eps_bar) : std::nullopt,
            rate_problem ? std::nullopt : std::optional<double>(budget)));
    auto entries = base_entries(opts);
    if (rate_problem)
        entries.push_back({"eps_bar", format_real(eps_bar)});
    else
        entries.push_back({"budget", format_real(budget)});
    write_text_file((fs::path(opts.out_dir) / "manifest.json").string(),
                    manifest_json(rate_problem ? "allocate-rate" : "allocate-budget",
                                  entries, input_files(opts)));

    std::cout << "status="
              << (a.status == SolveStatus::optimal ? "optimal" : "max_iter")
              << " epsilon_achieved=" << format_real(a.epsilon_achieved)
              << " total_cost=" << format_real(a.total_cost)
              << " lambda1_check=" << format_real(a.lambda1_check) << "\n";
    return a.status == SolveStatus::optimal ? 0 : kExitNoConvergence;
}

// Rates come either from an allocation table (beta_star/delta_star) or a
// plain `label,beta,delta` file.
EpidemicParams load_rates(const std::string& path, const WeightedDigraph& g) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open rates file: " + path);
    std::map<std::string, int> id;
    for (int v = 0; v < g.node_count(); ++v) id[g.label(v)] = v;

    EpidemicParams params{Eigen::VectorXd::Zero(g.node_count()),
                          Eigen::VectorXd::Zero(g.node_count())};
    std::vector<char> seen(g.node_count(), 0);
    std::string line;
    int lineno = 0;
    bool header_checked = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::stringstream ss(line);
        std::vector<std::string> fields;
        std::string f;
        while (std::getline(ss, f, ',')) fields.push_back(f);
        if (!header_checked) {
            header_checked = true;
            if (fields.size() >= 3 && (fields[1] == "beta" || fields[1] == "beta_star"))
                continue;  // header row
        }
        if (fields.size() < 3)
            throw InputError("rates line " + std::to_string(lineno) +
                             ": expected `label,beta,delta`");
        auto it = id.find(fields[0]);
        if (it == id.end())
            throw InputError("rates line " + std::to_string(lineno) +
                             ": unknown node `" + fields[0] + "`");
        try {
            params.beta(it->second) = std::stod(fields[1]);
            params.delta(it->second) = std::stod(fields[2]);
        } catch (const std::exception&) {
            throw InputError("rates line " + std::to_string(lineno) +
                             ": cannot parse rates");
        }
        seen[it->second] = 1;
    }
    for (int v = 0; v < g.node_count(); ++v)
        if (!seen[v]) throw InputError("rates file missing node `" + g.label(v) + "`");
    return params;
}

int run_simulate(const CommonOpts& opts, const std::string& rates_path, double p0,
                 const std::string& x0_spec, double t_end, double tol, int trials,
                 int save_points) {
    ensure_out_dir(opts.out_dir);
    WeightedDigraph g = load_edge_list_file(opts.graph_path);
    EpidemicParams params = load_rates(rates_path, g);
    validate_params(g, params);
    const int n = g.node_count();
    if (!(p0 >= 0.0 && p0 <= 1.0)) throw InputError("--p0 must lie in [0,1]");

    Eigen::VectorXd p0v = Eigen::VectorXd::Constant(n, p0);
    Trajectory mf = integrate_meanfield(g, params, p0v, t_end, tol, save_points);
    write_trajectory_csv((fs::path(opts.out_dir) / "meanfield.csv").string(), g, mf);
    Trajectory lin = integrate_linearized(g, params, p0v, t_end, tol, save_points);
    write_trajectory_csv((fs::path(opts.out_dir) / "linearized.csv").string(), g, lin);

    if (trials > 0) {
        std::vector<std::uint8_t> x0(n, 0);
        if (x0_spec == "all") {
            std::fill(x0.begin(), x0.end(), 1);
        } else if (x0_spec != "none") {
            std::map<std::string, int> id;
            for (int v = 0; v < n; ++v) id[g.label(v)] = v;
            std::stringstream ss(x0_spec);
            std::string label;
            while (std::getline(ss, label, ',')) {
                auto it = id.find(label);
                if (it == id.end())
                    throw InputError("--x0: unknown node `" + label + "`");
                x0[it->second] = 1;
            }
        }
        Trajectory mc = simulate_stochastic(g, params, x0, t_end, trials, opts.seed,
                                            save_points);
        write_trajectory_csv((fs::path(opts.out_dir) / "montecarlo.csv").string(), g,
                             mc);
    }

    auto entries = base_entries(opts);
    entries.push_back({"t_end", format_real(t_end)});
    entries.push_back({"tol", format_real(tol)});
    entries.push_back({"p0", format_real(p0)});
    entries.push_back({"x0", x0_spec});
    entries.push_back({"trials", std::to_string(trials)});
    entries.push_back({"save_points", std::to_string(save_points)});
    std::vector<std::string> files = {opts.graph_path, rates_path};
    write_text_file((fs::path(opts.out_dir) / "manifest.json").string(),
                    manifest_json("simulate", entries, files));
    std::cout << "wrote " << (trials > 0 ? 3 : 2) << " trajectories to "
              << opts.out_dir << "\n";
    return 0;
}

int run_sweep(const CommonOpts& opts, const std::string& budgets_csv) {
    ensure_out_dir(opts.out_dir);
    WeightedDigraph g = load_edge_list_file(opts.graph_path);
    auto bounds = load_params_file(opts.params_path, g);
    CostModel costs = load_costs(g, bounds, opts);

    std::vector<double> budgets;
    std::stringstream ss(budgets_csv);
    std::string tok;
    while (std::getline(ss, tok, ','))
        if (!tok.empty()) budgets.push_back(std::stod(tok));
    if (budgets.empty()) throw InputError("--budgets: no values given");

    SolveOptions sopts;
    sopts.opt_tol = opts.tol_opt;
    sopts.feas_tol = opts.tol_feas;

    struct Row {
        double budget = 0, eps = 0, cost = 0;
        std::string status;
    };
    std::vector<Row> rows(budgets.size());
    // Independent instances; deterministic row order regardless of schedule.
#pragma omp parallel for schedule(dynamic)
    for (std::size_t k = 0; k < budgets.size(); ++k) {
        Row row;
        row.budget = budgets[k];
        try {
            Allocation a = solve_budget_allocation(g, bounds, costs, budgets[k], sopts);
            row.eps = a.epsilon_achieved;
            row.cost = a.total_cost;
            row.status = a.status == SolveStatus::optimal ? "optimal" : "max_iter";
        } catch (const InfeasibleError&) {
            row.status = "infeasible";
        }
        rows[k] = row;
    }

    std::ostringstream out;
    out << "budget,epsilon_achieved,total_cost,status\n";
    for (const Row& r : rows)
        out << format_real(r.budget) << ',' << format_real(r.eps) << ','
            << format_real(r.cost) << ',' << r.status << '\n';
    write_text_file((fs::path(opts.out_dir) / "sweep.csv").string(), out.str());
    auto entries = base_entries(opts);
    entries.push_back({"budgets", budgets_csv});
    write_text_file((fs::path(opts.out_dir) / "manifest.json").string(),
                    manifest_json("sweep", entries, input_files(opts)));
    std::cout << "swept " << budgets.size() << " budgets\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Protection-resource allocation on directed contact networks"};
    app.require_subcommand(1);

    CommonOpts opts;
    double eps_bar = 0.0, budget = 0.0;
    double p0 = 0.5, t_end = 50.0, sim_tol = 1e-8;
    int trials = 0, save_points = 200;
    std::string rates_path, x0_spec = "all", budgets_csv;

    auto add_common = [&](CLI::App* cmd, bool needs_params) {
        cmd->add_option("--graph", opts.graph_path, "edge-list file")->required();
        if (needs_params)
            cmd->add_option("--params", opts.params_path,
                            "per-node rate bounds file")
                ->required();
        cmd->add_option("--out", opts.out_dir, "output directory");
        cmd->add_option("--seed", opts.seed, "RNG seed");
        cmd->add_option("--tol-opt", opts.tol_opt, "solver optimality tolerance");
        cmd->add_option("--tol-feas", opts.tol_feas, "solver feasibility tolerance");
        cmd->add_option("--vax-costs", opts.vax_cost_path,
                        "sampled vaccination-cost overrides (label,rate,cost)");
        cmd->add_option("--antidote-costs", opts.antidote_cost_path,
                        "sampled antidote-cost overrides (label,rate,cost)");
    };

    CLI::App* analyze = app.add_subcommand("analyze", "structural graph report");
    add_common(analyze, false);

    CLI::App* arate = app.add_subcommand("allocate-rate",
                                         "cheapest allocation for a decay rate");
    add_common(arate, true);
    arate->add_option("--eps-bar", eps_bar, "target exponential decay rate")
        ->required();

    CLI::App* abudget = app.add_subcommand("allocate-budget",
                                           "best decay rate within a budget");
    add_common(abudget, true);
    abudget->add_option("--budget", budget, "total budget")->required();

    CLI::App* sim = app.add_subcommand("simulate", "epidemic dynamics for given rates");
    add_common(sim, false);
    sim->add_option("--rates", rates_path,
                    "rates file (label,beta,delta) or allocation.csv")
        ->required();
    sim->add_option("--p0", p0, "uniform initial infection probability");
    sim->add_option("--x0", x0_spec, "MC initial state: all|none|label list");
    sim->add_option("--t-end", t_end, "time horizon");
    sim->add_option("--tol", sim_tol, "integrator tolerance");
    sim->add_option("--trials", trials, "Monte-Carlo trials (0 = skip)");
    sim->add_option("--save-points", save_points, "trajectory grid size");

    CLI::App* sweep = app.add_subcommand("sweep", "budget sweep");
    add_common(sweep, true);
    sweep->add_option("--budgets", budgets_csv, "comma-separated budgets")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : kExitInputError;
    }

    try {
        if (analyze->parsed()) return run_analyze(opts);
        if (arate->parsed()) return run_allocate(opts, true, eps_bar, 0.0);
        if (abudget->parsed()) return run_allocate(opts, false, 0.0, budget);
        if (sim->parsed())
            return run_simulate(opts, rates_path, p0, x0_spec, t_end, sim_tol,
                                trials, save_points);
        if (sweep->parsed()) return run_sweep(opts, budgets_csv);
    } catch (const InfeasibleError& e) {
        std::cerr << "infeasible: " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const ConvergenceError& e) {
        std::cerr << "no convergence: " << e.what() << "\n";
        return kExitNoConvergence;
    } catch (const InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitInputError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
