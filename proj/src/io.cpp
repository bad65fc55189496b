#include "netalloc/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "netalloc/errors.hpp"

namespace netalloc {

std::string format_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

namespace {

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) out.push_back(trim(field));
    return out;
}

double parse_real(const std::string& text, int lineno) {
    try {
        size_t pos = 0;
        double v = std::stod(text, &pos);
        if (pos != text.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw InputError("line " + std::to_string(lineno) +
                         ": cannot parse number `" + text + "`");
    }
}

}  // namespace

std::vector<NodeBounds> load_params_file(const std::string& path,
                                         const WeightedDigraph& g) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open params file: " + path);

    std::map<std::string, int> id;
    for (int v = 0; v < g.node_count(); ++v) id[g.label(v)] = v;

    std::vector<NodeBounds> bounds(g.node_count());
    std::vector<char> seen(g.node_count(), 0);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string s = trim(line);
        if (s.empty() || s[0] == '#') continue;
        auto fields = split_csv(s);
        if (fields.size() != 5)
            throw InputError("line " + std::to_string(lineno) +
                             ": expected `label,beta_lo,beta_hi,delta_lo,delta_hi`");
        auto it = id.find(fields[0]);
        if (it == id.end())
            throw InputError("line " + std::to_string(lineno) + ": unknown node `" +
                             fields[0] + "`");
        if (seen[it->second])
            throw InputError("line " + std::to_string(lineno) + ": duplicate node `" +
                             fields[0] + "`");
        seen[it->second] = 1;
        bounds[it->second] = {parse_real(fields[1], lineno), parse_real(fields[2], lineno),
                              parse_real(fields[3], lineno), parse_real(fields[4], lineno)};
    }
    for (int v = 0; v < g.node_count(); ++v)
        if (!seen[v])
            throw InputError("params file missing node `" + g.label(v) + "`");
    validate_bounds(bounds);
    return bounds;
}

std::map<std::string, std::vector<std::pair<double, double>>>
load_cost_samples(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open cost-sample file: " + path);
    std::map<std::string, std::vector<std::pair<double, double>>> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string s = trim(line);
        if (s.empty() || s[0] == '#') continue;
        auto fields = split_csv(s);
        if (fields.size() != 3)
            throw InputError("line " + std::to_string(lineno) +
                             ": expected `label,rate,cost`");
        out[fields[0]].push_back(
            {parse_real(fields[1], lineno), parse_real(fields[2], lineno)});
    }
    return out;
}

namespace {

CostCurve fit_cost_curve(const std::vector<std::pair<double, double>>& samples,
                         bool in_one_minus, const std::string& label) {
    std::vector<std::pair<Eigen::VectorXd, double>> pts;
    for (const auto& [rate, cost] : samples) {
        double arg = in_one_minus ? 1.0 - rate : rate;
        if (!(arg > 0.0))
            throw InputError("cost samples for `" + label +
                             "`: rate outside the representable range");
        if (!(cost > 0.0))
            throw InputError("cost samples for `" + label +
                             "`: sampled costs must be positive");
        Eigen::VectorXd x(1);
        x(0) = arg;
        pts.push_back({x, cost});
    }
    double best_err = 1e300;
    Posynomial best;
    for (int k = 1; k <= 4; ++k) {
        if (static_cast<int>(pts.size()) < 2 * k) break;
        double err = 0.0;
        Posynomial p = fit_posynomial(pts, k, &err);
        if (err < best_err) {
            best_err = err;
            best = p;
        }
        if (best_err <= 1e-6) break;
    }
    if (best_err > 1e-4)
        throw InputError("cost samples for `" + label +
                         "` cannot be fitted within 1e-4 relative error");
    return CostCurve{best, 0.0};
}

}  // namespace

CostModel build_cost_model(
    const WeightedDigraph& g, const std::vector<NodeBounds>& bounds,
    const std::map<std::string, std::vector<std::pair<double, double>>>& vax_samples,
    const std::map<std::string, std::vector<std::pair<double, double>>>& antidote_samples) {
    CostModel model = default_costs(bounds);
    for (int v = 0; v < g.node_count(); ++v) {
        auto vi = vax_samples.find(g.label(v));
        if (vi != vax_samples.end())
            model.vax[v] = fit_cost_curve(vi->second, false, g.label(v));
        auto ai = antidote_samples.find(g.label(v));
        if (ai != antidote_samples.end())
            model.antidote[v] = fit_cost_curve(ai->second, true, g.label(v));
    }
    model.validate(bounds);
    return model;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write file: " + path);
    out << content;
}

void write_allocation_csv(const std::string& path, const WeightedDigraph& g,
                          const Allocation& a) {
    std::ostringstream s;
    s << "label,beta_star,delta_star,vax_spend,antidote_spend\n";
    for (int v = 0; v < g.node_count(); ++v) {
        s << g.label(v) << ',' << format_real(a.beta_star(v)) << ','
          << format_real(a.delta_star(v)) << ',' << format_real(a.vax_spend(v))
          << ',' << format_real(a.antidote_spend(v)) << '\n';
    }
    write_text_file(path, s.str());
}

void write_scatter_files(const std::string& dir, const WeightedDigraph& g,
                         const Allocation& a) {
    namespace fs = std::filesystem;
    Eigen::VectorXd indeg = weighted_in_degree(g);
    Eigen::VectorXd pr = pagerank(g);

    std::ostringstream s1;
    s1 << "label,antidote_spend,vax_spend\n";
    for (int v = 0; v < g.node_count(); ++v)
        s1 << g.label(v) << ',' << format_real(a.antidote_spend(v)) << ','
           << format_real(a.vax_spend(v)) << '\n';
    write_text_file((fs::path(dir) / "scatter_correction_vs_prevention.csv").string(),
                    s1.str());

    std::ostringstream s2;
    s2 << "label,weighted_in_degree,vax_spend,antidote_spend,total_spend\n";
    for (int v = 0; v < g.node_count(); ++v)
        s2 << g.label(v) << ',' << format_real(indeg(v)) << ','
           << format_real(a.vax_spend(v)) << ',' << format_real(a.antidote_spend(v))
           << ',' << format_real(a.vax_spend(v) + a.antidote_spend(v)) << '\n';
    write_text_file((fs::path(dir) / "scatter_spend_vs_indegree.csv").string(),
                    s2.str());

    std::ostringstream s3;
    s3 << "label,pagerank,vax_spend,antidote_spend,total_spend\n";
    for (int v = 0; v < g.node_count(); ++v)
        s3 << g.label(v) << ',' << format_real(pr(v)) << ','
           << format_real(a.vax_spend(v)) << ',' << format_real(a.antidote_spend(v))
           << ',' << format_real(a.vax_spend(v) + a.antidote_spend(v)) << '\n';
    write_text_file((fs::path(dir) / "scatter_spend_vs_pagerank.csv").string(),
                    s3.str());
}

void write_trajectory_csv(const std::string& path, const WeightedDigraph& g,
                          const Trajectory& t) {
    std::ostringstream s;
    s << "t";
    for (int v = 0; v < g.node_count(); ++v) s << ",p_" << g.label(v);
    s << '\n';
    for (size_t k = 0; k < t.times.size(); ++k) {
        s << format_real(t.times[k]);
        for (int v = 0; v < g.node_count(); ++v)
            s << ',' << format_real(t.states[k](v));
        s << '\n';
    }
    write_text_file(path, s.str());
}

std::string allocation_summary_json(const Allocation& a, const std::string& kind,
                                    std::optional<double> eps_bar,
                                    std::optional<double> budget) {
    nlohmann::json j;
    j["problem"] = kind;
    if (eps_bar) j["eps_bar"] = *eps_bar;
    if (budget) j["budget"] = *budget;
    j["epsilon_achieved"] = a.epsilon_achieved;
    j["lambda1_check"] = a.lambda1_check;
    j["total_cost"] = a.total_cost;
    j["total_cost_raw"] = a.total_cost_raw;
    j["stable"] = a.lambda1_check < 0.0;
    switch (a.status) {
        case SolveStatus::optimal: j["solver_status"] = "optimal"; break;
        case SolveStatus::infeasible: j["solver_status"] = "infeasible"; break;
        case SolveStatus::max_iter: j["solver_status"] = "max_iter"; break;
    }
    j["solver_iterations"] = a.iterations;
    return j.dump(2) + "\n";
}

namespace {

std::string fnv1a_hex(const std::string& data) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace

std::string manifest_json(const std::string& command,
                          const std::vector<ManifestEntry>& entries,
                          const std::vector<std::string>& input_files) {
    nlohmann::json j;
    j["command"] = command;
    j["netalloc_version"] = "1.0.0";
#if defined(__VERSION__)
    j["compiler"] = __VERSION__;
#endif
    for (const ManifestEntry& e : entries) j["config"][e.key] = e.value;
    for (const std::string& path : input_files) {
        std::ifstream in(path, std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        j["inputs"][path] = fnv1a_hex(ss.str());
    }
    return j.dump(2) + "\n";
}

}  // namespace netalloc
