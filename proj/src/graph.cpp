#include "netalloc/graph.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <sstream>

#include "netalloc/errors.hpp"
#include "netalloc/spectral.hpp"

namespace netalloc {

WeightedDigraph::WeightedDigraph(int n, std::vector<Edge> edges,
                                 std::vector<std::string> labels)
    : n_(n), edges_(std::move(edges)), labels_(std::move(labels)) {
    if (n_ < 0) throw InputError("node count must be nonnegative");
    if (labels_.empty()) {
        labels_.resize(n_);
        for (int i = 0; i < n_; ++i) labels_[i] = std::to_string(i);
    }
    if (static_cast<int>(labels_.size()) != n_)
        throw InputError("label count does not match node count");

    in_adj_.resize(n_);
    out_adj_.resize(n_);
    std::set<std::pair<int, int>> seen;
    for (const Edge& e : edges_) {
        if (e.src < 0 || e.src >= n_ || e.dst < 0 || e.dst >= n_)
            throw InputError("edge endpoint out of range");
        if (!(e.weight > 0.0))
            throw InputError("edge weight must be strictly positive");
        if (!seen.insert({e.src, e.dst}).second)
            throw InputError("duplicate edge (" + labels_[e.src] + "," +
                             labels_[e.dst] + ")");
        in_adj_[e.dst].push_back({e.src, e.weight});
        out_adj_[e.src].push_back({e.dst, e.weight});
    }
}

Eigen::MatrixXd WeightedDigraph::adjacency_matrix() const {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n_, n_);
    for (const Edge& e : edges_) a(e.dst, e.src) = e.weight;
    return a;
}

WeightedDigraph WeightedDigraph::induced_subgraph(const std::vector<int>& keep) const {
    std::vector<int> remap(n_, -1);
    std::vector<std::string> labels;
    labels.reserve(keep.size());
    for (size_t k = 0; k < keep.size(); ++k) {
        remap[keep[k]] = static_cast<int>(k);
        labels.push_back(labels_[keep[k]]);
    }
    std::vector<Edge> edges;
    for (const Edge& e : edges_) {
        if (remap[e.src] >= 0 && remap[e.dst] >= 0)
            edges.push_back({remap[e.src], remap[e.dst], e.weight});
    }
    return WeightedDigraph(static_cast<int>(keep.size()), std::move(edges),
                           std::move(labels));
}

namespace {

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

WeightedDigraph load_edge_list(std::istream& in) {
    struct RawEdge {
        std::string src, dst;
        double weight;
        int line;
    };
    std::vector<RawEdge> raw;
    std::set<std::string> label_set;

    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string s = trim(line);
        if (s.empty() || s[0] == '#') continue;
        size_t c1 = s.find(',');
        size_t c2 = (c1 == std::string::npos) ? std::string::npos : s.find(',', c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos)
            throw InputError("line " + std::to_string(lineno) +
                             ": expected `src,dst,weight`");
        std::string src = trim(s.substr(0, c1));
        std::string dst = trim(s.substr(c1 + 1, c2 - c1 - 1));
        std::string wtext = trim(s.substr(c2 + 1));
        if (src.empty() || dst.empty())
            throw InputError("line " + std::to_string(lineno) + ": empty node label");
        double w = 0.0;
        try {
            size_t pos = 0;
            w = std::stod(wtext, &pos);
            if (pos != wtext.size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw InputError("line " + std::to_string(lineno) +
                             ": cannot parse weight `" + wtext + "`");
        }
        if (!(w > 0.0))
            throw InputError("line " + std::to_string(lineno) +
                             ": weight must be strictly positive");
        raw.push_back({src, dst, w, lineno});
        label_set.insert(src);
        label_set.insert(dst);
    }

    std::vector<std::string> labels(label_set.begin(), label_set.end());
    std::map<std::string, int> id;
    for (size_t i = 0; i < labels.size(); ++i) id[labels[i]] = static_cast<int>(i);

    std::set<std::pair<int, int>> seen;
    std::vector<Edge> edges;
    edges.reserve(raw.size());
    for (const RawEdge& r : raw) {
        int s = id[r.src], d = id[r.dst];
        if (!seen.insert({s, d}).second)
            throw InputError("line " + std::to_string(r.line) + ": duplicate edge (" +
                             r.src + "," + r.dst + ")");
        edges.push_back({s, d, r.weight});
    }
    const int n = static_cast<int>(labels.size());
    return WeightedDigraph(n, std::move(edges), std::move(labels));
}

WeightedDigraph load_edge_list_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open graph file: " + path);
    return load_edge_list(in);
}

// Iterative Tarjan. Components are emitted in reverse topological order of
// the condensation: everything reachable from a component is emitted before
// the component itself.
std::vector<std::vector<int>> strongly_connected_components(const WeightedDigraph& g) {
    const int n = g.node_count();
    std::vector<int> index(n, -1), low(n, 0), on_stack(n, 0);
    std::vector<int> stack;
    std::vector<std::vector<int>> comps;
    int next_index = 0;

    struct Frame {
        int v;
        size_t edge;
    };
    std::vector<Frame> call;

    for (int root = 0; root < n; ++root) {
        if (index[root] != -1) continue;
        call.push_back({root, 0});
        while (!call.empty()) {
            Frame& f = call.back();
            int v = f.v;
            if (f.edge == 0) {
                index[v] = low[v] = next_index++;
                stack.push_back(v);
                on_stack[v] = 1;
            }
            bool descended = false;
            const auto& out = g.out_edges(v);
            while (f.edge < out.size()) {
                int w = out[f.edge].first;
                ++f.edge;
                if (index[w] == -1) {
                    call.push_back({w, 0});
                    descended = true;
                    break;
                }
                if (on_stack[w]) low[v] = std::min(low[v], index[w]);
            }
            if (descended) continue;
            if (low[v] == index[v]) {
                std::vector<int> comp;
                int w;
                do {
                    w = stack.back();
                    stack.pop_back();
                    on_stack[w] = 0;
                    comp.push_back(w);
                } while (w != v);
                std::sort(comp.begin(), comp.end());
                comps.push_back(std::move(comp));
            }
            call.pop_back();
            if (!call.empty()) {
                int parent = call.back().v;
                low[parent] = std::min(low[parent], low[v]);
            }
        }
    }
    return comps;
}

SupportSet zero_support_set(const WeightedDigraph& g) {
    if (g.edges().empty())
        throw InputError("zero_support_set: graph has no edges, dominant "
                         "eigenvector support is undefined");
    const int n = g.node_count();
    auto comps = strongly_connected_components(g);

    // Internal spectral radius of each SCC. Singletons without a self-loop
    // contribute zero without an eigensolve.
    std::vector<double> rho(comps.size(), 0.0);
    Eigen::MatrixXd a = g.adjacency_matrix();
    for (size_t c = 0; c < comps.size(); ++c) {
        const auto& comp = comps[c];
        if (comp.size() == 1) {
            rho[c] = a(comp[0], comp[0]);
            continue;
        }
        Eigen::MatrixXd block(comp.size(), comp.size());
        for (size_t i = 0; i < comp.size(); ++i)
            for (size_t j = 0; j < comp.size(); ++j)
                block(i, j) = a(comp[i], comp[j]);
        rho[c] = dominant_pair(block).lambda1;
    }
    double rho_max = *std::max_element(rho.begin(), rho.end());
    if (!(rho_max > 0.0))
        throw InputError("zero_support_set: spectral radius is zero (acyclic "
                         "graph), dominant eigenvector support is undefined");

    // Basic classes: SCCs whose internal radius ties the global one. The
    // tolerance absorbs power-iteration error; exact ties (e.g. two equal
    // cycles) are both kept, matching the maximal-support eigenvector.
    const double tie_tol = 1e-8 * rho_max;
    std::vector<int> frontier;
    for (size_t c = 0; c < comps.size(); ++c)
        if (rho[c] >= rho_max - tie_tol)
            frontier.insert(frontier.end(), comps[c].begin(), comps[c].end());

    // BFS along influence direction: edge (v_j -> v_i) pushes support j -> i.
    std::vector<char> positive(n, 0);
    std::vector<int> queue = frontier;
    for (int v : queue) positive[v] = 1;
    for (size_t qi = 0; qi < queue.size(); ++qi) {
        int v = queue[qi];
        for (const auto& [w, wt] : g.out_edges(v)) {
            (void)wt;
            if (!positive[w]) {
                positive[w] = 1;
                queue.push_back(w);
            }
        }
    }

    SupportSet s;
    for (int v = 0; v < n; ++v)
        (positive[v] ? s.positive_nodes : s.zero_nodes).push_back(v);
    return s;
}

Eigen::VectorXd weighted_in_degree(const WeightedDigraph& g) {
    Eigen::VectorXd d = Eigen::VectorXd::Zero(g.node_count());
    for (const Edge& e : g.edges()) d(e.dst) += e.weight;
    return d;
}

Eigen::VectorXd weighted_out_degree(const WeightedDigraph& g) {
    Eigen::VectorXd d = Eigen::VectorXd::Zero(g.node_count());
    for (const Edge& e : g.edges()) d(e.src) += e.weight;
    return d;
}

Eigen::VectorXd pagerank(const WeightedDigraph& g, double alpha, double tol,
                         int max_iter) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw InputError("pagerank: alpha must lie in (0,1)");
    const int n = g.node_count();
    if (n == 0) return Eigen::VectorXd();

    // M = A * diag(1/deg_out); zero out-degree columns become uniform.
    Eigen::VectorXd dout = weighted_out_degree(g);
    Eigen::MatrixXd m = g.adjacency_matrix();
    for (int j = 0; j < n; ++j) {
        if (dout(j) > 0.0)
            m.col(j) /= dout(j);
        else
            m.col(j).setConstant(1.0 / n);
    }

    Eigen::VectorXd r = Eigen::VectorXd::Ones(n);
    for (int it = 0; it < max_iter; ++it) {
        Eigen::VectorXd next = Eigen::VectorXd::Ones(n) + alpha * (m * r);
        double diff = (next - r).lpNorm<Eigen::Infinity>();
        r = next;
        if (diff <= tol * r.lpNorm<Eigen::Infinity>()) {
            return r / r.sum();
        }
    }
    throw ConvergenceError("pagerank: fixed-point iteration did not converge",
                           0.0);
}

}  // namespace netalloc
