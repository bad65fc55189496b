#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <vector>

namespace netalloc {

struct Edge {
    int src = 0;
    int dst = 0;
    double weight = 0.0;
};

// Weighted directed graph. Immutable after construction.
//
// Adjacency convention used everywhere in this project: the matrix entry
// a(i,j) is the weight of the edge (v_j -> v_i), i.e. row i collects the
// in-edges of node i. Influence therefore flows along edge direction
// j -> i, and A*u propagates values from a node to the nodes it points to.
class WeightedDigraph {
public:
    WeightedDigraph() : WeightedDigraph(0, {}) {}
    WeightedDigraph(int n, std::vector<Edge> edges,
                    std::vector<std::string> labels = {});

    int node_count() const { return n_; }
    const std::vector<Edge>& edges() const { return edges_; }
    const std::vector<std::string>& labels() const { return labels_; }
    const std::string& label(int v) const { return labels_[v]; }

    // Nodes j with an edge j -> v (the in-neighborhood of v), with weights.
    const std::vector<std::pair<int, double>>& in_edges(int v) const {
        return in_adj_[v];
    }
    // Nodes i with an edge v -> i, with weights.
    const std::vector<std::pair<int, double>>& out_edges(int v) const {
        return out_adj_[v];
    }

    // Dense adjacency matrix A with A(i,j) = weight of edge (v_j -> v_i).
    Eigen::MatrixXd adjacency_matrix() const;

    // Induced subgraph on `keep` (ids are remapped to 0..keep.size()-1 in
    // the order given; labels carried over).
    WeightedDigraph induced_subgraph(const std::vector<int>& keep) const;

private:
    int n_;
    std::vector<Edge> edges_;
    std::vector<std::string> labels_;
    std::vector<std::vector<std::pair<int, double>>> in_adj_;
    std::vector<std::vector<std::pair<int, double>>> out_adj_;
};

// Partition of the node set by the support of the dominant eigenvector of
// the adjacency matrix. zero_nodes is empty iff every node is reachable
// from a basic class (in particular for strongly connected graphs).
struct SupportSet {
    std::vector<int> zero_nodes;
    std::vector<int> positive_nodes;
};

// Parses lines of the form `src,dst,weight`. `#` starts a comment, blank
// lines are skipped. Node ids are assigned in sorted label order so the
// resulting graph is independent of line order.
// Throws InputError (with the offending line number) on non-positive
// weights, duplicate (src,dst) pairs, or malformed lines.
WeightedDigraph load_edge_list(std::istream& in);
WeightedDigraph load_edge_list_file(const std::string& path);

// Strongly connected components, Tarjan; components are emitted in reverse
// topological order of the condensation (a component is listed before any
// component with an edge into it).
std::vector<std::vector<int>> strongly_connected_components(const WeightedDigraph& g);

// Support set of the dominant eigenvector of A_G, computed structurally:
// basic classes are the SCCs whose internal spectral radius equals rho(A_G),
// and a node has positive eigenvector centrality iff it is reachable from a
// basic class along edge direction. Requires at least one edge and
// rho(A_G) > 0; throws InputError otherwise.
SupportSet zero_support_set(const WeightedDigraph& g);

Eigen::VectorXd weighted_in_degree(const WeightedDigraph& g);
Eigen::VectorXd weighted_out_degree(const WeightedDigraph& g);

// PageRank r = (I - alpha * A * diag(1/deg_out))^-1 * 1, normalized to sum
// one. Columns with zero out-degree are replaced by the uniform
// distribution. Throws ConvergenceError if the fixed-point iteration does
// not settle.
Eigen::VectorXd pagerank(const WeightedDigraph& g, double alpha = 0.85,
                         double tol = 1e-13, int max_iter = 100000);

}  // namespace netalloc
