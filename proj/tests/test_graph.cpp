#include <doctest.h>

#include <random>
#include <set>
#include <sstream>

#include "netalloc/errors.hpp"
#include "netalloc/graph.hpp"
#include "oracles.hpp"

using namespace netalloc;

TEST_CASE("load_edge_list parses a two-node cycle") {
    std::istringstream in("a,b,1.0\nb,a,1.0\n");
    WeightedDigraph g = load_edge_list(in);
    CHECK(g.node_count() == 2);
    CHECK(g.edges().size() == 2);
    CHECK(g.label(0) == "a");
    CHECK(g.label(1) == "b");
}

TEST_CASE("load_edge_list rejects bad input with line numbers") {
    std::istringstream zero("a,b,0.0\n");
    CHECK_THROWS_AS(load_edge_list(zero), InputError);

    std::istringstream dup("# comment\na,b,1.0\na,b,2.0\n");
    try {
        load_edge_list(dup);
        FAIL("duplicate edge accepted");
    } catch (const InputError& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }

    std::istringstream garbled("a,b\n");
    CHECK_THROWS_AS(load_edge_list(garbled), InputError);
    std::istringstream nonnum("a,b,alot\n");
    CHECK_THROWS_AS(load_edge_list(nonnum), InputError);
}

TEST_CASE("load_edge_list ids follow sorted label order regardless of file order") {
    std::istringstream in1("z,a,1.0\na,m,2.0\n");
    std::istringstream in2("a,m,2.0\nz,a,1.0\n");
    WeightedDigraph g1 = load_edge_list(in1);
    WeightedDigraph g2 = load_edge_list(in2);
    REQUIRE(g1.node_count() == 3);
    CHECK(g1.label(0) == "a");
    CHECK(g1.label(1) == "m");
    CHECK(g1.label(2) == "z");
    CHECK(g1.adjacency_matrix() == g2.adjacency_matrix());
}

TEST_CASE("load_edge_list at airport-network scale") {
    // 56 labels, 1843 distinct directed pairs.
    std::mt19937_64 rng(7);
    std::set<std::pair<int, int>> pairs;
    std::uniform_int_distribution<int> pick(0, 55);
    while (pairs.size() < 1843) {
        int s = pick(rng), d = pick(rng);
        if (s != d) pairs.insert({s, d});
    }
    std::ostringstream text;
    for (auto [s, d] : pairs)
        text << "ap" << s << ",ap" << d << "," << 0.1 + (s + d) * 0.01 << "\n";
    std::istringstream in(text.str());
    WeightedDigraph g = load_edge_list(in);
    CHECK(g.node_count() == 56);
    CHECK(g.edges().size() == 1843);
}

TEST_CASE("adjacency orientation: a(i,j) is the weight of edge j -> i") {
    WeightedDigraph g(2, {{0, 1, 3.5}});
    Eigen::MatrixXd a = g.adjacency_matrix();
    CHECK(a(1, 0) == 3.5);
    CHECK(a(0, 1) == 0.0);
}

TEST_CASE("scc: 3-cycle is one component") {
    WeightedDigraph g(3, {{0, 1, 1}, {1, 2, 1}, {2, 0, 1}});
    auto comps = strongly_connected_components(g);
    REQUIRE(comps.size() == 1);
    CHECK(comps[0] == std::vector<int>{0, 1, 2});
}

TEST_CASE("scc: feeder node is its own component, reverse-topological order") {
    // 2-cycle {0,1}, plus 2 -> 0 (node 2 has no in-edges).
    WeightedDigraph g(3, {{0, 1, 1}, {1, 0, 1}, {2, 0, 1}});
    auto comps = strongly_connected_components(g);
    REQUIRE(comps.size() == 2);
    CHECK(comps[0] == std::vector<int>{0, 1});
    CHECK(comps[1] == std::vector<int>{2});
}

TEST_CASE("scc matches the pairwise-reachability oracle on random digraphs") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        WeightedDigraph g = oracle::random_digraph(rng, 20, 0.12, false);
        auto got = strongly_connected_components(g);
        auto want = oracle::scc_by_reachability(g);
        auto norm = [](std::vector<std::vector<int>> cs) {
            for (auto& c : cs) std::sort(c.begin(), c.end());
            std::sort(cs.begin(), cs.end());
            return cs;
        };
        CHECK(norm(got) == norm(want));

        // Condensation acyclicity + emission order: cross-component edges
        // always point from later-emitted to earlier-emitted components.
        std::vector<int> comp_of(20);
        for (size_t c = 0; c < got.size(); ++c)
            for (int v : got[c]) comp_of[v] = static_cast<int>(c);
        for (const Edge& e : g.edges())
            if (comp_of[e.src] != comp_of[e.dst])
                CHECK(comp_of[e.dst] < comp_of[e.src]);
    }
}

TEST_CASE("zero_support_set: strongly connected graphs have no zero nodes") {
    WeightedDigraph g(3, {{0, 1, 2}, {1, 2, 0.5}, {2, 0, 1}});
    SupportSet s = zero_support_set(g);
    CHECK(s.zero_nodes.empty());
    CHECK(s.positive_nodes.size() == 3);
}

TEST_CASE("zero_support_set: upstream feeder has zero centrality") {
    // 2-cycle on {0,1} (unit weights) plus edge (v_2 -> v_0):
    // row relations v0 = v1 + v2, v1 = v0, v2 = 0.
    WeightedDigraph g(3, {{0, 1, 1}, {1, 0, 1}, {2, 0, 1}});
    SupportSet s = zero_support_set(g);
    CHECK(s.zero_nodes == std::vector<int>{2});

    Eigen::VectorXd v = oracle::dense_dominant_vector(g.adjacency_matrix());
    CHECK(std::abs(v(2)) < 1e-10);
    CHECK(v(0) > 1e-10);
    CHECK(v(1) > 1e-10);
}

TEST_CASE("zero_support_set: downstream node inherits support") {
    // 2-cycle on {0,1} plus edge (v_0 -> v_2).
    WeightedDigraph g(3, {{0, 1, 1}, {1, 0, 1}, {0, 2, 1}});
    SupportSet s = zero_support_set(g);
    CHECK(s.zero_nodes.empty());

    Eigen::VectorXd v = oracle::dense_dominant_vector(g.adjacency_matrix());
    for (int i = 0; i < 3; ++i) CHECK(v(i) > 1e-10);
}

TEST_CASE("zero_support_set rejects degenerate graphs") {
    CHECK_THROWS_AS(zero_support_set(WeightedDigraph(3, {})), InputError);
    // Acyclic: spectral radius zero.
    CHECK_THROWS_AS(zero_support_set(WeightedDigraph(3, {{0, 1, 1}, {1, 2, 1}})),
                    InputError);
}

TEST_CASE("zero_support_set agrees with the thresholded dense eigenvector") {
    std::mt19937_64 rng(101);
    int done = 0;
    while (done < 1000) {
        int n = 3 + static_cast<int>(rng() % 10);  // up to 12
        WeightedDigraph g = oracle::random_digraph(rng, n, 0.3);
        if (g.edges().empty()) continue;
        Eigen::MatrixXd a = g.adjacency_matrix();
        if (oracle::dense_lambda1(a) < 1e-6) continue;  // nilpotent-ish
        ++done;

        SupportSet s = zero_support_set(g);
        Eigen::VectorXd v = oracle::dense_dominant_vector(a);
        std::vector<int> zero_numeric;
        for (int i = 0; i < n; ++i)
            if (std::abs(v(i)) < 1e-10) zero_numeric.push_back(i);
        CHECK(zero_numeric == s.zero_nodes);
    }
}

TEST_CASE("weighted degrees") {
    WeightedDigraph two(2, {{0, 1, 3}, {1, 0, 3}});
    CHECK(weighted_in_degree(two).isApprox(Eigen::Vector2d(3, 3)));

    WeightedDigraph iso(3, {{0, 1, 2}});
    CHECK(weighted_in_degree(iso)(2) == 0.0);
    CHECK(weighted_out_degree(iso)(2) == 0.0);

    std::mt19937_64 rng(5);
    WeightedDigraph g = oracle::random_digraph(rng, 9, 0.4);
    Eigen::MatrixXd a = g.adjacency_matrix();
    CHECK(weighted_in_degree(g).isApprox(a.rowwise().sum(), 1e-14));
    CHECK(weighted_out_degree(g).isApprox(a.colwise().sum().transpose(), 1e-14));
}

TEST_CASE("pagerank: symmetry, hub dominance, dense-solve oracle") {
    WeightedDigraph cyc(2, {{0, 1, 1}, {1, 0, 1}});
    Eigen::VectorXd r = pagerank(cyc);
    CHECK(r(0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(r(1) == doctest::Approx(0.5).epsilon(1e-12));

    // Star pointing into the hub (node 0); spokes keep out-degree by the
    // dangling patch on the hub.
    WeightedDigraph star(4, {{1, 0, 1}, {2, 0, 1}, {3, 0, 1}});
    Eigen::VectorXd rs = pagerank(star);
    CHECK(rs(0) > rs(1));
    CHECK(rs(0) > rs(2));
    CHECK(rs(0) > rs(3));

    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 20; ++trial) {
        WeightedDigraph g = oracle::random_digraph(rng, 8, 0.35);
        const int n = g.node_count();
        const double alpha = 0.85;
        Eigen::VectorXd dout = weighted_out_degree(g);
        Eigen::MatrixXd m = g.adjacency_matrix();
        for (int j = 0; j < n; ++j) {
            if (dout(j) > 0.0)
                m.col(j) /= dout(j);
            else
                m.col(j).setConstant(1.0 / n);
        }
        Eigen::VectorXd direct =
            (Eigen::MatrixXd::Identity(n, n) - alpha * m)
                .partialPivLu()
                .solve(Eigen::VectorXd::Ones(n));
        direct /= direct.sum();
        Eigen::VectorXd got = pagerank(g, alpha);
        CHECK((got - direct).lpNorm<Eigen::Infinity>() < 1e-10);
    }
}
