#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <queue>
#include <random>
#include <set>
#include <tuple>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "sfs/config_graph.hpp"
#include "sfs/solver.hpp"
#include "helpers.hpp"

using namespace sfs;

namespace {

// Hand-built graph for the pure graph algorithms; pixels are placeholders.
ConfigGraph make_graph(int n, const std::vector<std::tuple<int, int, double>>& edges) {
    ConfigGraph g;
    for (int i = 0; i < n; ++i) {
        SingularPoint p;
        p.id = i;
        p.pixel = Pixel{i, 0};
        p.brightness = 1.0;
        g.vertices.push_back(p);
    }
    for (const auto& [i, j, w] : edges) {
        GraphEdge e;
        e.i = std::min(i, j);
        e.j = std::max(i, j);
        e.w = w;
        g.edges.push_back(e);
    }
    std::sort(g.edges.begin(), g.edges.end(),
              [](const GraphEdge& a, const GraphEdge& b) {
                  return std::pair(a.i, a.j) < std::pair(b.i, b.j);
              });
    g.rebuild_adjacency();
    return g;
}

// Independent scorer for one part under one sign assignment: BFS spanning
// tree from the smallest part vertex over (neighbor, edge)-sorted adjacency,
// heights propagated from the root, every non-tree edge charged the gap
// between its signed weight and the height difference already implied.
// Returns {sum of residuals, max residual}.
std::pair<double, double> oracle_score(const ConfigGraph& g, const std::vector<int>& verts,
                                       const std::vector<int>& edges,
                                       const std::map<int, int>& sign) {
    std::map<int, std::vector<std::pair<int, int>>> adj;
    for (int v : verts) adj[v] = {};
    for (int e : edges) {
        adj[g.edges[e].i].push_back({g.edges[e].j, e});
        adj[g.edges[e].j].push_back({g.edges[e].i, e});
    }
    for (auto& [v, lst] : adj) std::sort(lst.begin(), lst.end());

    std::map<int, double> delta;
    std::set<int> tree_edges;
    std::queue<int> frontier;
    delta[verts.front()] = 0.0;
    frontier.push(verts.front());
    while (!frontier.empty()) {
        const int u = frontier.front();
        frontier.pop();
        for (auto [v, e] : adj[u]) {
            if (delta.count(v)) continue;
            const double step = sign.at(e) * g.edges[e].w;
            delta[v] = delta[u] + (g.edges[e].i == u ? step : -step);
            tree_edges.insert(e);
            frontier.push(v);
        }
    }

    double sum = 0.0, mx = 0.0;
    for (int e : edges) {
        if (tree_edges.count(e)) continue;
        const GraphEdge& ge = g.edges[e];
        const double res = std::abs(delta.at(ge.j) - delta.at(ge.i) - sign.at(e) * ge.w);
        sum += res;
        mx = std::max(mx, res);
    }
    return {sum, mx};
}

// All 2^k sign assignments of a part, exhaustively scored; returns the
// minimum objective and every sign vector attaining it (ascending edge
// order, mask bit b drives edge b, bit set = +1).
std::pair<double, std::vector<std::vector<int>>> oracle_optima(
    const ConfigGraph& g, const std::vector<int>& verts, std::vector<int> edges) {
    std::sort(edges.begin(), edges.end());
    double best = std::numeric_limits<double>::infinity();
    std::vector<std::vector<int>> argmin;
    for (size_t mask = 0; mask < (size_t{1} << edges.size()); ++mask) {
        std::map<int, int> sign;
        std::vector<int> vec;
        for (size_t b = 0; b < edges.size(); ++b) {
            const int s = (mask >> b & 1) ? +1 : -1;
            sign[edges[b]] = s;
            vec.push_back(s);
        }
        const double sum = oracle_score(g, verts, edges, sign).first;
        if (sum < best) {
            best = sum;
            argmin = {vec};
        } else if (sum == best) {
            argmin.push_back(vec);
        }
    }
    return {best, argmin};
}

// Random connected graph whose weights come from exact dyadic heights, so
// the true signing closes every cycle with residual exactly 0.0 and the
// optimum value is order-of-summation independent.
struct RandomScene {
    ConfigGraph g;
    std::vector<double> z;
};

RandomScene random_consistent_graph(std::mt19937& rng, int max_edges) {
    std::uniform_int_distribution<int> nv(2, 8);
    const int n = nv(rng);
    std::uniform_int_distribution<long> kz(0, (1L << 30) - 1);
    std::vector<double> z;
    std::set<long> used;
    while ((int)z.size() < n) {
        const long k = kz(rng);
        if (used.insert(k).second) z.push_back((double)k / (double)(1 << 20));
    }

    std::set<std::pair<int, int>> picked;
    std::vector<std::tuple<int, int, double>> edges;
    auto add = [&](int a, int b) {
        if (a > b) std::swap(a, b);
        if (a == b || !picked.insert({a, b}).second) return;
        edges.push_back({a, b, std::abs(z[b] - z[a])});
    };
    for (int v = 1; v < n; ++v) add(v, std::uniform_int_distribution<int>(0, v - 1)(rng));
    std::uniform_int_distribution<int> extra(0, std::max(0, max_edges - n + 1));
    std::uniform_int_distribution<int> anyv(0, n - 1);
    for (int t = extra(rng); t > 0 && (int)edges.size() < max_edges; --t)
        add(anyv(rng), anyv(rng));

    return {make_graph(n, edges), z};
}

}  // namespace

TEST_CASE("a single-edge graph yields one free-edge class with the positive sign chosen") {
    ConfigGraph g = make_graph(2, {{0, 1, 0.625}});
    Decomposition dec = decompose(g);
    SolverReport rep = solve_configuration(g, dec);

    REQUIRE(rep.chosen.sign == std::vector<int>{+1});
    REQUIRE(rep.part_objective.empty());
    REQUIRE(rep.classes.size() == 1);
    REQUIRE(rep.classes[0].unit == UnitKind::free_edge);
    REQUIRE(rep.classes[0].edges == std::vector<int>{0});
    REQUIRE(rep.classes[0].vertices == std::vector<int>{0, 1});
    REQUIRE(rep.classes[0].candidates[0].sign == std::vector<int>{+1});
    REQUIRE(rep.classes[0].candidates[1].sign == std::vector<int>{-1});

    const auto cands = enumerate_candidates(rep, 16);
    REQUIRE(cands.size() == 2);
    REQUIRE(cands[0] == rep.chosen);
    REQUIRE(cands[1] == reverse(rep.chosen));
}

TEST_CASE("a consistent triangle solves to the true signing or its reverse exactly") {
    // Heights 0, 0.75, 0.25 give weights that close the cycle bit-exactly
    // under signs (+,-,+); the solver canonicalizes ties to the smaller
    // sign vector, which is the reverse (-,+,-).
    ConfigGraph g = make_graph(3, {{0, 1, 0.75}, {1, 2, 0.5}, {0, 2, 0.25}});
    Decomposition dec = decompose(g);
    SolverReport rep = solve_configuration(g, dec);

    REQUIRE(rep.part_objective.size() == 1);
    REQUIRE(rep.part_objective[0] == 0.0);
    REQUIRE(rep.chosen.sign == std::vector<int>{-1, -1, +1});

    // the whole graph is one free part, so the class is global
    REQUIRE(rep.classes.size() == 1);
    REQUIRE(rep.classes[0].unit == UnitKind::global);
    REQUIRE(rep.classes[0].candidates[0] == rep.chosen);
    REQUIRE(rep.classes[0].candidates[1] == reverse(rep.chosen));

    // integration accepts the chosen configuration without complaint
    HeightAssignment ha = integrate_heights(g, rep.chosen, 0, 0.0);
    REQUIRE(ha.residual == 0.0);
}

TEST_CASE("two triangles joined by a bridge report three classes and eight candidates") {
    ConfigGraph g = make_graph(6, {{0, 1, 0.5},
                                   {1, 2, 0.5},
                                   {0, 2, 1.0},
                                   {2, 3, 0.25},
                                   {3, 4, 0.5},
                                   {4, 5, 0.25},
                                   {3, 5, 0.75}});
    Decomposition dec = decompose(g);
    REQUIRE(dec.free_edges.size() == 1);
    REQUIRE(dec.free_parts.size() == 2);

    SolverReport rep = solve_configuration(g, dec);
    REQUIRE(rep.classes.size() == 3);
    REQUIRE(rep.classes[0].unit == UnitKind::free_edge);
    REQUIRE(rep.classes[1].unit == UnitKind::free_part);
    REQUIRE(rep.classes[2].unit == UnitKind::free_part);
    const int bridge = rep.classes[0].edges[0];
    REQUIRE(rep.chosen.sign[bridge] == +1);

    auto cands = enumerate_candidates(rep, 100);
    REQUIRE(cands.size() == 8);
    std::set<std::vector<int>> distinct;
    for (const Configuration& c : cands) distinct.insert(c.sign);
    REQUIRE(distinct.size() == 8);

    // mask 0 is the chosen configuration; mask 1 flips exactly class 0
    REQUIRE(cands[0] == rep.chosen);
    Configuration flipped = rep.chosen;
    flipped.sign[bridge] = -flipped.sign[bridge];
    REQUIRE(cands[1] == flipped);

    REQUIRE(enumerate_candidates(rep, 3).size() == 3);
    REQUIRE_THROWS_AS(enumerate_candidates(rep, 0), bad_input_error);
}

TEST_CASE("the solver matches an exhaustive oracle on random consistent graphs") {
    std::mt19937 rng(20260815);
    for (int trial = 0; trial < 100; ++trial) {
        RandomScene scene = random_consistent_graph(rng, 12);
        const ConfigGraph& g = scene.g;
        Decomposition dec = decompose(g);
        SolverReport rep = solve_configuration(g, dec);

        for (int e : dec.free_edges) REQUIRE(rep.chosen.sign[e] == +1);

        for (size_t k = 0; k < dec.free_parts.size(); ++k) {
            auto [best, argmin] = oracle_optima(g, dec.free_parts[k], dec.part_edges[k]);

            // exact agreement with the exhaustive optimum (both are 0.0
            // because the weights come from exact dyadic heights)
            REQUIRE(rep.part_objective[k] == best);
            REQUIRE(best == 0.0);

            // exactly two optimal configurations, mutual reverses
            REQUIRE(argmin.size() == 2);
            std::vector<int> flipped = argmin[0];
            for (int& s : flipped) s = -s;
            REQUIRE(flipped == argmin[1]);

            // the solver picked the lexicographically smaller of the two
            std::vector<int> order = dec.part_edges[k];
            std::sort(order.begin(), order.end());
            std::vector<int> got;
            for (int e : order) got.push_back(rep.chosen.sign[e]);
            REQUIRE(got == std::min(argmin[0], argmin[1]));
        }

        // the chosen configuration integrates without an infeasibility throw
        for (const auto& part : dec.free_parts) {
            HeightAssignment ha = integrate_heights(g, rep.chosen, part.front(), 0.0);
            REQUIRE(ha.residual == 0.0);
        }
    }
}

TEST_CASE("cycle weights that cannot close raise the infeasibility error") {
    ConfigGraph g = make_graph(3, {{0, 1, 1.0}, {1, 2, 1.0}, {0, 2, 5.0}});
    Decomposition dec = decompose(g);
    REQUIRE_THROWS_AS(solve_configuration(g, dec), infeasible_configuration_error);
    REQUIRE_THROWS_WITH(solve_configuration(g, dec),
                        Catch::Matchers::ContainsSubstring("closing its cycles"));
    // a generous explicit tolerance accepts the least-bad assignment
    SolverReport rep = solve_configuration(g, dec, 3.0);
    REQUIRE(rep.part_objective[0] == 3.0);
}

TEST_CASE("a dense ten-vertex part stays well inside the interactive budget") {
    std::mt19937 rng(7);
    std::vector<double> z;
    std::set<long> used;
    std::uniform_int_distribution<long> kz(0, (1L << 30) - 1);
    while (z.size() < 10) {
        const long k = kz(rng);
        if (used.insert(k).second) z.push_back((double)k / (double)(1 << 20));
    }
    std::vector<std::tuple<int, int, double>> edges;
    for (int i = 0; i < 10; ++i)
        for (int j = i + 1; j < 10; ++j) edges.push_back({i, j, std::abs(z[j] - z[i])});
    ConfigGraph g = make_graph(10, edges);
    Decomposition dec = decompose(g);
    REQUIRE(dec.free_parts.size() == 1);

    const auto t0 = std::chrono::steady_clock::now();
    SolverReport rep = solve_configuration(g, dec);
    const double ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    REQUIRE(ms < 1000.0);
    REQUIRE(rep.nodes_explored > 0);
    REQUIRE(rep.part_objective[0] == 0.0);
    REQUIRE(rep.classes.size() == 1);
    REQUIRE(rep.classes[0].unit == UnitKind::global);
}

TEST_CASE("a vertex-only graph has no classes and one trivial candidate") {
    ConfigGraph g = make_graph(1, {});
    Decomposition dec = decompose(g);
    SolverReport rep = solve_configuration(g, dec);
    REQUIRE(rep.chosen.sign.empty());
    REQUIRE(rep.classes.empty());
    const auto cands = enumerate_candidates(rep, 8);
    REQUIRE(cands.size() == 1);
    REQUIRE(cands[0].sign.empty());
}
