#pragma once

/*
 * Exact configuration search over the decomposed singular-point graph.
 *
 * Each edge carries an unsigned height difference; a configuration signs
 * every edge (+1: the higher-indexed endpoint is higher).  Within a free
 * part only the cycles constrain the signs, so the search minimizes the
 * total absolute cycle residual: fix a BFS spanning tree of the part,
 * propagate height deltas for a candidate tree signing, and charge every
 * non-tree edge the gap between its signed weight and the delta its
 * endpoints already imply.  That objective is a reconstruction-consistency
 * surrogate; it reproduces the observable structure of the underlying
 * method (exactly two optimal configurations per free part, one the
 * reverse of the other, and independent bridge signs) without committing
 * to any particular published reduction.
 *
 * The search is branch-and-bound over tree-edge signs only: once the
 * deltas are fixed, each non-tree edge picks its best sign independently,
 * so the state space is 2^(vertices-1) per part rather than 2^edges.
 * Partial assignments are pruned when their accumulated residual already
 * exceeds the best feasible solution, or when a closed cycle alone
 * exceeds the feasibility tolerance.  Ties are broken toward the
 * lexicographically smallest sign vector (-1 < +1, edge-index order), so
 * results are deterministic and reverse pairs have a canonical member.
 */

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "sfs/config_graph.hpp"

namespace sfs {

enum class UnitKind { free_edge, free_part, global };

inline const char* to_string(UnitKind k) {
    switch (k) {
        case UnitKind::free_edge: return "free_edge";
        case UnitKind::free_part: return "free_part";
        case UnitKind::global: return "global";
    }
    return "?";
}

/*
 * One independent binary ambiguity: a unit of the decomposition together
 * with the two full configurations it admits.  candidates[1] equals
 * candidates[0] with the unit's edges flipped and is identical elsewhere.
 */
struct AmbiguityClass {
    UnitKind unit = UnitKind::free_edge;
    std::vector<int> edges;     // edge indices forming the unit
    std::vector<int> vertices;  // vertices those edges touch, ascending
    std::array<Configuration, 2> candidates;
};

struct SolverReport {
    Configuration chosen;
    std::vector<AmbiguityClass> classes;
    std::vector<double> part_objective;  // parallel to dec.free_parts
    std::int64_t nodes_explored = 0;
    double wall_ms = 0.0;  // never serialized: reports must be byte-stable
};

namespace detail {

// Search state for one free part: spanning tree in BFS discovery order,
// with every non-tree edge attached to the tree step that closes it.
struct PartPlan {
    std::vector<int> verts;                      // part vertices, ascending
    std::vector<int> tree_edge;                  // edge index per tree step
    std::vector<int> tree_from, tree_to;         // oriented: to is discovered
    std::vector<std::vector<int>> closes_after;  // non-tree edges per step
    std::vector<int> nontree;                    // all non-tree edge indices
};

inline PartPlan plan_part(const ConfigGraph& g, const std::vector<int>& verts,
                          const std::vector<int>& edges) {
    PartPlan plan;
    plan.verts = verts;
    std::vector<int> local(g.vertices.size(), -1);
    for (size_t k = 0; k < verts.size(); ++k) local[verts[k]] = (int)k;

    // Adjacency restricted to the part, sorted so BFS discovery (and with
    // it the cycle basis and the meaning of the objective) is canonical.
    std::vector<std::vector<std::pair<int, int>>> adj(verts.size());
    for (int e : edges) {
        const GraphEdge& ge = g.edges[e];
        adj[local[ge.i]].push_back({ge.j, e});
        adj[local[ge.j]].push_back({ge.i, e});
    }
    for (auto& a : adj) std::sort(a.begin(), a.end());

    std::vector<char> seen(verts.size(), 0);
    std::vector<char> edge_used(g.edges.size(), 0);
    std::vector<int> discovered_at(verts.size(), -1);  // tree step, root = -1
    std::vector<int> queue = {verts.front()};
    seen[local[verts.front()]] = 1;
    for (size_t head = 0; head < queue.size(); ++head) {
        const int u = queue[head];
        for (auto [v, e] : adj[local[u]]) {
            if (seen[local[v]]) continue;
            seen[local[v]] = 1;
            edge_used[e] = 1;
            discovered_at[local[v]] = (int)plan.tree_edge.size();
            plan.tree_edge.push_back(e);
            plan.tree_from.push_back(u);
            plan.tree_to.push_back(v);
            queue.push_back(v);
        }
    }

    plan.closes_after.assign(plan.tree_edge.size(), {});
    for (int e : edges) {
        if (edge_used[e]) continue;
        plan.nontree.push_back(e);
        const GraphEdge& ge = g.edges[e];
        const int step = std::max(discovered_at[local[ge.i]], discovered_at[local[ge.j]]);
        // step == -1 would mean both endpoints are the root: a self-loop,
        // which GraphEdge construction forbids.
        plan.closes_after[step].push_back(e);
    }
    return plan;
}

struct PartSolution {
    std::vector<int> sign;  // parallel to the part's edge list (ascending)
    double objective = std::numeric_limits<double>::infinity();
    double max_residual = std::numeric_limits<double>::infinity();
    std::int64_t nodes = 0;
    bool found = false;
};

/*
 * Depth-first enumeration of tree signings.  `delta` holds the implied
 * height of each part vertex relative to the root; a non-tree edge closed
 * by the current step contributes min over its own sign of the cycle
 * residual, which is the exact completion (signs of distinct non-tree
 * edges never interact).
 */
struct PartSearch {
    const ConfigGraph& g;
    const PartPlan& plan;
    const std::vector<int>& edge_order;  // part edges ascending, for lex rank
    double tol;
    PartSolution best;
    std::vector<double> delta;
    std::vector<int> tree_sign;
    std::vector<int> lex_rank;  // edge index -> position in edge_order

    PartSearch(const ConfigGraph& gg, const PartPlan& p, const std::vector<int>& order,
               double cycle_tol)
        : g(gg), plan(p), edge_order(order), tol(cycle_tol) {
        delta.assign(gg.vertices.size(), 0.0);
        tree_sign.assign(p.tree_edge.size(), 0);
        lex_rank.assign(gg.edges.size(), -1);
        for (size_t k = 0; k < order.size(); ++k) lex_rank[order[k]] = (int)k;
    }

    std::vector<int> assemble(const std::vector<std::pair<int, int>>& nontree_signs) const {
        std::vector<int> sign(edge_order.size(), 0);
        for (size_t t = 0; t < plan.tree_edge.size(); ++t)
            sign[lex_rank[plan.tree_edge[t]]] = tree_sign[t];
        for (auto [e, s] : nontree_signs) sign[lex_rank[e]] = s;
        return sign;
    }

    void dfs(size_t step, double acc_sum, double acc_max,
             std::vector<std::pair<int, int>>& nontree_signs) {
        ++best.nodes;
        if (acc_max > tol) return;  // a closed cycle is already over budget
        if (best.found && acc_sum > best.objective) return;
        if (step == plan.tree_edge.size()) {
            std::vector<int> sign = assemble(nontree_signs);
            if (!best.found || acc_sum < best.objective ||
                (acc_sum == best.objective && sign < best.sign)) {
                best.found = true;
                best.objective = acc_sum;
                best.max_residual = acc_max;
                best.sign = std::move(sign);
            }
            return;
        }
        const int e = plan.tree_edge[step];
        const double w = g.edges[e].w;
        const int from = plan.tree_from[step], to = plan.tree_to[step];
        const int hi = g.edges[e].j;  // sign is +1 when the j endpoint is up
        for (int s : {-1, +1}) {
            tree_sign[step] = s;
            const double d = (to == hi) ? s * w : -s * w;
            delta[to] = delta[from] + d;
            double sum = acc_sum, mx = acc_max;
            const size_t mark = nontree_signs.size();
            for (int ne : plan.closes_after[step]) {
                const GraphEdge& ge = g.edges[ne];
                const double gap = delta[ge.j] - delta[ge.i];
                const double lo_res = std::abs(gap + ge.w);   // sign -1
                const double hi_res = std::abs(gap - ge.w);   // sign +1
                // ties prefer -1: lexicographically smaller
                const int ns = (lo_res <= hi_res) ? -1 : +1;
                const double res = std::min(lo_res, hi_res);
                nontree_signs.push_back({ne, ns});
                sum += res;
                mx = std::max(mx, res);
            }
            dfs(step + 1, sum, mx, nontree_signs);
            nontree_signs.resize(mark);
        }
    }
};

}  // namespace detail

/*
 * Exact per-part optimum under the cycle-residual objective.  Bridges are
 * signed +1 by convention (anchors may flip them later); every bridge and
 * every free part is reported as a two-candidate ambiguity class, since
 * the image constrains neither choice.  cycle_tol < 0 selects the same
 * automatic budget integrate_heights uses: 10% of the mean edge weight.
 */
inline SolverReport solve_configuration(const ConfigGraph& g, const Decomposition& dec,
                                        double cycle_tol = -1.0) {
    const auto t0 = std::chrono::steady_clock::now();
    if (g.vertices.empty()) throw bad_input_error("cannot solve an empty graph");
    for (const GraphEdge& e : g.edges)
        if (!(e.w >= 0.0) || !std::isfinite(e.w))
            throw bad_input_error("edge weights must be finite and non-negative");
    if (cycle_tol < 0.0) {
        double mean = 0.0;
        for (const GraphEdge& e : g.edges) mean += e.w;
        if (!g.edges.empty()) mean /= (double)g.edges.size();
        cycle_tol = 0.1 * mean;
    }

    SolverReport rep;
    rep.chosen.sign.assign(g.edges.size(), +1);

    for (size_t k = 0; k < dec.free_parts.size(); ++k) {
        std::vector<int> order = dec.part_edges[k];
        std::sort(order.begin(), order.end());
        detail::PartPlan plan = detail::plan_part(g, dec.free_parts[k], order);
        detail::PartSearch search(g, plan, order, cycle_tol);
        std::vector<std::pair<int, int>> scratch;
        search.dfs(0, 0.0, 0.0, scratch);
        rep.nodes_explored += search.best.nodes;
        if (!search.best.found)
            throw infeasible_configuration_error(
                "free part has no sign assignment closing its cycles within tolerance "
                "(inconsistent edge weights: bad image or wrong brightness ceiling)");
        rep.part_objective.push_back(search.best.objective);
        for (size_t t = 0; t < order.size(); ++t)
            rep.chosen.sign[order[t]] = search.best.sign[t];
    }

    // Ambiguity classes: bridges first, then parts, mirroring the
    // decomposition's deterministic order.  Candidate 0 is the chosen
    // configuration restricted to the unit; candidate 1 its reverse.
    const bool global_part = dec.free_edges.empty() && dec.free_parts.size() == 1;
    auto flip_unit = [&](const std::vector<int>& unit_edges) {
        Configuration c = rep.chosen;
        for (int e : unit_edges) c.sign[e] = -c.sign[e];
        return c;
    };
    for (int e : dec.free_edges) {
        AmbiguityClass cls;
        cls.unit = UnitKind::free_edge;
        cls.edges = {e};
        cls.vertices = {g.edges[e].i, g.edges[e].j};
        cls.candidates = {rep.chosen, flip_unit(cls.edges)};
        rep.classes.push_back(std::move(cls));
    }
    for (size_t k = 0; k < dec.free_parts.size(); ++k) {
        AmbiguityClass cls;
        cls.unit = global_part ? UnitKind::global : UnitKind::free_part;
        cls.edges = dec.part_edges[k];
        std::sort(cls.edges.begin(), cls.edges.end());
        cls.vertices = dec.free_parts[k];
        cls.candidates = {rep.chosen, flip_unit(cls.edges)};
        rep.classes.push_back(std::move(cls));
    }

    rep.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                      .count();
    return rep;
}

/*
 * All full configurations reachable by resolving each class either way:
 * class index is the bit position, bit value selects the candidate, masks
 * ascend, so the first entry is the solver's chosen configuration.
 */
inline std::vector<Configuration> enumerate_candidates(const SolverReport& rep, size_t limit) {
    if (limit < 1) throw bad_input_error("candidate limit must be at least 1");
    const size_t nclasses = rep.classes.size();
    std::vector<Configuration> out;
    const size_t total =
        nclasses >= 60 ? std::numeric_limits<size_t>::max() : (size_t{1} << nclasses);
    for (size_t mask = 0; mask < total && out.size() < limit; ++mask) {
        Configuration c = rep.chosen;
        for (size_t b = 0; b < nclasses; ++b)
            if (mask >> b & 1)
                for (int e : rep.classes[b].edges) c.sign[e] = -c.sign[e];
        out.push_back(std::move(c));
    }
    return out;
}

}  // namespace sfs
