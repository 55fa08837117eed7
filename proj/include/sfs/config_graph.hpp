#pragma once
// The configuration graph: vertices are detected singular points, and an edge
// joins two points exactly when the cheapest eikonal path between them is
// monotone (it never climbs through a third bright plateau or flat stretch).
// Each edge weight is the eikonal distance itself, which for a monotone
// characteristic equals the absolute height difference of its endpoints.
//
// The sign of every edge — does depth rise or fall from the lower-id endpoint
// to the higher-id one — is what the image cannot tell us.  The decomposition
// below splits the graph into the units over which that sign freedom is
// coupled: bridges ("free edges") flip independently, and 2-edge-connected
// blocks ("free parts") flip only as a whole because their cycles must stay
// consistent.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include "sfs/core.hpp"
#include "sfs/fmm.hpp"
#include "sfs/singular_points.hpp"

namespace sfs {

struct GraphEdge {
    int i = 0, j = 0;  // vertex ids, i < j
    double w = 0.0;    // eikonal distance between the endpoint pixels
    GridPath path;     // traced pixels from vertex i to vertex j
};

struct ConfigGraph {
    std::vector<SingularPoint> vertices;
    std::vector<GraphEdge> edges;
    // adjacency[v] lists (neighbor, edge index) sorted by neighbor id
    std::vector<std::vector<std::pair<int, int>>> adjacency;
    double eps_sing = 0.02;
    double e_max = 1.0;

    int edge_between(int a, int b) const {
        if (a > b) std::swap(a, b);
        for (std::size_t e = 0; e < edges.size(); ++e)
            if (edges[e].i == a && edges[e].j == b) return static_cast<int>(e);
        return -1;
    }

    void rebuild_adjacency() {
        adjacency.assign(vertices.size(), {});
        for (std::size_t e = 0; e < edges.size(); ++e) {
            adjacency[edges[e].i].push_back({edges[e].j, static_cast<int>(e)});
            adjacency[edges[e].j].push_back({edges[e].i, static_cast<int>(e)});
        }
        for (auto& lst : adjacency) std::sort(lst.begin(), lst.end());
    }
};

// Sign per edge, aligned with ConfigGraph::edges.  +1 means depth increases
// from the lower-id endpoint to the higher-id endpoint, -1 the opposite.
struct Configuration {
    std::vector<int> sign;

    bool operator==(const Configuration& o) const { return sign == o.sign; }
};

inline Configuration reverse(const Configuration& cfg) {
    Configuration out = cfg;
    for (int& s : out.sign) s = -s;
    return out;
}

struct Decomposition {
    std::vector<int> free_edges;               // edge indices that are bridges
    std::vector<std::vector<int>> free_parts;  // sorted vertex ids per block
    std::vector<std::vector<int>> part_edges;  // edge indices per free part
    // links between units that share a cut vertex; unit k is free_edges[k]
    // for k < free_edges.size(), else free_parts[k - free_edges.size()]
    std::vector<std::pair<int, int>> unit_links;

    int unit_count() const {
        return static_cast<int>(free_edges.size() + free_parts.size());
    }
};

struct HeightAssignment {
    std::map<int, double> z;  // vertex id -> depth; only the root's component
    double residual = 0.0;    // worst cycle inconsistency among non-tree edges
};

inline ConfigGraph build_graph(const IrradianceImage& img, const DetectionResult& det,
                               double eps_sing = 0.02, double path_tol = 0.05) {
    img.grid.validate();
    if (det.points.empty()) throw bad_input_error("graph needs at least one singular point");
    if (!(path_tol > 0.0)) throw bad_input_error("path_tol must be positive");
    for (std::size_t i = 0; i < det.points.size(); ++i)
        if (det.points[i].id != static_cast<int>(i))
            throw bad_input_error("singular point ids must be dense and ordered");

    ConfigGraph g;
    g.vertices = det.points;
    g.eps_sing = eps_sing;
    g.e_max = img.e_max;

    const int n = static_cast<int>(det.points.size());
    SlownessField slow = slowness_from_image(img, eps_sing);

    // one eikonal solve per vertex; every pair is then a lookup plus a trace
    std::vector<DistanceField> dist;
    dist.reserve(n);
    for (int i = 0; i < n; ++i) dist.push_back(fmm_distance(slow, det.points[i].pixel));

    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const double w_ij = dist[i].at(det.points[j].pixel);
            const double w_ji = dist[j].at(det.points[i].pixel);
            if (!std::isfinite(w_ij) || !std::isfinite(w_ji)) continue;

            // the two directional solves must agree on the distance; a large
            // gap means the cheap path is an artifact (e.g. it rides a
            // clamped plateau differently per direction), not a clean
            // monotone characteristic
            const double scale = std::max(w_ij, w_ji);
            if (scale > 0.0 && std::abs(w_ij - w_ji) > path_tol * scale) continue;

            GridPath path = trace_path(dist[i], det.points[j].pixel);

            std::vector<Pixel> foreign;
            for (int k = 0; k < n; ++k) {
                if (k == i || k == j) continue;
                foreign.insert(foreign.end(), det.plateaus[k].begin(),
                               det.plateaus[k].end());
            }
            if (!is_monotone(path, img, foreign, eps_sing)) continue;

            GraphEdge e;
            e.i = i;
            e.j = j;
            e.w = w_ij;
            e.path = std::move(path);
            g.edges.push_back(std::move(e));
        }
    }
    g.rebuild_adjacency();
    return g;
}

/* Bridges and biconnected blocks in one depth-first pass.  Every edge lands
 * in exactly one block; single-edge blocks are the bridges (free edges) and
 * larger blocks are the free parts, which is precisely the "connected by one
 * and only one path or vertex" split: blocks meet only at cut vertices. */
inline Decomposition decompose(const ConfigGraph& g) {
    const int n = static_cast<int>(g.vertices.size());
    const int m = static_cast<int>(g.edges.size());
    std::vector<int> disc(n, 0), low(n, 0);
    std::vector<int> estack;
    int timer = 0;

    std::vector<std::vector<int>> blocks;
    std::function<void(int, int)> dfs = [&](int u, int parent_edge) {
        disc[u] = low[u] = ++timer;
        for (const auto& [v, e] : g.adjacency[u]) {
            if (e == parent_edge) continue;
            if (disc[v] == 0) {
                estack.push_back(e);
                dfs(v, e);
                low[u] = std::min(low[u], low[v]);
                if (low[v] >= disc[u]) {
                    std::vector<int> block;
                    while (true) {
                        const int top = estack.back();
                        estack.pop_back();
                        block.push_back(top);
                        if (top == e) break;
                    }
                    std::sort(block.begin(), block.end());
                    blocks.push_back(std::move(block));
                }
            } else if (disc[v] < disc[u]) {
                estack.push_back(e);
                low[u] = std::min(low[u], disc[v]);
            }
        }
    };
    for (int u = 0; u < n; ++u)
        if (disc[u] == 0 && !g.adjacency[u].empty()) dfs(u, -1);
    (void)m;

    Decomposition dec;
    for (auto& block : blocks) {
        if (block.size() == 1) {
            dec.free_edges.push_back(block[0]);
        } else {
            std::vector<int> verts;
            for (int e : block) {
                verts.push_back(g.edges[e].i);
                verts.push_back(g.edges[e].j);
            }
            std::sort(verts.begin(), verts.end());
            verts.erase(std::unique(verts.begin(), verts.end()), verts.end());
            dec.free_parts.push_back(std::move(verts));
            dec.part_edges.push_back(std::move(block));
        }
    }
    std::sort(dec.free_edges.begin(), dec.free_edges.end());

    std::vector<std::size_t> order(dec.free_parts.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return dec.free_parts[a] < dec.free_parts[b];
    });
    std::vector<std::vector<int>> parts, pedges;
    for (std::size_t idx : order) {
        parts.push_back(std::move(dec.free_parts[idx]));
        pedges.push_back(std::move(dec.part_edges[idx]));
    }
    dec.free_parts = std::move(parts);
    dec.part_edges = std::move(pedges);

    // units touch iff they share a (cut) vertex
    const int units = dec.unit_count();
    auto unit_vertices = [&](int u) -> std::vector<int> {
        if (u < static_cast<int>(dec.free_edges.size())) {
            const GraphEdge& e = g.edges[dec.free_edges[u]];
            return {e.i, e.j};
        }
        return dec.free_parts[u - dec.free_edges.size()];
    };
    for (int a = 0; a < units; ++a) {
        const std::vector<int> va = unit_vertices(a);
        for (int b = a + 1; b < units; ++b) {
            const std::vector<int> vb = unit_vertices(b);
            bool shared = false;
            for (int v : va)
                if (std::binary_search(vb.begin(), vb.end(), v)) shared = true;
            if (shared) dec.unit_links.push_back({a, b});
        }
    }
    return dec;
}

inline HeightAssignment integrate_heights(const ConfigGraph& g, const Configuration& cfg,
                                          int root, double z_root,
                                          double cycle_tol = -1.0) {
    const int n = static_cast<int>(g.vertices.size());
    if (root < 0 || root >= n) throw bad_input_error("integration root is not a vertex");
    if (cfg.sign.size() != g.edges.size())
        throw bad_input_error("configuration does not cover the edge set");
    for (int s : cfg.sign)
        if (s != 1 && s != -1) throw bad_input_error("edge signs must be +1 or -1");

    if (cycle_tol < 0.0) {
        double mean = 0.0;
        for (const GraphEdge& e : g.edges) mean += e.w;
        if (!g.edges.empty()) mean /= static_cast<double>(g.edges.size());
        cycle_tol = 0.1 * mean;
    }

    // Depths are accumulated as offsets from the root and the root depth is
    // added once at the end.  Reversing every sign then mirrors each offset
    // bit-exactly, so the reverse configuration reports the same residual.
    HeightAssignment out;
    std::vector<char> seen(n, 0);
    std::vector<char> edge_used(g.edges.size(), 0);
    std::vector<double> delta(n, 0.0);
    std::queue<int> frontier;
    seen[root] = 1;
    frontier.push(root);
    while (!frontier.empty()) {
        const int u = frontier.front();
        frontier.pop();
        for (const auto& [v, e] : g.adjacency[u]) {
            if (seen[v]) continue;
            seen[v] = 1;
            edge_used[e] = 1;
            const double step = cfg.sign[e] * g.edges[e].w;
            delta[v] = delta[u] + (g.edges[e].i == u ? step : -step);
            frontier.push(v);
        }
    }

    for (std::size_t e = 0; e < g.edges.size(); ++e) {
        if (edge_used[e]) continue;
        const GraphEdge& ge = g.edges[e];
        if (!seen[ge.i] || !seen[ge.j]) continue;  // other component
        const double gap = std::abs(delta[ge.j] - delta[ge.i] - cfg.sign[e] * ge.w);
        out.residual = std::max(out.residual, gap);
    }
    if (out.residual > cycle_tol)
        throw infeasible_configuration_error(
            "configuration closes a cycle with residual above tolerance");
    for (int v = 0; v < n; ++v)
        if (seen[v]) out.z[v] = z_root + delta[v];
    return out;
}

// Graphviz view of the graph; pass a configuration to label edge signs and an
// anchor mask (by vertex id) to render anchor vertices as boxes.
inline std::string export_dot(const ConfigGraph& g, const Configuration* cfg = nullptr,
                              const std::vector<char>* is_anchor = nullptr) {
    std::string out = "graph configuration {\n";
    char buf[160];
    for (std::size_t v = 0; v < g.vertices.size(); ++v) {
        const SingularPoint& p = g.vertices[v];
        const bool anchor = is_anchor && v < is_anchor->size() && (*is_anchor)[v];
        std::snprintf(buf, sizeof(buf), "  p%zu [label=\"p%zu (%d,%d)\"%s];\n", v, v,
                      p.pixel.row, p.pixel.col, anchor ? " shape=box" : "");
        out += buf;
    }
    for (std::size_t e = 0; e < g.edges.size(); ++e) {
        const GraphEdge& ge = g.edges[e];
        if (cfg && e < cfg->sign.size()) {
            std::snprintf(buf, sizeof(buf), "  p%d -- p%d [label=\"%.3f (%c)\"];\n", ge.i,
                          ge.j, ge.w, cfg->sign[e] > 0 ? '+' : '-');
        } else {
            std::snprintf(buf, sizeof(buf), "  p%d -- p%d [label=\"%.3f\"];\n", ge.i, ge.j,
                          ge.w);
        }
        out += buf;
    }
    out += "}\n";
    return out;
}

}  // namespace sfs
