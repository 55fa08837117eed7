#pragma once

/*
 * Sparse depth anchors: a handful of pixels with known absolute depth,
 * injected into the configuration graph to decide every binary ambiguity.
 *
 * Each anchor becomes a vertex connected to the extremities of every free
 * edge and to one chosen edge (the lowest-indexed one) of every free part.
 * Anchor-edge weights are eikonal distances from the anchor pixel, and
 * anchor edges deliberately skip the monotonicity filter because anchoring
 * must never silently fail.  An eikonal distance bounds the depth gap from
 * above — it equals the gap only when the geodesic is height-monotone, and
 * can exceed it several-fold when the path crosses a valley or a crest.
 * The geodesic to an anchor's *nearest* attachment is the one that tends
 * to be monotone (a detour over a crest or through a valley lengthens it
 * past some other attachment), so resolution predicts each anchor's depth
 * from its nearest attached vertex alone: stepping off the high side of
 * the unit descends by the measured gap, stepping off the low side climbs
 * by it.  Under the true candidate those predictions agree on one common
 * absolute level; under the flipped candidate high and low sides trade
 * places and the predictions scatter by about the spread of the anchor
 * depths themselves.
 *
 * Why two depths per class must differ: with a single known depth L the
 * mirror surface 2L - u reproduces every |depth gap| measurement exactly,
 * so both candidates fit equally well.  A second, different depth breaks
 * the mirror symmetry.  A class may substitute an already-resolved
 * neighbor for one of the two: resolving a class pins absolute depths on
 * its unit's vertices, and a class sharing such a vertex can use it as the
 * fixed reference.  Classes are therefore processed in dependency order.
 */

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <queue>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sfs/config_graph.hpp"
#include "sfs/solver.hpp"

namespace sfs {

struct BCAnchor {
    Pixel pixel{0, 0};
    double depth = 0.0;
    std::string label;
};

inline std::vector<BCAnchor> parse_anchors(const std::string& text, const GridSpec& grid) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw bad_input_error(std::string("anchors file is not valid JSON: ") + e.what());
    }
    if (!doc.is_array() || doc.empty())
        throw bad_input_error("anchors file must hold a non-empty JSON array");

    std::vector<BCAnchor> anchors;
    std::set<std::pair<int, int>> seen;
    for (const auto& item : doc) {
        if (!item.is_object() || !item.contains("row") || !item.contains("col") ||
            !item.contains("depth") || !item["row"].is_number_integer() ||
            !item["col"].is_number_integer() || !item["depth"].is_number())
            throw bad_input_error(
                "each anchor needs integer \"row\"/\"col\" and a numeric \"depth\"");
        BCAnchor a;
        a.pixel = Pixel{item["row"].get<int>(), item["col"].get<int>()};
        a.depth = item["depth"].get<double>();
        if (item.contains("label")) {
            if (!item["label"].is_string()) throw bad_input_error("anchor label must be a string");
            a.label = item["label"].get<std::string>();
        }
        if (!std::isfinite(a.depth)) throw bad_input_error("anchor depth must be finite");
        if (!grid.contains(a.pixel)) {
            std::ostringstream msg;
            msg << "anchor pixel (" << a.pixel.row << ", " << a.pixel.col
                << ") lies outside the " << grid.height << "x" << grid.width << " grid";
            throw bad_input_error(msg.str());
        }
        if (!seen.insert({a.pixel.row, a.pixel.col}).second)
            throw bad_input_error("duplicate anchor pixel");
        anchors.push_back(std::move(a));
    }
    return anchors;
}

inline std::vector<BCAnchor> load_anchors(const std::string& path, const GridSpec& grid) {
    std::ifstream in(path);
    if (!in) throw bad_input_error("cannot open anchors file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_anchors(buf.str(), grid);
}

namespace detail {

// The pair of vertices a unit exposes for anchoring: a free edge offers its
// two extremities; a free part offers the extremities of its lowest-indexed
// edge.  Vertices outside every unit (isolated vertices) are exposed too,
// so a vertex-only graph can still receive an absolute depth.
inline std::vector<int> anchor_targets(const ConfigGraph& g, const Decomposition& dec) {
    std::set<int> targets;
    std::vector<char> in_unit(g.vertices.size(), 0);
    for (int e : dec.free_edges) {
        targets.insert(g.edges[e].i);
        targets.insert(g.edges[e].j);
        in_unit[g.edges[e].i] = in_unit[g.edges[e].j] = 1;
    }
    for (size_t k = 0; k < dec.free_parts.size(); ++k) {
        const int lowest = *std::min_element(dec.part_edges[k].begin(), dec.part_edges[k].end());
        targets.insert(g.edges[lowest].i);
        targets.insert(g.edges[lowest].j);
        for (int v : dec.free_parts[k]) in_unit[v] = 1;
    }
    for (size_t v = 0; v < g.vertices.size(); ++v)
        if (!in_unit[v]) targets.insert((int)v);
    return {targets.begin(), targets.end()};
}

}  // namespace detail

/*
 * Append one vertex per anchor and connect it to every anchoring target.
 * Weights come from a fresh eikonal solve per anchor; the traced path is
 * not kept and no monotonicity test runs (see header comment).
 */
inline ConfigGraph augment_graph(const ConfigGraph& g, const Decomposition& dec,
                                 const std::vector<BCAnchor>& anchors,
                                 const IrradianceImage& img) {
    if (anchors.empty()) throw bad_input_error("augmentation needs at least one anchor");
    img.grid.validate();
    for (const BCAnchor& a : anchors)
        if (!img.grid.contains(a.pixel)) throw bad_input_error("anchor pixel outside the grid");

    ConfigGraph out = g;
    const int n0 = (int)g.vertices.size();
    const std::vector<int> targets = detail::anchor_targets(g, dec);
    const SlownessField slow = slowness_from_image(img, g.eps_sing);

    for (size_t a = 0; a < anchors.size(); ++a) {
        SingularPoint p;
        p.id = n0 + (int)a;
        p.pixel = anchors[a].pixel;
        p.brightness = img.at(anchors[a].pixel.row, anchors[a].pixel.col);
        out.vertices.push_back(p);

        const DistanceField dist = fmm_distance(slow, anchors[a].pixel);
        for (int t : targets) {
            const double w = dist.at(g.vertices[t].pixel);
            if (!std::isfinite(w)) {
                std::ostringstream msg;
                msg << "anchor " << a << " cannot reach vertex " << t
                    << " through the slowness field";
                throw bad_input_error(msg.str());
            }
            GraphEdge e;
            e.i = t;
            e.j = p.id;
            e.w = w;
            out.edges.push_back(std::move(e));
        }
    }
    out.rebuild_adjacency();
    return out;
}

namespace detail {

// Relative heights of one unit's vertices under one candidate, computed by
// the same integrator the rest of the pipeline uses, on a subgraph holding
// only the unit's edges.  Root is the smallest unit vertex at height 0.
inline std::map<int, double> unit_heights(const ConfigGraph& g_aug, const AmbiguityClass& cls,
                                          const Configuration& cand) {
    ConfigGraph sub;
    sub.vertices = g_aug.vertices;
    Configuration cfg;
    for (int e : cls.edges) {
        sub.edges.push_back(g_aug.edges[e]);
        cfg.sign.push_back(cand.sign[e]);
    }
    sub.rebuild_adjacency();
    const int root = *std::min_element(cls.vertices.begin(), cls.vertices.end());
    HeightAssignment ha =
        integrate_heights(sub, cfg, root, 0.0, std::numeric_limits<double>::infinity());
    std::map<int, double> h;
    for (int v : cls.vertices) h[v] = ha.z.at(v);
    return h;
}

// One vote on a class's absolute level L.  Every reference that predicts
// an anchor's depth (or matches a pinned vertex) is linear in L, so it
// votes for the single L making its prediction exact; a reference whose
// step direction is unknown votes for two alternatives and the fit keeps
// whichever lands closer.  The best level minimizes the summed distance
// to the votes (an L1 median with optional two-branch votes), and the
// residual dispersion it leaves is the candidate's discrepancy.
struct LevelVote {
    double v1 = 0.0;
    double v2 = std::numeric_limits<double>::quiet_NaN();  // NaN: single branch
};

struct LevelFit {
    double disc = 0.0;   // mean residual at the best level
    double level = 0.0;  // the best level itself
};

inline LevelFit fit_level(const std::vector<LevelVote>& votes) {
    std::vector<double> cand;
    for (const LevelVote& v : votes) {
        cand.push_back(v.v1);
        if (!std::isnan(v.v2)) cand.push_back(v.v2);
    }
    std::sort(cand.begin(), cand.end());
    auto total = [&](double L) {
        double s = 0.0;
        for (const LevelVote& v : votes) {
            double d = std::abs(v.v1 - L);
            if (!std::isnan(v.v2)) d = std::min(d, std::abs(v.v2 - L));
            s += d;
        }
        return s;
    };
    LevelFit best{std::numeric_limits<double>::infinity(), 0.0};
    for (double L : cand) {
        const double v = total(L);
        if (v < best.disc) best = {v, L};
    }
    best.disc /= (double)votes.size();
    return best;
}

}  // namespace detail

/*
 * Decide every ambiguity class using the anchors.  Per class and per
 * candidate, each attached anchor votes for the absolute level that would
 * make its predicted depth exact (prediction from its nearest attached
 * vertex, signed by that vertex's position in the attachment span), and
 * each unit vertex pinned by an already-resolved neighbor votes for the
 * level matching its pinned depth.  A candidate's discrepancy is the mean
 * residual left after an L1-median fit of the level to the votes: near
 * zero for the true candidate, roughly the spread of the anchor depths
 * for the flipped one.  Whichever candidate scores lower wins; classes
 * whose scores tie (one anchor, or anchors all at the same depth, which
 * the mirror symmetry makes undecidable) are retried after neighbors pin
 * a shared vertex, then reported unresolved.
 *
 * accept_tol < 0 selects the default budget of 25% of the class's mean
 * edge weight; a winner violating even that signals anchors inconsistent
 * with the image.  pinned_out, when given, receives the absolute depth
 * assigned to every unit vertex while resolving — the anchor-calibrated
 * levels downstream reconstruction needs.
 */
inline Configuration resolve_ambiguity(const ConfigGraph& g_aug, const SolverReport& report,
                                       const std::vector<BCAnchor>& anchors,
                                       double accept_tol = -1.0,
                                       std::map<int, double>* pinned_out = nullptr) {
    if (anchors.empty()) throw bad_input_error("resolution needs at least one anchor");
    const int n0 = (int)g_aug.vertices.size() - (int)anchors.size();
    if (n0 < 0) throw bad_input_error("more anchors than graph vertices");
    for (size_t a = 0; a < anchors.size(); ++a) {
        const Pixel& p = g_aug.vertices[n0 + a].pixel;
        if (p.row != anchors[a].pixel.row || p.col != anchors[a].pixel.col)
            throw bad_input_error("augmented graph does not match the anchor list");
    }

    Configuration resolved = report.chosen;
    std::map<int, double> pinned;  // vertex id -> absolute depth, from resolved classes
    std::vector<char> done(report.classes.size(), 0);

    // anchors in canonical pixel order, so list order cannot matter
    std::vector<int> canon(anchors.size());
    for (size_t a = 0; a < anchors.size(); ++a) canon[a] = (int)a;
    std::sort(canon.begin(), canon.end(), [&](int a, int b) {
        return std::pair(anchors[a].pixel.row, anchors[a].pixel.col) <
               std::pair(anchors[b].pixel.row, anchors[b].pixel.col);
    });

    // per-class data that does not change across sweeps; each anchor keeps
    // only its nearest leg into the class — farther legs are the ones whose
    // geodesics detour over crests or through valleys, so their measured
    // gaps carry slack that would poison an equality fit
    struct AnchorLeg {
        double depth = 0.0;  // the anchor's absolute depth
        int target = -1;     // its nearest attached unit vertex
        double w = 0.0;      // measured gap of that nearest leg
    };
    struct ClassData {
        std::map<int, double> h[2];   // candidate unit heights
        std::vector<AnchorLeg> legs;  // one per attached anchor, canon order
        std::vector<int> targets;     // unit vertices any anchor attaches to
        double tol = 0.0;
    };
    std::vector<ClassData> data(report.classes.size());
    for (size_t c = 0; c < report.classes.size(); ++c) {
        const AmbiguityClass& cls = report.classes[c];
        ClassData& cd = data[c];
        for (int k = 0; k < 2; ++k) cd.h[k] = detail::unit_heights(g_aug, cls, cls.candidates[k]);
        std::set<int> attached;
        for (int a : canon) {
            AnchorLeg leg;
            for (int v : cls.vertices) {
                const int e = g_aug.edge_between(v, n0 + a);
                if (e < 0) continue;
                attached.insert(v);
                const double w = g_aug.edges[e].w;
                if (leg.target < 0 || w < leg.w || (w == leg.w && v < leg.target)) {
                    leg.target = v;
                    leg.w = w;
                }
            }
            if (leg.target < 0) continue;
            leg.depth = anchors[a].depth;
            cd.legs.push_back(leg);
        }
        cd.targets.assign(attached.begin(), attached.end());
        cd.tol = accept_tol;
        if (cd.tol < 0.0) {
            double mean = 0.0;
            for (int e : cls.edges) mean += g_aug.edges[e].w;
            cd.tol = 0.25 * (mean / (double)cls.edges.size());
        }
    }

    size_t remaining = report.classes.size();
    bool progress = true;
    while (remaining > 0 && progress) {
        progress = false;
        for (size_t c = 0; c < report.classes.size(); ++c) {
            if (done[c]) continue;
            const AmbiguityClass& cls = report.classes[c];
            const ClassData& cd = data[c];

            detail::LevelFit fit[2];
            bool usable = false;
            for (int k = 0; k < 2; ++k) {
                std::vector<detail::LevelVote> votes;
                for (int v : cls.vertices) {
                    auto it = pinned.find(v);
                    if (it == pinned.end()) continue;
                    votes.push_back({it->second - cd.h[k].at(v)});
                }
                // an anchor's depth is predicted from its nearest attached
                // target: descending off a high target costs the measured
                // gap, ascending off a low one gains it; a target sitting
                // exactly mid-span leaves the direction open, so both
                // branches are offered and the fit keeps the closer one
                double lo = 0.0, hi = 0.0;
                if (!cd.targets.empty()) {
                    lo = hi = cd.h[k].at(cd.targets.front());
                    for (int t : cd.targets) {
                        lo = std::min(lo, cd.h[k].at(t));
                        hi = std::max(hi, cd.h[k].at(t));
                    }
                }
                const double mid = 0.5 * (lo + hi);
                for (const auto& leg : cd.legs) {
                    const double h = cd.h[k].at(leg.target);
                    if (h > mid)
                        votes.push_back({leg.depth - h + leg.w});
                    else if (h < mid)
                        votes.push_back({leg.depth - h - leg.w});
                    else
                        votes.push_back({leg.depth - h - leg.w, leg.depth - h + leg.w});
                }
                if (votes.empty()) break;
                usable = true;
                fit[k] = detail::fit_level(votes);
            }
            if (!usable) continue;

            // scores that agree to rounding noise cannot decide a sign; the
            // class stays open in case a neighbor pins one of its vertices
            const double tie_eps = 1e-9 * (1.0 + fit[0].disc + fit[1].disc);
            if (std::abs(fit[0].disc - fit[1].disc) <= tie_eps) continue;

            const int winner = fit[0].disc > fit[1].disc ? 1 : 0;
            if (fit[winner].disc > cd.tol) {
                std::ostringstream msg;
                msg << "anchors disagree with both candidates of a class (best discrepancy "
                    << fit[winner].disc << " exceeds tolerance " << cd.tol
                    << "); the anchor depths look inconsistent with the image";
                throw bad_input_error(msg.str());
            }
            if (winner == 1)
                for (int e : cls.edges) resolved.sign[e] = -resolved.sign[e];
            for (int v : cls.vertices) pinned.emplace(v, cd.h[winner].at(v) + fit[winner].level);

            done[c] = 1;
            --remaining;
            progress = true;
        }
    }

    if (remaining > 0) {
        std::ostringstream msg;
        msg << "unresolved ambiguity: " << remaining << " class" << (remaining == 1 ? "" : "es")
            << " cannot be decided; each class needs anchor legs at two different depths, "
               "or a resolved neighbor sharing a vertex";
        throw unresolved_ambiguity_error(msg.str());
    }
    if (pinned_out) *pinned_out = pinned;
    return resolved;
}

}  // namespace sfs
