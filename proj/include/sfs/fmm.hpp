#pragma once

/*
 * Eikonal distances on the pixel grid by first-order fast marching.
 *
 * The slowness field comes from shading: a frontal light makes brightness a
 * pure function of slope, so  f = sqrt((e_max/e)^2 - 1)  recovers |grad z|
 * and geodesic distance in f accumulates |dz| along monotone slopes.  Pixels
 * within eps_sing of full brightness are clamped to f = 0: they are treated
 * as exactly frontal so singular plateaus cost nothing to cross.
 *
 * Point sources are the weak spot of first-order upwinding — the scheme
 * loses half an order of accuracy to the kink at the source.  We therefore
 * seed every pixel inside a small world-radius disk with a straight-ray
 * integral of f before marching; rays are exact at the source and restore
 * clean first-order convergence of the far field (verified by the accuracy
 * suite, which halves the grid spacing and checks the error ratio).
 */

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>
#include <unordered_set>
#include <vector>

#include "sfs/core.hpp"
#include "sfs/min_heap.hpp"

namespace sfs {

struct SlownessField {
    GridSpec grid;
    std::vector<double> f;
};

// Slopes steeper than this are indistinguishable from occlusion at 8-bit
// depth anyway; capping keeps the marching arithmetic finite.
inline constexpr double k_slowness_cap = 1e6;

inline SlownessField slowness_from_image(const IrradianceImage& img, double eps_sing,
                                         bool literal_integrand = false) {
    img.grid.validate();
    if (!(eps_sing > 0.0) || !(eps_sing < 1.0))
        throw bad_input_error("eps_sing must lie in (0, 1)");
    if (!(img.e_max > 0.0) || !std::isfinite(img.e_max))
        throw bad_input_error("e_max must be positive and finite");
    double brightest = 0.0;
    for (double v : img.e) {
        if (!(v > 0.0))
            throw bad_input_error("image holds a pixel with e <= 0 (shadow or invalid input)");
        brightest = std::max(brightest, v);
    }
    if (brightest > img.e_max * (1.0 + 1e-9))
        throw bad_input_error("image holds pixels brighter than e_max; calibration is wrong");

    const double thr = (1.0 - eps_sing) * img.e_max;
    SlownessField s{img.grid, std::vector<double>(img.grid.size())};
    for (int i = 0; i < img.grid.size(); ++i) {
        const double e = img.e[i];
        if (e >= thr) {
            s.f[i] = 0.0;
            continue;
        }
        double f;
        if (literal_integrand) {
            // Unnormalized variant kept for comparison experiments: treats
            // brightness itself as inverse speed and so never vanishes.
            f = 1.0 / e;
        } else {
            const double ratio = img.e_max / e;
            f = std::sqrt(std::max(ratio * ratio - 1.0, 0.0));
        }
        s.f[i] = std::min(f, k_slowness_cap);
    }
    return s;
}

struct DistanceField {
    GridSpec grid;
    Pixel source;
    std::vector<double> d;
    // world radius of the exactly-initialized disk around the source; inside
    // it the values come from ray integrals, not from the upwind stencil
    double seed_radius = 0.0;

    double at(int row, int col) const { return d[grid.index(row, col)]; }
    double at(const Pixel& p) const { return d[grid.index(p)]; }
};

namespace detail {

// Bilinear sample of the slowness field at a world point (clamped to the
// grid hull, which rays from interior sources never actually leave).
inline double sample_slowness(const SlownessField& s, double x, double y) {
    const GridSpec& g = s.grid;
    double cf = (x - g.x_min) / g.hx();
    double rf = (y - g.y_min) / g.hy();
    cf = std::clamp(cf, 0.0, (double)(g.width - 1));
    rf = std::clamp(rf, 0.0, (double)(g.height - 1));
    const int c0 = std::min((int)cf, g.width - 2);
    const int r0 = std::min((int)rf, g.height - 2);
    const double tx = cf - c0, ty = rf - r0;
    const double f00 = s.f[g.index(r0, c0)], f01 = s.f[g.index(r0, c0 + 1)];
    const double f10 = s.f[g.index(r0 + 1, c0)], f11 = s.f[g.index(r0 + 1, c0 + 1)];
    return (1 - ty) * ((1 - tx) * f00 + tx * f01) + ty * ((1 - tx) * f10 + tx * f11);
}

// Straight-ray integral of f from the source pixel to pixel (r, c),
// midpoint rule at quarter-pixel resolution.
inline double ray_integral(const SlownessField& s, const Pixel& src, int r, int c) {
    const GridSpec& g = s.grid;
    const double x0 = g.x(src.col), y0 = g.y(src.row);
    const double x1 = g.x(c), y1 = g.y(r);
    const double dist = std::hypot(x1 - x0, y1 - y0);
    if (dist == 0.0) return 0.0;
    const double step = 0.25 * std::min(g.hx(), g.hy());
    const int n = std::max(1, (int)std::ceil(dist / step));
    double acc = 0.0;
    for (int k = 0; k < n; ++k) {
        const double t = (k + 0.5) / n;
        acc += sample_slowness(s, x0 + t * (x1 - x0), y0 + t * (y1 - y0));
    }
    return acc * dist / n;
}

// Solve ((T-a)/hx)^2 + ((T-b)/hy)^2 = f^2 for the larger root, falling back
// to the one-sided update when the quadratic has no causal solution.  Either
// neighbor value may be absent (infinity).  With f = 0 the fallback returns
// min(a, b) exactly, so zero-slowness plateaus copy their smallest neighbor.
inline double upwind_update(double a, double hx, double b, double hy, double f) {
    const double inf = std::numeric_limits<double>::infinity();
    if (a == inf && b == inf) return inf;
    if (a == inf) return b + f * hy;
    if (b == inf) return a + f * hx;
    const double ix = 1.0 / (hx * hx), iy = 1.0 / (hy * hy);
    const double A = ix + iy;
    const double B = -2.0 * (a * ix + b * iy);
    const double C = a * a * ix + b * b * iy - f * f;
    const double disc = B * B - 4.0 * A * C;
    if (disc >= 0.0) {
        const double t = (-B + std::sqrt(disc)) / (2.0 * A);
        if (t >= std::max(a, b)) return t;
    }
    return std::min(a + f * hx, b + f * hy);
}

}  // namespace detail

inline DistanceField fmm_distance(const SlownessField& s, const Pixel& source) {
    const GridSpec& g = s.grid;
    g.validate();
    if ((int)s.f.size() != g.size()) throw bad_input_error("slowness field size mismatch");
    if (!g.contains(source)) throw bad_input_error("fmm source pixel lies outside the grid");
    for (double v : s.f)
        if (!(v >= 0.0) || !std::isfinite(v))
            throw bad_input_error("slowness must be finite and nonnegative");

    const double inf = std::numeric_limits<double>::infinity();
    DistanceField out{g, source, std::vector<double>(g.size(), inf)};
    std::vector<char> frozen(g.size(), 0);
    IndexedMinHeap heap(g.size());

    // Seed a disk around the source with ray integrals (see header comment).
    // 8% of the short domain extent keeps the disk well clear of the kinked
    // near field at every tested resolution; seeds are upper bounds that the
    // march may still lower, so a generous radius is harmless.
    const double seed_radius =
        std::max(3.0 * std::max(g.hx(), g.hy()),
                 0.08 * std::min(g.x_max - g.x_min, g.y_max - g.y_min));
    out.seed_radius = seed_radius;
    const int dr = (int)std::ceil(seed_radius / g.hy());
    const int dc = (int)std::ceil(seed_radius / g.hx());
    for (int r = std::max(0, source.row - dr); r <= std::min(g.height - 1, source.row + dr); ++r) {
        for (int c = std::max(0, source.col - dc); c <= std::min(g.width - 1, source.col + dc);
             ++c) {
            const double wx = (c - source.col) * g.hx();
            const double wy = (r - source.row) * g.hy();
            if (wx * wx + wy * wy > seed_radius * seed_radius) continue;
            heap.push_or_decrease(g.index(r, c), detail::ray_integral(s, source, r, c));
        }
    }

    const int nbr_dr[4] = {0, 0, -1, 1};
    const int nbr_dc[4] = {-1, 1, 0, 0};
    double last_accepted = 0.0;
    while (!heap.empty()) {
        auto [value, idx] = heap.pop_min();
        // First-order FMM must accept in non-decreasing order; a violation
        // means the update stencil is broken, not that the input is bad.
        if (value < last_accepted - 1e-12 * (1.0 + last_accepted))
            throw std::logic_error("fmm accepted a value out of order");
        last_accepted = value;
        frozen[idx] = 1;
        out.d[idx] = value;

        const int row = idx / g.width, col = idx % g.width;
        for (int k = 0; k < 4; ++k) {
            const int nr = row + nbr_dr[k], nc = col + nbr_dc[k];
            if (!g.contains(nr, nc)) continue;
            const int ni = g.index(nr, nc);
            if (frozen[ni]) continue;

            // Horizontal / vertical minima over frozen neighbors only.
            double a = inf, b = inf;
            if (nc > 0 && frozen[ni - 1]) a = out.d[ni - 1];
            if (nc + 1 < g.width && frozen[ni + 1]) a = std::min(a, out.d[ni + 1]);
            if (nr > 0 && frozen[ni - g.width]) b = out.d[ni - g.width];
            if (nr + 1 < g.height && frozen[ni + g.width]) b = std::min(b, out.d[ni + g.width]);

            const double t = detail::upwind_update(a, g.hx(), b, g.hy(), s.f[ni]);
            if (t < inf) heap.push_or_decrease(ni, t);
        }
    }
    return out;
}

struct GridPath {
    std::vector<Pixel> pixels;       // source first, target last
    std::vector<double> cumulative;  // distance-field values along the path
};

// Steepest-descent walk from target back to the source.  The neighbor scan
// order is fixed (E, N, W, S, NE, NW, SW, SE with N meaning decreasing row)
// so tie-breaking never depends on memory layout or compiler whims.
//
// Zero-slowness plateaus hold one exact distance value, so no neighbor is
// strictly smaller there.  The wave that filled the plateau entered it at a
// specific rim pixel, which may sit well off any greedy direction; we find it
// by breadth-first search across the equal-valued pixels and cross the
// plateau to the nearest pixel that can descend again (or to the source
// itself, which is the only possibility on its own zero-valued plateau).
//
// Inside the exactly-initialized seed disk the field holds ray integrals,
// which are upper bounds along straight rays rather than stencil solutions,
// so the descent can bottom out just short of the source.  A stall there is
// not an error: the seeds assume straight-ray geometry, and the walk
// finishes along that ray.  A stall anywhere else still throws.
inline GridPath trace_path(const DistanceField& dist, const Pixel& target) {
    const GridSpec& g = dist.grid;
    if (!g.contains(target)) throw bad_input_error("trace target lies outside the grid");
    if (!std::isfinite(dist.at(target)))
        throw bad_input_error("trace target was never reached by the march");

    static const int DR[8] = {0, -1, 0, 1, -1, -1, 1, 1};
    static const int DC[8] = {1, 0, -1, 0, 1, -1, -1, 1};

    auto world_gap = [&](const Pixel& p) {
        return std::hypot((p.col - dist.source.col) * g.hx(),
                          (p.row - dist.source.row) * g.hy());
    };
    auto has_smaller_neighbor = [&](const Pixel& p, double here) {
        for (int k = 0; k < 8; ++k) {
            const Pixel n{p.row + DR[k], p.col + DC[k]};
            if (g.contains(n) && dist.at(n) < here) return true;
        }
        return false;
    };

    GridPath path;
    Pixel cur = target;
    const long guard = 4L * g.size();
    bool straight = false;
    std::vector<Pixel> walk;
    walk.push_back(cur);
    while (!(cur == dist.source)) {
        if (static_cast<long>(walk.size()) > guard)
            throw std::runtime_error("descent trace exceeded the step budget (cyclic field?)");

        if (straight) {
            double best_e = world_gap(cur);
            int move = -1;
            for (int k = 0; k < 8; ++k) {
                const Pixel n{cur.row + DR[k], cur.col + DC[k]};
                if (!g.contains(n)) continue;
                const double e = world_gap(n);
                if (e < best_e - 1e-12) {
                    best_e = e;
                    move = k;
                }
            }
            if (move < 0)
                throw std::runtime_error(
                    "descent stalled away from the source (malformed field)");
            cur = Pixel{cur.row + DR[move], cur.col + DC[move]};
            walk.push_back(cur);
            continue;
        }

        const double here = dist.at(cur);
        int best = -1;
        double best_d = here;
        for (int k = 0; k < 8; ++k) {
            const Pixel n{cur.row + DR[k], cur.col + DC[k]};
            if (!g.contains(n)) continue;
            const double dn = dist.at(n);
            if (dn < best_d) {
                best_d = dn;
                best = k;
            }
        }
        if (best >= 0) {
            cur = Pixel{cur.row + DR[best], cur.col + DC[best]};
            walk.push_back(cur);
            continue;
        }

        // No descent: search this exact-valued plateau for the nearest pixel
        // that can leave it (or for the source).  FIFO order plus the fixed
        // neighbor scan keeps the crossing deterministic.
        std::vector<int> parent(static_cast<std::size_t>(g.size()), -1);
        std::queue<int> frontier;
        const int start = g.index(cur);
        parent[start] = start;
        frontier.push(start);
        int goal = -1;
        while (!frontier.empty() && goal < 0) {
            const int u = frontier.front();
            frontier.pop();
            const Pixel pu{u / g.width, u % g.width};
            if (pu == dist.source || (u != start && has_smaller_neighbor(pu, here))) {
                goal = u;
                break;
            }
            for (int k = 0; k < 8; ++k) {
                const Pixel n{pu.row + DR[k], pu.col + DC[k]};
                if (!g.contains(n)) continue;
                const int ni = g.index(n);
                if (parent[ni] >= 0 || dist.d[ni] != here) continue;
                parent[ni] = u;
                frontier.push(ni);
            }
        }
        if (goal < 0) {
            if (world_gap(cur) > dist.seed_radius + 1.5 * std::max(g.hx(), g.hy()))
                throw std::runtime_error(
                    "descent stalled away from the source (malformed field)");
            straight = true;  // once engaged, stay on the ray to the end
            continue;
        }
        std::vector<int> hop;
        for (int u = goal; u != start; u = parent[u]) hop.push_back(u);
        for (auto it = hop.rbegin(); it != hop.rend(); ++it)
            walk.push_back(Pixel{*it / g.width, *it % g.width});
        cur = walk.back();
    }
    path.pixels.assign(walk.rbegin(), walk.rend());
    path.cumulative.reserve(path.pixels.size());
    for (const Pixel& p : path.pixels) path.cumulative.push_back(dist.at(p));
    return path;
}

// A path is a usable graph edge only if, away from the endpoint plateaus, it
// never re-enters near-frontal shading and never brushes another singular
// plateau.  Endpoints are exempt: every path must cross its own endpoints'
// bright pixels to leave them.  The 1-pixel dilation around foreign plateaus
// rejects razor-thin detours that hug a third critical point, whose measured
// length is numerically unstable.
inline bool is_monotone(const GridPath& path, const IrradianceImage& img,
                        const std::vector<Pixel>& other_plateau_pixels, double eps_sing) {
    if (!(eps_sing > 0.0) || !(eps_sing < 1.0))
        throw bad_input_error("eps_sing must lie in (0, 1)");
    const double thr = (1.0 - eps_sing) * img.e_max;
    const GridSpec& g = img.grid;

    std::unordered_set<int> others;
    others.reserve(other_plateau_pixels.size() * 2);
    for (const Pixel& p : other_plateau_pixels) others.insert(g.index(p));

    auto bright = [&](const Pixel& p) { return img.at(p.row, p.col) >= thr; };

    size_t lo = 0, hi = path.pixels.size();
    while (lo < hi && bright(path.pixels[lo])) ++lo;
    while (hi > lo && bright(path.pixels[hi - 1])) --hi;

    for (size_t i = lo; i < hi; ++i) {
        const Pixel& p = path.pixels[i];
        if (bright(p)) return false;
        for (int dr = -1; dr <= 1; ++dr) {
            for (int dc = -1; dc <= 1; ++dc) {
                const int rr = p.row + dr, cc = p.col + dc;
                if (g.contains(rr, cc) && others.count(g.index(rr, cc))) return false;
            }
        }
    }
    return true;
}

}  // namespace sfs
