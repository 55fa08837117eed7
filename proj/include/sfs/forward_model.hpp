#pragma once

/*
 * Analytic test surfaces and the Lambertian frontal-light renderer.
 *
 * Each built-in scene is a sum of simple motifs chosen for the critical
 * points they contribute:
 *
 *   windowed sine pair  (the `bump` scene)   one max / one min
 *   tabled cubic chain  (`silt_like`)        min/max/min/max along the axis
 *   crater              ring ridge around an enclosed pit.  Modulated rims
 *                       carry two maxima and two saddles (a 4-cycle of
 *                       ridge lines) plus the pit floor; an unmodulated rim
 *                       is a single annulus vertex over the floor.
 *
 * Geodesic shortcuts drive every design choice here.  Wherever the slope
 * falls below the singular-detection threshold the shading clamps to
 * "frontal" and the eikonal slowness is zero, so near-flat regions act as
 * zero-cost freeways.  A detour that descends to a flat surround at level
 * c and climbs back costs (c - z_a) + (c - z_b) against |z_a - z_b| for
 * the direct crossing, so a detour wins whenever the surround level lies
 * between the endpoint heights.  Two consequences:
 *
 *   - the silt chain sits in a raised surround (a table *above* every
 *     peak): paths between non-adjacent extrema must then either cross the
 *     intervening plateau or the bright table, and both are rejected by
 *     the path monotonicity test, which leaves exactly the nearest-
 *     neighbour chain;
 *   - crater pits are enclosed by their rim, so pit-floor edges have no
 *     competitive outside detour at all, and pit-crossing chords between
 *     opposite rim arcs always ride a foreign plateau (the floor or the
 *     cheaper rim pair) and are rejected.
 *
 * The crater profile is a quartic bell in r^2, which keeps the crest
 * flat-topped (plateaus survive pixel sampling) and the centre smooth: a
 * profile in |r| would leave a cone whose apex renders dark, hiding the
 * pit floor from detection and letting pit-crossing chords through as
 * false edges.
 *
 * Motifs inside composite scenes are spaced so paths between them must
 * cross the visibly bright inter-motif sea, which the monotonicity test
 * rejects; cross-motif edges therefore stay out of the adjacency graph no
 * matter how ties in path tracing fall.
 */

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "sfs/core.hpp"

namespace sfs {

enum class SceneKind { bump, silt_like, two_bump, face_like, csv };

inline std::string scene_names() { return "bump, silt_like, two_bump, face_like, csv"; }

inline std::string to_string(SceneKind k) {
    switch (k) {
        case SceneKind::bump: return "bump";
        case SceneKind::silt_like: return "silt_like";
        case SceneKind::two_bump: return "two_bump";
        case SceneKind::face_like: return "face_like";
        case SceneKind::csv: return "csv";
    }
    return "?";
}

inline SceneKind parse_scene_kind(const std::string& name) {
    if (name == "bump") return SceneKind::bump;
    if (name == "silt_like") return SceneKind::silt_like;
    if (name == "two_bump") return SceneKind::two_bump;
    if (name == "face_like") return SceneKind::face_like;
    if (name == "csv") return SceneKind::csv;
    throw bad_input_error("unknown scene '" + name + "' (expected one of: " + scene_names() + ")");
}

namespace detail {

// Ring ridge with crest at radius 0.5 and an optional cos(2*phi) height
// modulation of the rim.  The bell is quartic in r^2: flat-topped crest
// (the rim plateaus survive pixel sampling), smooth at the centre (no cone
// apex), and an interior tail so faint (~0.3% of the rim) that the pit
// floor renders as its own frontal plateau at essentially the surround
// level.  The modulation is the rational form r^2 (dx^2 - dy^2) viewed
// against r^4 + c, i.e. cos(2*phi) faded out near the centre, smooth
// everywhere without trigonometry.  beta = 0 gives the unmodulated ring:
// one annulus plateau over the pit floor instead of four rim arcs.
inline double crater(double dx, double dy, double beta) {
    const double amp = 0.8, rho2 = 0.3844, w = 0.26, c = 0.015;
    const double r2 = dx * dx + dy * dy;
    const double q = (r2 - rho2) / w;
    const double q2 = q * q;
    const double ridge = std::exp(-q2 * q2);
    const double mod = 1.0 + beta * r2 * (dx * dx - dy * dy) / (r2 * r2 + c);
    return amp * ridge * mod;
}

}  // namespace detail

inline GridSpec scene_default_grid(SceneKind kind) {
    switch (kind) {
        case SceneKind::bump:
            return {192, 114, -1.1, 1.1, -0.65, 0.65};
        case SceneKind::silt_like:
            return {192, 84, -2.3, 2.3, -1.0, 1.0};
        case SceneKind::two_bump:
            // Crater rim routes are curved and their walls steep, so these
            // two scenes get finer grids than the axis-aligned ones: the
            // first-order eikonal error on rim geodesics has to stay small
            // against the 10%-of-mean-weight cycle feasibility budget.
            return {384, 256, -3.2, 3.2, -2.4, 2.4};
        case SceneKind::face_like:
            return {384, 384, -3.2, 3.2, -3.2, 3.2};
        case SceneKind::csv:
            throw bad_input_error("csv scenes carry their own grid; load the file instead");
    }
    throw bad_input_error("unhandled scene kind");
}

// params[0] is a global height scale (default 1).  Extra params are rejected
// rather than ignored so typos in CLI flags surface immediately.
inline HeightField make_surface(SceneKind kind, const std::vector<double>& params,
                                const GridSpec& grid) {
    grid.validate();
    if (kind == SceneKind::csv)
        throw bad_input_error("csv scenes are loaded from a file, not synthesized");
    if (params.size() > 1)
        throw bad_input_error("scene takes at most one parameter (height scale)");
    const double s = params.empty() ? 1.0 : params[0];
    if (!std::isfinite(s) || s == 0.0)
        throw bad_input_error("scene scale must be finite and nonzero");

    HeightField hf{grid, std::vector<double>(grid.size(), 0.0)};
    for (int r = 0; r < grid.height; ++r) {
        const double y = grid.y(r);
        for (int c = 0; c < grid.width; ++c) {
            const double x = grid.x(c);
            double z = 0.0;
            switch (kind) {
                case SceneKind::bump:
                    // Half a sine period across x instead of a Gaussian
                    // pair: the slope at the x borders is a full antinode,
                    // so the window never exposes a decayed far field and
                    // the plateau collar stays dark down to half scale.
                    // The y tilt keeps every border segment off-level —
                    // two depth probes on the boundary almost never read
                    // the same value, which is what lets a probe pair near
                    // the mirror level still break the concave/convex tie.
                    // The x tilt does the same for the y borders, whose
                    // sine term alone would hand mirror-image positions the
                    // same depth.  Both tilts together move the extrema to
                    // about (±0.562, ±0.050) — the next zero of the tilted
                    // y-derivative sits at |y| ≈ 1.26, far past the window —
                    // and leave the odd symmetry z(-x,-y) = -z(x,y) intact.
                    z = 0.5 * std::sin(std::numbers::pi * x / 1.1) * std::exp(-2.0 * y * y) +
                        0.1 * y + 0.05 * x;
                    break;
                case SceneKind::silt_like: {
                    // Alternating min/max/min/max chain along the x axis,
                    // lifted into a flat table at 1.4 beyond |y| ~ 0.8.  The
                    // table tops every peak (max 0.976), so any route that
                    // skirts an intermediate extremum sideways costs more
                    // than crossing it; non-adjacent connections are then
                    // forced over a foreign plateau or the bright table and
                    // get rejected, leaving the three-link chain.
                    const double a = 2.0 * (x * x * x - 1.5 * x) * std::exp(-x * x);
                    const double t = std::clamp((std::abs(y) - 0.45) / 0.35, 0.0, 1.0);
                    const double lift = t * t * t * (t * (6.0 * t - 15.0) + 10.0);
                    z = a + (1.4 - a) * lift;
                    break;
                }
                case SceneKind::two_bump:
                    z = detail::crater(x + 1.75, y - 0.75, 0.22) +
                        detail::crater(x - 1.75, y - 0.75, 0.22) +
                        detail::crater(x, y + 1.15, 0.0);
                    break;
                case SceneKind::face_like:
                    z = detail::crater(x, y - 1.5, 0.22) +
                        detail::crater(x + 1.9, y + 1.15, 0.0) +
                        detail::crater(x - 1.9, y + 1.15, 0.0) +
                        detail::crater(x, y + 2.05, 0.0);
                    break;
                case SceneKind::csv:
                    break;  // unreachable, rejected above
            }
            hf.at(r, c) = s * z;
        }
    }
    return hf;
}

// Central differences inside, one-sided at the borders.
inline GradientField gradient(const HeightField& hf) {
    const GridSpec& g = hf.grid;
    g.validate();
    if ((int)hf.z.size() != g.size()) throw bad_input_error("height field size mismatch");
    GradientField gf{g, std::vector<double>(g.size()), std::vector<double>(g.size())};
    const double hx = g.hx(), hy = g.hy();
    for (int r = 0; r < g.height; ++r) {
        for (int c = 0; c < g.width; ++c) {
            const int i = g.index(r, c);
            if (c == 0)
                gf.p[i] = (hf.at(r, 1) - hf.at(r, 0)) / hx;
            else if (c == g.width - 1)
                gf.p[i] = (hf.at(r, c) - hf.at(r, c - 1)) / hx;
            else
                gf.p[i] = (hf.at(r, c + 1) - hf.at(r, c - 1)) / (2.0 * hx);
            if (r == 0)
                gf.q[i] = (hf.at(1, c) - hf.at(0, c)) / hy;
            else if (r == g.height - 1)
                gf.q[i] = (hf.at(r, c) - hf.at(r - 1, c)) / hy;
            else
                gf.q[i] = (hf.at(r + 1, c) - hf.at(r - 1, c)) / (2.0 * hy);
        }
    }
    return gf;
}

// Frontal light: e = e_max / sqrt(1 + |grad z|^2).  Brightness equals e_max
// exactly where the discrete gradient vanishes.
inline IrradianceImage render_lambertian(const HeightField& hf, double e_max = 1.0) {
    if (!(e_max > 0.0) || !std::isfinite(e_max))
        throw bad_input_error("e_max must be positive and finite");
    GradientField gf = gradient(hf);
    IrradianceImage img{hf.grid, std::vector<double>(hf.grid.size()), e_max};
    for (int i = 0; i < hf.grid.size(); ++i)
        img.e[i] = e_max / std::sqrt(1.0 + gf.p[i] * gf.p[i] + gf.q[i] * gf.q[i]);
    return img;
}

}  // namespace sfs
