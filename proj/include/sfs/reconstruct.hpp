#pragma once

/*
 * Dense surface recovery from a signed configuration.
 *
 * Every vertex whose depth is a weak local extremum among its graph
 * neighbors (anchors included) becomes a Dirichlet source.  A peak i
 * radiates the descending cone u_i(x) = z_i - D_i(x); a pit radiates the
 * ascending bowl u_i(x) = z_i + D_i(x); a mid-slope vertex (possible only
 * for anchors) radiates nothing, since neither cone matches the surface
 * around it.  Each pixel takes the value of its geodesically nearest
 * source.  On the sloping regions around a source the eikonal distance
 * equals the depth drop along gradient characteristics, so the nearest
 * cone reproduces the surface exactly there; convex regions are owned by
 * peaks, concave regions by the mirrored construction from pits, and the
 * handover happens along the medial curve between fronts, where both
 * cones agree.  Negating all heights swaps the two roles without touching
 * the distance fields, which is what makes the reconstruction of the
 * reversed configuration the exact negation of the original.  A
 * configuration with no peak at all (every vertex strictly below a
 * neighbor is impossible, so this is defensive) falls back to
 * reconstructing the flipped heights and negating the result.
 */

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "sfs/config_graph.hpp"
#include "sfs/forward_model.hpp"

namespace sfs {

struct ReconstructionResult {
    HeightField surface;
    std::vector<int> sources;              // vertex ids used as Dirichlet sources
    std::vector<DistanceField> source_dist;  // parallel to sources, for diagnostics
    double image_residual = 0.0;           // RMS re-render mismatch, 3px border excluded
    std::optional<double> depth_error;     // RMS vs ground truth, when a truth is given
    int filled_pixels = 0;                 // pixels no source reached (nearest-source fill)
    bool negated = false;                  // solved on the flipped heights and negated back
};

inline double render_residual(const HeightField& surface, const IrradianceImage& img) {
    if (!(surface.grid == img.grid))
        throw bad_input_error("surface and image grids do not match");
    const IrradianceImage rendered = render_lambertian(surface, img.e_max);
    const int b = 3;  // one-sided gradients and front seeding pollute the rim
    double sum = 0.0;
    long count = 0;
    for (int r = b; r < img.grid.height - b; ++r)
        for (int c = b; c < img.grid.width - b; ++c) {
            const double d = rendered.at(r, c) - img.at(r, c);
            sum += d * d;
            ++count;
        }
    if (count == 0) throw bad_input_error("image too small for the 3-pixel residual border");
    return std::sqrt(sum / (double)count);
}

inline double depth_rmse(const HeightField& a, const HeightField& b) {
    if (!(a.grid == b.grid)) throw bad_input_error("height fields have different grids");
    double mean = 0.0;
    for (size_t i = 0; i < a.z.size(); ++i) mean += a.z[i] - b.z[i];
    mean /= (double)a.z.size();
    double sum = 0.0;
    for (size_t i = 0; i < a.z.size(); ++i) {
        const double d = a.z[i] - b.z[i] - mean;
        sum += d * d;
    }
    return std::sqrt(sum / (double)a.z.size());
}

inline ReconstructionResult reconstruct_surface(const IrradianceImage& img, const ConfigGraph& g,
                                                const Configuration& cfg,
                                                const HeightAssignment& heights) {
    img.grid.validate();
    if (g.vertices.empty()) throw bad_input_error("reconstruction needs at least one vertex");
    if (cfg.sign.size() > g.edges.size())
        throw bad_input_error("configuration has more signs than the graph has edges");
    for (const SingularPoint& p : g.vertices)
        if (!heights.z.count(p.id))
            throw bad_input_error("height assignment does not cover vertex " +
                                  std::to_string(p.id));

    // classify vertices against their graph neighbors: peaks radiate
    // descending cones, pits ascending bowls, slope vertices stay silent
    std::vector<int> sources;
    std::vector<bool> source_is_peak;
    bool any_peak = false;
    for (const SingularPoint& p : g.vertices) {
        const double z = heights.z.at(p.id);
        bool has_higher = false, has_lower = false;
        for (const auto& [v, e] : g.adjacency[p.id]) {
            if (heights.z.at(v) > z) has_higher = true;
            if (heights.z.at(v) < z) has_lower = true;
        }
        if (has_higher && has_lower) continue;
        sources.push_back(p.id);
        source_is_peak.push_back(!has_higher);  // all-equal neighborhoods count as peaks
        if (!has_higher) any_peak = true;
    }
    if (!any_peak) {
        // all-concave defensive path: flip the heights, solve, negate back.
        // The flipped graph always has a peak (its global maximum), so this
        // recurses at most once.
        HeightAssignment flipped = heights;
        for (auto& [v, z] : flipped.z) z = -z;
        ReconstructionResult res = reconstruct_surface(img, g, reverse(cfg), flipped);
        for (double& z : res.surface.z) z = -z;
        res.negated = true;
        res.image_residual = render_residual(res.surface, img);
        return res;
    }

    const SlownessField slow = slowness_from_image(img, g.eps_sing);
    ReconstructionResult res;
    const double inf = std::numeric_limits<double>::infinity();
    res.surface = HeightField{img.grid, std::vector<double>(img.grid.size(), 0.0)};
    std::vector<double> best_d(img.grid.size(), inf);
    for (size_t k = 0; k < sources.size(); ++k) {
        const int s = sources[k];
        const double z = heights.z.at(s);
        const double side = source_is_peak[k] ? -1.0 : 1.0;
        DistanceField dist = fmm_distance(slow, g.vertices[s].pixel);
        for (int i = 0; i < img.grid.size(); ++i)
            if (dist.d[i] < best_d[i]) {  // strict: ties keep the earlier (lower id) source
                best_d[i] = dist.d[i];
                res.surface.z[i] = z + side * dist.d[i];
            }
        res.sources.push_back(s);
        res.source_dist.push_back(std::move(dist));
    }

    // pixels no front reached inherit the nearest source's own depth
    for (int r = 0; r < img.grid.height; ++r)
        for (int c = 0; c < img.grid.width; ++c) {
            const int i = img.grid.index(r, c);
            if (best_d[i] < inf) continue;
            long best = std::numeric_limits<long>::max();
            for (int s : res.sources) {
                const Pixel& p = g.vertices[s].pixel;
                const long dr = p.row - r, dc = p.col - c;
                const long d2 = dr * dr + dc * dc;
                if (d2 < best) {
                    best = d2;
                    res.surface.z[i] = heights.z.at(s);
                }
            }
            ++res.filled_pixels;
        }

    res.image_residual = render_residual(res.surface, img);
    return res;
}

inline double render_residual(const ReconstructionResult& result, const IrradianceImage& img) {
    return render_residual(result.surface, img);
}

/*
 * ASCII OBJ mesh: one vertex per grid node, two triangles per cell,
 * row-major 1-based indexing.  All numbers go through the shared 6
 * significant digit formatter so repeated exports are byte-identical.
 */
inline void export_obj(const HeightField& h, const std::string& path) {
    h.grid.validate();
    std::ofstream out(path);
    if (!out) throw bad_input_error("cannot open OBJ output file: " + path);
    std::ostringstream buf;
    for (int r = 0; r < h.grid.height; ++r)
        for (int c = 0; c < h.grid.width; ++c)
            buf << "v " << format_g6(h.grid.x(c)) << ' ' << format_g6(h.grid.y(r)) << ' '
                << format_g6(h.at(r, c)) << '\n';
    for (int r = 0; r + 1 < h.grid.height; ++r)
        for (int c = 0; c + 1 < h.grid.width; ++c) {
            const int v00 = r * h.grid.width + c + 1;  // 1-based
            const int v01 = v00 + 1;
            const int v10 = v00 + h.grid.width;
            const int v11 = v10 + 1;
            buf << "f " << v00 << ' ' << v01 << ' ' << v11 << '\n';
            buf << "f " << v00 << ' ' << v11 << ' ' << v10 << '\n';
        }
    out << buf.str();
    if (!out) throw bad_input_error("failed writing OBJ file: " + path);
}

}  // namespace sfs
