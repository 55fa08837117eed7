#pragma once
// Detection of the bright plateaus that become reconstruction-graph vertices.
//
// A Lambertian surface lit from straight above is brightest exactly where its
// gradient vanishes, so every interior extremum of the height field shows up
// as a small near-white plateau in the image.  We threshold the image at
// (1 - eps_sing) * e_max, split the resulting mask into 8-connected
// components, and reduce each component to one representative pixel.
//
// Flat background is bright too.  Any component that touches the image border
// is treated as background and excluded: an extremum worth reconstructing sits
// strictly inside the frame, while a flat or far-field region always runs into
// the border somewhere.  If nothing survives the exclusion the image is
// rejected as degenerate (that covers both the constant image, whose single
// component spans everything, and images whose only bright pixels hug the
// frame).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "sfs/core.hpp"

namespace sfs {

enum class PointKind { unknown, interior, boundary_adjacent };

inline const char* to_string(PointKind k) {
    switch (k) {
        case PointKind::interior: return "interior";
        case PointKind::boundary_adjacent: return "boundary_adjacent";
        default: return "unknown";
    }
}

struct SingularPoint {
    int id = 0;
    Pixel pixel{0, 0};
    double brightness = 0.0;
    PointKind kind = PointKind::unknown;
};

struct DetectionResult {
    std::vector<SingularPoint> points;
    // plateaus[i] holds the mask pixels of the component behind points[i] in
    // row-major order.  Downstream path checks use them to tell "endpoint
    // plateau" from "foreign plateau".
    std::vector<std::vector<Pixel>> plateaus;
    double threshold = 0.0;  // absolute brightness cutoff used for the mask
    double e_max = 0.0;      // brightness ceiling the cutoff was derived from
};

inline double estimate_emax(const IrradianceImage& img) {
    img.grid.validate();
    if (img.e.size() != static_cast<std::size_t>(img.grid.size()))
        throw bad_input_error("image pixel count does not match its grid");
    double m = img.e[0];
    for (double v : img.e) {
        if (!std::isfinite(v)) throw bad_input_error("image contains non-finite brightness");
        m = std::max(m, v);
    }
    return m;
}

namespace detail {

// One thresholded component while detection is in flight.
struct PlateauBlob {
    std::vector<Pixel> pixels;   // row-major
    double weight = 0.0;         // sum of brightness
    double wr = 0.0, wc = 0.0;   // brightness-weighted row/col sums
    Pixel rep{0, 0};             // representative pixel (see snap below)
    bool touches_border = false;

    // The representative is the component pixel nearest to the
    // brightness-weighted centroid.  Snapping to a member pixel (instead of
    // plain rounding) matters for curved plateaus such as ridge arcs, whose
    // centroid can fall just off the arc; the representative must satisfy the
    // brightness cutoff itself.
    void snap() {
        const double cr = wr / weight, cc = wc / weight;
        double best = 0.0;
        bool first = true;
        for (const Pixel& p : pixels) {
            const double dr = p.row - cr, dc = p.col - cc;
            const double d2 = dr * dr + dc * dc;
            if (first || d2 < best - 1e-12 ||
                (std::abs(d2 - best) <= 1e-12 && p < rep)) {
                best = d2;
                rep = p;
                first = false;
            }
        }
    }
};

}  // namespace detail

inline DetectionResult detect_singular_points(const IrradianceImage& img,
                                              double eps_sing = 0.02,
                                              double min_sep = 5.0) {
    img.grid.validate();
    const GridSpec& g = img.grid;
    if (img.e.size() != static_cast<std::size_t>(g.size()))
        throw bad_input_error("image pixel count does not match its grid");
    if (!(eps_sing > 0.0) || !(eps_sing < 1.0))
        throw bad_input_error("eps_sing must lie strictly between 0 and 1");
    if (!(min_sep >= 1.0)) throw bad_input_error("min_sep must be at least 1 pixel");
    if (!std::isfinite(img.e_max) || img.e_max <= 0.0)
        throw bad_input_error("e_max must be positive and finite");
    for (double v : img.e)
        if (!std::isfinite(v)) throw bad_input_error("image contains non-finite brightness");

    const double thr = (1.0 - eps_sing) * img.e_max;
    const int w = g.width, h = g.height;
    std::vector<char> bright(static_cast<std::size_t>(g.size()), 0);
    for (int i = 0; i < g.size(); ++i) bright[i] = img.e[i] >= thr ? 1 : 0;

    // 8-connected component sweep, row-major seeds for determinism.
    std::vector<int> label(static_cast<std::size_t>(g.size()), -1);
    std::vector<detail::PlateauBlob> blobs;
    std::vector<int> stack;
    bool oversized = false;  // some component spans >50% of the image
    for (int seed = 0; seed < g.size(); ++seed) {
        if (!bright[seed] || label[seed] >= 0) continue;
        const int id = static_cast<int>(blobs.size());
        blobs.emplace_back();
        detail::PlateauBlob& blob = blobs.back();
        stack.assign(1, seed);
        label[seed] = id;
        while (!stack.empty()) {
            const int cur = stack.back();
            stack.pop_back();
            const int r = cur / w, c = cur % w;
            blob.pixels.push_back(Pixel{r, c});
            const double e = img.e[cur];
            blob.weight += e;
            blob.wr += e * r;
            blob.wc += e * c;
            if (r == 0 || c == 0 || r == h - 1 || c == w - 1) blob.touches_border = true;
            for (int dr = -1; dr <= 1; ++dr)
                for (int dc = -1; dc <= 1; ++dc) {
                    if (dr == 0 && dc == 0) continue;
                    const int nr = r + dr, nc = c + dc;
                    if (nr < 0 || nc < 0 || nr >= h || nc >= w) continue;
                    const int ni = nr * w + nc;
                    if (!bright[ni] || label[ni] >= 0) continue;
                    label[ni] = id;
                    stack.push_back(ni);
                }
        }
        std::sort(blob.pixels.begin(), blob.pixels.end());
        if (2 * blob.pixels.size() > static_cast<std::size_t>(g.size())) oversized = true;
        blob.snap();
    }

    std::vector<detail::PlateauBlob> kept;
    for (auto& b : blobs)
        if (!b.touches_border) kept.push_back(std::move(b));
    if (kept.empty()) {
        if (oversized)
            throw degenerate_image_error(
                "image is flat: one bright plateau covers most of the frame");
        throw degenerate_image_error(
            "no singular point: no bright plateau lies inside the frame");
    }

    // Merge representatives closer than min_sep, closest pair first.  Each
    // merge unions the pixel sets and re-derives the representative, so a
    // cluster of fragments collapses to a single stable point.
    const double sep2 = min_sep * min_sep;
    for (;;) {
        int bi = -1, bj = -1;
        double best = sep2;
        for (std::size_t i = 0; i < kept.size(); ++i)
            for (std::size_t j = i + 1; j < kept.size(); ++j) {
                const double dr = kept[i].rep.row - kept[j].rep.row;
                const double dc = kept[i].rep.col - kept[j].rep.col;
                const double d2 = dr * dr + dc * dc;
                if (d2 < best) {
                    best = d2;
                    bi = static_cast<int>(i);
                    bj = static_cast<int>(j);
                }
            }
        if (bi < 0) break;
        detail::PlateauBlob& a = kept[bi];
        detail::PlateauBlob& b = kept[bj];
        a.pixels.insert(a.pixels.end(), b.pixels.begin(), b.pixels.end());
        std::sort(a.pixels.begin(), a.pixels.end());
        a.weight += b.weight;
        a.wr += b.wr;
        a.wc += b.wc;
        a.snap();
        kept.erase(kept.begin() + bj);
    }

    std::sort(kept.begin(), kept.end(),
              [](const detail::PlateauBlob& a, const detail::PlateauBlob& b) {
                  return a.rep < b.rep;
              });

    DetectionResult out;
    out.threshold = thr;
    out.e_max = img.e_max;
    for (std::size_t i = 0; i < kept.size(); ++i) {
        SingularPoint p;
        p.id = static_cast<int>(i);
        p.pixel = kept[i].rep;
        p.brightness = img.at(p.pixel.row, p.pixel.col);
        const bool near_border = p.pixel.row < 2 || p.pixel.col < 2 ||
                                 p.pixel.row >= h - 2 || p.pixel.col >= w - 2;
        p.kind = near_border ? PointKind::boundary_adjacent : PointKind::interior;
        out.points.push_back(p);
        out.plateaus.push_back(std::move(kept[i].pixels));
    }
    return out;
}

}  // namespace sfs
