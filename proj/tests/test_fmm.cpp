#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "sfs/fmm.hpp"
#include "sfs/forward_model.hpp"

using namespace sfs;

TEST_CASE("indexed min-heap pops by value with index tie-break") {
    IndexedMinHeap h(16);
    h.push_or_decrease(3, 5.0);
    h.push_or_decrease(7, 1.0);
    h.push_or_decrease(2, 5.0);
    h.push_or_decrease(11, 0.5);
    h.push_or_decrease(3, 0.25);  // decrease-key
    h.push_or_decrease(7, 9.0);   // raising is ignored

    std::vector<int> order;
    std::vector<double> values;
    while (!h.empty()) {
        auto [v, i] = h.pop_min();
        values.push_back(v);
        order.push_back(i);
    }
    REQUIRE(order == std::vector<int>{3, 11, 7, 2});
    REQUIRE(values == std::vector<double>{0.25, 0.5, 1.0, 5.0});
}

TEST_CASE("heap survives a randomized decrease-key workout") {
    std::mt19937 rng(20240817);
    IndexedMinHeap h(400);
    std::vector<double> best(400, std::numeric_limits<double>::infinity());
    std::uniform_int_distribution<int> pick(0, 399);
    std::uniform_real_distribution<double> val(0.0, 100.0);
    for (int step = 0; step < 5000; ++step) {
        int id = pick(rng);
        double v = val(rng);
        h.push_or_decrease(id, v);
        best[id] = std::min(best[id], v);
    }
    double prev = -1.0;
    int count = 0;
    while (!h.empty()) {
        auto [v, i] = h.pop_min();
        REQUIRE(v >= prev);
        REQUIRE(v == best[i]);
        prev = v;
        ++count;
    }
    REQUIRE(count > 0);
}

namespace {

SlownessField uniform_slowness(int n, double f) {
    GridSpec g{n, n, -1.0, 1.0, -1.0, 1.0};
    return SlownessField{g, std::vector<double>(g.size(), f)};
}

// Errors against Euclidean distance, measured far enough from the source
// that the seeded disk does not trivially win.
struct EuclidErrors {
    double rel;
    double abs;
};

EuclidErrors euclid_errors(int n) {
    SlownessField s = uniform_slowness(n, 1.0);
    const GridSpec& g = s.grid;
    const Pixel src{n / 2, n / 2};
    DistanceField d = fmm_distance(s, src);
    const double h = g.hx();
    EuclidErrors worst{0.0, 0.0};
    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
            const double truth = std::hypot((c - src.col) * h, (r - src.row) * h);
            if (truth < 20.0 * h) continue;
            const double err = std::abs(d.at(r, c) - truth);
            worst.abs = std::max(worst.abs, err);
            worst.rel = std::max(worst.rel, err / truth);
        }
    }
    return worst;
}

}  // namespace

TEST_CASE("uniform slowness reproduces euclidean distance to 2 percent") {
    EuclidErrors e129 = euclid_errors(129);
    EuclidErrors e257 = euclid_errors(257);
    CAPTURE(e129.rel, e257.rel, e129.abs, e257.abs);
    REQUIRE(e129.rel <= 0.02);
    REQUIRE(e257.rel <= 0.02);
    // near-linear convergence: halving h must shrink the worst absolute
    // error noticeably
    REQUIRE(e129.abs / e257.abs >= 1.7);
}

TEST_CASE("constant scaling of slowness scales distances linearly") {
    SlownessField s1 = uniform_slowness(65, 1.0);
    SlownessField s3 = uniform_slowness(65, 3.0);
    DistanceField d1 = fmm_distance(s1, {10, 50});
    DistanceField d3 = fmm_distance(s3, {10, 50});
    for (int i = 0; i < s1.grid.size(); i += 11)
        REQUIRE(d3.d[i] == Catch::Approx(3.0 * d1.d[i]).margin(1e-9));
}

TEST_CASE("zero-slowness plateaus propagate the smallest neighbor exactly") {
    // Uniform field except a zero band; entering the band costs, crossing
    // it doesn't, and every band pixel holds the same value bit-exactly.
    const int n = 41;
    SlownessField s = uniform_slowness(n, 1.0);
    const GridSpec& g = s.grid;
    for (int r = 15; r < 26; ++r)
        for (int c = 0; c < n; ++c) s.f[g.index(r, c)] = 0.0;
    DistanceField d = fmm_distance(s, {0, 20});

    double band_val = d.at(15, 0);
    int equal = 0;
    for (int r = 15; r < 26; ++r)
        for (int c = 0; c < n; ++c)
            if (d.at(r, c) == d.at(15, 20)) ++equal;
    // the whole band collapses to one value (the cheapest entry point)
    REQUIRE(equal == 11 * n);
    REQUIRE(d.at(15, 20) <= band_val + 1e-12);
    // beyond the band the march keeps accumulating
    REQUIRE(d.at(35, 20) > d.at(25, 20));
}

TEST_CASE("fmm distance between shading extrema recovers the height drop") {
    // End-to-end on the analytic pair: the geodesic from the max to the min
    // runs down one monotone slope, so the eikonal distance approximates the
    // full height range |z_max - z_min| = 1.  The clamped plateaus around the
    // extrema and the first-order march each shave off a little, hence 5%.
    GridSpec g = scene_default_grid(SceneKind::bump);
    HeightField hf = make_surface(SceneKind::bump, {}, g);
    IrradianceImage img = render_lambertian(hf);
    SlownessField s = slowness_from_image(img, 0.02);

    // grid pixels nearest to the analytic extrema
    auto pixel_at = [&](double x, double y) {
        return Pixel{(int)std::lround((y - g.y_min) / g.hy()),
                     (int)std::lround((x - g.x_min) / g.hx())};
    };
    const double xc = 0.55;
    Pixel pmax = pixel_at(xc, 0.0), pmin = pixel_at(-xc, 0.0);
    DistanceField d = fmm_distance(s, pmax);
    const double expected = 1.0;
    CAPTURE(d.at(pmin), expected);
    REQUIRE(d.at(pmin) == Catch::Approx(expected).epsilon(0.05));
}

TEST_CASE("slowness construction validates its inputs") {
    GridSpec g{8, 8, 0, 1, 0, 1};
    IrradianceImage img{g, std::vector<double>(64, 0.5), 1.0};
    REQUIRE_THROWS_AS(slowness_from_image(img, 0.0), bad_input_error);
    REQUIRE_THROWS_AS(slowness_from_image(img, 1.0), bad_input_error);
    IrradianceImage bad_emax = img;
    bad_emax.e_max = -1.0;
    REQUIRE_THROWS_AS(slowness_from_image(bad_emax, 0.02), bad_input_error);
    IrradianceImage brighter = img;
    brighter.e[5] = 2.0;  // exceeds declared e_max
    REQUIRE_THROWS_AS(slowness_from_image(brighter, 0.02), bad_input_error);

    // black pixels signal shadow / invalid input
    IrradianceImage dark = img;
    dark.e[10] = 0.0;
    REQUIRE_THROWS_AS(slowness_from_image(dark, 0.02), bad_input_error);
    dark.e[10] = -0.1;
    REQUIRE_THROWS_AS(slowness_from_image(dark, 0.02), bad_input_error);

    // nearly-black pixels hit the slowness cap instead of overflowing
    IrradianceImage dim = img;
    dim.e[10] = 1e-12;
    SlownessField s = slowness_from_image(dim, 0.02);
    REQUIRE(s.f[10] == k_slowness_cap);
}

TEST_CASE("literal integrand variant is monotone in darkness and clamps plateaus") {
    GridSpec g{8, 8, 0, 1, 0, 1};
    IrradianceImage img{g, std::vector<double>(64, 0.5), 1.0};
    img.e[3] = 0.25;
    img.e[4] = 1.0;
    SlownessField lit = slowness_from_image(img, 0.02, true);
    REQUIRE(lit.f[3] == Catch::Approx(4.0));   // 1/e
    REQUIRE(lit.f[0] == Catch::Approx(2.0));
    REQUIRE(lit.f[4] == 0.0);                  // plateau clamp still applies
    SlownessField cor = slowness_from_image(img, 0.02, false);
    REQUIRE(cor.f[0] == Catch::Approx(std::sqrt(3.0)));  // sqrt(1/0.25 - 1)
}

TEST_CASE("fmm rejects malformed sources and fields") {
    SlownessField s = uniform_slowness(16, 1.0);
    REQUIRE_THROWS_AS(fmm_distance(s, {-1, 0}), bad_input_error);
    REQUIRE_THROWS_AS(fmm_distance(s, {0, 16}), bad_input_error);
    SlownessField neg = s;
    neg.f[5] = -0.5;
    REQUIRE_THROWS_AS(fmm_distance(neg, {0, 0}), bad_input_error);
    SlownessField inf_f = s;
    inf_f.f[5] = std::numeric_limits<double>::infinity();
    REQUIRE_THROWS_AS(fmm_distance(inf_f, {0, 0}), bad_input_error);
}

TEST_CASE("trace follows steepest descent back to the source") {
    SlownessField s = uniform_slowness(33, 1.0);
    DistanceField d = fmm_distance(s, {16, 16});
    GridPath path = trace_path(d, {2, 30});
    REQUIRE(path.pixels.front() == Pixel{16, 16});
    REQUIRE(path.pixels.back() == Pixel{2, 30});
    REQUIRE(path.cumulative.front() == 0.0);
    REQUIRE(path.cumulative.back() == d.at(2, 30));
    for (size_t i = 1; i < path.pixels.size(); ++i) {
        // consecutive pixels are 8-adjacent and non-increasing toward source
        REQUIRE(std::abs(path.pixels[i].row - path.pixels[i - 1].row) <= 1);
        REQUIRE(std::abs(path.pixels[i].col - path.pixels[i - 1].col) <= 1);
        REQUIRE(path.cumulative[i] >= path.cumulative[i - 1]);
    }
    // running the same trace twice gives the identical pixel sequence
    GridPath again = trace_path(d, {2, 30});
    REQUIRE(again.pixels == path.pixels);
}

TEST_CASE("trace crosses exact plateaus by shrinking chebyshev distance") {
    const int n = 31;
    SlownessField s = uniform_slowness(n, 0.0);  // one giant plateau
    DistanceField d = fmm_distance(s, {5, 5});
    GridPath path = trace_path(d, {20, 28});
    REQUIRE(path.pixels.front() == Pixel{5, 5});
    REQUIRE(path.pixels.back() == Pixel{20, 28});
    // plateau walk is the chebyshev geodesic: one step per unit distance
    REQUIRE((int)path.pixels.size() == std::max(20 - 5, 28 - 5) + 1);
}

TEST_CASE("trace rejects unreachable or out-of-grid targets") {
    SlownessField s = uniform_slowness(16, 1.0);
    DistanceField d = fmm_distance(s, {8, 8});
    REQUIRE_THROWS_AS(trace_path(d, {16, 2}), bad_input_error);
    d.d[s.grid.index(3, 3)] = std::numeric_limits<double>::infinity();
    REQUIRE_THROWS_AS(trace_path(d, {3, 3}), bad_input_error);
}

TEST_CASE("monotone check trims endpoint plateaus and flags interior brightness") {
    GridSpec g{12, 3, 0, 11, 0, 2};
    IrradianceImage img{g, std::vector<double>(g.size(), 0.5), 1.0};
    // bright plateaus at both ends of row 1, dark corridor between
    img.at(1, 0) = 1.0;
    img.at(1, 1) = 0.99;
    img.at(1, 10) = 0.995;
    img.at(1, 11) = 1.0;

    GridPath path;
    for (int c = 0; c <= 11; ++c) path.pixels.push_back({1, c});

    REQUIRE(is_monotone(path, img, {}, 0.02));

    SECTION("a bright pixel mid-path breaks monotonicity") {
        img.at(1, 5) = 0.985;  // above the 0.98 threshold
        REQUIRE_FALSE(is_monotone(path, img, {}, 0.02));
        REQUIRE(is_monotone(path, img, {}, 0.01));  // tighter eps admits it
    }
    SECTION("touching a foreign plateau breaks monotonicity") {
        REQUIRE_FALSE(is_monotone(path, img, {Pixel{1, 6}}, 0.02));
        // even 8-adjacency to the foreign plateau is rejected
        REQUIRE_FALSE(is_monotone(path, img, {Pixel{0, 6}}, 0.02));
        REQUIRE_FALSE(is_monotone(path, img, {Pixel{2, 7}}, 0.02));
    }
    SECTION("endpoint plateau pixels are exempt from the foreign set") {
        // the path's own first pixels bright: still monotone
        REQUIRE(is_monotone(path, img, {Pixel{11, 2}}, 0.02));
    }
}

TEST_CASE("an all-bright path is vacuously monotone") {
    GridSpec g{4, 2, 0, 3, 0, 1};
    IrradianceImage img{g, std::vector<double>(g.size(), 1.0), 1.0};
    GridPath path;
    for (int c = 0; c < 4; ++c) path.pixels.push_back({0, c});
    REQUIRE(is_monotone(path, img, {}, 0.02));
}
