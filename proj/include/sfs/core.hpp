#pragma once

/*
 * Shared grid/field types and the error taxonomy used by every module.
 *
 * All fields are row-major over a uniform rectangular sampling of a world
 * window.  Pixel (row, col) samples the world point (x(col), y(row)) with
 * row 0 at y_min, so images, height fields and distance fields can be
 * overlaid without re-indexing.
 */

#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

namespace sfs {

// The CLI front end maps each class onto its own process exit code, so the
// library throws the most specific type that applies.
struct bad_input_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct degenerate_image_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct infeasible_configuration_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct unresolved_ambiguity_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Pixel {
    int row = 0;
    int col = 0;
    friend bool operator==(const Pixel&, const Pixel&) = default;
};

// Row-major ordering, matching vertex id assignment elsewhere.
inline bool operator<(const Pixel& a, const Pixel& b) {
    if (a.row != b.row) return a.row < b.row;
    return a.col < b.col;
}

struct GridSpec {
    int width = 0;
    int height = 0;
    double x_min = 0.0, x_max = 0.0;
    double y_min = 0.0, y_max = 0.0;

    double hx() const { return (x_max - x_min) / (width - 1); }
    double hy() const { return (y_max - y_min) / (height - 1); }
    double x(int col) const { return x_min + col * hx(); }
    double y(int row) const { return y_min + row * hy(); }
    int size() const { return width * height; }
    int index(int row, int col) const { return row * width + col; }
    int index(const Pixel& p) const { return p.row * width + p.col; }
    bool contains(int row, int col) const {
        return row >= 0 && row < height && col >= 0 && col < width;
    }
    bool contains(const Pixel& p) const { return contains(p.row, p.col); }

    // Throws instead of returning a flag: an invalid grid is always a caller
    // bug or malformed input, never a state to continue from.
    void validate() const {
        if (width < 2 || height < 2)
            throw bad_input_error("grid must be at least 2x2, got " +
                                  std::to_string(width) + "x" + std::to_string(height));
        if (!(x_max > x_min) || !(y_max > y_min))
            throw bad_input_error("grid world window is empty or inverted");
    }

    friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

struct HeightField {
    GridSpec grid;
    std::vector<double> z;

    double& at(int row, int col) { return z[grid.index(row, col)]; }
    double at(int row, int col) const { return z[grid.index(row, col)]; }
};

struct GradientField {
    GridSpec grid;
    std::vector<double> p;  // dz/dx
    std::vector<double> q;  // dz/dy
};

struct IrradianceImage {
    GridSpec grid;
    std::vector<double> e;
    double e_max = 1.0;  // calibrated brightness of a frontal patch

    double& at(int row, int col) { return e[grid.index(row, col)]; }
    double at(int row, int col) const { return e[grid.index(row, col)]; }
};

// Every number written to a text artifact goes through this single formatter
// so repeated runs produce byte-identical files.  Negative zero is collapsed
// because "-0" vs "0" would otherwise depend on rounding direction.
inline std::string format_g6(double v) {
    if (v == 0.0) v = 0.0;
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return std::string(buf);
}

// Round a double to the value format_g6 would print, for writers (JSON) that
// serialize numbers themselves.
inline double round_sig6(double v) {
    if (v == 0.0) return 0.0;
    if (!std::isfinite(v)) return v;
    return std::stod(format_g6(v));
}

}  // namespace sfs
