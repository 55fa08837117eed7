#pragma once

/*
 * File formats: 8-bit PGM images and height-field CSV dumps.
 *
 * PGM gray levels map linearly with 0 <-> 0.0 and 255 <-> 1.0.  Writing
 * embeds the world window as a comment ("# grid x_min x_max y_min y_max")
 * so a later pipeline stage can recover world coordinates from the image
 * alone; foreign PGMs without the comment get unit pixel spacing.
 */

#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "sfs/core.hpp"

namespace sfs {

inline void write_pgm(const std::string& path, const IrradianceImage& img, bool binary = true) {
    img.grid.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw bad_input_error("cannot open '" + path + "' for writing");
    out << (binary ? "P5" : "P2") << "\n";
    out << "# grid " << format_g6(img.grid.x_min) << " " << format_g6(img.grid.x_max) << " "
        << format_g6(img.grid.y_min) << " " << format_g6(img.grid.y_max) << "\n";
    out << img.grid.width << " " << img.grid.height << "\n255\n";
    std::string row;
    for (int r = 0; r < img.grid.height; ++r) {
        row.clear();
        for (int c = 0; c < img.grid.width; ++c) {
            double v = img.at(r, c) * 255.0;
            long g = std::lround(v < 0.0 ? 0.0 : (v > 255.0 ? 255.0 : v));
            if (binary)
                row.push_back(static_cast<char>(static_cast<unsigned char>(g)));
            else
                row += std::to_string(g) + (c + 1 < img.grid.width ? " " : "\n");
        }
        out.write(row.data(), (std::streamsize)row.size());
    }
    if (!out) throw bad_input_error("short write to '" + path + "'");
}

namespace detail {

// PGM token scanner: skips whitespace and '#' comments, but remembers the
// comment bodies so the grid annotation can be recovered.
struct PgmScanner {
    std::istream& in;
    std::vector<std::string> comments;

    int next_token(std::string& tok) {
        tok.clear();
        int ch = in.get();
        while (ch != EOF) {
            if (ch == '#') {
                std::string line;
                std::getline(in, line);
                comments.push_back(line);
                ch = in.get();
            } else if (std::isspace(ch)) {
                ch = in.get();
            } else {
                break;
            }
        }
        while (ch != EOF && !std::isspace(ch)) {
            tok.push_back((char)ch);
            ch = in.get();
        }
        return tok.empty() ? EOF : 0;
    }

    long next_int(const char* what) {
        std::string tok;
        if (next_token(tok) == EOF) throw bad_input_error(std::string("pgm: missing ") + what);
        try {
            size_t used = 0;
            long v = std::stol(tok, &used);
            if (used != tok.size()) throw std::invalid_argument(tok);
            return v;
        } catch (const std::exception&) {
            throw bad_input_error(std::string("pgm: bad ") + what + " '" + tok + "'");
        }
    }
};

}  // namespace detail

inline IrradianceImage read_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw bad_input_error("cannot open '" + path + "'");
    detail::PgmScanner sc{in, {}};
    std::string magic;
    if (sc.next_token(magic) == EOF || (magic != "P2" && magic != "P5"))
        throw bad_input_error("'" + path + "' is not a P2/P5 pgm");
    const long w = sc.next_int("width");
    const long h = sc.next_int("height");
    const long maxval = sc.next_int("maxval");
    if (w < 2 || h < 2 || w > 1 << 15 || h > 1 << 15)
        throw bad_input_error("pgm: unsupported dimensions " + std::to_string(w) + "x" +
                              std::to_string(h));
    if (maxval != 255)
        throw bad_input_error("pgm: only maxval 255 is supported, got " + std::to_string(maxval));

    GridSpec grid{(int)w, (int)h, 0.0, (double)(w - 1), 0.0, (double)(h - 1)};
    for (const std::string& cm : sc.comments) {
        std::istringstream cs(cm);
        std::string tag;
        double x0, x1, y0, y1;
        if (cs >> tag >> x0 >> x1 >> y0 >> y1 && tag == "grid") {
            grid.x_min = x0;
            grid.x_max = x1;
            grid.y_min = y0;
            grid.y_max = y1;
        }
    }
    grid.validate();

    IrradianceImage img{grid, std::vector<double>(grid.size()), 1.0};
    if (magic == "P5") {
        // Exactly one whitespace byte separates the header from the raster.
        std::vector<unsigned char> raw(grid.size());
        in.read(reinterpret_cast<char*>(raw.data()), grid.size());
        if (in.gcount() != grid.size()) throw bad_input_error("pgm: truncated raster");
        for (int i = 0; i < grid.size(); ++i) img.e[i] = raw[i] / 255.0;
    } else {
        for (int i = 0; i < grid.size(); ++i) {
            long v = sc.next_int("pixel");
            if (v < 0 || v > 255) throw bad_input_error("pgm: pixel out of range");
            img.e[i] = v / 255.0;
        }
    }
    double mx = 0.0;
    for (double v : img.e) mx = std::max(mx, v);
    if (mx <= 0.0) throw degenerate_image_error("pgm: image is entirely black");
    img.e_max = mx;
    return img;
}

// Height CSV: "# width height x_min x_max y_min y_max" then one comma-
// separated line per row, row 0 first.
inline void write_height_csv(const std::string& path, const HeightField& hf) {
    hf.grid.validate();
    if ((int)hf.z.size() != hf.grid.size()) throw bad_input_error("height field size mismatch");
    std::ofstream out(path);
    if (!out) throw bad_input_error("cannot open '" + path + "' for writing");
    const GridSpec& g = hf.grid;
    out << "# " << g.width << " " << g.height << " " << format_g6(g.x_min) << " "
        << format_g6(g.x_max) << " " << format_g6(g.y_min) << " " << format_g6(g.y_max) << "\n";
    for (int r = 0; r < g.height; ++r) {
        for (int c = 0; c < g.width; ++c) {
            if (c) out << ",";
            out << format_g6(hf.at(r, c));
        }
        out << "\n";
    }
    if (!out) throw bad_input_error("short write to '" + path + "'");
}

inline HeightField read_height_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw bad_input_error("cannot open '" + path + "'");
    std::string header;
    if (!std::getline(in, header) || header.size() < 2 || header[0] != '#')
        throw bad_input_error("height csv: missing '# width height ...' header");
    std::istringstream hs(header.substr(1));
    GridSpec g;
    if (!(hs >> g.width >> g.height >> g.x_min >> g.x_max >> g.y_min >> g.y_max))
        throw bad_input_error("height csv: malformed header '" + header + "'");
    g.validate();

    HeightField hf{g, {}};
    hf.z.reserve(g.size());
    std::string line;
    int rows = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string cell;
        int cols = 0;
        while (std::getline(ls, cell, ',')) {
            // strtod instead of stod: subnormal heights (far-field tails of
            // exponentials) must parse as their rounded value, not throw
            const char* begin = cell.c_str();
            char* end = nullptr;
            double v = std::strtod(begin, &end);
            while (end && *end != '\0' && std::isspace((unsigned char)*end)) ++end;
            if (end == begin || (end && *end != '\0') || !std::isfinite(v))
                throw bad_input_error("height csv: bad cell '" + cell + "' at row " +
                                      std::to_string(rows));
            hf.z.push_back(v);
            ++cols;
        }
        if (cols != g.width)
            throw bad_input_error("height csv: row " + std::to_string(rows) + " has " +
                                  std::to_string(cols) + " cells, expected " +
                                  std::to_string(g.width));
        ++rows;
    }
    if (rows != g.height)
        throw bad_input_error("height csv: got " + std::to_string(rows) + " rows, expected " +
                              std::to_string(g.height));
    return hf;
}

}  // namespace sfs
