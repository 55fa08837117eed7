#pragma once

// Utilities shared by the test binaries: scratch directories, 8-bit
// quantization matching the PGM writer, and small deterministic RNG helpers.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <random>
#include <string>

#include "sfs/core.hpp"

namespace testutil {

// Fresh directory under the system temp root; removed on destruction.
struct ScratchDir {
    std::filesystem::path path;

    explicit ScratchDir(const std::string& tag) {
        auto base = std::filesystem::temp_directory_path();
        for (int i = 0; i < 10000; ++i) {
            auto cand = base / (tag + "-" + std::to_string(i));
            std::error_code ec;
            if (std::filesystem::create_directory(cand, ec)) {
                path = cand;
                return;
            }
        }
        throw std::runtime_error("could not create scratch dir for " + tag);
    }
    ~ScratchDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

// Same rounding the PGM writer applies, without touching the filesystem.
inline sfs::IrradianceImage quantize_8bit(const sfs::IrradianceImage& img) {
    sfs::IrradianceImage q = img;
    double mx = 0.0;
    for (double& v : q.e) {
        double g = std::lround(std::min(std::max(v * 255.0, 0.0), 255.0)) / 255.0;
        v = g;
        mx = std::max(mx, g);
    }
    q.e_max = mx;
    return q;
}

// Snap every height to a dyadic lattice.  Adding a constant from the same
// lattice is then exact in double arithmetic, which the shading-invariance
// tests rely on.
inline sfs::HeightField dyadic_quantize(sfs::HeightField hf, int bits = 20) {
    const double s = double(1 << bits);
    for (double& v : hf.z) v = std::round(v * s) / s;
    return hf;
}

}  // namespace testutil
