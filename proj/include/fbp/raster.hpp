#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "fbp/geometry.hpp"

namespace fbp {

/// Row-major grid of attenuation values.
struct Image {
    int height = 0;
    int width = 0;
    std::vector<float> data;

    Image() = default;
    Image(int h, int w, float fill = 0.0f)
        : height(h), width(w), data(static_cast<size_t>(h) * w, fill) {}

    float& at(int r, int c) { return data[static_cast<size_t>(r) * width + c]; }
    float at(int r, int c) const { return data[static_cast<size_t>(r) * width + c]; }

    bool operator==(const Image&) const = default;
};

/// M x N grid of line integrals; row i is the projection at geometry angle i,
/// column j the detector cell at offset s_j.
struct Sinogram {
    Geometry geometry;
    std::vector<float> data;

    Sinogram() = default;
    explicit Sinogram(const Geometry& g, float fill = 0.0f)
        : geometry(g),
          data(static_cast<size_t>(g.num_angles) * g.num_detectors, fill) {}

    int num_angles() const { return geometry.num_angles; }
    int num_detectors() const { return geometry.num_detectors; }
    float& at(int i, int j) {
        return data[static_cast<size_t>(i) * geometry.num_detectors + j];
    }
    float at(int i, int j) const {
        return data[static_cast<size_t>(i) * geometry.num_detectors + j];
    }

    bool operator==(const Sinogram&) const = default;
};

enum class RasterErrc {
    io_failure,
    bad_magic,
    bad_header,
    truncated_payload,
    dimension_overflow,
};

class RasterError : public std::runtime_error {
public:
    RasterError(RasterErrc code, const std::string& what)
        : std::runtime_error(what), code_(code) {}
    RasterErrc code() const { return code_; }

private:
    RasterErrc code_;
};

using Raster = std::variant<Image, Sinogram>;

// Container format: ASCII header ("FBPRASTER 1", dtype/h/w lines, optional
// angles/det_spacing lines for sinograms, "data:"), then h*w little-endian
// IEEE-754 f32, row-major. write/read round-trip bit-exactly.
void write_raster(const std::filesystem::path& path, const Image& image);
void write_raster(const std::filesystem::path& path, const Sinogram& sinogram);
Raster read_raster(const std::filesystem::path& path);

Image read_image(const std::filesystem::path& path);
Sinogram read_sinogram(const std::filesystem::path& path);

/// 8-bit binary PGM; v maps to round(255*clamp((v-lo)/(hi-lo),0,1)).
void write_preview(const std::filesystem::path& path, const Image& image,
                   float window_lo, float window_hi);

}  // namespace fbp
