#pragma once

#include <vector>

#include "fbp/raster.hpp"

namespace fbp {

/// Double-precision working buffer used throughout the numerical pipeline.
/// Rasters are f32 at rest; computation promotes to double and rounds once
/// on the way back out.
struct Grid {
    int h = 0;
    int w = 0;
    std::vector<double> v;

    Grid() = default;
    Grid(int h_, int w_, double fill = 0.0)
        : h(h_), w(w_), v(static_cast<size_t>(h_) * w_, fill) {}

    double& operator()(int r, int c) { return v[static_cast<size_t>(r) * w + c]; }
    double operator()(int r, int c) const { return v[static_cast<size_t>(r) * w + c]; }
    size_t size() const { return v.size(); }
    bool same_shape(const Grid& o) const { return h == o.h && w == o.w; }
};

inline Grid to_grid(const Image& img) {
    Grid g(img.height, img.width);
    for (size_t i = 0; i < img.data.size(); ++i) g.v[i] = img.data[i];
    return g;
}

inline Grid to_grid(const Sinogram& s) {
    Grid g(s.num_angles(), s.num_detectors());
    for (size_t i = 0; i < s.data.size(); ++i) g.v[i] = s.data[i];
    return g;
}

inline Image to_image(const Grid& g) {
    Image img(g.h, g.w);
    for (size_t i = 0; i < g.v.size(); ++i) img.data[i] = static_cast<float>(g.v[i]);
    return img;
}

inline Sinogram to_sinogram(const Grid& g, const Geometry& geom) {
    Sinogram s(geom);
    for (size_t i = 0; i < g.v.size(); ++i) s.data[i] = static_cast<float>(g.v[i]);
    return s;
}

}  // namespace fbp
