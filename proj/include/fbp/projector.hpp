#pragma once

#include <cstdint>

#include "fbp/geometry.hpp"
#include "fbp/grid.hpp"
#include "fbp/raster.hpp"

namespace fbp {

/// Ray-driven Radon transform: row i, column j holds the line integral along
/// the ray with normal angle theta_i at detector offset s_j, sampled with
/// bilinear interpolation at step_px pixels and summed as value*dt. Pixels
/// outside the image contribute 0. Requires a square image.
Grid forward_project(const Grid& image, const Geometry& geometry,
                     double step_px = 0.5);
Sinogram forward_project(const Image& image, const Geometry& geometry,
                         double step_px = 0.5);

/// Pixel-driven backprojection: for each output pixel accumulate the linearly
/// interpolated row value at s_xy = x*cos(theta)+y*sin(theta), times the
/// angular increment. The row is read through hat functions centered on the
/// detector samples, so it tapers to zero over one sample pitch beyond each
/// end (mirroring the forward projector's bilinear skirt) and contributes 0
/// farther out.
Grid back_project(const Grid& sinogram, const Geometry& geometry, int out_size);
Image back_project(const Sinogram& sinogram, const Geometry& geometry,
                   int out_size);

/// Exact matrix transpose of back_project (same interpolation weights, same
/// angular weight, scattered instead of gathered). <B s, x> == <s, B^T x> to
/// roundoff; the training gradient relies on this.
Grid back_project_transpose(const Grid& image, const Geometry& geometry,
                            int num_detectors);

/// Beer-Lambert low-dose model: per element p draw n ~ Poisson(I0*exp(-p))
/// and return -ln(max(n,1)/I0). Elements get independent counter-seeded
/// streams, so the result is identical for any worker count.
/// photon_count = +inf is the noiseless sentinel (returns the input).
Sinogram apply_noise(const Sinogram& sinogram, double photon_count,
                     uint64_t seed);
Grid apply_noise(const Grid& sinogram, double photon_count, uint64_t seed);

}  // namespace fbp
