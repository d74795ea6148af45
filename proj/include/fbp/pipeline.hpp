#pragma once

#include <string>

#include "fbp/filters.hpp"
#include "fbp/geometry.hpp"
#include "fbp/grid.hpp"
#include "fbp/raster.hpp"

namespace fbp {

struct ReconstructionConfig {
    Geometry geometry;
    int out_size = 0;
    int padded_len = 0;  // 0 -> next power of two >= 2N

    int effective_padded_len() const;
};

int default_padded_len(int num_detectors);

/// Row-wise Fourier filtering: transform each angle row, multiply bin-wise by
/// the real spectrum, inverse-transform, truncate to N. spectrum.padded_len
/// must be a power of two >= 2N.
Grid filter_sinogram(const Grid& sinogram, const FilterSpectrum& spectrum);
Sinogram filter_sinogram(const Sinogram& sinogram,
                         const FilterSpectrum& spectrum);

/// Linear part of the reconstruction: filter, backproject, and scale by
/// 1/(2*detector_spacing). The scale converts the normalized-frequency filter
/// response (ramp(1/2) = 1) to the physical |nu| scale, so the classical
/// filters invert the forward model quantitatively instead of up to an
/// N-dependent constant.
Grid reconstruct_preactivation(const Grid& sinogram, const Geometry& geometry,
                               const FilterSpectrum& spectrum, int out_size);

/// Full path: ReLU(backproject(filter(sinogram))). Output pixels are >= 0.
Image reconstruct(const Sinogram& sinogram, const ReconstructionConfig& config,
                  const FilterSpectrum& spectrum);

/// Same path with a named analytic filter.
Image fbp_baseline(const Sinogram& sinogram, const ReconstructionConfig& config,
                   const std::string& filter_name);

}  // namespace fbp
