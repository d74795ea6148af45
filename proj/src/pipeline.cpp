#include "fbp/pipeline.hpp"

#include <stdexcept>

#include "fbp/projector.hpp"
#include "fbp/spectral.hpp"

namespace fbp {

int default_padded_len(int num_detectors) {
    if (num_detectors < 1)
        throw std::invalid_argument("default_padded_len: detectors must be >= 1");
    return next_power_of_two(2 * num_detectors);
}

int ReconstructionConfig::effective_padded_len() const {
    if (padded_len == 0) return default_padded_len(geometry.num_detectors);
    if (!is_power_of_two(padded_len) || padded_len < 2 * geometry.num_detectors)
        throw std::invalid_argument(
            "padded_len must be a power of two >= twice the detector count");
    return padded_len;
}

Grid filter_sinogram(const Grid& sinogram, const FilterSpectrum& spectrum) {
    const int P = spectrum.padded_len;
    if (!is_power_of_two(P) || P < 2 * sinogram.w)
        throw std::invalid_argument(
            "filter_sinogram: spectrum length must be a power of two >= twice "
            "the detector count");
    if (spectrum.num_bins() != P / 2 + 1)
        throw std::invalid_argument(
            "filter_sinogram: spectrum bin count does not match its length");

    std::vector<HalfSpectrum> spectra = rows_to_halfspectrum(sinogram, P);
    for (auto& row : spectra)
        for (int k = 0; k <= P / 2; ++k) row.bins[k] *= spectrum.values[k];
    return halfspectrum_to_rows(spectra, sinogram.w);
}

Sinogram filter_sinogram(const Sinogram& sinogram,
                         const FilterSpectrum& spectrum) {
    return to_sinogram(filter_sinogram(to_grid(sinogram), spectrum),
                       sinogram.geometry);
}

Grid reconstruct_preactivation(const Grid& sinogram, const Geometry& geometry,
                               const FilterSpectrum& spectrum, int out_size) {
    Grid filtered = filter_sinogram(sinogram, spectrum);
    Grid image = back_project(filtered, geometry, out_size);
    const double scale = 1.0 / (2.0 * geometry.detector_spacing);
    for (double& v : image.v) v *= scale;
    return image;
}

Image reconstruct(const Sinogram& sinogram, const ReconstructionConfig& config,
                  const FilterSpectrum& spectrum) {
    if (!(sinogram.geometry == config.geometry))
        throw std::invalid_argument("reconstruct: geometry mismatch");
    if (config.out_size < 1)
        throw std::invalid_argument("reconstruct: out_size must be >= 1");
    if (spectrum.padded_len != config.effective_padded_len())
        throw std::invalid_argument(
            "reconstruct: spectrum length does not match the configured "
            "padding");

    Grid image = reconstruct_preactivation(to_grid(sinogram), config.geometry,
                                           spectrum, config.out_size);
    for (double& v : image.v)
        if (v < 0.0) v = 0.0;
    return to_image(image);
}

Image fbp_baseline(const Sinogram& sinogram, const ReconstructionConfig& config,
                   const std::string& filter_name) {
    const FilterSpectrum spectrum =
        analytic_filter(filter_name, config.effective_padded_len());
    return reconstruct(sinogram, config, spectrum);
}

}  // namespace fbp
