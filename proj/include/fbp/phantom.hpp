#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "fbp/geometry.hpp"
#include "fbp/raster.hpp"

namespace fbp {

/// Additive ellipse in the normalized [-1,1]^2 frame.
struct Ellipse {
    double x0 = 0.0;
    double y0 = 0.0;
    double a = 0.0;   // semi-axis along the ellipse x' axis
    double b = 0.0;   // semi-axis along the ellipse y' axis
    double phi = 0.0; // rotation, radians
    double rho = 0.0; // additive intensity
};

/// Classic 10-ellipse head phantom table (Shepp & Logan 1974 contrasts:
/// outer shell 2.0, interior -0.98, features ±0.01/0.02); values land in
/// [0, 2].
const std::vector<Ellipse>& shepp_logan_ellipses();

/// Pixel value = sum of rho over ellipses containing the pixel center.
Image rasterize_ellipses(int size, const std::vector<Ellipse>& ellipses,
                         bool clamp_nonnegative = false);

Image shepp_logan(int size);

/// Deterministic for a fixed seed; ellipses stay inside the unit disk and the
/// result is clamped to >= 0.
Image random_ellipse_phantom(int size, int num_ellipses, uint64_t seed);

struct DatasetConfig {
    int train_count = 200;
    int val_count = 20;
    int test_count = 50;
    int size = 64;
    int num_angles = 90;      // 0 -> default for size
    int num_detectors = 0;    // 0 -> size
    double photon_count = 1e4;  // <= 0 disables noise (noiseless sentinel)
    uint64_t seed = 0;
    int min_ellipses = 3;
    int max_ellipses = 12;
    double forward_step_px = 0.5;  // ray sampling step, in pixels

    Geometry geometry() const;
};

struct SampleFiles {
    std::string gt;
    std::string sino;
    std::string noisy;
};

struct DatasetManifest {
    int image_size = 0;
    Geometry geometry;
    double photon_count = 0.0;
    uint64_t seed = 0;
    std::filesystem::path root;
    std::map<std::string, std::vector<SampleFiles>> splits;

    const std::vector<SampleFiles>& split(const std::string& name) const;
};

/// Writes <split>_<index>_{gt|sino|noisy}.fbr triples plus manifest.json.
/// Pure function of (config, seed): regenerating yields identical bytes.
DatasetManifest generate_dataset(const std::filesystem::path& out_dir,
                                 const DatasetConfig& config);

/// Loads manifest.json and verifies every listed file exists.
DatasetManifest load_manifest(const std::filesystem::path& manifest_path);

}  // namespace fbp
