#include "fbp/projector.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "fbp/parallel.hpp"
#include "fbp/rng.hpp"

namespace fbp {

namespace {

// Rays are clipped to |t| <= kTMax, generous enough to cross the whole
// [-1,1]^2 frame from any detector offset the default geometry produces.
constexpr double kTMax = 1.5;

// Bilinear read in the [-1,1]^2 frame; outside samples are 0.
double sample_bilinear(const Grid& img, double x, double y) {
    const int n = img.h;
    const double px = (x + 1.0) * n / 2.0 - 0.5;
    const double py = (y + 1.0) * n / 2.0 - 0.5;
    const int c0 = static_cast<int>(std::floor(px));
    const int r0 = static_cast<int>(std::floor(py));
    const double fc = px - c0;
    const double fr = py - r0;
    double acc = 0.0;
    for (int dr = 0; dr <= 1; ++dr) {
        const int r = r0 + dr;
        if (r < 0 || r >= n) continue;
        const double wr = dr ? fr : 1.0 - fr;
        for (int dc = 0; dc <= 1; ++dc) {
            const int c = c0 + dc;
            if (c < 0 || c >= n) continue;
            const double wc = dc ? fc : 1.0 - fc;
            acc += wr * wc * img(r, c);
        }
    }
    return acc;
}

}  // namespace

Grid forward_project(const Grid& image, const Geometry& geometry,
                     double step_px) {
    validate(geometry);
    if (image.h != image.w)
        throw std::invalid_argument("forward_project: image must be square");
    if (!(step_px > 0.0))
        throw std::invalid_argument("forward_project: step must be positive");
    const int n = image.h;
    const double dt = step_px * (2.0 / n);
    const int num_steps =
        static_cast<int>(std::ceil(2.0 * kTMax / dt - 1e-9));

    Grid sino(geometry.num_angles, geometry.num_detectors);
    parallel_for(geometry.num_angles, [&](int64_t begin, int64_t end) {
        for (int64_t i = begin; i < end; ++i) {
            const double theta = geometry.angle(static_cast<int>(i));
            const double ct = std::cos(theta);
            const double st = std::sin(theta);
            for (int j = 0; j < geometry.num_detectors; ++j) {
                const double s = geometry.detector_offset(j);
                double acc = 0.0;
                for (int k = 0; k < num_steps; ++k) {
                    const double t = -kTMax + (k + 0.5) * dt;
                    const double x = s * ct - t * st;
                    const double y = s * st + t * ct;
                    acc += sample_bilinear(image, x, y);
                }
                sino(static_cast<int>(i), j) = acc * dt;
            }
        }
    });
    return sino;
}

Sinogram forward_project(const Image& image, const Geometry& geometry,
                         double step_px) {
    return to_sinogram(forward_project(to_grid(image), geometry, step_px),
                       geometry);
}

Grid back_project(const Grid& sinogram, const Geometry& geometry,
                  int out_size) {
    validate(geometry);
    if (sinogram.h != geometry.num_angles ||
        sinogram.w != geometry.num_detectors)
        throw std::invalid_argument("back_project: geometry mismatch");
    if (out_size < 1)
        throw std::invalid_argument("back_project: out_size must be >= 1");

    const int n = out_size;
    const int N = geometry.num_detectors;
    const double dtheta = geometry.angle_step;
    std::vector<double> cos_t(geometry.num_angles), sin_t(geometry.num_angles);
    for (int i = 0; i < geometry.num_angles; ++i) {
        cos_t[i] = std::cos(geometry.angle(i));
        sin_t[i] = std::sin(geometry.angle(i));
    }

    Grid out(n, n);
    parallel_for(static_cast<int64_t>(n) * n, [&](int64_t begin, int64_t end) {
        for (int64_t p = begin; p < end; ++p) {
            const int r = static_cast<int>(p / n);
            const int c = static_cast<int>(p % n);
            const double x = (c + 0.5) * (2.0 / n) - 1.0;
            const double y = (r + 0.5) * (2.0 / n) - 1.0;
            double acc = 0.0;
            for (int i = 0; i < geometry.num_angles; ++i) {
                const double s = x * cos_t[i] + y * sin_t[i];
                const double u =
                    s / geometry.detector_spacing + (N - 1) / 2.0;
                // Hat-function footprint: the row tapers to zero one sample
                // beyond each end, matching the image-side bilinear skirt so
                // forward and back projection stay mutually adjoint.
                if (u <= -1.0 || u >= N) continue;
                const int j0 = static_cast<int>(std::floor(u));
                const double w1 = u - j0;
                if (j0 >= 0) acc += (1.0 - w1) * sinogram(i, j0);
                if (j0 + 1 <= N - 1) acc += w1 * sinogram(i, j0 + 1);
            }
            out(r, c) = acc * dtheta;
        }
    });
    return out;
}

Image back_project(const Sinogram& sinogram, const Geometry& geometry,
                   int out_size) {
    if (!(sinogram.geometry == geometry))
        throw std::invalid_argument("back_project: geometry mismatch");
    return to_image(back_project(to_grid(sinogram), geometry, out_size));
}

Grid back_project_transpose(const Grid& image, const Geometry& geometry,
                            int num_detectors) {
    validate(geometry);
    if (image.h != image.w)
        throw std::invalid_argument(
            "back_project_transpose: image must be square");
    if (num_detectors != geometry.num_detectors)
        throw std::invalid_argument(
            "back_project_transpose: detector count mismatch");

    const int n = image.h;
    const int N = geometry.num_detectors;
    const double dtheta = geometry.angle_step;
    std::vector<double> cos_t(geometry.num_angles), sin_t(geometry.num_angles);
    for (int i = 0; i < geometry.num_angles; ++i) {
        cos_t[i] = std::cos(geometry.angle(i));
        sin_t[i] = std::sin(geometry.angle(i));
    }

    Grid out(geometry.num_angles, N);
    // Scatter per angle row; rows are independent, so parallelize over angles.
    parallel_for(geometry.num_angles, [&](int64_t begin, int64_t end) {
        for (int64_t i = begin; i < end; ++i) {
            for (int r = 0; r < n; ++r) {
                const double y = (r + 0.5) * (2.0 / n) - 1.0;
                for (int c = 0; c < n; ++c) {
                    const double x = (c + 0.5) * (2.0 / n) - 1.0;
                    const double s = x * cos_t[i] + y * sin_t[i];
                    const double u =
                        s / geometry.detector_spacing + (N - 1) / 2.0;
                    if (u <= -1.0 || u >= N) continue;
                    const int j0 = static_cast<int>(std::floor(u));
                    const double w1 = u - j0;
                    const double g = image(r, c) * dtheta;
                    if (j0 >= 0) out(static_cast<int>(i), j0) += (1.0 - w1) * g;
                    if (j0 + 1 <= N - 1)
                        out(static_cast<int>(i), j0 + 1) += w1 * g;
                }
            }
        }
    });
    return out;
}

Grid apply_noise(const Grid& sinogram, double photon_count, uint64_t seed) {
    if (std::isinf(photon_count) && photon_count > 0.0) return sinogram;
    if (!(photon_count > 0.0))
        throw std::invalid_argument("apply_noise: photon count must be > 0");
    for (double v : sinogram.v)
        if (!(v >= 0.0))
            throw std::invalid_argument(
                "apply_noise: negative projection value is unphysical");

    Grid out(sinogram.h, sinogram.w);
    parallel_for(static_cast<int64_t>(sinogram.v.size()),
                 [&](int64_t begin, int64_t end) {
        for (int64_t idx = begin; idx < end; ++idx) {
            // Counter-based stream: one generator per element, derived from
            // (seed, index) only, so thread count cannot change the draw.
            uint64_t ctr = seed + 0x9e3779b97f4a7c15ULL *
                                      (static_cast<uint64_t>(idx) + 1);
            Xoshiro256pp gen(splitmix64(ctr));
            const double mean = photon_count * std::exp(-sinogram.v[idx]);
            const int64_t n = poisson_draw(gen, mean);
            const double counts =
                std::max<int64_t>(n, 1);
            out.v[idx] = -std::log(counts / photon_count);
        }
    });
    return out;
}

Sinogram apply_noise(const Sinogram& sinogram, double photon_count,
                     uint64_t seed) {
    Sinogram out = sinogram;
    Grid noisy = apply_noise(to_grid(sinogram), photon_count, seed);
    for (size_t i = 0; i < noisy.v.size(); ++i)
        out.data[i] = static_cast<float>(noisy.v[i]);
    return out;
}

}  // namespace fbp
