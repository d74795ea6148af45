#pragma once

#include "fbp/grid.hpp"

namespace fbp {

struct LossWeights {
    double alpha = 10.0;  // GEE weight
    double beta = 20.0;   // GV weight
};

struct GEEParams {
    double kappa = 0.1;   // cutoff, normalized frequency
    double sigma = 0.05;  // Gaussian spread
};

struct GVParams {
    int patch = 4;  // n; gradient maps are center-cropped if dims aren't divisible
};

struct LossBreakdown {
    double total = 0.0;
    double mse = 0.0;
    double gee = 0.0;
    double gv = 0.0;
};

double mse(const Grid& rec, const Grid& gt);

/// Sobel maps via correlation with Sx = [[-1,0,1],[-2,0,2],[-1,0,1]] and
/// Sy = Sx^T, replicate padding at the borders (maps stay full-size).
void sobel_gradients(const Grid& image, Grid& gx, Grid& gy);

/// Unbiased sample variance (divisor n^2-1) of each n x n non-overlapping
/// patch; output is (h/n) x (w/n).
Grid patch_variance_map(const Grid& grad_map, int n);

double gv_loss(const Grid& rec, const Grid& gt, const GVParams& params);

/// W = 1 - exp(-(sqrt(fx^2+fy^2) - kappa)^2 / (2 sigma^2)) on the centered
/// frequency grid; values in [0, 1].
Grid gaussian_highpass_weights(int height, int width, const GEEParams& params);

/// L1 distance between high-pass-weighted 2D magnitude spectra, divided by
/// the pixel count so the weight alpha means the same thing at every size.
double gee_loss(const Grid& rec, const Grid& gt, const GEEParams& params);

LossBreakdown hybrid_loss(const Grid& rec, const Grid& gt,
                          const LossWeights& weights, const GEEParams& gee,
                          const GVParams& gv);

// Gradients w.r.t. rec. Subgradient at |.| and norm kinks is 0 (matches the
// convention the finite-difference checks assume).
Grid mse_grad(const Grid& rec, const Grid& gt);
Grid gv_loss_grad(const Grid& rec, const Grid& gt, const GVParams& params);
Grid gee_loss_grad(const Grid& rec, const Grid& gt, const GEEParams& params);

/// Loss and its gradient in one pass (shares the spectra/Sobel work).
LossBreakdown hybrid_loss_and_grad(const Grid& rec, const Grid& gt,
                                   const LossWeights& weights,
                                   const GEEParams& gee, const GVParams& gv,
                                   Grid& grad_out);

}  // namespace fbp
