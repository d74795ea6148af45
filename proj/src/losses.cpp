#include "fbp/losses.hpp"

#include <cmath>
#include <stdexcept>

#include "fbp/spectral.hpp"

namespace fbp {

namespace {

void check_same_shape(const Grid& a, const Grid& b, const char* who) {
    if (!a.same_shape(b))
        throw std::invalid_argument(std::string(who) + ": dimension mismatch");
}

constexpr int kSobelX[3][3] = {{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}};

int clampi(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

// Crops both Sobel maps to the largest centered region divisible by n.
struct CropSpec {
    int r0 = 0, c0 = 0, h = 0, w = 0;
};

CropSpec crop_for_patches(int h, int w, int n) {
    CropSpec s;
    s.h = h - h % n;
    s.w = w - w % n;
    s.r0 = (h - s.h) / 2;
    s.c0 = (w - s.w) / 2;
    if (s.h < n || s.w < n)
        throw std::invalid_argument("gv_loss: image smaller than one patch");
    return s;
}

Grid crop(const Grid& g, const CropSpec& s) {
    Grid out(s.h, s.w);
    for (int r = 0; r < s.h; ++r)
        for (int c = 0; c < s.w; ++c) out(r, c) = g(r + s.r0, c + s.c0);
    return out;
}

// One direction of the GV loss: ||v(rec map) - v(gt map)||_2 over flattened
// patch-variance maps. If grad_out is set, accumulates d/d(rec map) into it
// (cropped coordinates mapped back through CropSpec by the caller).
double gv_direction(const Grid& rec_map, const Grid& gt_map, int n,
                    Grid* grad_out) {
    const Grid v_rec = patch_variance_map(rec_map, n);
    const Grid v_gt = patch_variance_map(gt_map, n);
    double norm_sq = 0.0;
    for (size_t i = 0; i < v_rec.v.size(); ++i) {
        const double d = v_rec.v[i] - v_gt.v[i];
        norm_sq += d * d;
    }
    const double norm = std::sqrt(norm_sq);
    if (grad_out && norm > 0.0) {
        const int ph = rec_map.h / n, pw = rec_map.w / n;
        const double inv_df = 1.0 / (double(n) * n - 1.0);
        for (int pr = 0; pr < ph; ++pr) {
            for (int pc = 0; pc < pw; ++pc) {
                const double dv =
                    (v_rec(pr, pc) - v_gt(pr, pc)) / norm;  // d||.||/dv
                double mu = 0.0;
                for (int r = 0; r < n; ++r)
                    for (int c = 0; c < n; ++c)
                        mu += rec_map(pr * n + r, pc * n + c);
                mu /= double(n) * n;
                for (int r = 0; r < n; ++r)
                    for (int c = 0; c < n; ++c)
                        (*grad_out)(pr * n + r, pc * n + c) +=
                            dv * 2.0 * (rec_map(pr * n + r, pc * n + c) - mu) *
                            inv_df;
            }
        }
    }
    return norm;
}

// Scatter adjoint of sobel_gradients for one kernel: upstream is the
// gradient w.r.t. the Sobel map in full-image coordinates.
void sobel_adjoint_accumulate(const Grid& upstream, bool x_kernel,
                              Grid& image_grad) {
    const int h = upstream.h, w = upstream.w;
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const double g = upstream(r, c);
            if (g == 0.0) continue;
            for (int kr = 0; kr < 3; ++kr) {
                for (int kc = 0; kc < 3; ++kc) {
                    const int weight =
                        x_kernel ? kSobelX[kr][kc] : kSobelX[kc][kr];
                    if (weight == 0) continue;
                    const int rr = clampi(r + kr - 1, 0, h - 1);
                    const int cc = clampi(c + kc - 1, 0, w - 1);
                    image_grad(rr, cc) += weight * g;
                }
            }
        }
    }
}

double gv_core(const Grid& rec, const Grid& gt, const GVParams& params,
               Grid* grad_out) {
    check_same_shape(rec, gt, "gv_loss");
    if (params.patch < 2)
        throw std::invalid_argument("gv_loss: patch size must be >= 2");
    Grid gx_rec, gy_rec, gx_gt, gy_gt;
    sobel_gradients(rec, gx_rec, gy_rec);
    sobel_gradients(gt, gx_gt, gy_gt);
    const CropSpec cs = crop_for_patches(rec.h, rec.w, params.patch);

    Grid gx_rec_c = crop(gx_rec, cs), gx_gt_c = crop(gx_gt, cs);
    Grid gy_rec_c = crop(gy_rec, cs), gy_gt_c = crop(gy_gt, cs);

    Grid dmap_x, dmap_y;
    Grid* px = nullptr;
    Grid* py = nullptr;
    if (grad_out) {
        dmap_x = Grid(cs.h, cs.w);
        dmap_y = Grid(cs.h, cs.w);
        px = &dmap_x;
        py = &dmap_y;
    }
    const double loss = gv_direction(gx_rec_c, gx_gt_c, params.patch, px) +
                        gv_direction(gy_rec_c, gy_gt_c, params.patch, py);

    if (grad_out) {
        *grad_out = Grid(rec.h, rec.w);
        Grid up_x(rec.h, rec.w), up_y(rec.h, rec.w);
        for (int r = 0; r < cs.h; ++r)
            for (int c = 0; c < cs.w; ++c) {
                up_x(r + cs.r0, c + cs.c0) = dmap_x(r, c);
                up_y(r + cs.r0, c + cs.c0) = dmap_y(r, c);
            }
        sobel_adjoint_accumulate(up_x, true, *grad_out);
        sobel_adjoint_accumulate(up_y, false, *grad_out);
    }
    return loss;
}

double gee_core(const Grid& rec, const Grid& gt, const GEEParams& params,
                Grid* grad_out) {
    check_same_shape(rec, gt, "gee_loss");
    if (!(params.sigma > 0.0))
        throw std::invalid_argument("gee_loss: sigma must be positive");
    const int h = rec.h, w = rec.w;
    Grid re_rec, im_rec, re_gt, im_gt;
    dft2d(rec, nullptr, re_rec, im_rec, false);
    dft2d(gt, nullptr, re_gt, im_gt, false);

    const double inv_hw = 1.0 / (double(h) * w);
    const double two_sigma_sq = 2.0 * params.sigma * params.sigma;
    double loss = 0.0;
    Grid u_re, u_im;
    if (grad_out) {
        u_re = Grid(h, w);
        u_im = Grid(h, w);
    }
    for (int r = 0; r < h; ++r) {
        const double fy = dft_freq(r, h);
        for (int c = 0; c < w; ++c) {
            const double fx = dft_freq(c, w);
            const double radial = std::hypot(fx, fy);
            const double dev = radial - params.kappa;
            const double weight = 1.0 - std::exp(-dev * dev / two_sigma_sq);
            const double mag_rec = std::hypot(re_rec(r, c), im_rec(r, c));
            const double mag_gt = std::hypot(re_gt(r, c), im_gt(r, c));
            const double diff = mag_rec - mag_gt;
            loss += weight * std::fabs(diff);
            if (grad_out && diff != 0.0 && mag_rec > 0.0) {
                const double coef = inv_hw * weight *
                                    (diff > 0.0 ? 1.0 : -1.0) / mag_rec;
                // u = coef * conj(z); grad = Re(forward DFT of u)
                u_re(r, c) = coef * re_rec(r, c);
                u_im(r, c) = -coef * im_rec(r, c);
            }
        }
    }
    loss *= inv_hw;
    if (grad_out) {
        Grid g_re, g_im;
        dft2d(u_re, &u_im, g_re, g_im, false);
        *grad_out = std::move(g_re);
    }
    return loss;
}

}  // namespace

double mse(const Grid& rec, const Grid& gt) {
    check_same_shape(rec, gt, "mse");
    double acc = 0.0;
    for (size_t i = 0; i < rec.v.size(); ++i) {
        const double d = rec.v[i] - gt.v[i];
        acc += d * d;
    }
    return acc / double(rec.v.size());
}

void sobel_gradients(const Grid& image, Grid& gx, Grid& gy) {
    const int h = image.h, w = image.w;
    if (h < 3 || w < 3)
        throw std::invalid_argument("sobel_gradients: image must be >= 3x3");
    gx = Grid(h, w);
    gy = Grid(h, w);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            double ax = 0.0, ay = 0.0;
            for (int kr = 0; kr < 3; ++kr) {
                const int rr = clampi(r + kr - 1, 0, h - 1);
                for (int kc = 0; kc < 3; ++kc) {
                    const int cc = clampi(c + kc - 1, 0, w - 1);
                    const double v = image(rr, cc);
                    ax += kSobelX[kr][kc] * v;
                    ay += kSobelX[kc][kr] * v;
                }
            }
            gx(r, c) = ax;
            gy(r, c) = ay;
        }
    }
}

Grid patch_variance_map(const Grid& grad_map, int n) {
    if (n < 2)
        throw std::invalid_argument("patch_variance_map: n must be >= 2");
    if (grad_map.h % n != 0 || grad_map.w % n != 0)
        throw std::invalid_argument(
            "patch_variance_map: dims must be divisible by the patch size");
    const int ph = grad_map.h / n, pw = grad_map.w / n;
    const double inv_df = 1.0 / (double(n) * n - 1.0);
    Grid out(ph, pw);
    for (int pr = 0; pr < ph; ++pr) {
        for (int pc = 0; pc < pw; ++pc) {
            double mu = 0.0;
            for (int r = 0; r < n; ++r)
                for (int c = 0; c < n; ++c) mu += grad_map(pr * n + r, pc * n + c);
            mu /= double(n) * n;
            double acc = 0.0;
            for (int r = 0; r < n; ++r)
                for (int c = 0; c < n; ++c) {
                    const double d = grad_map(pr * n + r, pc * n + c) - mu;
                    acc += d * d;
                }
            out(pr, pc) = acc * inv_df;
        }
    }
    return out;
}

double gv_loss(const Grid& rec, const Grid& gt, const GVParams& params) {
    return gv_core(rec, gt, params, nullptr);
}

Grid gaussian_highpass_weights(int height, int width, const GEEParams& params) {
    if (!(params.sigma > 0.0))
        throw std::invalid_argument(
            "gaussian_highpass_weights: sigma must be positive");
    const FreqGrid2D fg = freq_grid(height, width);
    const double two_sigma_sq = 2.0 * params.sigma * params.sigma;
    Grid out(height, width);
    for (size_t i = 0; i < out.v.size(); ++i) {
        const double radial = std::hypot(fg.fx[i], fg.fy[i]);
        const double dev = radial - params.kappa;
        out.v[i] = 1.0 - std::exp(-dev * dev / two_sigma_sq);
    }
    return out;
}

double gee_loss(const Grid& rec, const Grid& gt, const GEEParams& params) {
    return gee_core(rec, gt, params, nullptr);
}

LossBreakdown hybrid_loss(const Grid& rec, const Grid& gt,
                          const LossWeights& weights, const GEEParams& gee,
                          const GVParams& gv) {
    if (weights.alpha < 0.0 || weights.beta < 0.0)
        throw std::invalid_argument("hybrid_loss: weights must be >= 0");
    LossBreakdown out;
    out.mse = mse(rec, gt);
    out.gee = weights.alpha != 0.0 ? gee_core(rec, gt, gee, nullptr) : 0.0;
    out.gv = weights.beta != 0.0 ? gv_core(rec, gt, gv, nullptr) : 0.0;
    out.total = out.mse + weights.alpha * out.gee + weights.beta * out.gv;
    return out;
}

Grid mse_grad(const Grid& rec, const Grid& gt) {
    check_same_shape(rec, gt, "mse");
    Grid out(rec.h, rec.w);
    const double scale = 2.0 / double(rec.v.size());
    for (size_t i = 0; i < rec.v.size(); ++i)
        out.v[i] = scale * (rec.v[i] - gt.v[i]);
    return out;
}

Grid gv_loss_grad(const Grid& rec, const Grid& gt, const GVParams& params) {
    Grid grad;
    gv_core(rec, gt, params, &grad);
    return grad;
}

Grid gee_loss_grad(const Grid& rec, const Grid& gt, const GEEParams& params) {
    Grid grad;
    gee_core(rec, gt, params, &grad);
    return grad;
}

LossBreakdown hybrid_loss_and_grad(const Grid& rec, const Grid& gt,
                                   const LossWeights& weights,
                                   const GEEParams& gee, const GVParams& gv,
                                   Grid& grad_out) {
    if (weights.alpha < 0.0 || weights.beta < 0.0)
        throw std::invalid_argument("hybrid_loss: weights must be >= 0");
    LossBreakdown out;
    out.mse = mse(rec, gt);
    grad_out = mse_grad(rec, gt);
    if (weights.alpha != 0.0) {
        Grid g;
        out.gee = gee_core(rec, gt, gee, &g);
        for (size_t i = 0; i < grad_out.v.size(); ++i)
            grad_out.v[i] += weights.alpha * g.v[i];
    }
    if (weights.beta != 0.0) {
        Grid g;
        out.gv = gv_core(rec, gt, gv, &g);
        for (size_t i = 0; i < grad_out.v.size(); ++i)
            grad_out.v[i] += weights.beta * g.v[i];
    }
    out.total = out.mse + weights.alpha * out.gee + weights.beta * out.gv;
    return out;
}

}  // namespace fbp
