#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fbp/filters.hpp"
#include "fbp/geometry.hpp"
#include "fbp/grid.hpp"
#include "fbp/losses.hpp"

namespace fbp {

/// Coefficient vector layout: (a0, a_1..a_50, b_1..b_50).
using ParamVector = std::array<double, FourierSeriesFilter::num_params>;

ParamVector pack_params(const FourierSeriesFilter& f);
FourierSeriesFilter unpack_params(const ParamVector& p);

enum class InitMode { ramp_fit, zero, random };
InitMode parse_init_mode(const std::string& name);

struct TrainConfig {
    int epochs = 20;
    int batch_size = 8;
    double base_lr = 5e-3;
    double max_lr = 2e-2;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    LossWeights weights;   // alpha = 10, beta = 20
    GEEParams gee;
    GVParams gv;
    std::filesystem::path manifest_path;
    uint64_t seed = 0;
    InitMode init = InitMode::ramp_fit;
    int padded_len = 0;  // 0 -> default for the dataset geometry
};

struct AdamState {
    ParamVector m{};
    ParamVector v{};
    int64_t t = 0;
};

struct TrainSample {
    const Grid* sinogram = nullptr;  // noisy input
    const Grid* ground_truth = nullptr;
};

/// Mean hybrid loss over the batch and its exact gradient w.r.t. the 101
/// coefficients, via reverse mode through series evaluation, spectral
/// multiply, inverse transform, backprojection and ReLU. Throws if any stage
/// produces a non-finite value, naming the stage.
LossBreakdown loss_and_gradient(const FourierSeriesFilter& filter,
                                std::span<const TrainSample> batch,
                                const Geometry& geometry, int padded_len,
                                const LossWeights& weights,
                                const GEEParams& gee, const GVParams& gv,
                                ParamVector& grad_out);

/// Standard Adam with bias correction.
void adam_step(AdamState& state, ParamVector& params, const ParamVector& grad,
               double lr, double beta1 = 0.9, double beta2 = 0.999,
               double eps = 1e-8);

/// Cosine warm-up over the first 30% of steps (base_lr -> max_lr), cosine
/// decay to base_lr/25 at the final step.
double onecycle_lr(int64_t step, int64_t total_steps, double base_lr,
                   double max_lr);

struct TrainStepRecord {
    int64_t step = 0;
    double lr = 0, total = 0, mse = 0, gee = 0, gv = 0;
};

struct ValRecord {
    int epoch = 0;
    double ssim = 0, psnr = 0, mse = 0;
};

struct TrainHistory {
    std::vector<TrainStepRecord> steps;
    std::vector<ValRecord> validation;
};

/// Full training loop: seeded shuffling, Adam + OneCycle, per-epoch filter
/// checkpoints (epoch_<k>.csv) and validation metrics; returns the filter
/// with the best validation PSNR. Aborts on a non-finite loss, keeping the
/// last good checkpoint on disk.
std::pair<FourierSeriesFilter, TrainHistory> train(
    const TrainConfig& config, const std::filesystem::path& out_dir);

void write_history_csv(const std::filesystem::path& path,
                       const TrainHistory& history);
void write_val_history_csv(const std::filesystem::path& path,
                           const TrainHistory& history);

}  // namespace fbp
