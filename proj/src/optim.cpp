#include "fbp/optim.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>

#include "fbp/metrics.hpp"
#include "fbp/phantom.hpp"
#include "fbp/pipeline.hpp"
#include "fbp/projector.hpp"
#include "fbp/rng.hpp"
#include "fbp/spectral.hpp"

#include <cstdio>
#include <fstream>

namespace fbp {

namespace {

constexpr int kOrder = FourierSeriesFilter::order;
constexpr int kParams = FourierSeriesFilter::num_params;

void check_finite(const Grid& g, const char* stage) {
    for (double v : g.v)
        if (!std::isfinite(v))
            throw std::runtime_error(std::string("loss_and_gradient: non-finite "
                                                 "value after stage '") +
                                     stage + "'");
}

Grid relu(const Grid& g) {
    Grid out = g;
    for (double& v : out.v)
        if (v < 0.0) v = 0.0;
    return out;
}

}  // namespace

ParamVector pack_params(const FourierSeriesFilter& f) {
    ParamVector p{};
    p[0] = f.a0;
    for (int l = 1; l <= kOrder; ++l) {
        p[l] = f.a[l - 1];
        p[kOrder + l] = f.b[l - 1];
    }
    return p;
}

FourierSeriesFilter unpack_params(const ParamVector& p) {
    FourierSeriesFilter f;
    f.a0 = p[0];
    for (int l = 1; l <= kOrder; ++l) {
        f.a[l - 1] = p[l];
        f.b[l - 1] = p[kOrder + l];
    }
    return f;
}

InitMode parse_init_mode(const std::string& name) {
    if (name == "ramp_fit") return InitMode::ramp_fit;
    if (name == "zero") return InitMode::zero;
    if (name == "random") return InitMode::random;
    throw std::invalid_argument(
        "unknown init mode '" + name + "'; valid: ramp_fit zero random");
}

LossBreakdown loss_and_gradient(const FourierSeriesFilter& filter,
                                std::span<const TrainSample> batch,
                                const Geometry& geometry, int padded_len,
                                const LossWeights& weights,
                                const GEEParams& gee, const GVParams& gv,
                                ParamVector& grad_out) {
    if (batch.empty())
        throw std::invalid_argument("loss_and_gradient: empty batch");
    validate(geometry);
    const int N = geometry.num_detectors;
    const int P = padded_len;
    if (!is_power_of_two(P) || P < 2 * N)
        throw std::invalid_argument(
            "loss_and_gradient: padded_len must be a power of two >= 2N");

    const FilterSpectrum spectrum = evaluate_series(filter, P);
    for (double v : spectrum.values)
        if (!std::isfinite(v))
            throw std::runtime_error(
                "loss_and_gradient: non-finite value after stage 'series "
                "evaluation'");

    const double scale = 1.0 / (2.0 * geometry.detector_spacing);
    const int half = P / 2 + 1;
    std::vector<double> dH(half, 0.0);
    LossBreakdown total{};

    for (const TrainSample& sample : batch) {
        if (!sample.sinogram || !sample.ground_truth)
            throw std::invalid_argument("loss_and_gradient: null sample");
        const Grid& sino = *sample.sinogram;
        const Grid& gt = *sample.ground_truth;
        if (sino.h != geometry.num_angles || sino.w != N)
            throw std::invalid_argument(
                "loss_and_gradient: sinogram does not match the geometry");
        if (gt.h != gt.w)
            throw std::invalid_argument(
                "loss_and_gradient: ground truth must be square");

        // Forward: filter rows in the Fourier domain, backproject, ReLU.
        const std::vector<HalfSpectrum> X = rows_to_halfspectrum(sino, P);
        std::vector<HalfSpectrum> Y = X;
        for (auto& row : Y)
            for (int k = 0; k < half; ++k) row.bins[k] *= spectrum.values[k];
        const Grid filtered = halfspectrum_to_rows(Y, N);
        check_finite(filtered, "row filtering");

        Grid rec_pre = back_project(filtered, geometry, gt.h);
        for (double& v : rec_pre.v) v *= scale;
        check_finite(rec_pre, "backprojection");
        const Grid rec = relu(rec_pre);

        Grid g_rec;
        const LossBreakdown lb =
            hybrid_loss_and_grad(rec, gt, weights, gee, gv, g_rec);
        if (!std::isfinite(lb.total))
            throw std::runtime_error(
                "loss_and_gradient: non-finite value after stage 'loss'");
        check_finite(g_rec, "loss");
        total.total += lb.total;
        total.mse += lb.mse;
        total.gee += lb.gee;
        total.gv += lb.gv;

        // Reverse: ReLU mask, scale, exact backprojection adjoint, then the
        // response derivative dL/dH[k] summed over rows with Hermitian
        // multiplicity (interior bins appear twice in the full spectrum).
        Grid g_pre(rec_pre.h, rec_pre.w);
        for (size_t i = 0; i < g_pre.v.size(); ++i)
            g_pre.v[i] = rec_pre.v[i] > 0.0 ? g_rec.v[i] * scale : 0.0;
        const Grid g_filtered =
            back_project_transpose(g_pre, geometry, N);
        const std::vector<HalfSpectrum> G =
            rows_to_halfspectrum(g_filtered, P);

        for (int k = 0; k < half; ++k) {
            const double mult = (k == 0 || k == P / 2) ? 1.0 : 2.0;
            double acc = 0.0;
            for (size_t r = 0; r < X.size(); ++r) {
                const std::complex<double>& x = X[r].bins[k];
                const std::complex<double>& g = G[r].bins[k];
                acc += x.real() * g.real() + x.imag() * g.imag();
            }
            dH[k] += mult / P * acc;
        }
    }

    const double inv_batch = 1.0 / double(batch.size());
    total.total *= inv_batch;
    total.mse *= inv_batch;
    total.gee *= inv_batch;
    total.gv *= inv_batch;
    for (double& v : dH) v *= inv_batch;

    // Chain through the series basis: H[k] = a0 + sum_l a_l cos + b_l sin.
    grad_out.fill(0.0);
    for (int k = 0; k < half; ++k) {
        const double omega = double(k) / P;
        grad_out[0] += dH[k];
        for (int l = 1; l <= kOrder; ++l) {
            const double ang = 2.0 * M_PI * l * omega;
            grad_out[l] += dH[k] * std::cos(ang);
            grad_out[kOrder + l] += dH[k] * std::sin(ang);
        }
    }
    for (double v : grad_out)
        if (!std::isfinite(v))
            throw std::runtime_error(
                "loss_and_gradient: non-finite value after stage 'coefficient "
                "gradient'");
    return total;
}

void adam_step(AdamState& state, ParamVector& params, const ParamVector& grad,
               double lr, double beta1, double beta2, double eps) {
    for (double g : grad)
        if (!std::isfinite(g))
            throw std::invalid_argument("adam_step: non-finite gradient");
    state.t += 1;
    const double bc1 = 1.0 - std::pow(beta1, double(state.t));
    const double bc2 = 1.0 - std::pow(beta2, double(state.t));
    for (int i = 0; i < kParams; ++i) {
        state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * grad[i];
        state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * grad[i] * grad[i];
        const double m_hat = state.m[i] / bc1;
        const double v_hat = state.v[i] / bc2;
        params[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
    }
}

double onecycle_lr(int64_t step, int64_t total_steps, double base_lr,
                   double max_lr) {
    if (total_steps < 1)
        throw std::invalid_argument("onecycle_lr: total_steps must be >= 1");
    if (step < 0 || step >= total_steps)
        throw std::invalid_argument("onecycle_lr: step out of range");
    if (!(base_lr > 0.0) || base_lr > max_lr)
        throw std::invalid_argument("onecycle_lr: need 0 < base_lr <= max_lr");

    const int64_t warm = std::max<int64_t>(
        1, std::llround(0.3 * double(total_steps)));
    const double final_lr = base_lr / 25.0;
    if (step <= warm) {
        // s rises 0 -> 1; linear blend keeps the endpoints exact.
        const double s =
            0.5 * (1.0 - std::cos(M_PI * double(step) / double(warm)));
        return base_lr * (1.0 - s) + max_lr * s;
    }
    const double s = 0.5 * (1.0 + std::cos(M_PI * double(step - warm) /
                                           double(total_steps - 1 - warm)));
    return final_lr * (1.0 - s) + max_lr * s;
}

namespace {

struct LoadedSplit {
    std::vector<Grid> sinograms;
    std::vector<Grid> ground_truths;
};

LoadedSplit load_split(const DatasetManifest& manifest,
                       const std::string& name) {
    LoadedSplit out;
    if (manifest.splits.find(name) == manifest.splits.end()) return out;
    for (const auto& triple : manifest.split(name)) {
        out.sinograms.push_back(
            to_grid(read_sinogram(manifest.root / triple.noisy)));
        out.ground_truths.push_back(
            to_grid(read_image(manifest.root / triple.gt)));
    }
    return out;
}

FourierSeriesFilter initial_filter(const TrainConfig& config) {
    switch (config.init) {
        case InitMode::zero:
            return FourierSeriesFilter{};
        case InitMode::random: {
            uint64_t s = config.seed + 0x5bf0'3635'dee8'51c1ULL;
            Xoshiro256pp gen(splitmix64(s));
            FourierSeriesFilter f;
            f.a0 = gen.uniform(-0.05, 0.05);
            for (int l = 0; l < kOrder; ++l) {
                f.a[l] = gen.uniform(-0.05, 0.05);
                f.b[l] = gen.uniform(-0.05, 0.05);
            }
            return f;
        }
        case InitMode::ramp_fit:
        default:
            // Dense grid so the 101-parameter fit is far overdetermined.
            return fit_series_to_spectrum(ram_lak(1024));
    }
}

}  // namespace

std::pair<FourierSeriesFilter, TrainHistory> train(
    const TrainConfig& config, const std::filesystem::path& out_dir) {
    if (config.epochs < 0)
        throw std::invalid_argument("train: epochs must be >= 0");
    if (config.batch_size < 1)
        throw std::invalid_argument("train: batch_size must be >= 1");
    if (!(config.base_lr > 0.0) || config.base_lr > config.max_lr)
        throw std::invalid_argument("train: need 0 < base_lr <= max_lr");

    const DatasetManifest manifest = load_manifest(config.manifest_path);
    const Geometry geom = manifest.geometry;
    const int n = manifest.image_size;
    const int P = config.padded_len != 0
                      ? config.padded_len
                      : default_padded_len(geom.num_detectors);
    if (!is_power_of_two(P) || P < 2 * geom.num_detectors)
        throw std::invalid_argument(
            "train: padded_len must be a power of two >= 2N");

    const LoadedSplit train_data = load_split(manifest, "train");
    const LoadedSplit val_data = load_split(manifest, "val");
    if (train_data.sinograms.empty())
        throw std::invalid_argument("train: train split is empty");

    std::filesystem::create_directories(out_dir);

    FourierSeriesFilter filter = initial_filter(config);
    TrainHistory history;
    if (config.epochs == 0) return {filter, history};

    ParamVector params = pack_params(filter);
    AdamState adam;
    const int num_train = static_cast<int>(train_data.sinograms.size());
    const int64_t steps_per_epoch =
        (num_train + config.batch_size - 1) / config.batch_size;
    const int64_t total_steps = steps_per_epoch * config.epochs;

    auto validate_filter = [&](const FourierSeriesFilter& f, int epoch) {
        if (val_data.sinograms.empty()) return;
        const FilterSpectrum spec = evaluate_series(f, P);
        double sum_ssim = 0, sum_psnr = 0, sum_mse = 0;
        for (size_t i = 0; i < val_data.sinograms.size(); ++i) {
            Grid rec = reconstruct_preactivation(val_data.sinograms[i], geom,
                                                 spec, n);
            for (double& v : rec.v)
                if (v < 0.0) v = 0.0;
            const Grid& gt = val_data.ground_truths[i];
            sum_ssim += ssim(rec, gt);
            sum_psnr += psnr(rec, gt);
            sum_mse += mse(rec, gt);
        }
        const double cnt = double(val_data.sinograms.size());
        history.validation.push_back(
            {epoch, sum_ssim / cnt, sum_psnr / cnt, sum_mse / cnt});
    };

    std::vector<int> order(num_train);
    for (int i = 0; i < num_train; ++i) order[i] = i;

    FourierSeriesFilter best_filter = filter;
    double best_psnr = -std::numeric_limits<double>::infinity();
    bool have_best = false;

    int64_t global_step = 0;
    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        // Seeded Fisher-Yates reshuffle per epoch.
        uint64_t shuffle_seed =
            config.seed + 0x9e3779b97f4a7c15ULL * static_cast<uint64_t>(epoch);
        Xoshiro256pp shuffle_gen(splitmix64(shuffle_seed));
        for (int i = num_train - 1; i > 0; --i) {
            const int j = static_cast<int>(
                shuffle_gen.next_below(static_cast<uint64_t>(i) + 1));
            std::swap(order[i], order[j]);
        }

        for (int64_t b = 0; b < steps_per_epoch; ++b, ++global_step) {
            const int begin = static_cast<int>(b) * config.batch_size;
            const int end = std::min(begin + config.batch_size, num_train);
            std::vector<TrainSample> batch;
            batch.reserve(end - begin);
            for (int i = begin; i < end; ++i)
                batch.push_back({&train_data.sinograms[order[i]],
                                 &train_data.ground_truths[order[i]]});

            const double lr = onecycle_lr(global_step, total_steps,
                                          config.base_lr, config.max_lr);
            const FourierSeriesFilter current = unpack_params(params);
            ParamVector grad;
            const LossBreakdown lb = loss_and_gradient(
                current, batch, geom, P, config.weights, config.gee, config.gv,
                grad);
            adam_step(adam, params, grad, lr, config.adam_beta1,
                      config.adam_beta2, config.adam_eps);
            history.steps.push_back(
                {global_step, lr, lb.total, lb.mse, lb.gee, lb.gv});
        }

        filter = unpack_params(params);
        save_filter_csv(
            out_dir / ("epoch_" + std::to_string(epoch) + ".csv"), filter);
        validate_filter(filter, epoch);
        if (!history.validation.empty() &&
            history.validation.back().epoch == epoch) {
            const double v = history.validation.back().psnr;
            if (!have_best || v > best_psnr) {
                best_psnr = v;
                best_filter = filter;
                have_best = true;
            }
        }
    }

    write_history_csv(out_dir / "history.csv", history);
    if (!history.validation.empty())
        write_val_history_csv(out_dir / "val_history.csv", history);

    return {have_best ? best_filter : filter, history};
}

void write_history_csv(const std::filesystem::path& path,
                       const TrainHistory& history) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("write_history_csv: cannot open " +
                                 path.string());
    out << "step,lr,total,mse,gee,gv\n";
    char buf[256];
    for (const auto& s : history.steps) {
        std::snprintf(buf, sizeof buf,
                      "%lld,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                      static_cast<long long>(s.step), s.lr, s.total, s.mse,
                      s.gee, s.gv);
        out << buf;
    }
    if (!out)
        throw std::runtime_error("write_history_csv: write failed for " +
                                 path.string());
}

void write_val_history_csv(const std::filesystem::path& path,
                           const TrainHistory& history) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("write_val_history_csv: cannot open " +
                                 path.string());
    out << "epoch,ssim,psnr_db,mse\n";
    char buf[256];
    for (const auto& v : history.validation) {
        std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g\n", v.epoch,
                      v.ssim, v.psnr, v.mse);
        out << buf;
    }
    if (!out)
        throw std::runtime_error("write_val_history_csv: write failed for " +
                                 path.string());
}

}  // namespace fbp
