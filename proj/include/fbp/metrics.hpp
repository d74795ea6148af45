#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fbp/filters.hpp"
#include "fbp/grid.hpp"
#include "fbp/phantom.hpp"

namespace fbp {

/// 10*log10(range^2 / mse); identical inputs give +inf. data_range <= 0 means
/// "use max(gt) - min(gt)".
double psnr(const Grid& rec, const Grid& gt, double data_range = 0.0);

/// Windowed SSIM: 11x11 Gaussian window sigma 1.5, C1=(0.01 r)^2,
/// C2=(0.03 r)^2, mean over valid window positions.
double ssim(const Grid& rec, const Grid& gt, double data_range = 0.0);

struct SampleMetrics {
    std::string id;
    double ssim = 0.0;
    double mse = 0.0;
    double psnr_db = 0.0;
};

struct MetricReport {
    std::string label;
    std::vector<SampleMetrics> rows;
    double mean_ssim = 0, std_ssim = 0;
    double mean_mse = 0, std_mse = 0;
    double mean_psnr = 0, std_psnr = 0;

    void recompute_aggregates();  // unbiased std
};

struct EvalConfig {
    FilterSpectrum spectrum;
    int padded_len = 0;  // 0 -> default for the manifest geometry
};

/// Reconstructs every noisy sinogram of the split and scores it against the
/// ground truth. Rows are ordered by sample id; empty splits are an error.
MetricReport evaluate_split(const DatasetManifest& manifest,
                            const std::string& split, const EvalConfig& config,
                            const std::string& label);

/// CSV: header id,ssim,mse,psnr_db then per-sample rows, then mean,... and
/// std,... footer rows.
void write_report_csv(const std::filesystem::path& path,
                      const MetricReport& report);

}  // namespace fbp
