#include "fbp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "fbp/losses.hpp"
#include "fbp/pipeline.hpp"

namespace fbp {

namespace {

double resolve_range(const Grid& gt, double data_range, const char* who) {
    double r = data_range;
    if (r <= 0.0) {
        const auto [lo, hi] = std::minmax_element(gt.v.begin(), gt.v.end());
        r = *hi - *lo;
    }
    if (!(r > 0.0))
        throw std::invalid_argument(std::string(who) +
                                    ": degenerate data range");
    return r;
}

// 11x11 Gaussian window, sigma 1.5, weights normalized to sum 1.
const std::array<double, 11>& ssim_window_1d() {
    static const std::array<double, 11> w = [] {
        std::array<double, 11> out{};
        double sum = 0.0;
        for (int i = 0; i < 11; ++i) {
            const double d = i - 5;
            out[i] = std::exp(-d * d / (2.0 * 1.5 * 1.5));
            sum += out[i];
        }
        for (double& v : out) v /= sum;
        return out;
    }();
    return w;
}

}  // namespace

double psnr(const Grid& rec, const Grid& gt, double data_range) {
    const double err = mse(rec, gt);
    const double range = resolve_range(gt, data_range, "psnr");
    if (err == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(range * range / err);
}

double ssim(const Grid& rec, const Grid& gt, double data_range) {
    if (!rec.same_shape(gt))
        throw std::invalid_argument("ssim: dimension mismatch");
    if (rec.h < 11 || rec.w < 11)
        throw std::invalid_argument("ssim: dims must be >= 11");
    const double range = resolve_range(gt, data_range, "ssim");
    const double c1 = (0.01 * range) * (0.01 * range);
    const double c2 = (0.03 * range) * (0.03 * range);
    const auto& win = ssim_window_1d();

    const int h = rec.h, w = rec.w;
    double acc = 0.0;
    int count = 0;
    for (int r = 5; r < h - 5; ++r) {
        for (int c = 5; c < w - 5; ++c) {
            double mx = 0, my = 0, mxx = 0, myy = 0, mxy = 0;
            for (int i = 0; i < 11; ++i) {
                const int rr = r + i - 5;
                for (int j = 0; j < 11; ++j) {
                    const int cc = c + j - 5;
                    const double wgt = win[i] * win[j];
                    const double x = rec(rr, cc);
                    const double y = gt(rr, cc);
                    mx += wgt * x;
                    my += wgt * y;
                    mxx += wgt * x * x;
                    myy += wgt * y * y;
                    mxy += wgt * x * y;
                }
            }
            const double vx = mxx - mx * mx;
            const double vy = myy - my * my;
            const double cov = mxy - mx * my;
            const double num = (2.0 * mx * my + c1) * (2.0 * cov + c2);
            const double den = (mx * mx + my * my + c1) * (vx + vy + c2);
            acc += num / den;
            ++count;
        }
    }
    return acc / count;
}

void MetricReport::recompute_aggregates() {
    const size_t n = rows.size();
    if (n == 0) {
        mean_ssim = std_ssim = mean_mse = std_mse = mean_psnr = std_psnr = 0.0;
        return;
    }
    auto mean_of = [&](double SampleMetrics::*field) {
        double s = 0.0;
        for (const auto& r : rows) s += r.*field;
        return s / double(n);
    };
    auto std_of = [&](double SampleMetrics::*field, double mean) {
        if (n < 2) return 0.0;
        double s = 0.0;
        for (const auto& r : rows) {
            const double d = r.*field - mean;
            s += d * d;
        }
        return std::sqrt(s / double(n - 1));  // unbiased estimator
    };
    mean_ssim = mean_of(&SampleMetrics::ssim);
    std_ssim = std_of(&SampleMetrics::ssim, mean_ssim);
    mean_mse = mean_of(&SampleMetrics::mse);
    std_mse = std_of(&SampleMetrics::mse, mean_mse);
    mean_psnr = mean_of(&SampleMetrics::psnr_db);
    std_psnr = std_of(&SampleMetrics::psnr_db, mean_psnr);
}

MetricReport evaluate_split(const DatasetManifest& manifest,
                            const std::string& split, const EvalConfig& config,
                            const std::string& label) {
    const auto& files = manifest.split(split);
    if (files.empty())
        throw std::invalid_argument("evaluate_split: split '" + split +
                                    "' is empty");
    if (config.spectrum.num_bins() == 0)
        throw std::invalid_argument("evaluate_split: no filter spectrum");
    if (config.padded_len > 0 &&
        config.padded_len != config.spectrum.padded_len)
        throw std::invalid_argument(
            "evaluate_split: padded_len disagrees with the spectrum");

    ReconstructionConfig rc;
    rc.geometry = manifest.geometry;
    rc.out_size = manifest.image_size;
    rc.padded_len = config.spectrum.padded_len;

    MetricReport report;
    report.label = label;
    for (size_t i = 0; i < files.size(); ++i) {
        const Image gt_img = read_image(manifest.root / files[i].gt);
        const Sinogram noisy = read_sinogram(manifest.root / files[i].noisy);
        const Image rec = reconstruct(noisy, rc, config.spectrum);
        const Grid rec_g = to_grid(rec);
        const Grid gt_g = to_grid(gt_img);

        SampleMetrics row;
        row.id = split + "_" + std::to_string(i);
        row.ssim = ssim(rec_g, gt_g);
        row.mse = mse(rec_g, gt_g);
        row.psnr_db = psnr(rec_g, gt_g);
        report.rows.push_back(std::move(row));
    }
    report.recompute_aggregates();
    return report;
}

void write_report_csv(const std::filesystem::path& path,
                      const MetricReport& report) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("write_report_csv: cannot open " +
                                 path.string());
    out << "id,ssim,mse,psnr_db\n";
    char buf[256];
    for (const auto& r : report.rows) {
        std::snprintf(buf, sizeof buf, "%s,%.17g,%.17g,%.17g\n", r.id.c_str(),
                      r.ssim, r.mse, r.psnr_db);
        out << buf;
    }
    std::snprintf(buf, sizeof buf, "mean,%.17g,%.17g,%.17g\n",
                  report.mean_ssim, report.mean_mse, report.mean_psnr);
    out << buf;
    std::snprintf(buf, sizeof buf, "std,%.17g,%.17g,%.17g\n", report.std_ssim,
                  report.std_mse, report.std_psnr);
    out << buf;
    if (!out)
        throw std::runtime_error("write_report_csv: write failed for " +
                                 path.string());
}

}  // namespace fbp
