// fbp: parallel-beam filtered backprojection toolkit with a trainable
// Fourier-series reconstruction filter.
//
// Subcommands: gen-data, train, reconstruct, eval, export-filter.
// Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "fbp/filters.hpp"
#include "fbp/grid.hpp"
#include "fbp/metrics.hpp"
#include "fbp/optim.hpp"
#include "fbp/parallel.hpp"
#include "fbp/phantom.hpp"
#include "fbp/pipeline.hpp"
#include "fbp/projector.hpp"
#include "fbp/raster.hpp"
#include "fbp/spectral.hpp"

namespace fs = std::filesystem;

namespace {

// Reproducibility record: every run leaves its fully-resolved option set on
// disk next to its outputs.
void persist_config(CLI::App* cmd, const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write resolved config to " +
                                 path.string());
    out << cmd->config_to_str(true, false);
}

std::string trim(const std::string& s) {
    const size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

// CLI11 only reads config files attached to the root command, which would
// force "fbp --config f gen-data" with section-qualified keys. To keep the
// friendlier "fbp gen-data --config f" with plain "key = value" lines, the
// file is expanded into ordinary flags before parsing. Keys already present
// on the command line are skipped, so explicit flags win; unknown keys
// surface as normal usage errors.
std::vector<std::string> expand_config_args(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    if (args.empty() || args.front().empty() || args.front()[0] == '-')
        return args;

    std::string config_path;
    for (size_t i = 1; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size())
            config_path = args[i + 1];
        else if (args[i].rfind("--config=", 0) == 0)
            config_path = args[i].substr(9);
    }
    if (config_path.empty()) return args;

    std::ifstream in(config_path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot read config file: " + config_path);

    auto given = [&args](const std::string& flag) {
        for (const std::string& a : args)
            if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
        return false;
    };

    std::string line;
    while (std::getline(in, line)) {
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        const size_t eq = stripped.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config line is not key = value: " +
                                     stripped);
        const std::string key = trim(stripped.substr(0, eq));
        std::string value = trim(stripped.substr(eq + 1));
        if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') &&
            value.back() == value.front())
            value = value.substr(1, value.size() - 2);
        if (key.empty())
            throw std::runtime_error("config line has an empty key: " +
                                     stripped);
        const std::string flag =
            key.rfind("--", 0) == 0 ? key : "--" + key;
        if (flag == "--config" || given(flag)) continue;
        args.push_back(flag);
        args.push_back(value);
    }
    return args;
}

fs::path resolve_manifest(const std::string& data_arg) {
    fs::path p(data_arg);
    if (fs::is_directory(p)) return p / "manifest.json";
    return p;
}

// Filter argument = analytic name or coefficient-CSV path.
fbp::FilterSpectrum resolve_spectrum(const std::string& arg, int padded_len) {
    const auto& names = fbp::analytic_filter_names();
    if (std::find(names.begin(), names.end(), arg) != names.end())
        return fbp::analytic_filter(arg, padded_len);
    return fbp::evaluate_series(fbp::load_filter_csv(arg), padded_len);
}

std::string filter_label(const std::string& arg) {
    const auto& names = fbp::analytic_filter_names();
    if (std::find(names.begin(), names.end(), arg) != names.end()) return arg;
    std::string stem = fs::path(arg).stem().string();
    for (char& c : stem)
        if (!std::isalnum(static_cast<unsigned char>(c))) c = '_';
    return stem.empty() ? "filter" : stem;
}

fbp::Grid laplacian(const fbp::Grid& img) {
    const int h = img.h, w = img.w;
    fbp::Grid out(h, w);
    auto at = [&](int r, int c) {
        r = std::clamp(r, 0, h - 1);
        c = std::clamp(c, 0, w - 1);
        return img(r, c);
    };
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c)
            out(r, c) = at(r - 1, c) + at(r + 1, c) + at(r, c - 1) +
                        at(r, c + 1) - 4.0 * img(r, c);
    return out;
}

struct GenDataOpts {
    std::string out;
    fbp::DatasetConfig cfg;
    int threads = 0;
};

int run_gen_data(CLI::App* cmd, const GenDataOpts& o) {
    fbp::set_thread_limit(o.threads);
    const fbp::DatasetManifest manifest = fbp::generate_dataset(o.out, o.cfg);
    persist_config(cmd, fs::path(o.out) / "config_used.txt");
    size_t total = 0;
    for (const auto& [name, files] : manifest.splits) total += files.size();
    std::printf(
        "gen-data: wrote %zu samples (%zu train, %zu val, %zu test) at %dx%d "
        "to %s\n",
        total, manifest.split("train").size(), manifest.split("val").size(),
        manifest.split("test").size(), o.cfg.size, o.cfg.size, o.out.c_str());
    return 0;
}

struct TrainOpts {
    std::string data;
    std::string out;
    fbp::TrainConfig cfg;
    std::string init = "ramp_fit";
    int threads = 0;
};

int run_train(CLI::App* cmd, TrainOpts& o) {
    fbp::set_thread_limit(o.threads);
    o.cfg.manifest_path = resolve_manifest(o.data);
    o.cfg.init = fbp::parse_init_mode(o.init);
    fs::create_directories(o.out);
    persist_config(cmd, fs::path(o.out) / "config_used.txt");

    auto [filter, history] = fbp::train(o.cfg, o.out);
    fbp::save_filter_csv(fs::path(o.out) / "filter.csv", filter);
    fbp::save_spectrum_csv(fs::path(o.out) / "filter_spectrum.csv",
                           fbp::evaluate_series(filter, 1024));

    if (history.steps.empty()) {
        std::printf("train: 0 steps (epochs=0), wrote the initialized filter "
                    "to %s/filter.csv\n",
                    o.out.c_str());
        return 0;
    }
    std::printf("train: %zu steps over %d epochs, loss %.6g -> %.6g",
                history.steps.size(), o.cfg.epochs,
                history.steps.front().total, history.steps.back().total);
    if (!history.validation.empty()) {
        double best = history.validation.front().psnr;
        for (const auto& v : history.validation) best = std::max(best, v.psnr);
        std::printf(", best val PSNR %.4f dB", best);
    }
    std::printf("; filter -> %s/filter.csv\n", o.out.c_str());
    return 0;
}

struct ReconstructOpts {
    std::string sino;
    std::string filter = "ram_lak";
    std::string out;
    std::string preview;
    std::string laplace;
    int size = 0;
    int padded_len = 0;
    int threads = 0;
};

int run_reconstruct(CLI::App* cmd, const ReconstructOpts& o) {
    fbp::set_thread_limit(o.threads);
    const fbp::Sinogram sino = fbp::read_sinogram(o.sino);

    fbp::ReconstructionConfig rc;
    rc.geometry = sino.geometry;
    rc.out_size = o.size > 0 ? o.size : sino.geometry.num_detectors;
    rc.padded_len = o.padded_len;
    const int P = rc.effective_padded_len();

    const fbp::FilterSpectrum spectrum = resolve_spectrum(o.filter, P);
    const fbp::Image rec = fbp::reconstruct(sino, rc, spectrum);
    fbp::write_raster(o.out, rec);

    if (!o.preview.empty()) {
        const auto [lo, hi] =
            std::minmax_element(rec.data.begin(), rec.data.end());
        fbp::write_preview(o.preview, rec, *lo, *hi > *lo ? *hi : *lo + 1.0f);
    }
    if (!o.laplace.empty())
        fbp::write_raster(o.laplace, fbp::to_image(laplacian(fbp::to_grid(rec))));

    fs::path cfg_path(o.out);
    cfg_path.replace_extension(".config.txt");
    persist_config(cmd, cfg_path);
    std::printf("reconstruct: %dx%d image (filter %s) -> %s\n", rec.height,
                rec.width, o.filter.c_str(), o.out.c_str());
    return 0;
}

struct EvalOpts {
    std::string data;
    std::string split = "test";
    std::vector<std::string> filters;
    std::string out;
    int padded_len = 0;
    int threads = 0;
};

int run_eval(CLI::App* cmd, const EvalOpts& o) {
    fbp::set_thread_limit(o.threads);
    const fbp::DatasetManifest manifest =
        fbp::load_manifest(resolve_manifest(o.data));
    const int P = o.padded_len > 0
                      ? o.padded_len
                      : fbp::default_padded_len(manifest.geometry.num_detectors);
    fs::create_directories(o.out);
    persist_config(cmd, fs::path(o.out) / "config_used.txt");

    std::vector<fbp::MetricReport> reports;
    std::vector<std::string> labels;
    for (const auto& arg : o.filters) {
        std::string label = filter_label(arg);
        int suffix = 2;
        while (std::find(labels.begin(), labels.end(), label) != labels.end())
            label = filter_label(arg) + "_" + std::to_string(suffix++);
        labels.push_back(label);

        fbp::EvalConfig ec;
        ec.spectrum = resolve_spectrum(arg, P);
        ec.padded_len = P;
        fbp::MetricReport report =
            fbp::evaluate_split(manifest, o.split, ec, label);
        fbp::write_report_csv(
            fs::path(o.out) / (label + "_" + o.split + ".csv"), report);
        reports.push_back(std::move(report));
    }

    std::printf("%-16s %-19s %-21s %s\n", "model", "ssim (mean+/-std)",
                "mse (mean+/-std)", "psnr_db (mean+/-std)");
    for (const auto& r : reports)
        std::printf("%-16s %.4f +/- %.4f   %.6f +/- %.6f   %.4f +/- %.4f\n",
                    r.label.c_str(), r.mean_ssim, r.std_ssim, r.mean_mse,
                    r.std_mse, r.mean_psnr, r.std_psnr);
    return 0;
}

struct ExportFilterOpts {
    std::string filter;
    std::string out;
    std::string kernel;
    int padded_len = 1024;
    int threads = 0;
};

int run_export_filter(CLI::App* cmd, const ExportFilterOpts& o) {
    fbp::set_thread_limit(o.threads);
    const fbp::FilterSpectrum spectrum =
        resolve_spectrum(o.filter, o.padded_len);
    fbp::save_spectrum_csv(o.out, spectrum);

    if (!o.kernel.empty()) {
        // Spatial kernel: inverse transform of the (Hermitian) spectrum.
        fbp::HalfSpectrum hs;
        hs.padded_len = spectrum.padded_len;
        hs.bins.assign(spectrum.values.begin(), spectrum.values.end());
        const fbp::Grid kernel = fbp::halfspectrum_to_rows({hs}, spectrum.padded_len);
        fbp::write_raster(o.kernel, fbp::to_image(kernel));
    }

    fs::path cfg_path(o.out);
    cfg_path.replace_extension(".config.txt");
    persist_config(cmd, cfg_path);
    std::printf("export-filter: %d spectrum bins -> %s\n", spectrum.num_bins(),
                o.out.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "Parallel-beam FBP reconstruction with a trainable Fourier-series "
        "filter"};
    app.require_subcommand(1);

    GenDataOpts gen;
    CLI::App* gen_cmd =
        app.add_subcommand("gen-data", "Generate a synthetic ellipse dataset");
    gen_cmd->set_config("--config", "",
                        "Read options from a key = value file");
    gen_cmd->add_option("--out", gen.out, "Output dataset directory")
        ->required();
    gen_cmd->add_option("--train", gen.cfg.train_count, "Training samples")
        ->capture_default_str();
    gen_cmd->add_option("--val", gen.cfg.val_count, "Validation samples")
        ->capture_default_str();
    gen_cmd->add_option("--test", gen.cfg.test_count, "Test samples")
        ->capture_default_str();
    gen_cmd->add_option("--size", gen.cfg.size, "Image size (pixels per side)")
        ->capture_default_str();
    gen_cmd->add_option("--angles", gen.cfg.num_angles,
                        "Projection angles over [0, pi)")
        ->capture_default_str();
    gen_cmd
        ->add_option("--detectors", gen.cfg.num_detectors,
                     "Detector count (0 = image size)")
        ->capture_default_str();
    gen_cmd
        ->add_option("--photons", gen.cfg.photon_count,
                     "Poisson photon count I0 (0 disables noise)")
        ->capture_default_str();
    gen_cmd->add_option("--seed", gen.cfg.seed, "RNG seed")
        ->capture_default_str();
    gen_cmd
        ->add_option("--min-ellipses", gen.cfg.min_ellipses,
                     "Minimum ellipses per phantom")
        ->capture_default_str();
    gen_cmd
        ->add_option("--max-ellipses", gen.cfg.max_ellipses,
                     "Maximum ellipses per phantom")
        ->capture_default_str();
    gen_cmd
        ->add_option("--step", gen.cfg.forward_step_px,
                     "Forward-projection sampling step, pixels")
        ->capture_default_str();
    gen_cmd->add_option("--threads", gen.threads, "Worker cap (0 = auto)")
        ->capture_default_str();

    TrainOpts tr;
    CLI::App* train_cmd =
        app.add_subcommand("train", "Train the Fourier-series filter");
    train_cmd->set_config("--config", "",
                          "Read options from a key = value file");
    train_cmd
        ->add_option("--data", tr.data,
                     "Dataset directory or manifest.json path")
        ->required();
    train_cmd->add_option("--out", tr.out, "Output directory")->required();
    train_cmd->add_option("--epochs", tr.cfg.epochs, "Training epochs")
        ->capture_default_str();
    train_cmd->add_option("--batch", tr.cfg.batch_size, "Batch size")
        ->capture_default_str();
    train_cmd->add_option("--base-lr", tr.cfg.base_lr, "OneCycle base lr")
        ->capture_default_str();
    train_cmd->add_option("--max-lr", tr.cfg.max_lr, "OneCycle max lr")
        ->capture_default_str();
    train_cmd
        ->add_option("--adam-beta1", tr.cfg.adam_beta1, "Adam first-moment decay")
        ->capture_default_str();
    train_cmd
        ->add_option("--adam-beta2", tr.cfg.adam_beta2,
                     "Adam second-moment decay")
        ->capture_default_str();
    train_cmd->add_option("--adam-eps", tr.cfg.adam_eps, "Adam epsilon")
        ->capture_default_str();
    train_cmd
        ->add_option("--alpha", tr.cfg.weights.alpha, "Edge-loss weight alpha")
        ->capture_default_str();
    train_cmd
        ->add_option("--beta", tr.cfg.weights.beta,
                     "Gradient-variance weight beta")
        ->capture_default_str();
    train_cmd
        ->add_option("--kappa", tr.cfg.gee.kappa,
                     "High-pass cutoff (normalized frequency)")
        ->capture_default_str();
    train_cmd->add_option("--sigma", tr.cfg.gee.sigma, "High-pass spread")
        ->capture_default_str();
    train_cmd
        ->add_option("--gv-patch", tr.cfg.gv.patch,
                     "Gradient-variance patch size")
        ->capture_default_str();
    train_cmd
        ->add_option("--init", tr.init,
                     "Filter init mode: ramp_fit | zero | random")
        ->capture_default_str();
    train_cmd
        ->add_option("--padded-len", tr.cfg.padded_len,
                     "FFT padding (0 = auto)")
        ->capture_default_str();
    train_cmd->add_option("--seed", tr.cfg.seed, "RNG seed")
        ->capture_default_str();
    train_cmd->add_option("--threads", tr.threads, "Worker cap (0 = auto)")
        ->capture_default_str();

    ReconstructOpts rec;
    CLI::App* rec_cmd = app.add_subcommand(
        "reconstruct", "Reconstruct one sinogram raster to an image raster");
    rec_cmd->set_config("--config", "",
                        "Read options from a key = value file");
    rec_cmd->add_option("--sino", rec.sino, "Input sinogram raster (.fbr)")
        ->required();
    rec_cmd
        ->add_option("--filter", rec.filter,
                     "Analytic filter name or coefficient CSV path")
        ->capture_default_str();
    rec_cmd->add_option("--out", rec.out, "Output image raster (.fbr)")
        ->required();
    rec_cmd->add_option("--preview", rec.preview, "Optional PGM preview path");
    rec_cmd->add_option("--laplace", rec.laplace,
                        "Optional Laplacian (second derivative) raster path");
    rec_cmd
        ->add_option("--size", rec.size,
                     "Output image size (0 = detector count)")
        ->capture_default_str();
    rec_cmd
        ->add_option("--padded-len", rec.padded_len, "FFT padding (0 = auto)")
        ->capture_default_str();
    rec_cmd->add_option("--threads", rec.threads, "Worker cap (0 = auto)")
        ->capture_default_str();

    EvalOpts ev;
    CLI::App* eval_cmd = app.add_subcommand(
        "eval", "Score reconstruction filters on a dataset split");
    eval_cmd->set_config("--config", "",
                         "Read options from a key = value file");
    eval_cmd
        ->add_option("--data", ev.data,
                     "Dataset directory or manifest.json path")
        ->required();
    eval_cmd->add_option("--split", ev.split, "Split name")
        ->capture_default_str();
    eval_cmd
        ->add_option("--filter", ev.filters,
                     "Filter to score (repeatable): name or CSV path")
        ->required();
    eval_cmd->add_option("--out", ev.out, "Report output directory")
        ->required();
    eval_cmd
        ->add_option("--padded-len", ev.padded_len, "FFT padding (0 = auto)")
        ->capture_default_str();
    eval_cmd->add_option("--threads", ev.threads, "Worker cap (0 = auto)")
        ->capture_default_str();

    ExportFilterOpts ex;
    CLI::App* export_cmd = app.add_subcommand(
        "export-filter", "Evaluate filter coefficients onto a frequency grid");
    export_cmd->set_config("--config", "",
                           "Read options from a key = value file");
    export_cmd
        ->add_option("--filter", ex.filter,
                     "Coefficient CSV path or analytic filter name")
        ->required();
    export_cmd->add_option("--out", ex.out, "Output omega,value CSV path")
        ->required();
    export_cmd->add_option("--kernel", ex.kernel,
                           "Optional spatial-kernel raster path");
    export_cmd
        ->add_option("--padded-len", ex.padded_len, "Evaluation grid length")
        ->capture_default_str();
    export_cmd->add_option("--threads", ex.threads, "Worker cap (0 = auto)")
        ->capture_default_str();

    try {
        std::vector<std::string> args = expand_config_args(argc, argv);
        std::reverse(args.begin(), args.end());  // parse() wants them reversed
        app.parse(std::move(args));
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    try {
        if (gen_cmd->parsed()) return run_gen_data(gen_cmd, gen);
        if (train_cmd->parsed()) return run_train(train_cmd, tr);
        if (rec_cmd->parsed()) return run_reconstruct(rec_cmd, rec);
        if (eval_cmd->parsed()) return run_eval(eval_cmd, ev);
        if (export_cmd->parsed()) return run_export_filter(export_cmd, ex);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;  // unreachable with require_subcommand(1)
}
