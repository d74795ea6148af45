#include "fbp/phantom.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "fbp/parallel.hpp"
#include "fbp/projector.hpp"
#include "fbp/rng.hpp"

namespace fbp {

namespace {

constexpr double kDeg = M_PI / 180.0;

// Mixes (base seed, split, sample index, stream) into one 64-bit stream seed.
uint64_t derive_seed(uint64_t base, int split_idx, int index, int stream) {
    uint64_t state = base;
    state += 0x9e3779b97f4a7c15ULL * (static_cast<uint64_t>(split_idx) + 1);
    state += 0xbf58476d1ce4e5b9ULL * (static_cast<uint64_t>(index) + 1);
    state += 0x94d049bb133111ebULL * (static_cast<uint64_t>(stream) + 1);
    return splitmix64(state);
}

}  // namespace

const std::vector<Ellipse>& shepp_logan_ellipses() {
    // Shepp & Logan (1974) head section, the common 10-ellipse table:
    // columns x0, y0, a, b, phi, rho. Additive contrasts: shell 2.0,
    // interior -0.98, small features +/-0.01..0.02.
    static const std::vector<Ellipse> table = {
        {0.0, 0.0, 0.69, 0.92, 0.0, 2.0},
        {0.0, -0.0184, 0.6624, 0.8740, 0.0, -0.98},
        {0.22, 0.0, 0.11, 0.31, -18.0 * kDeg, -0.02},
        {-0.22, 0.0, 0.16, 0.41, 18.0 * kDeg, -0.02},
        {0.0, 0.35, 0.21, 0.25, 0.0, 0.01},
        {0.0, 0.1, 0.046, 0.046, 0.0, 0.01},
        {0.0, -0.1, 0.046, 0.046, 0.0, 0.01},
        {-0.08, -0.605, 0.046, 0.023, 0.0, 0.01},
        {0.0, -0.606, 0.023, 0.023, 0.0, 0.01},
        {0.06, -0.605, 0.023, 0.046, 0.0, 0.01},
    };
    return table;
}

Image rasterize_ellipses(int size, const std::vector<Ellipse>& ellipses,
                         bool clamp_nonnegative) {
    if (size < 8)
        throw std::invalid_argument("rasterize_ellipses: size must be >= 8");
    for (const auto& e : ellipses) {
        if (!(e.a > 0.0) || !(e.b > 0.0))
            throw std::invalid_argument(
                "rasterize_ellipses: semi-axes must be positive");
        if (std::fabs(e.x0) > 1.0 || std::fabs(e.y0) > 1.0)
            throw std::invalid_argument(
                "rasterize_ellipses: center outside [-1,1]^2");
    }

    Image img;
    img.height = size;
    img.width = size;
    img.data.assign(static_cast<size_t>(size) * size, 0.0f);
    parallel_for(size, [&](int64_t begin, int64_t end) {
        for (int64_t r = begin; r < end; ++r) {
            const double y = (r + 0.5) * (2.0 / size) - 1.0;
            for (int c = 0; c < size; ++c) {
                const double x = (c + 0.5) * (2.0 / size) - 1.0;
                double v = 0.0;
                for (const auto& e : ellipses) {
                    const double dx = x - e.x0;
                    const double dy = y - e.y0;
                    const double cp = std::cos(e.phi);
                    const double sp = std::sin(e.phi);
                    const double xr = dx * cp + dy * sp;
                    const double yr = -dx * sp + dy * cp;
                    const double q = (xr / e.a) * (xr / e.a) +
                                     (yr / e.b) * (yr / e.b);
                    if (q <= 1.0) v += e.rho;
                }
                if (clamp_nonnegative && v < 0.0) v = 0.0;
                img.data[static_cast<size_t>(r) * size + c] =
                    static_cast<float>(v);
            }
        }
    });
    return img;
}

Image shepp_logan(int size) {
    return rasterize_ellipses(size, shepp_logan_ellipses(), false);
}

Image random_ellipse_phantom(int size, int num_ellipses, uint64_t seed) {
    if (size < 8)
        throw std::invalid_argument("random_ellipse_phantom: size must be >= 8");
    if (num_ellipses < 1 || num_ellipses > 32)
        throw std::invalid_argument(
            "random_ellipse_phantom: num_ellipses must be in [1, 32]");

    Xoshiro256pp gen(seed);
    std::vector<Ellipse> ellipses;
    ellipses.reserve(num_ellipses);
    for (int k = 0; k < num_ellipses; ++k) {
        Ellipse e;
        const double center_angle = gen.uniform(0.0, 2.0 * M_PI);
        const double center_radius = gen.uniform(0.0, 0.72);
        e.x0 = center_radius * std::cos(center_angle);
        e.y0 = center_radius * std::sin(center_angle);
        // Keep the whole ellipse inside the unit disk.
        const double axis_cap = std::min(0.45, 0.96 - center_radius);
        e.a = gen.uniform(0.04, axis_cap);
        e.b = gen.uniform(0.04, axis_cap);
        e.phi = gen.uniform(0.0, M_PI);
        e.rho = gen.uniform(-0.5, 1.0);
        ellipses.push_back(e);
    }
    return rasterize_ellipses(size, ellipses, true);
}

Geometry DatasetConfig::geometry() const {
    const int detectors = num_detectors > 0 ? num_detectors : size;
    const int angles = num_angles > 0 ? num_angles : size;
    return make_geometry(angles, detectors);
}

const std::vector<SampleFiles>& DatasetManifest::split(
    const std::string& name) const {
    auto it = splits.find(name);
    if (it == splits.end())
        throw std::out_of_range("manifest has no split named '" + name + "'");
    return it->second;
}

DatasetManifest generate_dataset(const std::filesystem::path& out_dir,
                                 const DatasetConfig& config) {
    if (config.train_count < 0 || config.val_count < 0 ||
        config.test_count < 0)
        throw std::invalid_argument("generate_dataset: negative split count");
    if (config.min_ellipses < 1 || config.max_ellipses > 32 ||
        config.min_ellipses > config.max_ellipses)
        throw std::invalid_argument(
            "generate_dataset: ellipse count range invalid");
    const Geometry geom = config.geometry();
    validate(geom);

    std::filesystem::create_directories(out_dir);

    DatasetManifest manifest;
    manifest.image_size = config.size;
    manifest.geometry = geom;
    manifest.photon_count =
        config.photon_count > 0.0 ? config.photon_count : 0.0;
    manifest.seed = config.seed;
    manifest.root = out_dir;

    const std::pair<std::string, int> split_plan[] = {
        {"train", config.train_count},
        {"val", config.val_count},
        {"test", config.test_count},
    };

    int split_idx = 0;
    for (const auto& [split_name, count] : split_plan) {
        auto& files = manifest.splits[split_name];
        for (int index = 0; index < count; ++index) {
            Xoshiro256pp count_gen(derive_seed(config.seed, split_idx, index, 0));
            const int span = config.max_ellipses - config.min_ellipses + 1;
            const int num_ellipses =
                config.min_ellipses +
                static_cast<int>(count_gen.next_below(span));
            const Image gt = random_ellipse_phantom(
                config.size, num_ellipses,
                derive_seed(config.seed, split_idx, index, 1));
            const Sinogram clean =
                forward_project(gt, geom, config.forward_step_px);
            Sinogram noisy = clean;
            if (config.photon_count > 0.0)
                noisy = apply_noise(clean, config.photon_count,
                                    derive_seed(config.seed, split_idx, index, 2));

            SampleFiles triple;
            triple.gt = split_name + "_" + std::to_string(index) + "_gt.fbr";
            triple.sino =
                split_name + "_" + std::to_string(index) + "_sino.fbr";
            triple.noisy =
                split_name + "_" + std::to_string(index) + "_noisy.fbr";
            write_raster(out_dir / triple.gt, gt);
            write_raster(out_dir / triple.sino, clean);
            write_raster(out_dir / triple.noisy, noisy);
            files.push_back(triple);
        }
        ++split_idx;
    }

    nlohmann::json j;
    j["image_size"] = manifest.image_size;
    j["geometry"] = {
        {"num_angles", geom.num_angles},
        {"angle_start", geom.angle_start},
        {"angle_step", geom.angle_step},
        {"num_detectors", geom.num_detectors},
        {"detector_spacing", geom.detector_spacing},
    };
    j["photon_count"] = manifest.photon_count;  // 0 means noise disabled
    j["seed"] = manifest.seed;
    j["training_pairing"] = "noisy_sinogram->ground_truth";
    for (const auto& [split_name, files] : manifest.splits) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& t : files)
            arr.push_back({{"gt", t.gt}, {"sino", t.sino}, {"noisy", t.noisy}});
        j["splits"][split_name] = std::move(arr);
    }

    std::ofstream out(out_dir / "manifest.json", std::ios::binary);
    if (!out)
        throw std::runtime_error("generate_dataset: cannot write manifest");
    out << j.dump(2) << '\n';
    if (!out)
        throw std::runtime_error("generate_dataset: manifest write failed");
    return manifest;
}

DatasetManifest load_manifest(const std::filesystem::path& manifest_path) {
    std::ifstream in(manifest_path, std::ios::binary);
    if (!in)
        throw std::runtime_error("load_manifest: cannot open " +
                                 manifest_path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("load_manifest: bad JSON in " +
                                 manifest_path.string() + ": " + e.what());
    }

    DatasetManifest m;
    try {
        m.image_size = j.at("image_size").get<int>();
        const auto& g = j.at("geometry");
        m.geometry.num_angles = g.at("num_angles").get<int>();
        m.geometry.angle_start = g.at("angle_start").get<double>();
        m.geometry.angle_step = g.at("angle_step").get<double>();
        m.geometry.num_detectors = g.at("num_detectors").get<int>();
        m.geometry.detector_spacing = g.at("detector_spacing").get<double>();
        m.photon_count = j.at("photon_count").get<double>();
        m.seed = j.at("seed").get<uint64_t>();
        for (const auto& [split_name, arr] : j.at("splits").items()) {
            auto& files = m.splits[split_name];
            for (const auto& item : arr) {
                SampleFiles t;
                t.gt = item.at("gt").get<std::string>();
                t.sino = item.at("sino").get<std::string>();
                t.noisy = item.at("noisy").get<std::string>();
                files.push_back(t);
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("load_manifest: missing field in " +
                                 manifest_path.string() + ": " + e.what());
    }
    validate(m.geometry);

    m.root = manifest_path.parent_path();
    for (const auto& [split_name, files] : m.splits)
        for (const auto& t : files)
            for (const std::string* name : {&t.gt, &t.sino, &t.noisy})
                if (!std::filesystem::exists(m.root / *name))
                    throw std::runtime_error("load_manifest: listed file '" +
                                             *name + "' is missing");
    return m;
}

}  // namespace fbp
