#include "fbp/raster.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <optional>
#include <sstream>

static_assert(std::endian::native == std::endian::little,
              "raster I/O assumes a little-endian host");
static_assert(sizeof(float) == 4);

namespace fbp {

namespace {

constexpr const char* kMagic = "FBPRASTER 1";
constexpr int64_t kMaxElements = int64_t(1) << 30;

void check_finite(const std::vector<float>& data, const char* what) {
    for (float v : data)
        if (!std::isfinite(v))
            throw std::invalid_argument(std::string(what) + ": non-finite value");
}

void write_payload(std::ofstream& out, const std::filesystem::path& path,
                   const std::vector<float>& data) {
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size() * sizeof(float)));
    if (!out)
        throw RasterError(RasterErrc::io_failure,
                          "write failed: " + path.string());
}

std::ofstream open_for_write(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw RasterError(RasterErrc::io_failure,
                          "cannot open for writing: " + path.string());
    return out;
}

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

void write_raster(const std::filesystem::path& path, const Image& image) {
    if (image.data.size() != static_cast<size_t>(image.height) * image.width)
        throw std::invalid_argument("image: data length != height*width");
    check_finite(image.data, "image");
    auto out = open_for_write(path);
    out << kMagic << "\n"
        << "dtype=f32\n"
        << "h=" << image.height << "\n"
        << "w=" << image.width << "\n"
        << "data:\n";
    write_payload(out, path, image.data);
}

void write_raster(const std::filesystem::path& path, const Sinogram& sino) {
    const Geometry& g = sino.geometry;
    validate(g);
    if (sino.data.size() != static_cast<size_t>(g.num_angles) * g.num_detectors)
        throw std::invalid_argument("sinogram: data length != M*N");
    check_finite(sino.data, "sinogram");
    auto out = open_for_write(path);
    out << kMagic << "\n"
        << "dtype=f32\n"
        << "h=" << g.num_angles << "\n"
        << "w=" << g.num_detectors << "\n"
        << "angles=" << fmt_double(g.angle_start) << "," << fmt_double(g.angle_step)
        << "," << g.num_angles << "\n"
        << "det_spacing=" << fmt_double(g.detector_spacing) << "\n"
        << "data:\n";
    write_payload(out, path, sino.data);
}

Raster read_raster(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw RasterError(RasterErrc::io_failure,
                          "cannot open: " + path.string());

    std::string line;
    if (!std::getline(in, line) || line != kMagic)
        throw RasterError(RasterErrc::bad_magic,
                          "bad magic in " + path.string());

    int64_t h = -1, w = -1;
    std::optional<Geometry> geom;
    double angle_start = 0, angle_step = 0, det_spacing = 0;
    int64_t angle_count = -1;
    bool have_angles = false, have_spacing = false, have_dtype = false;

    while (std::getline(in, line)) {
        if (line == "data:")
            break;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw RasterError(RasterErrc::bad_header,
                              "malformed header line '" + line + "' in " + path.string());
        std::string key = line.substr(0, eq);
        std::string val = line.substr(eq + 1);
        try {
            if (key == "dtype") {
                if (val != "f32")
                    throw RasterError(RasterErrc::bad_header,
                                      "unsupported dtype '" + val + "'");
                have_dtype = true;
            } else if (key == "h") {
                h = std::stoll(val);
            } else if (key == "w") {
                w = std::stoll(val);
            } else if (key == "angles") {
                std::istringstream ss(val);
                char c1 = 0, c2 = 0;
                if (!(ss >> angle_start >> c1 >> angle_step >> c2 >> angle_count) ||
                    c1 != ',' || c2 != ',')
                    throw RasterError(RasterErrc::bad_header, "malformed angles line");
                have_angles = true;
            } else if (key == "det_spacing") {
                det_spacing = std::stod(val);
                have_spacing = true;
            } else {
                throw RasterError(RasterErrc::bad_header,
                                  "unknown header key '" + key + "'");
            }
        } catch (const std::invalid_argument&) {
            throw RasterError(RasterErrc::bad_header,
                              "unparsable header value in " + path.string());
        } catch (const std::out_of_range&) {
            throw RasterError(RasterErrc::dimension_overflow,
                              "header value out of range in " + path.string());
        }
    }
    if (line != "data:")
        throw RasterError(RasterErrc::bad_header,
                          "missing data: marker in " + path.string());
    if (!have_dtype || h < 0 || w < 0)
        throw RasterError(RasterErrc::bad_header,
                          "incomplete header in " + path.string());
    if (h == 0 || w == 0 || h > kMaxElements || w > kMaxElements ||
        h * w > kMaxElements)
        throw RasterError(RasterErrc::dimension_overflow,
                          "unreasonable dimensions in " + path.string());
    if (have_angles != have_spacing)
        throw RasterError(RasterErrc::bad_header,
                          "angles and det_spacing must appear together in " +
                              path.string());

    std::vector<float> data(static_cast<size_t>(h * w));
    in.read(reinterpret_cast<char*>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(float)));
    if (static_cast<size_t>(in.gcount()) != data.size() * sizeof(float))
        throw RasterError(RasterErrc::truncated_payload,
                          "truncated payload in " + path.string());

    if (have_angles) {
        if (angle_count != h)
            throw RasterError(RasterErrc::bad_header,
                              "angle count does not match row count in " +
                                  path.string());
        Geometry g;
        g.num_angles = static_cast<int>(h);
        g.angle_start = angle_start;
        g.angle_step = angle_step;
        g.num_detectors = static_cast<int>(w);
        g.detector_spacing = det_spacing;
        validate(g);
        Sinogram s(g);
        s.data = std::move(data);
        return s;
    }
    Image img(static_cast<int>(h), static_cast<int>(w));
    img.data = std::move(data);
    return img;
}

Image read_image(const std::filesystem::path& path) {
    Raster r = read_raster(path);
    if (auto* img = std::get_if<Image>(&r))
        return std::move(*img);
    throw RasterError(RasterErrc::bad_header,
                      "expected an image (no geometry block): " + path.string());
}

Sinogram read_sinogram(const std::filesystem::path& path) {
    Raster r = read_raster(path);
    if (auto* s = std::get_if<Sinogram>(&r))
        return std::move(*s);
    throw RasterError(RasterErrc::bad_header,
                      "expected a sinogram (geometry block): " + path.string());
}

void write_preview(const std::filesystem::path& path, const Image& image,
                   float window_lo, float window_hi) {
    if (!(window_hi > window_lo))
        throw std::invalid_argument("preview: window_hi must exceed window_lo");
    auto out = open_for_write(path);
    out << "P5\n" << image.width << " " << image.height << "\n255\n";
    std::vector<unsigned char> bytes(image.data.size());
    const double span = double(window_hi) - double(window_lo);
    for (size_t i = 0; i < image.data.size(); ++i) {
        double t = (double(image.data[i]) - window_lo) / span;
        t = std::min(1.0, std::max(0.0, t));
        bytes[i] = static_cast<unsigned char>(std::lround(255.0 * t));
    }
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw RasterError(RasterErrc::io_failure,
                          "write failed: " + path.string());
}

}  // namespace fbp
