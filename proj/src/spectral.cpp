#include "fbp/spectral.hpp"

#include <cmath>
#include <stdexcept>

#include "fbp/parallel.hpp"

namespace fbp {

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

int next_power_of_two(int n) {
    int p = 1;
    while (p < n) p <<= 1;
    return p;
}

void fft_inplace(std::vector<std::complex<double>>& data, bool inverse) {
    const size_t n = data.size();
    if (n == 0) return;
    if (!is_power_of_two(static_cast<int>(n)))
        throw std::invalid_argument("fft_inplace: length must be a power of two");

    // bit-reversal permutation
    for (size_t i = 1, j = 0; i < n; ++i) {
        size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(data[i], data[j]);
    }

    for (size_t len = 2; len <= n; len <<= 1) {
        const double ang = (inverse ? 2.0 : -2.0) * M_PI / double(len);
        const std::complex<double> wlen(std::cos(ang), std::sin(ang));
        for (size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (size_t k = 0; k < len / 2; ++k) {
                std::complex<double> u = data[i + k];
                std::complex<double> v = data[i + k + len / 2] * w;
                data[i + k] = u + v;
                data[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }

    if (inverse) {
        const double scale = 1.0 / double(n);
        for (auto& x : data) x *= scale;
    }
}

std::vector<HalfSpectrum> rows_to_halfspectrum(const Grid& rows,
                                               int padded_len) {
    if (!is_power_of_two(padded_len) || padded_len < rows.w)
        throw std::invalid_argument(
            "rows_to_halfspectrum: padded_len must be a power of two >= row length");
    const int half = padded_len / 2 + 1;
    std::vector<HalfSpectrum> out(rows.h);
    parallel_for(rows.h, [&](int64_t begin, int64_t end) {
        std::vector<std::complex<double>> buf(padded_len);
        for (int64_t r = begin; r < end; ++r) {
            for (int j = 0; j < rows.w; ++j)
                buf[j] = {rows(int(r), j), 0.0};
            for (int j = rows.w; j < padded_len; ++j) buf[j] = {0.0, 0.0};
            fft_inplace(buf, false);
            out[r].padded_len = padded_len;
            out[r].bins.assign(buf.begin(), buf.begin() + half);
        }
    });
    return out;
}

Grid halfspectrum_to_rows(const std::vector<HalfSpectrum>& spectra,
                          int original_len) {
    if (spectra.empty())
        throw std::invalid_argument("halfspectrum_to_rows: no spectra");
    const int P = spectra[0].padded_len;
    if (original_len > P)
        throw std::invalid_argument("halfspectrum_to_rows: original_len > padded_len");
    for (const auto& s : spectra)
        if (s.padded_len != P ||
            s.bins.size() != static_cast<size_t>(P / 2 + 1))
            throw std::invalid_argument("halfspectrum_to_rows: inconsistent spectra");

    Grid out(static_cast<int>(spectra.size()), original_len);
    double max_im = 0.0, max_re = 0.0;
    std::vector<double> worker_im(spectra.size(), 0.0);
    std::vector<double> worker_re(spectra.size(), 0.0);
    parallel_for(static_cast<int64_t>(spectra.size()),
                 [&](int64_t begin, int64_t end) {
        std::vector<std::complex<double>> buf(P);
        for (int64_t r = begin; r < end; ++r) {
            const auto& bins = spectra[r].bins;
            for (int k = 0; k <= P / 2; ++k) buf[k] = bins[k];
            for (int k = P / 2 + 1; k < P; ++k) buf[k] = std::conj(bins[P - k]);
            fft_inplace(buf, true);
            double lim = 0.0, lre = 0.0;
            for (int k = 0; k < P; ++k) {
                lim = std::max(lim, std::fabs(buf[k].imag()));
                lre = std::max(lre, std::fabs(buf[k].real()));
            }
            worker_im[r] = lim;
            worker_re[r] = lre;
            for (int j = 0; j < original_len; ++j)
                out(int(r), j) = buf[j].real();
        }
    });
    for (size_t r = 0; r < spectra.size(); ++r) {
        max_im = std::max(max_im, worker_im[r]);
        max_re = std::max(max_re, worker_re[r]);
    }
    // Hermitian input must invert to a real signal.
    if (max_im > 1e-4 * std::max(max_re, 1e-300) && max_im > 1e-12)
        throw std::runtime_error(
            "halfspectrum_to_rows: imaginary residue exceeds 1e-4 of the real "
            "peak (non-Hermitian filter?)");
    return out;
}

namespace {

// One axis of the 2D transform; direct O(n^2) fallback keeps odd sizes exact.
void dft_axis(std::vector<std::complex<double>>& line, bool inverse) {
    const int n = static_cast<int>(line.size());
    if (is_power_of_two(n)) {
        fft_inplace(line, inverse);
        return;
    }
    std::vector<std::complex<double>> out(n);
    const double sgn = inverse ? 2.0 : -2.0;
    for (int k = 0; k < n; ++k) {
        std::complex<double> acc(0.0, 0.0);
        for (int j = 0; j < n; ++j) {
            double ang = sgn * M_PI * double((int64_t(k) * j) % n) / double(n);
            acc += line[j] * std::complex<double>(std::cos(ang), std::sin(ang));
        }
        out[k] = acc;
    }
    if (inverse)
        for (auto& x : out) x /= double(n);
    line = std::move(out);
}

}  // namespace

void dft2d(const Grid& re_in, const Grid* im_in, Grid& re_out, Grid& im_out,
           bool inverse) {
    const int h = re_in.h, w = re_in.w;
    if (im_in && (im_in->h != h || im_in->w != w))
        throw std::invalid_argument("dft2d: shape mismatch");
    std::vector<std::complex<double>> field(static_cast<size_t>(h) * w);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c)
            field[static_cast<size_t>(r) * w + c] = {
                re_in(r, c), im_in ? (*im_in)(r, c) : 0.0};

    parallel_for(h, [&](int64_t begin, int64_t end) {
        std::vector<std::complex<double>> line(w);
        for (int64_t r = begin; r < end; ++r) {
            for (int c = 0; c < w; ++c) line[c] = field[r * w + c];
            dft_axis(line, inverse);
            for (int c = 0; c < w; ++c) field[r * w + c] = line[c];
        }
    });
    parallel_for(w, [&](int64_t begin, int64_t end) {
        std::vector<std::complex<double>> line(h);
        for (int64_t c = begin; c < end; ++c) {
            for (int r = 0; r < h; ++r) line[r] = field[static_cast<size_t>(r) * w + c];
            dft_axis(line, inverse);
            for (int r = 0; r < h; ++r) field[static_cast<size_t>(r) * w + c] = line[r];
        }
    });

    re_out = Grid(h, w);
    im_out = Grid(h, w);
    for (size_t i = 0; i < field.size(); ++i) {
        re_out.v[i] = field[i].real();
        im_out.v[i] = field[i].imag();
    }
}

Grid dft2d_magnitude(const Grid& image) {
    for (double v : image.v)
        if (!std::isfinite(v))
            throw std::invalid_argument("dft2d_magnitude: non-finite input");
    Grid re, im;
    dft2d(image, nullptr, re, im, false);
    const int h = image.h, w = image.w;
    Grid mag(h, w);
    // fftshift: unshifted bin k lands at (k + floor(n/2)) mod n
    for (int r = 0; r < h; ++r) {
        int rs = (r + h / 2) % h;
        for (int c = 0; c < w; ++c) {
            int cs = (c + w / 2) % w;
            mag(rs, cs) = std::hypot(re(r, c), im(r, c));
        }
    }
    return mag;
}

FreqGrid2D freq_grid(int height, int width) {
    if (height < 1 || width < 1)
        throw std::invalid_argument("freq_grid: dims must be >= 1");
    FreqGrid2D g;
    g.h = height;
    g.w = width;
    g.fx.resize(static_cast<size_t>(height) * width);
    g.fy.resize(static_cast<size_t>(height) * width);
    for (int r = 0; r < height; ++r) {
        double fy = double(r - height / 2) / height;
        for (int c = 0; c < width; ++c) {
            double fx = double(c - width / 2) / width;
            g.fx[static_cast<size_t>(r) * width + c] = fx;
            g.fy[static_cast<size_t>(r) * width + c] = fy;
        }
    }
    return g;
}

double dft_freq(int k, int n) {
    return (k < (n + 1) / 2) ? double(k) / n : double(k - n) / n;
}

}  // namespace fbp
