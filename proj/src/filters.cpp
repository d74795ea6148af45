#include "fbp/filters.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace fbp {

namespace {

constexpr int kP = FourierSeriesFilter::num_params;  // 101

void check_padded_len(int padded_len) {
    if (padded_len < 2 || (padded_len & 1) != 0)
        throw std::invalid_argument("filter grid length must be even and >= 2");
}

// Basis value of parameter p at frequency omega: p=0 -> 1,
// p=1..50 -> cos(2*pi*p*omega), p=51..100 -> sin(2*pi*(p-50)*omega).
double basis(int p, double omega) {
    if (p == 0) return 1.0;
    if (p <= FourierSeriesFilter::order)
        return std::cos(2.0 * M_PI * p * omega);
    return std::sin(2.0 * M_PI * (p - FourierSeriesFilter::order) * omega);
}

// Dense symmetric positive-definite solve via Cholesky, sized for the fixed
// 101x101 normal equations.
std::vector<double> solve_spd(std::vector<double>& A, std::vector<double>& rhs,
                              int n) {
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
            double sum = A[static_cast<size_t>(i) * n + j];
            for (int k = 0; k < j; ++k)
                sum -= A[static_cast<size_t>(i) * n + k] *
                       A[static_cast<size_t>(j) * n + k];
            if (i == j) {
                if (!(sum > 0.0))
                    throw std::runtime_error(
                        "fit_series_to_spectrum: normal equations not positive "
                        "definite");
                A[static_cast<size_t>(i) * n + j] = std::sqrt(sum);
            } else {
                A[static_cast<size_t>(i) * n + j] =
                    sum / A[static_cast<size_t>(j) * n + j];
            }
        }
    }
    // forward substitution L y = rhs
    for (int i = 0; i < n; ++i) {
        double sum = rhs[i];
        for (int k = 0; k < i; ++k)
            sum -= A[static_cast<size_t>(i) * n + k] * rhs[k];
        rhs[i] = sum / A[static_cast<size_t>(i) * n + i];
    }
    // back substitution L^T x = y
    for (int i = n - 1; i >= 0; --i) {
        double sum = rhs[i];
        for (int k = i + 1; k < n; ++k)
            sum -= A[static_cast<size_t>(k) * n + i] * rhs[k];
        rhs[i] = sum / A[static_cast<size_t>(i) * n + i];
    }
    return rhs;
}

}  // namespace

double evaluate_series_at(const FourierSeriesFilter& f, double omega) {
    double v = f.a0;
    for (int l = 1; l <= FourierSeriesFilter::order; ++l) {
        const double ang = 2.0 * M_PI * l * omega;
        v += f.a[l - 1] * std::cos(ang) + f.b[l - 1] * std::sin(ang);
    }
    return v;
}

FilterSpectrum evaluate_series(const FourierSeriesFilter& f, int padded_len) {
    check_padded_len(padded_len);
    FilterSpectrum s;
    s.padded_len = padded_len;
    s.values.resize(padded_len / 2 + 1);
    for (int k = 0; k <= padded_len / 2; ++k)
        s.values[k] = evaluate_series_at(f, s.omega(k));
    return s;
}

FilterSpectrum ram_lak(int padded_len) {
    check_padded_len(padded_len);
    FilterSpectrum s;
    s.padded_len = padded_len;
    s.values.resize(padded_len / 2 + 1);
    for (int k = 0; k <= padded_len / 2; ++k) s.values[k] = 2.0 * s.omega(k);
    return s;
}

FilterSpectrum hann_filter(int padded_len) {
    check_padded_len(padded_len);
    FilterSpectrum s;
    s.padded_len = padded_len;
    s.values.resize(padded_len / 2 + 1);
    for (int k = 0; k <= padded_len / 2; ++k) {
        const double w = s.omega(k);
        s.values[k] = 2.0 * w * (0.5 + 0.5 * std::cos(2.0 * M_PI * w));
    }
    return s;
}

FilterSpectrum shepp_logan_filter(int padded_len) {
    check_padded_len(padded_len);
    FilterSpectrum s;
    s.padded_len = padded_len;
    s.values.resize(padded_len / 2 + 1);
    for (int k = 0; k <= padded_len / 2; ++k) {
        const double w = s.omega(k);
        const double sinc = w == 0.0 ? 1.0 : std::sin(M_PI * w) / (M_PI * w);
        s.values[k] = 2.0 * w * sinc;
    }
    return s;
}

const std::vector<std::string>& analytic_filter_names() {
    static const std::vector<std::string> names = {"ram_lak", "hann",
                                                   "shepp_logan"};
    return names;
}

FilterSpectrum analytic_filter(const std::string& name, int padded_len) {
    if (name == "ram_lak") return ram_lak(padded_len);
    if (name == "hann") return hann_filter(padded_len);
    if (name == "shepp_logan") return shepp_logan_filter(padded_len);
    std::string msg = "unknown filter '" + name + "'; valid names:";
    for (const auto& n : analytic_filter_names()) msg += " " + n;
    throw std::invalid_argument(msg);
}

FourierSeriesFilter fit_series_to_spectrum(const FilterSpectrum& target) {
    const int m = target.num_bins();
    if (m < 2 * kP)
        throw std::invalid_argument(
            "fit_series_to_spectrum: need >= 202 grid points for an "
            "overdetermined fit");
    for (double v : target.values)
        if (!std::isfinite(v))
            throw std::invalid_argument(
                "fit_series_to_spectrum: non-finite target value");

    // Normal equations (B^T B + ridge I) c = B^T t with ridge 1e-8.
    std::vector<double> A(static_cast<size_t>(kP) * kP, 0.0);
    std::vector<double> rhs(kP, 0.0);
    std::vector<double> row(kP);
    for (int k = 0; k < m; ++k) {
        const double omega = target.omega(k);
        for (int p = 0; p < kP; ++p) row[p] = basis(p, omega);
        const double t = target.values[k];
        for (int i = 0; i < kP; ++i) {
            rhs[i] += row[i] * t;
            for (int j = 0; j <= i; ++j)
                A[static_cast<size_t>(i) * kP + j] += row[i] * row[j];
        }
    }
    for (int i = 0; i < kP; ++i) {
        A[static_cast<size_t>(i) * kP + i] += 1e-8;
        for (int j = i + 1; j < kP; ++j)
            A[static_cast<size_t>(i) * kP + j] =
                A[static_cast<size_t>(j) * kP + i];
    }
    const std::vector<double> c = solve_spd(A, rhs, kP);

    FourierSeriesFilter f;
    f.a0 = c[0];
    for (int l = 1; l <= FourierSeriesFilter::order; ++l) {
        f.a[l - 1] = c[l];
        f.b[l - 1] = c[FourierSeriesFilter::order + l];
    }
    return f;
}

void save_filter_csv(const std::filesystem::path& path,
                     const FourierSeriesFilter& f) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("save_filter_csv: cannot open " +
                                 path.string());
    char buf[128];
    out << "l,a,b\n";
    std::snprintf(buf, sizeof buf, "0,%.17g,0\n", f.a0);
    out << buf;
    for (int l = 1; l <= FourierSeriesFilter::order; ++l) {
        std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g\n", l, f.a[l - 1],
                      f.b[l - 1]);
        out << buf;
    }
    if (!out)
        throw std::runtime_error("save_filter_csv: write failed for " +
                                 path.string());
}

FourierSeriesFilter load_filter_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("load_filter_csv: cannot open " +
                                 path.string());
    std::string line;
    if (!std::getline(in, line) ||
        (line != "l,a,b" && line != "l,a,b\r"))
        throw std::runtime_error("load_filter_csv: expected header 'l,a,b' in " +
                                 path.string());

    FourierSeriesFilter f;
    std::array<bool, FourierSeriesFilter::order + 1> seen{};
    int rows = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string tok_l, tok_a, tok_b;
        if (!std::getline(ss, tok_l, ',') || !std::getline(ss, tok_a, ',') ||
            !std::getline(ss, tok_b))
            throw std::runtime_error("load_filter_csv: malformed row '" + line +
                                     "'");
        int l = 0;
        double a = 0.0, b = 0.0;
        try {
            l = std::stoi(tok_l);
            a = std::stod(tok_a);
            b = std::stod(tok_b);
        } catch (const std::exception&) {
            throw std::runtime_error("load_filter_csv: malformed row '" + line +
                                     "'");
        }
        if (l < 0 || l > FourierSeriesFilter::order)
            throw std::runtime_error("load_filter_csv: order index " +
                                     std::to_string(l) + " out of range");
        if (!std::isfinite(a) || !std::isfinite(b))
            throw std::runtime_error("load_filter_csv: non-finite coefficient");
        if (l == 0) {
            if (b != 0.0)
                throw std::runtime_error(
                    "load_filter_csv: row 0 must have b = 0");
            f.a0 = a;
            seen[0] = true;
        } else {
            f.a[l - 1] = a;
            f.b[l - 1] = b;
            seen[l] = true;
        }
        ++rows;
    }
    if (rows != FourierSeriesFilter::order + 1)
        throw std::runtime_error(
            "load_filter_csv: expected 51 rows (orders 0..50), got " +
            std::to_string(rows));
    for (int l = 0; l <= FourierSeriesFilter::order; ++l)
        if (!seen[l])
            throw std::runtime_error("load_filter_csv: missing order " +
                                     std::to_string(l));
    return f;
}

void save_spectrum_csv(const std::filesystem::path& path,
                       const FilterSpectrum& s) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("save_spectrum_csv: cannot open " +
                                 path.string());
    out << "omega,value\n";
    char buf[128];
    for (int k = 0; k < s.num_bins(); ++k) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", s.omega(k),
                      s.values[k]);
        out << buf;
    }
    if (!out)
        throw std::runtime_error("save_spectrum_csv: write failed for " +
                                 path.string());
}

}  // namespace fbp
