#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace fbp {

/// Truncated Fourier series k(omega) = a0 + sum_l a_l cos(2*pi*l*omega)
/// + b_l sin(2*pi*l*omega), order L = 50: exactly 101 coefficients no matter
/// what grid the filter is later evaluated on.
struct FourierSeriesFilter {
    static constexpr int order = 50;
    static constexpr int num_params = 2 * order + 1;

    double a0 = 0.0;
    std::array<double, order> a{};
    std::array<double, order> b{};

    bool operator==(const FourierSeriesFilter&) const = default;
};

/// Real frequency response sampled on the padded half-spectrum grid
/// omega_k = k/P, k = 0..P/2.
struct FilterSpectrum {
    int padded_len = 0;
    std::vector<double> values;  // length P/2+1

    int num_bins() const { return static_cast<int>(values.size()); }
    double omega(int k) const { return double(k) / padded_len; }
};

double evaluate_series_at(const FourierSeriesFilter& f, double omega);
FilterSpectrum evaluate_series(const FourierSeriesFilter& f, int padded_len);

// Analytic baselines on normalized omega in [0, 1/2]; ram_lak(1/2) = 1 fixes
// the common scale.
FilterSpectrum ram_lak(int padded_len);
FilterSpectrum hann_filter(int padded_len);
FilterSpectrum shepp_logan_filter(int padded_len);

/// Dispatch by name ("ram_lak", "hann", "shepp_logan"); unknown names raise
/// an error listing the valid ones.
FilterSpectrum analytic_filter(const std::string& name, int padded_len);
const std::vector<std::string>& analytic_filter_names();

/// Least-squares fit of the series to a sampled spectrum (normal equations
/// with ridge 1e-8). Needs >= 202 grid points so the system is
/// overdetermined.
FourierSeriesFilter fit_series_to_spectrum(const FilterSpectrum& target);

// CSV exchange format: header "l,a,b", row 0 = "0,<a0>,0", rows 1..50 carry
// a_l, b_l.
void save_filter_csv(const std::filesystem::path& path,
                     const FourierSeriesFilter& f);
FourierSeriesFilter load_filter_csv(const std::filesystem::path& path);

/// Evaluated-spectrum CSV "omega,value" for plotting.
void save_spectrum_csv(const std::filesystem::path& path,
                       const FilterSpectrum& s);

}  // namespace fbp
