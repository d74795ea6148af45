#include <doctest.h>

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "fbp/filters.hpp"
#include "test_util.hpp"

using namespace fbp;

TEST_CASE("series evaluation matches hand-computed points") {
    FourierSeriesFilter f;
    f.a0 = 0.5;
    f.a[0] = 1.0;   // l = 1 cosine
    f.b[1] = 2.0;   // l = 2 sine

    // k(w) = 0.5 + cos(2*pi*w) + 2*sin(4*pi*w)
    CHECK(evaluate_series_at(f, 0.0) == doctest::Approx(1.5).epsilon(1e-15));
    CHECK(evaluate_series_at(f, 0.25) ==
          doctest::Approx(0.5 + 0.0 + 0.0).epsilon(1e-12));
    CHECK(evaluate_series_at(f, 0.5) ==
          doctest::Approx(0.5 - 1.0 + 0.0).epsilon(1e-12));
    CHECK(evaluate_series_at(f, 0.125) ==
          doctest::Approx(0.5 + std::cos(M_PI / 4) + 2.0).epsilon(1e-12));

    const FilterSpectrum s = evaluate_series(f, 16);
    REQUIRE(s.num_bins() == 9);
    CHECK(s.padded_len == 16);
    for (int k = 0; k <= 8; ++k) {
        CHECK(s.omega(k) == doctest::Approx(k / 16.0).epsilon(1e-15));
        CHECK(s.values[k] ==
              doctest::Approx(evaluate_series_at(f, k / 16.0)).epsilon(1e-12));
    }
}

TEST_CASE("analytic filters have the expected endpoints and shapes") {
    const int P = 256;
    const FilterSpectrum rl = ram_lak(P);
    const FilterSpectrum hn = hann_filter(P);
    const FilterSpectrum sl = shepp_logan_filter(P);

    // All vanish at DC.
    CHECK(rl.values[0] == 0.0);
    CHECK(hn.values[0] == 0.0);
    CHECK(sl.values[0] == 0.0);

    // Ram-Lak is the straight line 2*omega, reaching 1 at omega = 1/2.
    CHECK(rl.values[P / 2] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(rl.values[P / 4] == doctest::Approx(0.5).epsilon(1e-15));

    // Hann rolls all the way off at the Nyquist edge.
    CHECK(std::fabs(hn.values[P / 2]) < 1e-15);
    // Mid-band: 2*(1/4)*0.5*(1+cos(pi/2)) = 0.25.
    CHECK(hn.values[P / 4] == doctest::Approx(0.25).epsilon(1e-12));

    // Shepp-Logan reaches 2/pi at the edge: 2*(1/2)*sinc(1/2) = sin(pi/2)/(pi/2).
    CHECK(sl.values[P / 2] == doctest::Approx(2.0 / M_PI).epsilon(1e-12));

    for (int k = 0; k < rl.num_bins(); ++k) {
        // Apodized filters never exceed the ramp; all are nonnegative.
        CHECK(hn.values[k] <= rl.values[k] + 1e-15);
        CHECK(sl.values[k] <= rl.values[k] + 1e-15);
        CHECK(hn.values[k] >= 0.0);
        CHECK(sl.values[k] >= 0.0);
    }
}

TEST_CASE("analytic_filter dispatches by name") {
    const FilterSpectrum a = analytic_filter("hann", 128);
    const FilterSpectrum b = hann_filter(128);
    CHECK(a.values == b.values);
    CHECK_THROWS_WITH_AS(analytic_filter("butterworth", 128),
                         doctest::Contains("butterworth"),
                         std::invalid_argument);
    CHECK(analytic_filter_names().size() == 3);
}

TEST_CASE("evaluate_series is resolution independent") {
    // The same 101 coefficients evaluated on two padded grids agree wherever
    // the grids share a frequency: omega = k/128 = 16k/2048.
    FourierSeriesFilter f;
    Xoshiro256pp rng(41);
    f.a0 = rng.uniform(-1, 1);
    for (int l = 0; l < FourierSeriesFilter::order; ++l) {
        f.a[l] = rng.uniform(-1, 1) / (l + 1);
        f.b[l] = rng.uniform(-1, 1) / (l + 1);
    }
    const FilterSpectrum coarse = evaluate_series(f, 128);
    const FilterSpectrum fine = evaluate_series(f, 2048);
    for (int k = 0; k <= 64; ++k)
        CHECK(coarse.values[k] ==
              doctest::Approx(fine.values[16 * k]).epsilon(1e-12));
}

TEST_CASE("series evaluation is linear in the coefficients") {
    FourierSeriesFilter f, g, sum;
    Xoshiro256pp rng(6);
    f.a0 = rng.uniform(-1, 1);
    g.a0 = rng.uniform(-1, 1);
    sum.a0 = f.a0 + g.a0;
    for (int l = 0; l < FourierSeriesFilter::order; ++l) {
        f.a[l] = rng.uniform(-1, 1);
        g.a[l] = rng.uniform(-1, 1);
        f.b[l] = rng.uniform(-1, 1);
        g.b[l] = rng.uniform(-1, 1);
        sum.a[l] = f.a[l] + g.a[l];
        sum.b[l] = f.b[l] + g.b[l];
    }
    for (double w : {0.0, 0.1, 0.37, 0.5})
        CHECK(evaluate_series_at(sum, w) ==
              doctest::Approx(evaluate_series_at(f, w) +
                              evaluate_series_at(g, w))
                  .epsilon(1e-12));
}

// Note on the fit tests below: the 101 basis functions restricted to the
// half-interval omega in [0, 1/2] are numerically overcomplete (sines and
// cosines on half their natural period overlap heavily), so individual
// coefficients are not identifiable from a least-squares fit. Only the
// fitted *function* is well determined; all fit checks therefore compare
// values on the grid, never coefficients.

TEST_CASE("fitting a constant target reproduces it on the grid") {
    FilterSpectrum target;
    target.padded_len = 1024;
    target.values.assign(513, 1.0);
    const FourierSeriesFilter f = fit_series_to_spectrum(target);
    // Frozen regression: max pointwise error measured 1.2e-6 (ridge-limited).
    double worst = 0.0;
    for (int k = 0; k <= 512; ++k)
        worst = std::max(worst,
                         std::fabs(evaluate_series_at(f, k / 1024.0) - 1.0));
    CHECK(worst < 1e-5);
}

TEST_CASE("fitting a spectrum produced by a series reproduces its values") {
    FourierSeriesFilter truth;
    Xoshiro256pp rng(8);
    truth.a0 = rng.uniform(-1, 1);
    for (int l = 0; l < FourierSeriesFilter::order; ++l) {
        truth.a[l] = rng.uniform(-1, 1);
        truth.b[l] = rng.uniform(-1, 1);
    }
    const FilterSpectrum target = evaluate_series(truth, 1024);
    const FourierSeriesFilter fitted = fit_series_to_spectrum(target);
    const FilterSpectrum got = evaluate_series(fitted, 1024);
    // The target is exactly representable, so only the ridge term and
    // conditioning limit the residual. Frozen: max error measured ~1e-5
    // for unit-scale coefficients; bound at 30x.
    double worst = 0.0;
    for (int k = 0; k < target.num_bins(); ++k)
        worst = std::max(worst, std::fabs(got.values[k] - target.values[k]));
    CHECK(worst < 3e-4);
}

TEST_CASE("the ramp is approximated closely by the 101-term series") {
    // Frozen regression: RMS residual of the order-50 fit to 2*omega on the
    // P=1024 grid measured 1.7e-7; bound gives ~30x headroom while still
    // catching solver regressions.
    const FilterSpectrum target = ram_lak(1024);
    const FourierSeriesFilter fitted = fit_series_to_spectrum(target);
    const FilterSpectrum approx = evaluate_series(fitted, 1024);
    double rms = 0.0;
    for (int k = 0; k < target.num_bins(); ++k) {
        const double d = approx.values[k] - target.values[k];
        rms += d * d;
    }
    rms = std::sqrt(rms / target.num_bins());
    CHECK(rms < 5e-6);
}

TEST_CASE("fit_series_to_spectrum needs an overdetermined grid") {
    FilterSpectrum tiny;
    tiny.padded_len = 256;
    tiny.values.assign(129, 1.0);  // 129 points < 202
    CHECK_THROWS_AS(fit_series_to_spectrum(tiny), std::invalid_argument);

    FilterSpectrum bad;
    bad.padded_len = 1024;
    bad.values.assign(513, 1.0);
    bad.values[100] = std::nan("");
    CHECK_THROWS_AS(fit_series_to_spectrum(bad), std::invalid_argument);
}

TEST_CASE("filter CSV round-trips exactly") {
    testutil::TempDir tmp("filtercsv");
    FourierSeriesFilter f;
    Xoshiro256pp rng(10);
    f.a0 = rng.uniform(-1, 1);
    for (int l = 0; l < FourierSeriesFilter::order; ++l) {
        f.a[l] = rng.uniform(-1, 1);
        f.b[l] = rng.uniform(-1, 1);
    }
    const auto path = tmp.path / "f.csv";
    save_filter_csv(path, f);
    const FourierSeriesFilter back = load_filter_csv(path);
    CHECK(back == f);  // %.17g keeps doubles bit-exact

    // Header plus exactly 51 rows.
    std::ifstream in(path);
    std::string line;
    int lines = 0;
    bool header_ok = false;
    while (std::getline(in, line)) {
        if (lines == 0) header_ok = (line == "l,a,b");
        ++lines;
    }
    CHECK(header_ok);
    CHECK(lines == 52);
}

TEST_CASE("load_filter_csv rejects malformed files") {
    testutil::TempDir tmp("badcsv");
    auto write = [&](const std::string& name, const std::string& body) {
        std::ofstream out(tmp.path / name, std::ios::binary);
        out << body;
        return tmp.path / name;
    };

    CHECK_THROWS_AS(load_filter_csv(tmp.path / "absent.csv"),
                    std::runtime_error);
    CHECK_THROWS_AS(load_filter_csv(write("h.csv", "order,c,s\n0,1,0\n")),
                    std::runtime_error);
    CHECK_THROWS_AS(load_filter_csv(write("short.csv", "l,a,b\n0,1,0\n")),
                    std::runtime_error);
    CHECK_THROWS_AS(
        load_filter_csv(write("dcb.csv", [] {
            std::string s = "l,a,b\n0,1,0.5\n";  // nonzero b0
            for (int l = 1; l <= 50; ++l)
                s += std::to_string(l) + ",0,0\n";
            return s;
        }())),
        std::runtime_error);
    CHECK_THROWS_AS(
        load_filter_csv(write("range.csv", [] {
            std::string s = "l,a,b\n0,1,0\n";
            for (int l = 1; l <= 49; ++l) s += std::to_string(l) + ",0,0\n";
            s += "99,0,0\n";  // order out of range
            return s;
        }())),
        std::runtime_error);
    CHECK_THROWS_AS(
        load_filter_csv(write("nan.csv", [] {
            std::string s = "l,a,b\n0,nan,0\n";
            for (int l = 1; l <= 50; ++l) s += std::to_string(l) + ",0,0\n";
            return s;
        }())),
        std::runtime_error);
}

TEST_CASE("spectrum CSV lists omega,value pairs") {
    testutil::TempDir tmp("spec");
    const FilterSpectrum s = ram_lak(16);
    const auto path = tmp.path / "s.csv";
    save_spectrum_csv(path, s);

    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "omega,value");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 9);
}
