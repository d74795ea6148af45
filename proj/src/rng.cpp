#include "fbp/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace fbp {

double Xoshiro256pp::normal() {
    // Box-Muller; guard against log(0).
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

namespace {

int64_t poisson_knuth(Xoshiro256pp& rng, double mean) {
    const double limit = std::exp(-mean);
    int64_t k = 0;
    double prod = rng.uniform();
    while (prod > limit) {
        ++k;
        prod *= rng.uniform();
    }
    return k;
}

// PTRS: W. Hörmann, "The transformed rejection method for generating Poisson
// random variables" (1993). Valid for mean >= 10.
int64_t poisson_ptrs(Xoshiro256pp& rng, double mean) {
    const double log_mean = std::log(mean);
    const double b = 0.931 + 2.53 * std::sqrt(mean);
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double v_r = 0.9277 - 3.6224 / (b - 2.0);

    for (;;) {
        double u = rng.uniform() - 0.5;
        double v = rng.uniform();
        double us = 0.5 - std::fabs(u);
        double kf = std::floor((2.0 * a / us + b) * u + mean + 0.43);
        if (us >= 0.07 && v <= v_r)
            return static_cast<int64_t>(kf);
        if (kf < 0.0 || (us < 0.013 && v > us))
            continue;
        double k = kf;
        if (std::log(v * inv_alpha / (a / (us * us) + b)) <=
            -mean + k * log_mean - std::lgamma(k + 1.0))
            return static_cast<int64_t>(kf);
    }
}

}  // namespace

int64_t poisson_draw(Xoshiro256pp& rng, double mean) {
    if (!(mean >= 0.0) || !std::isfinite(mean))
        throw std::invalid_argument("poisson_draw: mean must be finite and >= 0");
    if (mean == 0.0) return 0;
    return mean < 10.0 ? poisson_knuth(rng, mean) : poisson_ptrs(rng, mean);
}

}  // namespace fbp
