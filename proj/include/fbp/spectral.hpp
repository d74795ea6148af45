#pragma once

#include <complex>
#include <vector>

#include "fbp/grid.hpp"

namespace fbp {

/// DFT of one real detector row, bins k = 0..P/2 at normalized frequencies
/// omega_k = k/P cycles/sample; the other half is implied by Hermitian
/// symmetry. Convention: forward unnormalized, inverse divides by P.
struct HalfSpectrum {
    int padded_len = 0;
    std::vector<std::complex<double>> bins;  // length P/2+1
};

/// Centered per-pixel frequency coordinates in cycles/sample; zero frequency
/// sits at (h/2, w/2) (floor for odd sizes).
struct FreqGrid2D {
    int h = 0;
    int w = 0;
    std::vector<double> fx;  // row-major, per pixel
    std::vector<double> fy;
};

bool is_power_of_two(int n);
int next_power_of_two(int n);

/// In-place iterative radix-2 FFT; length must be a power of two.
void fft_inplace(std::vector<std::complex<double>>& data, bool inverse);

/// Zero-pad each angle row to padded_len (power of two >= row length) and
/// transform.
std::vector<HalfSpectrum> rows_to_halfspectrum(const Grid& rows, int padded_len);

/// Inverse transform and truncate back to original_len samples. Asserts the
/// imaginary residue stays below 1e-4 of the real peak; a violation means a
/// non-Hermitian (complex) filter was applied somewhere.
Grid halfspectrum_to_rows(const std::vector<HalfSpectrum>& spectra,
                          int original_len);

/// Centered magnitude of the unpadded 2D DFT. Works for any size (radix-2
/// fast path, direct transform otherwise).
Grid dft2d_magnitude(const Grid& image);

/// Full complex 2D DFT in the unshifted (DC at [0][0]) layout.
void dft2d(const Grid& re_in, const Grid* im_in, Grid& re_out, Grid& im_out,
           bool inverse);

FreqGrid2D freq_grid(int height, int width);

/// Unshifted 1D DFT frequency of bin k for length n, in cycles/sample.
double dft_freq(int k, int n);

}  // namespace fbp
