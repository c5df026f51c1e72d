#pragma once

#include "mag3d/types.hpp"

namespace mag3d {

// Forward DFT along the time axis, one column per channel.
// spectrum(k, d) = sum_t data(t, d) * exp(-i 2 pi k t / T). Any T >= 1.
MatrixXcd dft_forward(const TimeSeries& series);

// Exact inverse of dft_forward. Asserts the imaginary residue stays below
// 1e-9 relative to the signal magnitude and discards it; a larger residue
// signals a corrupted (non conjugate-symmetric) spectrum.
TimeSeries dft_inverse(const MatrixXcd& spectrum, double fps);

// Keeps DFT bins whose frequency |k|*fps/T lies in [f_lo, f_hi], both edges
// inclusive, negative bins mirrored; everything else (including DC when
// f_lo > 0) is zeroed. Output is real.
TimeSeries ideal_bandpass(const TimeSeries& series, double f_lo, double f_hi);

// series + alpha * ideal_bandpass(series, f_lo, f_hi).
TimeSeries amplify_band(const TimeSeries& series, const BandpassSpec& spec);

// Validates 0 <= f_lo <= f_hi <= fps/2; throws ParameterError otherwise.
void check_band(double f_lo, double f_hi, double fps);

}  // namespace mag3d
