#include "mag3d/temporal_filter.hpp"

#include <cmath>

#include "mag3d/fft.hpp"

namespace mag3d {

void check_band(double f_lo, double f_hi, double fps) {
  if (!(f_lo >= 0.0 && f_lo <= f_hi && f_hi <= fps / 2.0 + 1e-12))
    throw ParameterError("invalid band [" + std::to_string(f_lo) + ", " +
                         std::to_string(f_hi) + "] for fps " + std::to_string(fps));
}

MatrixXcd dft_forward(const TimeSeries& series) {
  if (series.t() < 1) throw ParameterError("dft_forward: empty series");
  return fft::fft_cols(series.data.cast<std::complex<double>>());
}

TimeSeries dft_inverse(const MatrixXcd& spectrum, double fps) {
  MatrixXcd z = fft::ifft_cols(spectrum);
  const double mag = z.norm();
  const double residue = z.imag().norm();
  if (residue > 1e-9 * std::max(mag, 1.0))
    throw InputError("dft_inverse: imaginary residue " + std::to_string(residue) +
                     " exceeds tolerance; spectrum is not conjugate-symmetric");
  return TimeSeries{z.real(), fps};
}

TimeSeries ideal_bandpass(const TimeSeries& series, double f_lo, double f_hi) {
  check_band(f_lo, f_hi, series.fps);
  const int t = series.t();
  MatrixXcd spectrum = dft_forward(series);
  for (int k = 0; k < t; ++k) {
    const double f = std::min(k, t - k) * series.fps / t;
    const bool pass = f >= f_lo && f <= f_hi;
    if (!pass) spectrum.row(k).setZero();
  }
  // Zeroing is symmetric in k <-> T-k, so conjugate symmetry survives.
  return dft_inverse(spectrum, series.fps);
}

TimeSeries amplify_band(const TimeSeries& series, const BandpassSpec& spec) {
  TimeSeries band = ideal_bandpass(series, spec.f_lo, spec.f_hi);
  return TimeSeries{series.data + spec.alpha * band.data, series.fps};
}

}  // namespace mag3d
