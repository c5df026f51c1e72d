#pragma once

// Independent brute-force oracles used by the test suites. These stay free
// of the library's FFT/filter code paths on purpose.

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "mag3d/types.hpp"

namespace oracle {

using mag3d::MatrixXcd;
using mag3d::MatrixXd;

// Direct O(T^2) summation DFT down each column.
inline MatrixXcd dft_brute(const MatrixXd& x) {
  const int t = static_cast<int>(x.rows());
  const int d = static_cast<int>(x.cols());
  MatrixXcd out = MatrixXcd::Zero(t, d);
  for (int k = 0; k < t; ++k)
    for (int n = 0; n < t; ++n) {
      const double ang = -2.0 * std::numbers::pi * k * n / t;
      const std::complex<double> w(std::cos(ang), std::sin(ang));
      for (int c = 0; c < d; ++c) out(k, c) += x(n, c) * w;
    }
  return out;
}

inline MatrixXd idft_brute(const MatrixXcd& spec) {
  const int t = static_cast<int>(spec.rows());
  const int d = static_cast<int>(spec.cols());
  MatrixXd out = MatrixXd::Zero(t, d);
  for (int n = 0; n < t; ++n)
    for (int k = 0; k < t; ++k) {
      const double ang = 2.0 * std::numbers::pi * k * n / t;
      const std::complex<double> w(std::cos(ang), std::sin(ang));
      for (int c = 0; c < d; ++c) out(n, c) += (spec(k, c) * w).real() / t;
    }
  return out;
}

// Brute-force ideal bandpass: DFT, zero bins outside [f_lo, f_hi], inverse.
inline MatrixXd bandpass_brute(const MatrixXd& x, double fps, double f_lo, double f_hi) {
  const int t = static_cast<int>(x.rows());
  MatrixXcd spec = dft_brute(x);
  for (int k = 0; k < t; ++k) {
    const double f = std::min(k, t - k) * fps / t;
    if (!(f >= f_lo && f <= f_hi)) spec.row(k).setZero();
  }
  return idft_brute(spec);
}

inline MatrixXd random_matrix(int rows, int cols, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  MatrixXd m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = u(rng);
  return m;
}

}  // namespace oracle
