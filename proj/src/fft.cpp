#include "mag3d/fft.hpp"

#include <fftw3.h>

#include <mutex>

namespace mag3d::fft {
namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

MatrixXcd transform_cols(const MatrixXcd& x, int sign) {
  const int t = static_cast<int>(x.rows());
  const int d = static_cast<int>(x.cols());
  MatrixXcd out(t, d);
  if (t == 0 || d == 0) return out;
  MatrixXcd in = x;  // FFTW may clobber its input during planning
  auto* src = reinterpret_cast<fftw_complex*>(in.data());
  auto* dst = reinterpret_cast<fftw_complex*>(out.data());
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    int n = t;
    plan = fftw_plan_many_dft(1, &n, d, src, nullptr, 1, t, dst, nullptr, 1, t,
                              sign, FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
  if (sign == FFTW_BACKWARD) out /= static_cast<double>(t);
  return out;
}

ArrayXXcd transform_2d(const ArrayXXcd& x, int sign) {
  const int h = static_cast<int>(x.rows());
  const int w = static_cast<int>(x.cols());
  ArrayXXcd out(h, w);
  if (h == 0 || w == 0) return out;
  ArrayXXcd in = x;
  auto* src = reinterpret_cast<fftw_complex*>(in.data());
  auto* dst = reinterpret_cast<fftw_complex*>(out.data());
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    // Eigen arrays are column-major; swapping the dims gives FFTW the
    // row-major view of the same memory, and the 2D DFT is axis-symmetric.
    plan = fftw_plan_dft_2d(w, h, src, dst, sign, FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
  if (sign == FFTW_BACKWARD) out /= static_cast<double>(h) * w;
  return out;
}

}  // namespace

MatrixXcd fft_cols(const MatrixXcd& x) { return transform_cols(x, FFTW_FORWARD); }
MatrixXcd ifft_cols(const MatrixXcd& x) { return transform_cols(x, FFTW_BACKWARD); }
ArrayXXcd fft2(const ArrayXXcd& x) { return transform_2d(x, FFTW_FORWARD); }
ArrayXXcd ifft2(const ArrayXXcd& x) { return transform_2d(x, FFTW_BACKWARD); }

}  // namespace mag3d::fft
