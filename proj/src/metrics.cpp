#include "mag3d/metrics.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "mag3d/fft.hpp"

namespace mag3d {

namespace {

constexpr int kWin = 11;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

Eigen::Matrix<double, kWin, 1> gaussian_window() {
  Eigen::Matrix<double, kWin, 1> g;
  for (int i = 0; i < kWin; ++i) {
    const double d = i - (kWin - 1) / 2.0;
    g(i) = std::exp(-d * d / (2.0 * 1.5 * 1.5));
  }
  return g / g.sum();
}

// Separable valid-region Gaussian filter: (h-10) x (w-10) output.
ArrayXXd blur_valid(const ArrayXXd& x) {
  static const auto g = gaussian_window();
  const Eigen::Index h = x.rows(), w = x.cols();
  ArrayXXd cols(h, w - kWin + 1);
  for (Eigen::Index j = 0; j + kWin <= w; ++j) {
    cols.col(j) = g(0) * x.col(j);
    for (int k = 1; k < kWin; ++k) cols.col(j) += g(k) * x.col(j + k);
  }
  ArrayXXd out(h - kWin + 1, w - kWin + 1);
  for (Eigen::Index i = 0; i + kWin <= h; ++i) {
    out.row(i) = g(0) * cols.row(i);
    for (int k = 1; k < kWin; ++k) out.row(i) += g(k) * cols.row(i + k);
  }
  return out;
}

void check_pair(const Image& a, const Image& b) {
  if (a.h() != b.h() || a.w() != b.w() || a.c() != b.c())
    throw ParameterError("metrics: image shapes differ");
  if (a.c() == 0) throw ParameterError("metrics: empty image");
}

}  // namespace

double ssim(const Image& a, const Image& b) {
  check_pair(a, b);
  if (a.h() < kWin || a.w() < kWin)
    throw ParameterError("ssim: images must be at least 11x11");
  double acc = 0.0;
  for (int c = 0; c < a.c(); ++c) {
    const ArrayXXd& x = a.channels[c];
    const ArrayXXd& y = b.channels[c];
    const ArrayXXd mx = blur_valid(x), my = blur_valid(y);
    const ArrayXXd sxx = blur_valid(x * x) - mx * mx;
    const ArrayXXd syy = blur_valid(y * y) - my * my;
    const ArrayXXd sxy = blur_valid(x * y) - mx * my;
    const ArrayXXd num = (2.0 * mx * my + kC1) * (2.0 * sxy + kC2);
    const ArrayXXd den = (mx * mx + my * my + kC1) * (sxx + syy + kC2);
    acc += (num / den).mean();
  }
  return acc / a.c();
}

double psnr(const Image& a, const Image& b) {
  check_pair(a, b);
  double mse = 0.0;
  for (int c = 0; c < a.c(); ++c) mse += (a.channels[c] - b.channels[c]).square().mean();
  mse /= a.c();
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return -10.0 * std::log10(mse);
}

DisplacementResult measure_displacement(const FrameSequence& seq, int reference, int x0,
                                        int y0, int w, int h) {
  if (seq.t() < 1) throw ParameterError("measure_displacement: empty sequence");
  if (reference < 0 || reference >= seq.t())
    throw ParameterError("measure_displacement: reference frame out of range");
  const Image& first = seq.frames.front();
  if (w < 0) w = first.w() - x0;
  if (h < 0) h = first.h() - y0;
  if (x0 < 0 || y0 < 0 || w < 2 || h < 2 || x0 + w > first.w() || y0 + h > first.h())
    throw ParameterError("measure_displacement: bad subregion");

  auto gray = [&](int t) {
    ArrayXXd g = ArrayXXd::Zero(h, w);
    for (const ArrayXXd& ch : seq.frames[t].channels) g += ch.block(y0, x0, h, w);
    return ArrayXXd(g / seq.frames[t].c());
  };

  DisplacementResult result;
  ArrayXXd ref = gray(reference);
  ref -= ref.mean();
  if (std::sqrt(ref.square().mean()) < 1e-6) result.confident = false;
  ArrayXXcd fa = fft::fft2(ref.cast<std::complex<double>>());

  auto wrap = [](int idx, int n) { return idx > n / 2 ? idx - n : idx; };
  auto parabolic = [](double m1, double p0, double p1) {
    const double den = m1 - 2.0 * p0 + p1;
    return std::abs(den) < 1e-12 ? 0.0 : 0.5 * (m1 - p1) / den;
  };

  for (int t = 0; t < seq.t(); ++t) {
    ArrayXXd cur = gray(t);
    cur -= cur.mean();
    const ArrayXXcd fb = fft::fft2(cur.cast<std::complex<double>>());
    // Energy-weighted correlation: flat or frame-fixed content (which only
    // carries leakage energy) cannot outvote the actual moving texture, which
    // whitened phase correlation does on narrowband images.
    const ArrayXXd corr = fft::ifft2(fb * fa.conjugate()).real();
    const double peak_val = corr.maxCoeff();
    if (peak_val < 1e-12) {
      result.confident = false;
      result.shifts.push_back(Eigen::Vector2d::Zero());
      continue;
    }
    // A periodic pattern produces equal-height peak lobes one period apart;
    // take the lobe nearest zero shift, then climb to its local maximum.
    int pi = 0, pj = 0;
    double best_dist = 1e18;
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j)
        if (corr(i, j) >= 0.95 * peak_val) {
          const double di = wrap(i, h), dj = wrap(j, w);
          const double dist = di * di + dj * dj;
          if (dist < best_dist) {
            best_dist = dist;
            pi = i;
            pj = j;
          }
        }
    const auto at = [&](int i, int j) {
      return corr(((i % h) + h) % h, ((j % w) + w) % w);
    };
    for (int step = 0; step < h + w; ++step) {
      int bi = pi, bj = pj;
      for (int di = -1; di <= 1; ++di)
        for (int dj = -1; dj <= 1; ++dj)
          if (at(pi + di, pj + dj) > at(bi, bj)) {
            bi = pi + di;
            bj = pj + dj;
          }
      if (bi == pi && bj == pj) break;
      pi = ((bi % h) + h) % h;
      pj = ((bj % w) + w) % w;
    }
    const double dy = wrap(pi, h) + parabolic(at(pi - 1, pj), at(pi, pj), at(pi + 1, pj));
    const double dx = wrap(pj, w) + parabolic(at(pi, pj - 1), at(pi, pj), at(pi, pj + 1));
    result.shifts.push_back(Eigen::Vector2d(dx, dy));
  }
  return result;
}

Image xt_slice(const FrameSequence& seq, bool row, int index) {
  if (seq.t() < 1) throw ParameterError("xt_slice: empty sequence");
  const Image& first = seq.frames.front();
  const int limit = row ? first.h() : first.w();
  if (index < 0 || index >= limit) throw ParameterError("xt_slice: line out of bounds");
  const int len = row ? first.w() : first.h();
  Image out(seq.t(), len, first.c());
  for (int t = 0; t < seq.t(); ++t)
    for (int c = 0; c < first.c(); ++c)
      for (int i = 0; i < len; ++i)
        out.channels[c](t, i) =
            row ? seq.frames[t].channels[c](index, i) : seq.frames[t].channels[c](i, index);
  return out;
}

VectorXd displacement_spectrum(const FrameSequence& seq) {
  const DisplacementResult d = measure_displacement(seq);
  const int t = seq.t();
  MatrixXcd series(t, 2);
  for (int i = 0; i < t; ++i) {
    series(i, 0) = d.shifts[i].x();
    series(i, 1) = d.shifts[i].y();
  }
  const MatrixXcd spec = fft::fft_cols(series);
  VectorXd amp(t / 2 + 1);
  for (int k = 0; k <= t / 2; ++k)
    amp(k) = 2.0 / t * std::hypot(std::abs(spec(k, 0)), std::abs(spec(k, 1)));
  return amp;
}

EvalReport evaluate(const FrameSequence& a, const FrameSequence& b) {
  if (a.t() != b.t() || a.t() < 1)
    throw ParameterError("evaluate: sequences must align and be non-empty");
  const auto start = std::chrono::steady_clock::now();
  EvalReport report;
  for (int t = 0; t < a.t(); ++t) {
    report.ssim_per_frame.push_back(ssim(a.frames[t], b.frames[t]));
    report.psnr_per_frame.push_back(psnr(a.frames[t], b.frames[t]));
    report.mean_ssim += report.ssim_per_frame.back();
    report.mean_psnr += report.psnr_per_frame.back();
  }
  report.mean_ssim /= a.t();
  report.mean_psnr /= a.t();
  if (a.t() >= 2) {
    report.displacement_amplitude_a = displacement_spectrum(a);
    report.displacement_amplitude_b = displacement_spectrum(b);
  }
  report.runtime_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace mag3d
