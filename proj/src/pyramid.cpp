#include "mag3d/pyramid.hpp"

#include <cmath>
#include <numbers>

#include "mag3d/fft.hpp"

namespace mag3d {
namespace {

constexpr double kPi = std::numbers::pi;

// Signed DFT frequency of bin i on an axis of size n, in radians/sample.
double bin_freq(int i, int n) {
  const int k = (i <= (n - 1) / 2) ? i : i - n;
  return 2.0 * kPi * k / n;
}

// Raised-cosine highpass transition over [a, 2a].
double hi_transition(double r, double a) {
  if (r <= a) return 0.0;
  if (r >= 2.0 * a) return 1.0;
  return std::cos(kPi / 2.0 * std::log2(2.0 * a / r));
}

double lo_transition(double r, double a) {
  if (r <= a) return 1.0;
  if (r >= 2.0 * a) return 0.0;
  return std::sin(kPi / 2.0 * std::log2(2.0 * a / r));
}

// Cropped spectrum size: smallest even size whose bins cover |w| <= pi/s.
int crop_size(int n, int s) {
  if (s == 1) return n;
  return std::min(n, 2 * ((n + 2 * s - 1) / (2 * s)));
}

// Centered frequency-domain crop. Keeps signed bins [-m/2, m/2-1] per axis
// and rescales so amplitudes survive the smaller inverse transform.
ArrayXXcd spectrum_crop(const ArrayXXcd& full, int mh, int mw) {
  const int h = static_cast<int>(full.rows());
  const int w = static_cast<int>(full.cols());
  ArrayXXcd out(mh, mw);
  const double scale = static_cast<double>(mh) * mw / (static_cast<double>(h) * w);
  for (int j = 0; j < mw; ++j) {
    const int kj = (j <= (mw - 1) / 2) ? j : j - mw;
    const int fj = (kj + w) % w;
    for (int i = 0; i < mh; ++i) {
      const int ki = (i <= (mh - 1) / 2) ? i : i - mh;
      const int fi = (ki + h) % h;
      out(i, j) = full(fi, fj) * scale;
    }
  }
  return out;
}

ArrayXXcd spectrum_uncrop(const ArrayXXcd& small, int h, int w) {
  const int mh = static_cast<int>(small.rows());
  const int mw = static_cast<int>(small.cols());
  ArrayXXcd out = ArrayXXcd::Zero(h, w);
  const double scale = static_cast<double>(h) * w / (static_cast<double>(mh) * mw);
  for (int j = 0; j < mw; ++j) {
    const int kj = (j <= (mw - 1) / 2) ? j : j - mw;
    const int fj = (kj + w) % w;
    for (int i = 0; i < mh; ++i) {
      const int ki = (i <= (mh - 1) / 2) ? i : i - mh;
      const int fi = (ki + h) % h;
      out(fi, fj) = small(i, j) * scale;
    }
  }
  return out;
}

void check_structure(const SteerablePyramid& p, const CspFilters& f) {
  if (p.h != f.h || p.w != f.w || p.levels != f.levels ||
      p.orientations != f.orientations ||
      p.subbands.size() != static_cast<size_t>(p.levels))
    throw StructureError("steerable pyramid does not match its filter bank");
  for (int l = 0; l < p.levels; ++l) {
    if (p.subbands[l].size() != static_cast<size_t>(p.orientations))
      throw StructureError("steerable pyramid missing orientation bands");
    const int mh = crop_size(p.h, 1 << l), mw = crop_size(p.w, 1 << l);
    for (const auto& sb : p.subbands[l])
      if (sb.rows() != mh || sb.cols() != mw)
        throw StructureError("steerable pyramid subband has wrong resolution");
  }
}

}  // namespace

int csp_default_levels(int h, int w) {
  const int m = std::min(h, w);
  int levels = static_cast<int>(std::floor(std::log2(static_cast<double>(m)))) - 3;
  return std::max(levels, 1);
}

CspFilters csp_filters(int h, int w, int levels, int orientations) {
  if (levels < 1 || orientations < 2)
    throw ParameterError("csp_filters: need levels >= 1 and orientations >= 2");
  if (std::min(h, w) < (1 << (levels + 2)))
    throw ParameterError("csp_filters: image too small for requested depth");

  CspFilters f;
  f.h = h;
  f.w = w;
  f.levels = levels;
  f.orientations = orientations;

  ArrayXXd radius(h, w), angle(h, w);
  for (int j = 0; j < w; ++j) {
    const double wx = bin_freq(j, w);
    for (int i = 0; i < h; ++i) {
      const double wy = bin_freq(i, h);
      radius(i, j) = std::hypot(wx, wy);
      angle(i, j) = std::atan2(wy, wx);
    }
  }

  f.highpass = radius.unaryExpr([](double r) { return hi_transition(r, kPi / 2.0); });
  ArrayXXd running_lo = radius.unaryExpr([](double r) { return lo_transition(r, kPi / 2.0); });

  // Normalizer making the squared angular lobes sum to one over the circle.
  const int d = orientations;
  double fact = 1.0, fact2 = 1.0;
  for (int i = 2; i <= d - 1; ++i) fact *= i;
  for (int i = 2; i <= 2 * (d - 1); ++i) fact2 *= i;
  const double alpha = std::pow(2.0, d - 1) * fact / std::sqrt(d * fact2);

  f.bands.resize(levels);
  for (int l = 0; l < levels; ++l) {
    const double a = kPi / (1 << (l + 2));
    ArrayXXd radial =
        running_lo * radius.unaryExpr([a](double r) { return hi_transition(r, a); });
    f.bands[l].resize(orientations);
    for (int o = 0; o < orientations; ++o) {
      const double theta_o = kPi * o / d;
      f.bands[l][o] = radial * angle.unaryExpr([&](double th) {
        const double c = std::cos(th - theta_o);
        return c > 0.0 ? alpha * std::pow(c, d - 1) : 0.0;
      });
    }
    running_lo *= radius.unaryExpr([a](double r) { return lo_transition(r, a); });
  }
  f.lowpass = running_lo;
  return f;
}

SteerablePyramid csp_build(const ArrayXXd& image, const CspFilters& filters) {
  if (image.rows() != filters.h || image.cols() != filters.w)
    throw ParameterError("csp_build: image size does not match filters");
  if (!image.isFinite().all()) throw InputError("csp_build: non-finite input");

  SteerablePyramid p;
  p.h = filters.h;
  p.w = filters.w;
  p.levels = filters.levels;
  p.orientations = filters.orientations;

  const ArrayXXcd spectrum = fft::fft2(image.cast<std::complex<double>>());
  p.highpass = fft::ifft2(spectrum * filters.highpass).real();

  p.subbands.resize(p.levels);
  for (int l = 0; l < p.levels; ++l) {
    const int mh = crop_size(p.h, 1 << l), mw = crop_size(p.w, 1 << l);
    p.subbands[l].reserve(p.orientations);
    for (int o = 0; o < p.orientations; ++o)
      p.subbands[l].push_back(
          fft::ifft2(spectrum_crop(spectrum * filters.bands[l][o], mh, mw)));
  }

  const int lh = crop_size(p.h, 1 << p.levels), lw = crop_size(p.w, 1 << p.levels);
  p.lowpass = fft::ifft2(spectrum_crop(spectrum * filters.lowpass, lh, lw)).real();
  return p;
}

ArrayXXd csp_collapse(const SteerablePyramid& pyr, const CspFilters& filters) {
  check_structure(pyr, filters);
  ArrayXXcd acc =
      fft::fft2(pyr.highpass.cast<std::complex<double>>()) * filters.highpass;
  for (int l = 0; l < pyr.levels; ++l)
    for (int o = 0; o < pyr.orientations; ++o)
      // Factor 2: the conjugate half-plane is restored by taking Re() below.
      acc += 2.0 * spectrum_uncrop(fft::fft2(pyr.subbands[l][o]), pyr.h, pyr.w) *
             filters.bands[l][o];
  acc += spectrum_uncrop(fft::fft2(pyr.lowpass.cast<std::complex<double>>()),
                         pyr.h, pyr.w) *
         filters.lowpass;
  return fft::ifft2(acc).real();
}

SteerablePyramid csp_build(const ArrayXXd& image, const CspParams& params) {
  const int h = static_cast<int>(image.rows()), w = static_cast<int>(image.cols());
  const int levels = params.levels > 0 ? params.levels : csp_default_levels(h, w);
  return csp_build(image, csp_filters(h, w, levels, params.orientations));
}

ArrayXXd csp_collapse(const SteerablePyramid& pyr) {
  return csp_collapse(pyr, csp_filters(pyr.h, pyr.w, pyr.levels, pyr.orientations));
}

ArrayXXd phase_of(const ArrayXXcd& subband) {
  return subband.unaryExpr([](std::complex<double> z) { return std::arg(z); }).real();
}

ArrayXXd amplitude_of(const ArrayXXcd& subband) { return subband.abs(); }

namespace {

const double kKernel[5] = {1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};

int reflect(int i, int n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * (n - 1) - i;
  }
  return i;
}

ArrayXXd blur(const ArrayXXd& x, double gain) {
  const int h = static_cast<int>(x.rows()), w = static_cast<int>(x.cols());
  ArrayXXd tmp(h, w), out(h, w);
  for (int j = 0; j < w; ++j)
    for (int i = 0; i < h; ++i) {
      double s = 0.0;
      for (int k = -2; k <= 2; ++k) s += kKernel[k + 2] * x(reflect(i + k, h), j);
      tmp(i, j) = s;
    }
  for (int j = 0; j < w; ++j)
    for (int i = 0; i < h; ++i) {
      double s = 0.0;
      for (int k = -2; k <= 2; ++k) s += kKernel[k + 2] * tmp(i, reflect(j + k, w));
      out(i, j) = gain * s;
    }
  return out;
}

ArrayXXd reduce(const ArrayXXd& x) {
  const ArrayXXd b = blur(x, 1.0);
  const int h = (static_cast<int>(x.rows()) + 1) / 2;
  const int w = (static_cast<int>(x.cols()) + 1) / 2;
  ArrayXXd out(h, w);
  for (int j = 0; j < w; ++j)
    for (int i = 0; i < h; ++i) out(i, j) = b(2 * i, 2 * j);
  return out;
}

ArrayXXd expand(const ArrayXXd& x, int th, int tw) {
  ArrayXXd up = ArrayXXd::Zero(th, tw);
  for (int j = 0; j < x.cols(); ++j)
    for (int i = 0; i < x.rows(); ++i)
      if (2 * i < th && 2 * j < tw) up(2 * i, 2 * j) = x(i, j);
  return blur(up, 4.0);
}

}  // namespace

LaplacianPyramid laplacian_build(const ArrayXXd& image, int levels) {
  if (levels < 1) throw ParameterError("laplacian_build: levels must be >= 1");
  {
    int m = static_cast<int>(std::min(image.rows(), image.cols()));
    for (int l = 0; l < levels; ++l) m = (m + 1) / 2;
    if (m < 4) throw ParameterError("laplacian_build: depth too large for image");
  }
  LaplacianPyramid p;
  ArrayXXd current = image;
  for (int l = 0; l < levels; ++l) {
    ArrayXXd next = reduce(current);
    p.bands.push_back(current - expand(next, static_cast<int>(current.rows()),
                                       static_cast<int>(current.cols())));
    current = std::move(next);
  }
  p.lowpass = std::move(current);
  return p;
}

ArrayXXd laplacian_collapse(const LaplacianPyramid& pyr) {
  if (pyr.bands.empty()) throw StructureError("laplacian_collapse: empty pyramid");
  ArrayXXd current = pyr.lowpass;
  for (int l = static_cast<int>(pyr.bands.size()) - 1; l >= 0; --l) {
    const auto& band = pyr.bands[l];
    current = band + expand(current, static_cast<int>(band.rows()),
                            static_cast<int>(band.cols()));
  }
  return current;
}

}  // namespace mag3d
