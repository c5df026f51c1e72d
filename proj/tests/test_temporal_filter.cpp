#include <doctest.h>

#include <cmath>
#include <numbers>

#include "mag3d/temporal_filter.hpp"
#include "oracles.hpp"

using namespace mag3d;
constexpr double kPi = std::numbers::pi;

namespace {
TimeSeries sinusoid(int t, double fps, double freq, double amp = 1.0, double phase = 0.0) {
  TimeSeries s{MatrixXd(t, 1), fps};
  for (int i = 0; i < t; ++i) s.data(i, 0) = amp * std::sin(2.0 * kPi * freq * i / fps + phase);
  return s;
}
}  // namespace

TEST_CASE("dft_forward: unit impulse has flat spectrum") {
  TimeSeries s{MatrixXd::Zero(4, 1), 30.0};
  s.data(0, 0) = 1.0;
  MatrixXcd spec = dft_forward(s);
  for (int k = 0; k < 4; ++k) {
    CHECK(spec(k, 0).real() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(spec(k, 0).imag() == doctest::Approx(0.0).epsilon(1e-14));
  }
}

TEST_CASE("dft_forward: constant series is DC only") {
  const double c = 0.37;
  TimeSeries s{MatrixXd::Constant(8, 1, c), 30.0};
  MatrixXcd spec = dft_forward(s);
  CHECK(spec(0, 0).real() == doctest::Approx(8.0 * c).epsilon(1e-13));
  for (int k = 1; k < 8; ++k) CHECK(std::abs(spec(k, 0)) < 1e-12);
}

TEST_CASE("dft round trip on random T=30 series") {
  TimeSeries s{oracle::random_matrix(30, 5, 11), 30.0};
  TimeSeries back = dft_inverse(dft_forward(s), s.fps);
  CHECK((back.data - s.data).norm() / s.data.norm() < 1e-12);
}

TEST_CASE("dft_forward matches brute-force oracle") {
  TimeSeries s{oracle::random_matrix(17, 3, 7), 10.0};  // odd, non power of two
  MatrixXcd spec = dft_forward(s);
  MatrixXcd ref = oracle::dft_brute(s.data);
  CHECK((spec - ref).norm() / ref.norm() < 1e-12);
}

TEST_CASE("dft_inverse: zero spectrum gives zero series") {
  TimeSeries s = dft_inverse(MatrixXcd::Zero(6, 2), 30.0);
  CHECK(s.data.norm() == 0.0);
}

TEST_CASE("dft_inverse: conjugate pair at bin 1 gives cosine") {
  MatrixXcd spec = MatrixXcd::Zero(8, 1);
  spec(1, 0) = 4.0;  // T/2
  spec(7, 0) = 4.0;
  TimeSeries s = dft_inverse(spec, 8.0);
  for (int t = 0; t < 8; ++t)
    CHECK(s.data(t, 0) == doctest::Approx(std::cos(2.0 * kPi * t / 8.0)).epsilon(1e-12));
}

TEST_CASE("dft_inverse rejects non-symmetric spectra") {
  MatrixXcd spec = MatrixXcd::Zero(8, 1);
  spec(1, 0) = {0.0, 3.0};
  CHECK_THROWS_AS(dft_inverse(spec, 8.0), InputError);
}

TEST_CASE("ideal_bandpass: constant series with DC-excluding band vanishes") {
  TimeSeries s{MatrixXd::Constant(30, 2, 0.8), 30.0};
  TimeSeries out = ideal_bandpass(s, 3.0, 5.0);
  CHECK(out.data.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("ideal_bandpass: in-band sinusoid passes unchanged") {
  TimeSeries s = sinusoid(30, 30.0, 4.0);
  TimeSeries out = ideal_bandpass(s, 3.0, 5.0);
  CHECK((out.data - s.data).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("ideal_bandpass: only the in-band component survives a mixture") {
  TimeSeries s4 = sinusoid(30, 30.0, 4.0);
  TimeSeries s10 = sinusoid(30, 30.0, 10.0);
  TimeSeries s{s4.data + s10.data, 30.0};
  TimeSeries out = ideal_bandpass(s, 3.0, 5.0);
  CHECK((out.data - s4.data).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("ideal_bandpass matches brute-force oracle on random data") {
  TimeSeries s{oracle::random_matrix(30, 4, 99), 30.0};
  TimeSeries out = ideal_bandpass(s, 3.0, 5.0);
  MatrixXd ref = oracle::bandpass_brute(s.data, 30.0, 3.0, 5.0);
  CHECK((out.data - ref).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("ideal_bandpass rejects invalid bands") {
  TimeSeries s{MatrixXd::Zero(8, 1), 30.0};
  CHECK_THROWS_AS(ideal_bandpass(s, 5.0, 3.0), ParameterError);
  CHECK_THROWS_AS(ideal_bandpass(s, -1.0, 3.0), ParameterError);
  CHECK_THROWS_AS(ideal_bandpass(s, 3.0, 16.0), ParameterError);
}

TEST_CASE("amplify_band: alpha 0 is the identity") {
  TimeSeries s{oracle::random_matrix(30, 3, 21), 30.0};
  TimeSeries out = amplify_band(s, {3.0, 5.0, 0.0});
  CHECK((out.data - s.data).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("amplify_band: in-band sinusoid amplitude scales by 1+alpha") {
  TimeSeries s = sinusoid(30, 30.0, 4.0, 0.3, 0.7);
  TimeSeries out = amplify_band(s, {3.0, 5.0, 9.0});
  CHECK((out.data - 10.0 * s.data).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("amplify_band: out-of-band sinusoid unchanged") {
  TimeSeries s = sinusoid(30, 30.0, 10.0, 0.5);
  TimeSeries out = amplify_band(s, {3.0, 5.0, 50.0});
  CHECK((out.data - s.data).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("property: bandpass linearity") {
  TimeSeries x{oracle::random_matrix(24, 2, 1), 30.0};
  TimeSeries y{oracle::random_matrix(24, 2, 2), 30.0};
  const double a = 1.7, b = -0.6;
  TimeSeries mix{a * x.data + b * y.data, 30.0};
  MatrixXd lhs = ideal_bandpass(mix, 3.0, 5.0).data;
  MatrixXd rhs = a * ideal_bandpass(x, 3.0, 5.0).data + b * ideal_bandpass(y, 3.0, 5.0).data;
  CHECK((lhs - rhs).norm() / std::max(rhs.norm(), 1e-30) < 1e-10);
}

TEST_CASE("property: bandpass idempotence") {
  TimeSeries x{oracle::random_matrix(30, 3, 5), 30.0};
  TimeSeries once = ideal_bandpass(x, 3.0, 5.0);
  TimeSeries twice = ideal_bandpass(once, 3.0, 5.0);
  CHECK((twice.data - once.data).norm() / once.data.norm() < 1e-10);
}

TEST_CASE("property: Parseval") {
  TimeSeries x{oracle::random_matrix(30, 1, 77), 30.0};
  MatrixXcd spec = dft_forward(x);
  const double time_energy = x.data.squaredNorm();
  const double freq_energy = spec.squaredNorm() / x.t();
  CHECK(time_energy == doctest::Approx(freq_energy).epsilon(1e-10));
}
