#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "mag3d/metrics.hpp"
#include "mag3d/scene.hpp"

using namespace mag3d;
constexpr double kPi = std::numbers::pi;

namespace {

Camera front_camera(int size, double focal, double z = 0.0) {
  Camera cam;
  cam.fx = cam.fy = focal;
  cam.cx = cam.cy = size / 2.0;
  cam.width = cam.height = size;
  cam.pose.leftCols<3>() = Eigen::Matrix3d::Identity();
  cam.pose.col(3) = Vector3d(0, 0, z);
  return cam;
}

SceneSpec one_sphere(double amplitude) {
  SceneSpec spec;
  Primitive p;
  p.center = Vector3d(0, 0, 2.0);
  p.size = 0.3;
  p.color = Vector3d(0.8, 0.3, 0.2);
  p.density = 40.0;
  p.motion_amplitude = Vector3d(amplitude, 0, 0);
  p.frequency = 4.0;
  spec.primitives.push_back(p);
  return spec;
}

RenderConfig scene_render() {
  RenderConfig rc;
  rc.samples = 32;
  rc.near = 1.5;
  rc.far = 2.5;
  return rc;
}

double frame_diff(const Image& a, const Image& b) {
  double worst = 0.0;
  for (int c = 0; c < a.c(); ++c)
    worst = std::max(worst, (a.channels[c] - b.channels[c]).abs().maxCoeff());
  return worst;
}

}  // namespace

TEST_CASE("gen_scene: zero amplitude gives identical frames; parity with direct render") {
  SceneSpec spec = one_sphere(0.0);
  Camera cam = front_camera(16, 16.0);
  FrameSequence seq = gen_scene(spec, cam, 1.0, scene_render());
  CHECK(seq.t() == 30);
  for (int t = 1; t < seq.t(); ++t) CHECK(frame_diff(seq.frames[t], seq.frames[0]) == 0.0);

  Image direct = render_image(scene_field(spec, 0.0, 1.0), cam, scene_render());
  CHECK(frame_diff(seq.frames[0], direct) == 0.0);
}

TEST_CASE("gen_scene: factors agree at t=0 with zero phase") {
  SceneSpec spec = one_sphere(0.02);
  Camera cam = front_camera(16, 16.0);
  Image a = gen_scene(spec, cam, 1.0, scene_render()).frames[0];
  Image b = gen_scene(spec, cam, 10.0, scene_render()).frames[0];
  CHECK(frame_diff(a, b) == 0.0);
}

TEST_CASE("gen_scene: image displacement scales with the factor") {
  // A compact sphere (image sigma ~6 px, fully contained at every factor)
  // keeps the correlation-based displacement estimate unbiased.
  SceneSpec spec = one_sphere(0.01);
  spec.primitives[0].size = 0.1;
  spec.primitives[0].density = 60.0;
  Camera cam = front_camera(64, 128.0);
  FrameSequence base = gen_scene(spec, cam, 1.0, scene_render());
  FrameSequence mag = gen_scene(spec, cam, 10.0, scene_render());
  const VectorXd amp1 = displacement_spectrum(base);
  const VectorXd amp10 = displacement_spectrum(mag);
  // 4 Hz on 30 frames at 30 fps is bin 4; projected amplitude fx*A/z.
  CHECK(amp1(4) == doctest::Approx(128.0 * 0.01 / 2.0).epsilon(0.05));
  const double ratio = amp10(4) / amp1(4);
  CHECK(ratio > 9.5);
  CHECK(ratio < 10.5);
}

TEST_CASE("scene validation") {
  SceneSpec spec = one_sphere(0.02);
  spec.primitives[0].frequency = 15.0;  // Nyquist at 30 fps
  CHECK_THROWS_AS(spec.validate(), ParameterError);
  spec = one_sphere(0.05);  // above 0.1 * size = 0.03
  CHECK_THROWS_AS(spec.validate(), ParameterError);
  spec = one_sphere(0.02);
  CHECK_THROWS_AS(gen_scene(spec, front_camera(8, 8.0), 0.5), ParameterError);
  spec.primitives.clear();
  CHECK_THROWS_AS(spec.validate(), ParameterError);
}

TEST_CASE("add_noise: identity, statistics, reproducibility") {
  FrameSequence seq;
  seq.fps = 30.0;
  Image gray(64, 64, 3);
  for (auto& ch : gray.channels) ch.setConstant(0.5);
  seq.frames.assign(2, gray);

  CHECK(frame_diff(add_noise(seq, 0.0, 1).frames[0], gray) == 0.0);

  const double var = 0.01;
  FrameSequence noisy = add_noise(seq, var, 7);
  double mean = 0.0, m2 = 0.0;
  int count = 0;
  for (const Image& f : noisy.frames)
    for (const ArrayXXd& ch : f.channels) {
      mean += (ch - 0.5).sum();
      m2 += (ch - 0.5).square().sum();
      count += static_cast<int>(ch.size());
    }
  mean /= count;
  const double sample_var = m2 / count - mean * mean;
  CHECK(sample_var == doctest::Approx(var).epsilon(0.10));

  FrameSequence again = add_noise(seq, var, 7);
  CHECK(frame_diff(noisy.frames[0], again.frames[0]) == 0.0);

  FrameSequence other = add_noise(seq, var, 8);
  double corr = 0.0;
  for (int c = 0; c < 3; ++c)
    corr += ((noisy.frames[0].channels[c] - 0.5) * (other.frames[0].channels[c] - 0.5)).mean();
  corr /= 3.0 * var;
  CHECK(std::abs(corr) < 0.05);
}

TEST_CASE("ssim: identity, constant-image closed form, symmetry, bounds") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Image a(16, 16, 3), b(16, 16, 3);
  for (int c = 0; c < 3; ++c)
    for (int j = 0; j < 16; ++j)
      for (int i = 0; i < 16; ++i) {
        a.channels[c](i, j) = u(rng);
        b.channels[c](i, j) = u(rng);
      }
  CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(ssim(a, b) == doctest::Approx(ssim(b, a)).epsilon(1e-12));
  CHECK(ssim(a, b) <= 1.0);

  Image ca(16, 16, 1), cb(16, 16, 1);
  ca.channels[0].setConstant(0.5);
  cb.channels[0].setConstant(0.6);
  const double c1 = 0.01 * 0.01;
  const double expect = (2 * 0.5 * 0.6 + c1) / (0.25 + 0.36 + c1);
  CHECK(ssim(ca, cb) == doctest::Approx(expect).epsilon(1e-12));

  Image small(8, 8, 1);
  CHECK_THROWS_AS(ssim(small, small), ParameterError);
  Image mismatched(16, 12, 3);
  CHECK_THROWS_AS(ssim(a, mismatched), ParameterError);
}

TEST_CASE("psnr: identity flag and known value") {
  Image a(8, 8, 1), b(8, 8, 1);
  a.channels[0].setConstant(0.5);
  b.channels[0].setConstant(0.5);
  CHECK(std::isinf(psnr(a, b)));
  b.channels[0].setConstant(0.6);  // mse = 0.01
  CHECK(psnr(a, b) == doctest::Approx(20.0).epsilon(1e-12));
}

TEST_CASE("measure_displacement: static, sub-pixel grating, integer shift, flat flag") {
  const int n = 32, cycles = 3;
  auto grating_frame = [&](double shift) {
    Image img(n, n, 1);
    for (int v = 0; v < n; ++v)
      for (int u = 0; u < n; ++u)
        img.channels[0](v, u) = 0.5 + 0.4 * std::sin(2 * kPi * cycles * (u - shift) / n);
    return img;
  };

  FrameSequence still;
  still.fps = 30.0;
  still.frames.assign(3, grating_frame(0.0));
  DisplacementResult r = measure_displacement(still);
  CHECK(r.confident);
  for (const auto& s : r.shifts) CHECK(s.norm() < 1e-9);

  FrameSequence moving;
  moving.fps = 30.0;
  moving.frames.push_back(grating_frame(0.0));
  moving.frames.push_back(grating_frame(0.25));
  moving.frames.push_back(grating_frame(3.0));
  r = measure_displacement(moving);
  CHECK(r.shifts[1].x() == doctest::Approx(0.25).epsilon(0.08));
  CHECK(std::abs(r.shifts[1].x() - 0.25) < 0.02);
  CHECK(std::abs(r.shifts[1].y()) < 0.02);
  CHECK(std::abs(r.shifts[2].x() - 3.0) < 0.02);

  FrameSequence flat;
  flat.fps = 30.0;
  Image f(n, n, 1);
  f.channels[0].setConstant(0.7);
  flat.frames.assign(2, f);
  CHECK_FALSE(measure_displacement(flat).confident);
}

TEST_CASE("xt_slice: pure view of one line across frames") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  FrameSequence seq;
  seq.fps = 30.0;
  for (int t = 0; t < 4; ++t) {
    Image img(6, 9, 2);
    for (int c = 0; c < 2; ++c)
      for (int j = 0; j < 9; ++j)
        for (int i = 0; i < 6; ++i) img.channels[c](i, j) = u(rng);
    seq.frames.push_back(img);
  }
  Image slice = xt_slice(seq, true, 2);
  CHECK(slice.h() == 4);
  CHECK(slice.w() == 9);
  for (int t = 0; t < 4; ++t)
    for (int c = 0; c < 2; ++c)
      for (int j = 0; j < 9; ++j)
        CHECK(slice.channels[c](t, j) == seq.frames[t].channels[c](2, j));

  Image col_slice = xt_slice(seq, false, 7);
  CHECK(col_slice.w() == 6);
  for (int t = 0; t < 4; ++t)
    CHECK(col_slice.channels[0](t, 3) == seq.frames[t].channels[0](3, 7));

  CHECK_THROWS_AS(xt_slice(seq, true, 6), ParameterError);

  FrameSequence single;
  single.fps = 30.0;
  single.frames.push_back(seq.frames[0]);
  Image one = xt_slice(single, true, 0);
  CHECK(one.h() == 1);

  // A static sequence slices to identical rows.
  FrameSequence still;
  still.fps = 30.0;
  still.frames.assign(3, seq.frames[0]);
  Image s = xt_slice(still, true, 1);
  for (int t = 1; t < 3; ++t)
    CHECK((s.channels[0].row(t) - s.channels[0].row(0)).abs().maxCoeff() == 0.0);
}

TEST_CASE("evaluate: report aggregates per-frame metrics") {
  SceneSpec spec = one_sphere(0.02);
  Camera cam = front_camera(16, 16.0);
  FrameSequence a = gen_scene(spec, cam, 1.0, scene_render());
  EvalReport rep = evaluate(a, a);
  CHECK(rep.mean_ssim == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::isinf(rep.mean_psnr));
  CHECK(static_cast<int>(rep.ssim_per_frame.size()) == a.t());
}
