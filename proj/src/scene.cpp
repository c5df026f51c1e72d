#include "mag3d/scene.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace mag3d {

namespace {
constexpr double kPi = std::numbers::pi;
}

Vector3d Primitive::center_at(double time, double factor) const {
  return center + factor * std::sin(2.0 * kPi * frequency * time + phase) * motion_amplitude;
}

void SceneSpec::validate() const {
  if (primitives.empty()) throw ParameterError("scene: no primitives");
  if (!(fps > 0) || !(duration > 0) || frame_count() < 1)
    throw ParameterError("scene: fps and duration must be positive");
  for (const Primitive& p : primitives) {
    if (!(p.size > 0) || !(p.density >= 0))
      throw ParameterError("scene: primitive size must be positive, density non-negative");
    if (p.frequency >= fps / 2.0)
      throw ParameterError("scene: motion frequency must stay below fps/2");
    if (p.motion_amplitude.norm() > 0.1 * p.size + 1e-12)
      throw ParameterError("scene: motion amplitude exceeds 0.1 of the primitive size");
  }
  for (double m : factors)
    if (m < 1.0) throw ParameterError("scene: magnification factors must be >= 1");
}

PointFieldFn scene_field(const SceneSpec& spec, double time, double factor) {
  std::vector<Vector3d> centers;
  for (const Primitive& p : spec.primitives) centers.push_back(p.center_at(time, factor));
  return [spec, centers](const MatrixXd& points, MatrixXd& rgb, VectorXd& sigma) {
    const int n = static_cast<int>(points.cols());
    rgb.resize(3, n);
    sigma.resize(n);
    for (int j = 0; j < n; ++j) {
      const Vector3d x = points.col(j);
      double total = 0.0;
      Vector3d color = Vector3d::Zero();
      for (size_t i = 0; i < spec.primitives.size(); ++i) {
        const Primitive& p = spec.primitives[i];
        const Vector3d d = x - centers[i];
        double s;
        if (p.shape == PrimitiveShape::Sphere) {
          s = p.density * std::exp(-d.squaredNorm() / (2.0 * p.size * p.size));
        } else {
          // Smooth box: superellipsoid falloff of the per-axis distances.
          double q = 0.0;
          for (int a = 0; a < 3; ++a) q += std::pow(std::abs(d(a)) / p.size, 8.0);
          s = p.density * std::exp(-0.5 * q);
        }
        total += s;
        color += s * p.color;
      }
      sigma(j) = total;
      rgb.col(j) = total > 1e-12 ? Vector3d(color / total) : Vector3d::Zero();
    }
  };
}

FrameSequence gen_scene(const SceneSpec& spec, const Camera& camera, double factor,
                        const RenderConfig& render) {
  spec.validate();
  if (factor < 1.0) throw ParameterError("gen_scene: factor must be >= 1");
  FrameSequence seq;
  seq.fps = spec.fps;
  seq.kind = SequenceKind::Color;
  const int t_count = spec.frame_count();
  seq.frames.reserve(t_count);
  for (int t = 0; t < t_count; ++t)
    seq.frames.push_back(render_image(scene_field(spec, t / spec.fps, factor), camera, render));
  return seq;
}

FrameSequence add_noise(const FrameSequence& seq, double variance, std::uint64_t seed) {
  if (variance < 0) throw ParameterError("add_noise: variance must be non-negative");
  if (variance == 0) return seq;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, std::sqrt(variance));
  FrameSequence out = seq;
  for (Image& frame : out.frames)
    for (ArrayXXd& ch : frame.channels) {
      for (Eigen::Index c = 0; c < ch.cols(); ++c)
        for (Eigen::Index r = 0; r < ch.rows(); ++r) ch(r, c) += n(rng);
      ch = ch.cwiseMax(0.0).cwiseMin(1.0);
    }
  return out;
}

}  // namespace mag3d
