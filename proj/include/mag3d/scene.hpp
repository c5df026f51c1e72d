#pragma once

#include <cstdint>

#include "mag3d/render.hpp"

namespace mag3d {

enum class PrimitiveShape { Sphere, Box };

// Soft analytic primitive: Gaussian density falloff around a sphere surface
// or a smooth box. Center oscillates as c(t) = c0 + m * A * sin(2 pi f t + phase).
struct Primitive {
  PrimitiveShape shape = PrimitiveShape::Sphere;
  Vector3d center = Vector3d::Zero();
  double size = 0.3;  // radius (sphere) or half-extent (box)
  Vector3d color = Vector3d(0.5, 0.5, 0.5);
  double density = 40.0;
  Vector3d motion_amplitude = Vector3d::Zero();  // scene units
  double frequency = 0.0;                        // Hz
  double phase = 0.0;                            // radians

  Vector3d center_at(double time, double factor) const;
};

struct SceneSpec {
  std::vector<Primitive> primitives;
  double duration = 1.0;
  double fps = 30.0;
  std::vector<Camera> cameras;
  std::vector<double> factors = {1.0};

  int frame_count() const { return static_cast<int>(duration * fps + 0.5); }
  // Frequencies below fps/2, amplitudes at most 0.1 * size.
  void validate() const;
};

// Analytic density/color field of the scene frozen at one instant; rendering
// it goes through the same quadrature as trained fields.
PointFieldFn scene_field(const SceneSpec& spec, double time, double factor);

// Renders the scene from one camera with primitive displacements scaled by
// the magnification factor; factor 1 is the observation sequence.
FrameSequence gen_scene(const SceneSpec& spec, const Camera& camera, double factor,
                        const RenderConfig& render = RenderConfig());

// Per pixel-channel i.i.d. Gaussian noise with the given variance, clamped
// to [0,1]; seeded and reproducible.
FrameSequence add_noise(const FrameSequence& seq, double variance, std::uint64_t seed);

}  // namespace mag3d
