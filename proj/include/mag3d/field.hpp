#pragma once

#include <array>
#include <cstdint>
#include <optional>

#include "mag3d/types.hpp"

namespace mag3d {

struct Camera {
  double fx = 0, fy = 0, cx = 0, cy = 0;
  int width = 0, height = 0;
  Eigen::Matrix<double, 3, 4> pose = Eigen::Matrix<double, 3, 4>::Zero();  // camera-to-world

  void validate() const;  // fx,fy > 0, rotation orthonormal
};

struct Ray {
  Vector3d origin;
  Vector3d dir;  // unit length
};

// Pinhole rays through pixel centers, row-major pixel order.
std::vector<Ray> generate_rays(const Camera& cam);
Ray pixel_ray(const Camera& cam, double u, double v);

// Positional encoding with per-frequency per-axis phases.
// omega_k = 2^(k-1) * pi for k = 1..K. Output layout (length 6K):
//   [sin(w_1 p_x + phi_1x), sin(w_1 p_y + phi_1y), sin(w_1 p_z + phi_1z),
//    ..., sin(w_K p_z + phi_Kz),  then the cos counterparts in the same order]
// Phases index as phi(3*(k-1) + axis). An empty phase vector means all zero.
struct PosEncConfig {
  int k = 6;
  double omega(int idx) const;  // idx in [0, k)
  int dim() const { return 6 * k; }
};

VectorXd posenc(const Vector3d& p, const PosEncConfig& cfg,
                const VectorXd& phases = VectorXd());

// Plain fully connected net: ReLU hidden layers, linear output.
struct Mlp {
  std::vector<MatrixXd> weights;  // weights[i] is (out x in)
  std::vector<VectorXd> biases;

  VectorXd forward(const VectorXd& x) const;
  int input_dim() const { return static_cast<int>(weights.front().cols()); }
  int output_dim() const { return static_cast<int>(weights.back().rows()); }
};

// Builds an MLP with the given layer sizes. Weights are Xavier-uniform from
// the seeded generator, biases zero. zero_last forces the output layer to
// zero so the net starts as the constant-zero function.
Mlp make_mlp(const std::vector<int>& sizes, std::uint64_t seed, bool zero_last = false);

enum class ShiftMode { PositionShift, EncodingShift };

// Per-timestep shift network g: 3 -> 32 -> 32 -> (3 or 3K).
struct ShiftNetwork {
  ShiftMode mode = ShiftMode::PositionShift;
  Mlp net;

  VectorXd eval(const Vector3d& p) const { return net.forward(p); }
};

ShiftNetwork make_shift_network(ShiftMode mode, const PosEncConfig& cfg,
                                std::uint64_t seed, int hidden = 32);

// PosEnc(p + g(p)) or PosEnc(p, phases = g(p)) depending on the mode.
VectorXd shift_embed(const Vector3d& p, const ShiftNetwork& g, const PosEncConfig& cfg);

// Converts a position shift into the equivalent per-frequency phases.
VectorXd shift_to_phases(const Vector3d& dp, const PosEncConfig& cfg);

// Three axis-aligned feature planes over [-1,1]^3. Each plane stores
// C x (R*R) features, column v*R+u; grid nodes span the domain edge to edge.
struct TriPlane {
  int res = 0;
  int channels = 0;
  std::array<MatrixXd, 3> planes;  // order XY, XZ, YZ

  int dim() const { return 3 * channels; }
};

TriPlane make_triplane(int res, int channels, double init_scale, std::uint64_t seed);

// Bilinear sample of each plane, concatenated XY | XZ | YZ. Out-of-domain
// points clamp to the boundary.
VectorXd triplane_embed(const Vector3d& p, const TriPlane& tp);

// Bilinear footprint of one plane lookup (used by the training backward pass).
struct BilinearTap {
  int idx[4];
  double w[4];
};
BilinearTap triplane_tap(double a, double b, int res);  // a,b in [-1,1]
void triplane_coords(const Vector3d& p, int plane, double& a, double& b);

// Embedding -> (rgb, sigma); sigmoid and softplus heads, hidden 2 x 64 ReLU.
// Direction input is ignored unless use_dir is set, in which case a K=2
// positional encoding of the direction is appended to the embedding.
struct ProjectionMlp {
  Mlp net;
  bool use_dir = false;

  int embed_dim() const { return net.input_dim() - (use_dir ? 12 : 0); }
};

struct PointSample {
  Vector3d rgb;
  double sigma;
};

PointSample mlp_forward(const ProjectionMlp& mlp, const VectorXd& embedding,
                        const Vector3d& dir = Vector3d::UnitZ());

ProjectionMlp make_projection_mlp(int embed_dim, std::uint64_t seed, bool use_dir = false,
                                  int hidden = 64);

struct RenderConfig {
  int samples = 32;
  double near = 1.5;
  double far = 3.5;
  Vector3d background = Vector3d::Ones();
};

enum class EmbeddingVariant { PosEncShift, TriPlane };

// Radiance field at one timestep. The PosEncShift variant may carry no
// shift network, in which case g == 0 (the static field).
struct RadianceField {
  EmbeddingVariant variant = EmbeddingVariant::TriPlane;
  PosEncConfig posenc;
  std::optional<ShiftNetwork> shift;
  std::optional<TriPlane> plane;
  ProjectionMlp mlp;
  RenderConfig render;

  VectorXd embed(const Vector3d& p) const;
  int embed_dim() const;
};

// Shared projection MLP, one embedding per timestep.
struct TimeVaryingField {
  EmbeddingVariant variant = EmbeddingVariant::TriPlane;
  PosEncConfig posenc;
  ProjectionMlp mlp;
  RenderConfig render;
  std::vector<ShiftNetwork> shift_nets;
  std::vector<TriPlane> triplanes;
  double fps = 30.0;

  int timesteps() const {
    return static_cast<int>(variant == EmbeddingVariant::TriPlane ? triplanes.size()
                                                                  : shift_nets.size());
  }
  RadianceField at(int t) const;
};

}  // namespace mag3d
