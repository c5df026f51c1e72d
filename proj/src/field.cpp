#include "mag3d/field.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace mag3d {

namespace {
constexpr double kPi = std::numbers::pi;
}

void Camera::validate() const {
  if (!(fx > 0 && fy > 0) || width <= 0 || height <= 0)
    throw ParameterError("camera: invalid intrinsics");
  const Eigen::Matrix3d r = pose.leftCols<3>();
  if ((r.transpose() * r - Eigen::Matrix3d::Identity()).norm() >= 1e-6)
    throw ParameterError("camera: rotation part is not orthonormal");
}

Ray pixel_ray(const Camera& cam, double u, double v) {
  Vector3d d_cam((u + 0.5 - cam.cx) / cam.fx, (v + 0.5 - cam.cy) / cam.fy, 1.0);
  Vector3d d = cam.pose.leftCols<3>() * d_cam;
  return Ray{cam.pose.col(3), d.normalized()};
}

std::vector<Ray> generate_rays(const Camera& cam) {
  cam.validate();
  std::vector<Ray> rays;
  rays.reserve(static_cast<size_t>(cam.width) * cam.height);
  for (int v = 0; v < cam.height; ++v)
    for (int u = 0; u < cam.width; ++u) rays.push_back(pixel_ray(cam, u, v));
  return rays;
}

double PosEncConfig::omega(int idx) const { return std::ldexp(kPi, idx); }

VectorXd posenc(const Vector3d& p, const PosEncConfig& cfg, const VectorXd& phases) {
  if (phases.size() != 0 && phases.size() != 3 * cfg.k)
    throw StructureError("posenc: phase vector must have 3K entries");
  VectorXd out(6 * cfg.k);
  for (int k = 0; k < cfg.k; ++k) {
    const double w = cfg.omega(k);
    for (int a = 0; a < 3; ++a) {
      const double phi = phases.size() ? phases(3 * k + a) : 0.0;
      const double arg = w * p(a) + phi;
      out(3 * k + a) = std::sin(arg);
      out(3 * cfg.k + 3 * k + a) = std::cos(arg);
    }
  }
  return out;
}

VectorXd Mlp::forward(const VectorXd& x) const {
  if (x.size() != input_dim()) throw StructureError("mlp: input dimension mismatch");
  VectorXd h = x;
  for (size_t i = 0; i < weights.size(); ++i) {
    h = (weights[i] * h + biases[i]).eval();
    if (i + 1 < weights.size()) h = h.cwiseMax(0.0);
  }
  return h;
}

Mlp make_mlp(const std::vector<int>& sizes, std::uint64_t seed, bool zero_last) {
  if (sizes.size() < 2) throw ParameterError("make_mlp: need at least two layer sizes");
  std::mt19937_64 rng(seed);
  Mlp mlp;
  for (size_t i = 0; i + 1 < sizes.size(); ++i) {
    const int in = sizes[i], out = sizes[i + 1];
    const double bound = std::sqrt(6.0 / (in + out));
    std::uniform_real_distribution<double> u(-bound, bound);
    MatrixXd w(out, in);
    for (int c = 0; c < in; ++c)
      for (int r = 0; r < out; ++r) w(r, c) = u(rng);
    if (zero_last && i + 2 == sizes.size()) w.setZero();
    mlp.weights.push_back(std::move(w));
    mlp.biases.push_back(VectorXd::Zero(out));
  }
  return mlp;
}

ShiftNetwork make_shift_network(ShiftMode mode, const PosEncConfig& cfg,
                                std::uint64_t seed, int hidden) {
  const int out = mode == ShiftMode::PositionShift ? 3 : 3 * cfg.k;
  // Zero-initialized last layer: a fresh shift network is exactly g == 0.
  return ShiftNetwork{mode, make_mlp({3, hidden, hidden, out}, seed, true)};
}

VectorXd shift_to_phases(const Vector3d& dp, const PosEncConfig& cfg) {
  VectorXd phases(3 * cfg.k);
  for (int k = 0; k < cfg.k; ++k) phases.segment<3>(3 * k) = cfg.omega(k) * dp;
  return phases;
}

VectorXd shift_embed(const Vector3d& p, const ShiftNetwork& g, const PosEncConfig& cfg) {
  const VectorXd out = g.eval(p);
  if (g.mode == ShiftMode::PositionShift) {
    if (out.size() != 3) throw StructureError("shift_embed: PositionShift output must be R^3");
    return posenc(p + Vector3d(out), cfg);
  }
  if (out.size() != 3 * cfg.k)
    throw StructureError("shift_embed: EncodingShift output must be R^{3K}");
  return posenc(p, cfg, out);
}

TriPlane make_triplane(int res, int channels, double init_scale, std::uint64_t seed) {
  if (res < 2 || channels < 1) throw ParameterError("make_triplane: invalid shape");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, init_scale);
  TriPlane tp;
  tp.res = res;
  tp.channels = channels;
  for (auto& plane : tp.planes) {
    plane.resize(channels, res * res);
    for (Eigen::Index c = 0; c < plane.cols(); ++c)
      for (int r = 0; r < channels; ++r) plane(r, c) = n(rng);
  }
  return tp;
}

void triplane_coords(const Vector3d& p, int plane, double& a, double& b) {
  switch (plane) {
    case 0: a = p.x(); b = p.y(); break;  // XY
    case 1: a = p.x(); b = p.z(); break;  // XZ
    default: a = p.y(); b = p.z(); break; // YZ
  }
}

BilinearTap triplane_tap(double a, double b, int res) {
  auto to_grid = [res](double x) {
    double g = (x + 1.0) * 0.5 * (res - 1);
    return std::clamp(g, 0.0, static_cast<double>(res - 1));
  };
  const double ga = to_grid(a), gb = to_grid(b);
  const int ia = std::min(static_cast<int>(ga), res - 2);
  const int ib = std::min(static_cast<int>(gb), res - 2);
  const double fa = ga - ia, fb = gb - ib;
  BilinearTap tap;
  tap.idx[0] = ib * res + ia;
  tap.idx[1] = ib * res + ia + 1;
  tap.idx[2] = (ib + 1) * res + ia;
  tap.idx[3] = (ib + 1) * res + ia + 1;
  tap.w[0] = (1 - fa) * (1 - fb);
  tap.w[1] = fa * (1 - fb);
  tap.w[2] = (1 - fa) * fb;
  tap.w[3] = fa * fb;
  return tap;
}

VectorXd triplane_embed(const Vector3d& p, const TriPlane& tp) {
  VectorXd out(tp.dim());
  for (int q = 0; q < 3; ++q) {
    double a, b;
    triplane_coords(p, q, a, b);
    const BilinearTap tap = triplane_tap(a, b, tp.res);
    VectorXd f = VectorXd::Zero(tp.channels);
    for (int c = 0; c < 4; ++c) f += tap.w[c] * tp.planes[q].col(tap.idx[c]);
    out.segment(q * tp.channels, tp.channels) = f;
  }
  return out;
}

namespace {
double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }
}  // namespace

// Low-order (K=2) positional encoding of the view direction.
static VectorXd dir_encoding(const Vector3d& dir) {
  PosEncConfig cfg;
  cfg.k = 2;
  return posenc(dir, cfg);
}

PointSample mlp_forward(const ProjectionMlp& mlp, const VectorXd& embedding,
                        const Vector3d& dir) {
  VectorXd input;
  if (mlp.use_dir) {
    input.resize(embedding.size() + 12);
    input << embedding, dir_encoding(dir);
  } else {
    input = embedding;
  }
  const VectorXd y = mlp.net.forward(input);
  PointSample s;
  for (int i = 0; i < 3; ++i) s.rgb(i) = sigmoid(y(i));
  s.sigma = softplus(y(3));
  return s;
}

ProjectionMlp make_projection_mlp(int embed_dim, std::uint64_t seed, bool use_dir,
                                  int hidden) {
  ProjectionMlp mlp;
  mlp.use_dir = use_dir;
  mlp.net = make_mlp({embed_dim + (use_dir ? 12 : 0), hidden, hidden, 4}, seed);
  return mlp;
}

VectorXd RadianceField::embed(const Vector3d& p) const {
  if (variant == EmbeddingVariant::TriPlane) {
    if (!plane) throw StructureError("field: tri-plane variant without planes");
    return triplane_embed(p, *plane);
  }
  if (shift) return shift_embed(p, *shift, posenc);
  return mag3d::posenc(p, posenc);
}

int RadianceField::embed_dim() const {
  return variant == EmbeddingVariant::TriPlane ? plane->dim() : posenc.dim();
}

RadianceField TimeVaryingField::at(int t) const {
  if (t < 0 || t >= timesteps()) throw ParameterError("time-varying field: bad timestep");
  RadianceField f;
  f.variant = variant;
  f.posenc = posenc;
  f.mlp = mlp;
  f.render = render;
  if (variant == EmbeddingVariant::TriPlane)
    f.plane = triplanes[t];
  else
    f.shift = shift_nets[t];
  return f;
}

}  // namespace mag3d
