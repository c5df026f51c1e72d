#include "mag3d/render.hpp"

#include <cmath>

namespace mag3d {

VectorXd composite_weights(const VectorXd& sigma, double delta) {
  const int n = static_cast<int>(sigma.size());
  VectorXd w(n);
  double log_t = 0.0;  // log transmittance
  for (int i = 0; i < n; ++i) {
    const double absorb = sigma(i) * delta;
    w(i) = std::exp(log_t) * (-std::expm1(-absorb));
    log_t -= absorb;
  }
  return w;
}

VectorXd midpoint_depths(const RenderConfig& cfg) {
  if (cfg.samples < 1 || !(cfg.near < cfg.far))
    throw ParameterError("render: need near < far and samples >= 1");
  const double delta = (cfg.far - cfg.near) / cfg.samples;
  VectorXd depths(cfg.samples);
  for (int i = 0; i < cfg.samples; ++i) depths(i) = cfg.near + (i + 0.5) * delta;
  return depths;
}

RayResult render_ray(const PointFieldFn& fn, const Ray& ray, const RenderConfig& cfg) {
  const VectorXd depths = midpoint_depths(cfg);
  const double delta = (cfg.far - cfg.near) / cfg.samples;
  MatrixXd points(3, cfg.samples);
  for (int i = 0; i < cfg.samples; ++i) points.col(i) = ray.origin + depths(i) * ray.dir;
  MatrixXd rgb;
  VectorXd sigma;
  fn(points, rgb, sigma);
  const VectorXd w = composite_weights(sigma, delta);
  RayResult r;
  r.opacity = w.sum();
  r.color = rgb * w + (1.0 - r.opacity) * cfg.background;
  return r;
}

Image render_image(const PointFieldFn& fn, const Camera& cam, const RenderConfig& cfg) {
  cam.validate();
  const VectorXd depths = midpoint_depths(cfg);
  const double delta = (cfg.far - cfg.near) / cfg.samples;
  const int n = cfg.samples;
  Image img(cam.height, cam.width, 3);
  MatrixXd points(3, cam.width * n);
  MatrixXd rgb;
  VectorXd sigma;
  for (int v = 0; v < cam.height; ++v) {
    for (int u = 0; u < cam.width; ++u) {
      const Ray ray = pixel_ray(cam, u, v);
      for (int i = 0; i < n; ++i)
        points.col(u * n + i) = ray.origin + depths(i) * ray.dir;
    }
    fn(points, rgb, sigma);
    for (int u = 0; u < cam.width; ++u) {
      const VectorXd w = composite_weights(sigma.segment(u * n, n), delta);
      const Vector3d color =
          rgb.middleCols(u * n, n) * w + (1.0 - w.sum()) * cfg.background;
      for (int c = 0; c < 3; ++c) img.channels[c](v, u) = color(c);
    }
  }
  return img;
}

void mlp_forward_batch(const ProjectionMlp& mlp, const MatrixXd& embeds, MatrixXd& rgb,
                       VectorXd& sigma) {
  if (embeds.rows() != mlp.net.input_dim())
    throw StructureError("mlp_forward_batch: input dimension mismatch");
  MatrixXd h = embeds;
  const auto& net = mlp.net;
  for (size_t i = 0; i < net.weights.size(); ++i) {
    h = (net.weights[i] * h).colwise() + net.biases[i];
    if (i + 1 < net.weights.size()) h = h.cwiseMax(0.0);
  }
  const int n = static_cast<int>(embeds.cols());
  rgb.resize(3, n);
  sigma.resize(n);
  for (int j = 0; j < n; ++j) {
    for (int c = 0; c < 3; ++c) rgb(c, j) = 1.0 / (1.0 + std::exp(-h(c, j)));
    const double y = h(3, j);
    sigma(j) = y > 30.0 ? y : std::log1p(std::exp(y));
  }
}

MatrixXd embed_batch(const RadianceField& field, const MatrixXd& points) {
  const int n = static_cast<int>(points.cols());
  if (field.variant == EmbeddingVariant::TriPlane) {
    const TriPlane& tp = *field.plane;
    MatrixXd out(tp.dim(), n);
    for (int j = 0; j < n; ++j) {
      const Vector3d p = points.col(j);
      for (int q = 0; q < 3; ++q) {
        double a, b;
        triplane_coords(p, q, a, b);
        const BilinearTap tap = triplane_tap(a, b, tp.res);
        out.block(q * tp.channels, j, tp.channels, 1) =
            tap.w[0] * tp.planes[q].col(tap.idx[0]) +
            tap.w[1] * tp.planes[q].col(tap.idx[1]) +
            tap.w[2] * tp.planes[q].col(tap.idx[2]) +
            tap.w[3] * tp.planes[q].col(tap.idx[3]);
      }
    }
    return out;
  }

  const PosEncConfig& cfg = field.posenc;
  MatrixXd phases;  // 3K x n
  MatrixXd shifted = points;
  if (field.shift) {
    MatrixXd g = points;
    const Mlp& net = field.shift->net;
    for (size_t i = 0; i < net.weights.size(); ++i) {
      g = (net.weights[i] * g).colwise() + net.biases[i];
      if (i + 1 < net.weights.size()) g = g.cwiseMax(0.0);
    }
    if (field.shift->mode == ShiftMode::PositionShift)
      shifted += g;
    else
      phases = std::move(g);
  }
  MatrixXd out(cfg.dim(), n);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < cfg.k; ++k) {
      const double w = cfg.omega(k);
      for (int a = 0; a < 3; ++a) {
        const double phi = phases.size() ? phases(3 * k + a, j) : 0.0;
        const double arg = w * shifted(a, j) + phi;
        out(3 * k + a, j) = std::sin(arg);
        out(3 * cfg.k + 3 * k + a, j) = std::cos(arg);
      }
    }
  return out;
}

PointFieldFn field_fn(const RadianceField& field) {
  return [&field](const MatrixXd& points, MatrixXd& rgb, VectorXd& sigma) {
    MatrixXd embeds = embed_batch(field, points);
    if (field.mlp.use_dir)
      throw StructureError("batched rendering with a direction branch is not supported");
    mlp_forward_batch(field.mlp, embeds, rgb, sigma);
  };
}

RayResult render_ray(const RadianceField& field, const Ray& ray) {
  return render_ray(field_fn(field), ray, field.render);
}

Image render_image(const RadianceField& field, const Camera& cam) {
  return render_image(field_fn(field), cam, field.render);
}

}  // namespace mag3d
