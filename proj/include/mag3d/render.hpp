#pragma once

#include <functional>

#include "mag3d/field.hpp"

namespace mag3d {

struct RayResult {
  Vector3d color;
  double opacity;
};

// Emission-absorption compositing weights for equally spaced samples:
// w_i = T_i (1 - exp(-sigma_i delta)), T_i = exp(-sum_{j<i} sigma_j delta).
VectorXd composite_weights(const VectorXd& sigma, double delta);

// Deterministic midpoint sample depths in [near, far].
VectorXd midpoint_depths(const RenderConfig& cfg);

// Any point field: fills rgb (3 x n) and sigma (n) for points (3 x n).
using PointFieldFn =
    std::function<void(const MatrixXd& points, MatrixXd& rgb, VectorXd& sigma)>;

RayResult render_ray(const PointFieldFn& fn, const Ray& ray, const RenderConfig& cfg);
Image render_image(const PointFieldFn& fn, const Camera& cam, const RenderConfig& cfg);

RayResult render_ray(const RadianceField& field, const Ray& ray);
Image render_image(const RadianceField& field, const Camera& cam);

// Batched projection-MLP forward used by rendering and training.
// embeds is (embed_dim x n); outputs rgb (3 x n) and sigma (n).
void mlp_forward_batch(const ProjectionMlp& mlp, const MatrixXd& embeds, MatrixXd& rgb,
                       VectorXd& sigma);

// Batched embedding of points (3 x n) -> (embed_dim x n).
MatrixXd embed_batch(const RadianceField& field, const MatrixXd& points);

PointFieldFn field_fn(const RadianceField& field);

}  // namespace mag3d
