#pragma once

#include <iosfwd>
#include <random>

#include "mag3d/render.hpp"

namespace mag3d {

struct TrainConfig {
  int steps = 3000;
  int batch = 256;
  double lr_embedding = 1e-2;
  double lr_mlp = 5e-4;
  std::uint64_t seed = 0;
  double tv_weight = 0.0;           // tri-plane smoothness penalty, off by default
  bool warm_start_previous = true;  // finetune init from E_{t-1} instead of E_0
  bool jitter = true;               // stratified sample depths during training
  int log_every = 0;                // 0 disables the training log
  std::ostream* log = nullptr;      // line-delimited records (step, loss, psnr, wall)

  void validate() const;
};

struct MlpGrad {
  std::vector<MatrixXd> weights;
  std::vector<VectorXd> biases;
};

MlpGrad zero_like(const Mlp& mlp);

// Gradient accumulators aligned with a field's parameters.
struct GradientBuffer {
  MlpGrad mlp;
  std::array<MatrixXd, 3> planes;
  MlpGrad shift;
  bool has_planes = false;
  bool has_shift = false;

  void zero();
};

GradientBuffer make_gradient_buffer(const RadianceField& field);

// Loss = mean over rays of squared L2 color error. depths is (N x batch),
// one depth column per ray; segment length is (far - near) / N throughout.
// Gradients are written into grad (zeroed first). Throws TrainingError on a
// non-finite loss.
double loss_and_grad(const RadianceField& field, const std::vector<Ray>& rays,
                     const MatrixXd& targets, const MatrixXd& depths,
                     GradientBuffer& grad, double tv_weight = 0.0);

// Flattened view of one parameter tensor and its gradient.
struct ParamBlock {
  double* param;
  const double* grad;
  Eigen::Index size;
  double lr;
};

std::vector<ParamBlock> trainable_params(RadianceField& field, GradientBuffer& grad,
                                         bool include_mlp, bool include_embedding,
                                         const TrainConfig& cfg);

struct AdamState {
  std::vector<VectorXd> m, v;
  int t = 0;
};

// Adaptive-moment update, beta1=0.9, beta2=0.999, eps=1e-8, bias-corrected.
void adam_step(std::vector<ParamBlock>& blocks, AdamState& state);

// Sample depths for a batch: stratified jitter when rng is given, else the
// deterministic midpoints replicated per ray.
MatrixXd sample_depths(const RenderConfig& cfg, int batch, std::mt19937_64* rng);

// Flattens views into the ray/target layout of generate_rays (views then
// row-major pixels). Views must match their cameras' sizes.
void assemble_rays(const std::vector<Image>& views, const std::vector<Camera>& cameras,
                   std::vector<Ray>& rays, MatrixXd& targets);

// Core loop: minibatch MSE with the adaptive-moment optimizer. Returns the
// full-dataset loss at deterministic midpoint depths after the last step.
double train_field(RadianceField& field, const std::vector<Ray>& rays,
                   const MatrixXd& targets, const TrainConfig& cfg, bool train_mlp,
                   bool train_embedding);

// Trains a fresh field on static views. The tri-plane variant optimizes
// texels jointly with the MLP; the posenc variant carries a zero-initialized
// shift network and optimizes the MLP only. final_psnr, when given, receives
// the train-view PSNR implied by the final full-dataset loss.
RadianceField train_static(const std::vector<Image>& views,
                           const std::vector<Camera>& cameras, EmbeddingVariant variant,
                           const TrainConfig& cfg, const RenderConfig& render = RenderConfig(),
                           ShiftMode shift_mode = ShiftMode::PositionShift,
                           double* final_psnr = nullptr);

// Replicates the static embedding across T timesteps.
TimeVaryingField init_time_varying(const RadianceField& static_field, int timesteps,
                                   double fps);

// Optimizes the embedding of one timestep against that frame's views. The
// projection MLP is frozen. Initializes from E_{t-1} (or E_0 when
// warm_start_previous is off) before optimizing. Returns the final loss.
double finetune_timestep(TimeVaryingField& field, int t, const std::vector<Image>& views,
                         const std::vector<Camera>& cameras, const TrainConfig& cfg);

// Max relative error between analytic and central finite-difference
// gradients over every trainable parameter of the field.
double gradient_check(RadianceField& field, const std::vector<Ray>& rays,
                      const MatrixXd& targets, double h = 1e-4, double tv_weight = 0.0);

double loss_to_psnr(double loss);

}  // namespace mag3d
