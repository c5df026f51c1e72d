#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <random>

#include "mag3d/io.hpp"
#include "mag3d/metrics.hpp"
#include "mag3d/train.hpp"

using namespace mag3d;

namespace {

struct TrainOpts {
  TrainConfig cfg;
  std::string variant = "triplane";
  std::string shift_mode = "position";
  int log_every = 0;
};

void add_train_options(CLI::App* cmd, TrainOpts& o) {
  cmd->add_option("--steps", o.cfg.steps, "optimizer steps");
  cmd->add_option("--batch", o.cfg.batch, "rays per step");
  cmd->add_option("--lr-embed", o.cfg.lr_embedding, "embedding learning rate");
  cmd->add_option("--lr-mlp", o.cfg.lr_mlp, "network learning rate");
  cmd->add_option("--seed", o.cfg.seed, "random seed");
  cmd->add_option("--tv-weight", o.cfg.tv_weight, "tri-plane smoothness weight");
  cmd->add_option("--log-every", o.log_every, "log a record every N steps");
}

std::string frame_dir_name(int view, double factor) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "view%02d_factor%g", view, factor);
  return buf;
}

int run(int argc, char** argv) {
  CLI::App app{"3D motion magnification toolkit"};
  app.require_subcommand(1);

  // gen-scene
  auto* gen = app.add_subcommand("gen-scene", "render an analytic scene to frame dirs");
  std::string gen_spec, gen_out;
  double gen_factor = 0.0;
  gen->add_option("spec", gen_spec, "scene JSON")->required();
  gen->add_option("outdir", gen_out, "output directory")->required();
  gen->add_option("--factor", gen_factor, "single magnification factor (else spec factors)");
  double gen_noise = 0.0;
  std::uint64_t gen_noise_seed = 0;
  gen->add_option("--noise", gen_noise, "Gaussian noise variance");
  gen->add_option("--noise-seed", gen_noise_seed, "noise seed");

  // train
  auto* train = app.add_subcommand("train", "fit a static field to multi-view frames");
  std::string train_frames, train_cams, train_ckpt;
  TrainOpts train_opts;
  int train_timesteps = 1;
  RenderConfig train_render;
  train->add_option("frames", train_frames, "directory, one frame per view")->required();
  train->add_option("cameras", train_cams, "camera JSON")->required();
  train->add_option("ckpt", train_ckpt, "output checkpoint")->required();
  train->add_option("--variant", train_opts.variant, "triplane | posenc");
  train->add_option("--shift-mode", train_opts.shift_mode, "position | encoding");
  train->add_option("--timesteps", train_timesteps, "timesteps to replicate into");
  train->add_option("--samples", train_render.samples, "samples per ray");
  train->add_option("--near", train_render.near, "near plane");
  train->add_option("--far", train_render.far, "far plane");
  add_train_options(train, train_opts);

  // finetune
  auto* fine = app.add_subcommand("finetune", "fit one timestep's embedding");
  std::string fine_ckpt, fine_frames, fine_cams, fine_out;
  TrainOpts fine_opts;
  fine_opts.cfg.steps = 1000;
  int fine_t = 0;
  fine->add_option("ckpt", fine_ckpt, "input checkpoint")->required();
  fine->add_option("frames", fine_frames, "directory, one frame per view")->required();
  fine->add_option("--t", fine_t, "timestep index")->required();
  fine->add_option("--cameras", fine_cams, "camera JSON")->required();
  fine->add_option("--out", fine_out, "output checkpoint (default: overwrite input)");
  add_train_options(fine, fine_opts);

  // magnify-video
  auto* mv = app.add_subcommand("magnify-video", "2D magnification of a frame sequence");
  std::string mv_in, mv_out, mv_method = "linear", mv_mode = "pixel";
  BandpassSpec mv_spec;
  mv->add_option("in", mv_in, "input frame directory")->required();
  mv->add_option("out", mv_out, "output frame directory")->required();
  mv->add_option("--method", mv_method, "linear | phase")->required();
  mv->add_option("--flo", mv_spec.f_lo, "passband low edge, Hz")->required();
  mv->add_option("--fhi", mv_spec.f_hi, "passband high edge, Hz")->required();
  mv->add_option("--alpha", mv_spec.alpha, "amplification gain")->required();
  mv->add_option("--mode", mv_mode, "pixel | laplacian (linear method)");

  // magnify-field
  auto* mf = app.add_subcommand("magnify-field", "3D magnification of a trained field");
  std::string mf_ckpt, mf_out, mf_strategy, mf_camera;
  BandpassSpec mf_spec;
  mf->add_option("ckpt", mf_ckpt, "input checkpoint")->required();
  mf->add_option("out", mf_out, "output frame directory or checkpoint")->required();
  mf->add_option("--strategy", mf_strategy,
                 "posshift | encshift | linear-triplane | phase-triplane")
      ->required();
  mf->add_option("--flo", mf_spec.f_lo, "passband low edge, Hz")->required();
  mf->add_option("--fhi", mf_spec.f_hi, "passband high edge, Hz")->required();
  mf->add_option("--alpha", mf_spec.alpha, "amplification gain")->required();
  mf->add_option("--camera", mf_camera, "camera JSON to render frames from");

  // render
  auto* rd = app.add_subcommand("render", "render one timestep of a field");
  std::string rd_ckpt, rd_out, rd_camera;
  int rd_t = 0;
  rd->add_option("ckpt", rd_ckpt, "input checkpoint")->required();
  rd->add_option("out", rd_out, "output PNG")->required();
  rd->add_option("--camera", rd_camera, "camera JSON")->required();
  rd->add_option("--t", rd_t, "timestep index");

  // slice
  auto* sl = app.add_subcommand("slice", "space-time slice of a frame sequence");
  std::string sl_frames, sl_out;
  int sl_row = 0;
  sl->add_option("frames", sl_frames, "input frame directory")->required();
  sl->add_option("--row", sl_row, "pixel row to slice")->required();
  sl->add_option("out", sl_out, "output PNG")->required();

  // metrics
  auto* mt = app.add_subcommand("metrics", "compare two frame sequences");
  std::string mt_a, mt_b, mt_report;
  mt->add_option("a", mt_a, "frame directory")->required();
  mt->add_option("b", mt_b, "frame directory")->required();
  mt->add_option("--report", mt_report, "write a JSON report here");

  // grad-check
  auto* gc = app.add_subcommand("grad-check", "finite-difference gradient audit");
  std::string gc_ckpt, gc_camera;
  int gc_rays = 4;
  gc->add_option("ckpt", gc_ckpt, "input checkpoint")->required();
  gc->add_option("--camera", gc_camera, "camera JSON (default: built-in 8x8 view)");
  gc->add_option("--rays", gc_rays, "rays to audit");

  CLI11_PARSE(app, argc, argv);

  if (*gen) {
    RenderConfig rc;
    SceneSpec spec = read_scene_spec(gen_spec, &rc);
    spec.validate();
    if (spec.cameras.empty()) throw InputError("gen-scene: spec has no cameras");
    std::vector<double> factors = gen_factor > 0 ? std::vector<double>{gen_factor}
                                                 : spec.factors;
    std::filesystem::create_directories(gen_out);
    write_cameras(gen_out + "/cameras.json", spec.cameras);
    for (std::size_t v = 0; v < spec.cameras.size(); ++v)
      for (double m : factors) {
        FrameSequence seq = gen_scene(spec, spec.cameras[v], m, rc);
        if (gen_noise > 0) seq = add_noise(seq, gen_noise, gen_noise_seed);
        write_frames(gen_out + "/" + frame_dir_name(static_cast<int>(v), m), seq);
      }
    return 0;
  }

  if (*train) {
    const FrameSequence views = read_frames(train_frames, 30.0);
    const std::vector<Camera> cams = read_cameras(train_cams);
    if (views.t() != static_cast<int>(cams.size()))
      throw InputError("train: frame count must match camera count");
    train_opts.cfg.log_every = train_opts.log_every;
    train_opts.cfg.log = train_opts.log_every > 0 ? &std::cout : nullptr;
    const EmbeddingVariant variant = train_opts.variant == "posenc"
                                         ? EmbeddingVariant::PosEncShift
                                         : EmbeddingVariant::TriPlane;
    const ShiftMode mode = train_opts.shift_mode == "encoding" ? ShiftMode::EncodingShift
                                                               : ShiftMode::PositionShift;
    double psnr = 0.0;
    RadianceField field = train_static(views.frames, cams, variant, train_opts.cfg,
                                       train_render, mode, &psnr);
    save_checkpoint(train_ckpt, init_time_varying(field, train_timesteps, views.fps));
    std::cout << "train psnr " << psnr << "\n";
    return 0;
  }

  if (*fine) {
    Checkpoint ckpt = load_checkpoint(fine_ckpt);
    const FrameSequence views = read_frames(fine_frames, ckpt.field.fps);
    const std::vector<Camera> cams = read_cameras(fine_cams);
    if (views.t() != static_cast<int>(cams.size()))
      throw InputError("finetune: frame count must match camera count");
    fine_opts.cfg.log_every = fine_opts.log_every;
    fine_opts.cfg.log = fine_opts.log_every > 0 ? &std::cout : nullptr;
    const double loss = finetune_timestep(ckpt.field, fine_t, views.frames, cams,
                                          fine_opts.cfg);
    save_checkpoint(fine_out.empty() ? fine_ckpt : fine_out, ckpt.field,
                    ckpt.provenance ? &*ckpt.provenance : nullptr);
    std::cout << "finetune psnr " << loss_to_psnr(loss) << "\n";
    return 0;
  }

  if (*mv) {
    const FrameSequence seq = read_frames(mv_in);
    FrameSequence out;
    if (mv_method == "linear") {
      const LinearMode mode =
          mv_mode == "laplacian" ? LinearMode::Laplacian : LinearMode::Pixel;
      out = linear_magnify(seq, mv_spec, mode);
    } else if (mv_method == "phase") {
      out = phase_magnify(seq, mv_spec);
    } else {
      throw ParameterError("magnify-video: method must be linear or phase");
    }
    write_frames(mv_out, out);
    return 0;
  }

  if (*mf) {
    Checkpoint ckpt = load_checkpoint(mf_ckpt);
    MagnificationRequest req;
    req.strategy = strategy_from_name(mf_strategy);
    req.spec = mf_spec;
    const bool shift_strategy = req.strategy == Strategy::PositionShift ||
                                req.strategy == Strategy::EncodingShift;
    if (shift_strategy) {
      if (mf_camera.empty())
        throw ParameterError("magnify-field: shift strategies need --camera");
      write_frames(mf_out,
                   magnify_shift_field(ckpt.field, req, read_cameras(mf_camera).front()));
    } else {
      const TimeVaryingField magnified = magnify_triplane(ckpt.field, req);
      if (mf_camera.empty())
        save_checkpoint(mf_out, magnified, &req);
      else
        write_frames(mf_out, render_magnified(magnified, read_cameras(mf_camera).front()));
    }
    return 0;
  }

  if (*rd) {
    const Checkpoint ckpt = load_checkpoint(rd_ckpt);
    if (rd_t < 0 || rd_t >= ckpt.field.timesteps())
      throw ParameterError("render: timestep out of range");
    write_png(rd_out, render_image(ckpt.field.at(rd_t), read_cameras(rd_camera).front()));
    return 0;
  }

  if (*sl) {
    write_png(sl_out, xt_slice(read_frames(sl_frames), true, sl_row));
    return 0;
  }

  if (*mt) {
    const FrameSequence a = read_frames(mt_a);
    const FrameSequence b = read_frames(mt_b);
    const EvalReport rep = evaluate(a, b);
    nlohmann::json j{{"mean_ssim", rep.mean_ssim},
                     {"mean_psnr", rep.mean_psnr},
                     {"ssim_per_frame", rep.ssim_per_frame},
                     {"psnr_per_frame", rep.psnr_per_frame},
                     {"runtime_s", rep.runtime_s}};
    if (rep.displacement_amplitude_a.size() > 0) {
      j["displacement_amplitude_a"] = std::vector<double>(
          rep.displacement_amplitude_a.begin(), rep.displacement_amplitude_a.end());
      j["displacement_amplitude_b"] = std::vector<double>(
          rep.displacement_amplitude_b.begin(), rep.displacement_amplitude_b.end());
    }
    std::cout << "mean ssim " << rep.mean_ssim << " mean psnr " << rep.mean_psnr << "\n";
    if (!mt_report.empty()) {
      std::ofstream out(mt_report);
      out << j.dump(2) << "\n";
      if (!out) throw InputError("metrics: cannot write " + mt_report);
    }
    return 0;
  }

  if (*gc) {
    Checkpoint ckpt = load_checkpoint(gc_ckpt);
    Camera cam;
    if (gc_camera.empty()) {
      cam.fx = cam.fy = 8.0;
      cam.cx = cam.cy = 4.0;
      cam.width = cam.height = 8;
      cam.pose.leftCols<3>() = Eigen::Matrix3d::Identity();
    } else {
      cam = read_cameras(gc_camera).front();
    }
    std::vector<Ray> all = generate_rays(cam);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Ray> rays;
    MatrixXd targets(3, gc_rays);
    for (int i = 0; i < gc_rays; ++i) {
      rays.push_back(all[rng() % all.size()]);
      for (int c = 0; c < 3; ++c) targets(c, i) = u(rng);
    }
    RadianceField field = ckpt.field.at(0);
    const double err = gradient_check(field, rays, targets);
    std::cout << "max rel error " << err << "\n";
    if (!(err < 1e-4)) throw TrainingError("grad-check: gradient mismatch");
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ParameterError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const StructureError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const TrainingError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
