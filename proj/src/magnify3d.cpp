#include "mag3d/magnify3d.hpp"

#include <cmath>

namespace mag3d {

namespace {

void clamp_color(Image& img) {
  for (auto& ch : img.channels) ch = ch.cwiseMax(0.0).cwiseMin(1.0);
}

MatrixXd net_forward_batch(const Mlp& net, const MatrixXd& x) {
  MatrixXd h = x;
  for (size_t i = 0; i < net.weights.size(); ++i) {
    h = (net.weights[i] * h).colwise() + net.biases[i];
    if (i + 1 < net.weights.size()) h = h.cwiseMax(0.0);
  }
  return h;
}

FrameSequence planes_to_video(const TimeVaryingField& tvf, int q) {
  const int t_count = tvf.timesteps();
  const int r = tvf.triplanes.front().res;
  const int c = tvf.triplanes.front().channels;
  FrameSequence seq;
  seq.fps = tvf.fps;
  seq.kind = SequenceKind::Feature;
  seq.frames.reserve(t_count);
  for (int t = 0; t < t_count; ++t) {
    Image img(r, r, c);
    const MatrixXd& plane = tvf.triplanes[t].planes[q];
    for (int ch = 0; ch < c; ++ch)
      for (int v = 0; v < r; ++v)
        for (int u = 0; u < r; ++u) img.channels[ch](v, u) = plane(ch, v * r + u);
    seq.frames.push_back(std::move(img));
  }
  return seq;
}

void video_to_planes(const FrameSequence& seq, TimeVaryingField& tvf, int q) {
  const int r = tvf.triplanes.front().res;
  const int c = tvf.triplanes.front().channels;
  for (int t = 0; t < tvf.timesteps(); ++t) {
    MatrixXd& plane = tvf.triplanes[t].planes[q];
    for (int ch = 0; ch < c; ++ch)
      for (int v = 0; v < r; ++v)
        for (int u = 0; u < r; ++u) plane(ch, v * r + u) = seq.frames[t].channels[ch](v, u);
  }
}

void require_triplane(const TimeVaryingField& tvf) {
  if (tvf.variant != EmbeddingVariant::TriPlane || tvf.triplanes.empty())
    throw StructureError("tri-plane magnification requires a tri-plane field");
  if (tvf.timesteps() < 4)
    throw ParameterError("tri-plane magnification needs at least 4 timesteps");
}

}  // namespace

FrameSequence magnify_shift_field(const TimeVaryingField& tvf,
                                  const MagnificationRequest& req, const Camera& camera) {
  if (req.strategy != Strategy::PositionShift && req.strategy != Strategy::EncodingShift)
    throw StructureError("magnify_shift_field: tri-plane strategy on a shift field");
  if (tvf.variant != EmbeddingVariant::PosEncShift || tvf.shift_nets.empty())
    throw StructureError("magnify_shift_field: field does not hold shift networks");
  const ShiftMode want = req.strategy == Strategy::PositionShift
                             ? ShiftMode::PositionShift
                             : ShiftMode::EncodingShift;
  for (const ShiftNetwork& net : tvf.shift_nets)
    if (net.mode != want)
      throw StructureError("magnify_shift_field: strategy does not match the shift mode");
  const int t_count = tvf.timesteps();
  if (t_count < 4)
    throw ParameterError("magnify_shift_field: need at least 4 timesteps for a bandpass");
  camera.validate();
  check_band(req.spec.f_lo, req.spec.f_hi, tvf.fps);

  const PosEncConfig& pe = tvf.posenc;
  const int dim = want == ShiftMode::PositionShift ? 3 : 3 * pe.k;
  const RenderConfig& rc = tvf.render;
  const VectorXd depths = midpoint_depths(rc);
  const double delta = (rc.far - rc.near) / rc.samples;
  const int n = rc.samples;
  const int m = camera.width * n;

  FrameSequence out;
  out.fps = tvf.fps;
  out.kind = SequenceKind::Color;
  out.frames.assign(t_count, Image(camera.height, camera.width, 3));

  MatrixXd points(3, m);
  MatrixXd rgb;
  VectorXd sigma;
  TimeSeries series;
  series.fps = tvf.fps;
  series.data.resize(t_count, static_cast<Eigen::Index>(m) * dim);
  for (int v = 0; v < camera.height; ++v) {
    for (int u = 0; u < camera.width; ++u) {
      const Ray ray = pixel_ray(camera, u, v);
      for (int i = 0; i < n; ++i) points.col(u * n + i) = ray.origin + depths(i) * ray.dir;
    }
    // Shift trajectories, one column per (sample point, output component).
    for (int t = 0; t < t_count; ++t) {
      const MatrixXd g = net_forward_batch(tvf.shift_nets[t].net, points);
      for (int j = 0; j < m; ++j)
        for (int d = 0; d < dim; ++d) series.data(t, static_cast<Eigen::Index>(j) * dim + d) = g(d, j);
    }
    const TimeSeries amplified = amplify_band(series, req.spec);
    for (int t = 0; t < t_count; ++t) {
      MatrixXd embeds(pe.dim(), m);
      for (int j = 0; j < m; ++j) {
        const Eigen::Index base = static_cast<Eigen::Index>(j) * dim;
        for (int k = 0; k < pe.k; ++k) {
          const double w = pe.omega(k);
          for (int a = 0; a < 3; ++a) {
            double arg;
            if (want == ShiftMode::PositionShift)
              arg = w * (points(a, j) + amplified.data(t, base + a));
            else
              arg = w * points(a, j) + amplified.data(t, base + 3 * k + a);
            embeds(3 * k + a, j) = std::sin(arg);
            embeds(3 * pe.k + 3 * k + a, j) = std::cos(arg);
          }
        }
      }
      mlp_forward_batch(tvf.mlp, embeds, rgb, sigma);
      Image& frame = out.frames[t];
      for (int u = 0; u < camera.width; ++u) {
        const VectorXd w = composite_weights(sigma.segment(u * n, n), delta);
        const Vector3d color =
            rgb.middleCols(u * n, n) * w + (1.0 - w.sum()) * rc.background;
        for (int c = 0; c < 3; ++c) frame.channels[c](v, u) = color(c);
      }
    }
  }
  for (Image& frame : out.frames) clamp_color(frame);
  return out;
}

TimeVaryingField magnify_triplane_linear(const TimeVaryingField& tvf,
                                         const BandpassSpec& spec) {
  require_triplane(tvf);
  TimeVaryingField out = tvf;
  for (int q = 0; q < 3; ++q) {
    FrameSequence video = planes_to_video(tvf, q);
    video = linear_magnify(video, spec, LinearMode::Pixel);
    video_to_planes(video, out, q);
  }
  return out;
}

TimeVaryingField magnify_triplane_phase(const TimeVaryingField& tvf,
                                        const BandpassSpec& spec, const CspParams& pyr) {
  require_triplane(tvf);
  TimeVaryingField out = tvf;
  for (int q = 0; q < 3; ++q) {
    FrameSequence video = planes_to_video(tvf, q);
    video = phase_magnify(video, spec, pyr);
    video_to_planes(video, out, q);
  }
  return out;
}

TimeVaryingField magnify_triplane(const TimeVaryingField& tvf,
                                  const MagnificationRequest& req) {
  if (req.strategy == Strategy::LinearTriPlane)
    return magnify_triplane_linear(tvf, req.spec);
  if (req.strategy == Strategy::PhaseTriPlane)
    return magnify_triplane_phase(tvf, req.spec, req.pyramid);
  throw StructureError("magnify_triplane: shift strategy on a tri-plane field");
}

FrameSequence render_magnified(const TimeVaryingField& tvf, const Camera& camera) {
  FrameSequence out;
  out.fps = tvf.fps;
  out.kind = SequenceKind::Color;
  out.frames.reserve(tvf.timesteps());
  for (int t = 0; t < tvf.timesteps(); ++t) {
    Image frame = render_image(tvf.at(t), camera);
    clamp_color(frame);
    out.frames.push_back(std::move(frame));
  }
  return out;
}

}  // namespace mag3d
