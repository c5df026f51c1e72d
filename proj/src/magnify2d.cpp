#include "mag3d/magnify2d.hpp"

#include <cmath>

namespace mag3d {
namespace {

void check_sequence(const FrameSequence& seq) {
  if (seq.t() < 4) throw ParameterError("magnify: need at least 4 frames");
  const Image& first = seq.frames.front();
  for (const Image& f : seq.frames)
    if (f.h() != first.h() || f.w() != first.w() || f.c() != first.c())
      throw StructureError("magnify: frames differ in shape");
}

void clamp_colors(FrameSequence& seq) {
  if (seq.kind != SequenceKind::Color) return;
  for (Image& f : seq.frames)
    for (ArrayXXd& ch : f.channels) ch = ch.min(1.0).max(0.0);
}

// Trajectories of one channel as a T x (H*W) series.
TimeSeries channel_series(const FrameSequence& seq, int ch) {
  const int h = seq.frames[0].h(), w = seq.frames[0].w();
  TimeSeries s{MatrixXd(seq.t(), h * w), seq.fps};
  for (int t = 0; t < seq.t(); ++t)
    s.data.row(t) = Eigen::Map<const VectorXd>(seq.frames[t].channels[ch].data(), h * w);
  return s;
}

void write_channel(FrameSequence& seq, int ch, const MatrixXd& data) {
  const int h = seq.frames[0].h(), w = seq.frames[0].w();
  for (int t = 0; t < seq.t(); ++t)
    Eigen::Map<VectorXd>(seq.frames[t].channels[ch].data(), h * w) = data.row(t);
}

}  // namespace

FrameSequence linear_magnify(const FrameSequence& seq, const BandpassSpec& spec,
                             LinearMode mode, int laplacian_levels) {
  check_sequence(seq);
  check_band(spec.f_lo, spec.f_hi, seq.fps);
  FrameSequence out = seq;

  if (mode == LinearMode::Pixel) {
    for (int ch = 0; ch < seq.frames[0].c(); ++ch)
      write_channel(out, ch, amplify_band(channel_series(seq, ch), spec).data);
  } else {
    const int h = seq.frames[0].h(), w = seq.frames[0].w();
    const int levels =
        laplacian_levels > 0 ? laplacian_levels : csp_default_levels(h, w);
    for (int ch = 0; ch < seq.frames[0].c(); ++ch) {
      std::vector<LaplacianPyramid> pyrs(seq.t());
      for (int t = 0; t < seq.t(); ++t)
        pyrs[t] = laplacian_build(seq.frames[t].channels[ch], levels);
      auto amplify_plane = [&](auto get_plane) {
        ArrayXXd& first = get_plane(pyrs[0]);
        const int count = static_cast<int>(first.size());
        TimeSeries s{MatrixXd(seq.t(), count), seq.fps};
        for (int t = 0; t < seq.t(); ++t)
          s.data.row(t) = Eigen::Map<const VectorXd>(get_plane(pyrs[t]).data(), count);
        const MatrixXd amped = amplify_band(s, spec).data;
        for (int t = 0; t < seq.t(); ++t)
          Eigen::Map<VectorXd>(get_plane(pyrs[t]).data(), count) = amped.row(t);
      };
      for (int l = 0; l < levels; ++l)
        amplify_plane([l](LaplacianPyramid& p) -> ArrayXXd& { return p.bands[l]; });
      amplify_plane([](LaplacianPyramid& p) -> ArrayXXd& { return p.lowpass; });
      for (int t = 0; t < seq.t(); ++t)
        out.frames[t].channels[ch] = laplacian_collapse(pyrs[t]);
    }
  }
  clamp_colors(out);
  return out;
}

FrameSequence phase_magnify(const FrameSequence& seq, const BandpassSpec& spec,
                            const CspParams& pyr) {
  check_sequence(seq);
  check_band(spec.f_lo, spec.f_hi, seq.fps);
  const int h = seq.frames[0].h(), w = seq.frames[0].w();
  const int levels = pyr.levels > 0 ? pyr.levels : csp_default_levels(h, w);
  const CspFilters filters = csp_filters(h, w, levels, pyr.orientations);

  FrameSequence out = seq;
  for (int ch = 0; ch < seq.frames[0].c(); ++ch) {
    std::vector<SteerablePyramid> pyrs;
    pyrs.reserve(seq.t());
    for (int t = 0; t < seq.t(); ++t)
      pyrs.push_back(csp_build(seq.frames[t].channels[ch], filters));

    for (int l = 0; l < levels; ++l)
      for (int o = 0; o < pyr.orientations; ++o) {
        const ArrayXXcd& ref = pyrs[0].subbands[l][o];
        const int count = static_cast<int>(ref.size());
        TimeSeries dphi{MatrixXd(seq.t(), count), seq.fps};
        for (int t = 0; t < seq.t(); ++t) {
          const ArrayXXcd rel = pyrs[t].subbands[l][o] * ref.conjugate();
          for (int i = 0; i < count; ++i) dphi.data(t, i) = std::arg(rel(i));
        }
        const MatrixXd band = ideal_bandpass(dphi, spec.f_lo, spec.f_hi).data;
        for (int t = 0; t < seq.t(); ++t) {
          ArrayXXcd& sb = pyrs[t].subbands[l][o];
          for (int i = 0; i < count; ++i)
            sb(i) *= std::polar(1.0, spec.alpha * band(t, i));
        }
      }

    for (int t = 0; t < seq.t(); ++t)
      out.frames[t].channels[ch] = csp_collapse(pyrs[t], filters);
  }
  clamp_colors(out);
  return out;
}

}  // namespace mag3d
