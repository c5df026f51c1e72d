#pragma once

#include "mag3d/types.hpp"

namespace mag3d {

// Structural similarity: 11x11 Gaussian window (sigma 1.5), C1 = 0.01^2,
// C2 = 0.03^2, dynamic range 1, mean over channels and valid pixels.
// Requires equal shapes and at least 11x11 pixels.
double ssim(const Image& a, const Image& b);

// Peak signal-to-noise ratio in dB against range [0,1]; +infinity on an
// exact match.
double psnr(const Image& a, const Image& b);

// Per-frame sub-pixel translation of a rectangular subregion against a
// reference frame: mean-removed circular cross-correlation, nearest-to-zero
// peak lobe, parabolic sub-pixel fit. Accuracy about 0.02 px on synthetic
// translations. A near-flat region or a degenerate correlation peak clears
// the confident flag.
struct DisplacementResult {
  std::vector<Eigen::Vector2d> shifts;  // (dx, dy) per frame
  bool confident = true;
};

DisplacementResult measure_displacement(const FrameSequence& seq, int reference = 0,
                                        int x0 = 0, int y0 = 0, int w = -1, int h = -1);

// Stacks one pixel row (or column) across all frames into a T x len image.
Image xt_slice(const FrameSequence& seq, bool row, int index);

struct EvalReport {
  std::vector<double> ssim_per_frame;
  std::vector<double> psnr_per_frame;
  double mean_ssim = 0.0;
  double mean_psnr = 0.0;
  // Amplitude of the measured displacement per DFT frequency bin, for each
  // sequence (frequency k maps to k * fps / T Hz for k <= T/2).
  VectorXd displacement_amplitude_a;
  VectorXd displacement_amplitude_b;
  double runtime_s = 0.0;
};

EvalReport evaluate(const FrameSequence& a, const FrameSequence& b);

// Amplitude spectrum of the sequence's measured displacement (norm of the
// x/y DFT pair, scaled by 2/T), length floor(T/2)+1.
VectorXd displacement_spectrum(const FrameSequence& seq);

}  // namespace mag3d
