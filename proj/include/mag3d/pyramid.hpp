#pragma once

#include "mag3d/types.hpp"

namespace mag3d {

// Frequency-domain masks for a complex steerable pyramid on an H x W grid.
// Radial parts are raised-cosine transitions over one octave; angular parts
// are cos^(D-1) lobes restricted to a half-plane, which makes the oriented
// subbands analytic (their local phase encodes translation).
//
// Reconstruction identity, checked by the tests at every frequency bin:
//   highpass^2 + lowpass^2 + sum_{l,o} [band(w)^2 + band(-w)^2] = 1
struct CspFilters {
  int h = 0, w = 0;
  int levels = 0;
  int orientations = 0;
  ArrayXXd highpass;                        // full-resolution mask
  ArrayXXd lowpass;                         // full-resolution mask
  std::vector<std::vector<ArrayXXd>> bands; // [level][orientation], full res
};

struct CspParams {
  int levels = 0;       // 0 -> floor(log2(min(H,W))) - 3
  int orientations = 4;
};

// Subband at level l is stored at the grid cropped by 2^l in the frequency
// domain; the lowpass residual is cropped by 2^levels.
struct SteerablePyramid {
  int h = 0, w = 0;
  int levels = 0;
  int orientations = 0;
  ArrayXXd highpass;                           // real, full resolution
  ArrayXXd lowpass;                            // real, coarsest resolution
  std::vector<std::vector<ArrayXXcd>> subbands;
};

CspFilters csp_filters(int h, int w, int levels, int orientations);

SteerablePyramid csp_build(const ArrayXXd& image, const CspFilters& filters);
ArrayXXd csp_collapse(const SteerablePyramid& pyr, const CspFilters& filters);

// Convenience single-shot variants (filters built internally).
SteerablePyramid csp_build(const ArrayXXd& image, const CspParams& params = {});
ArrayXXd csp_collapse(const SteerablePyramid& pyr);

int csp_default_levels(int h, int w);

ArrayXXd phase_of(const ArrayXXcd& subband);      // arg, in (-pi, pi]
ArrayXXd amplitude_of(const ArrayXXcd& subband);  // modulus

struct LaplacianPyramid {
  std::vector<ArrayXXd> bands;  // fine to coarse
  ArrayXXd lowpass;
};

// Standard reduce/expand pyramid with the 5-tap binomial kernel
// [1 4 6 4 1]/16; collapse reproduces the input exactly by construction.
LaplacianPyramid laplacian_build(const ArrayXXd& image, int levels);
ArrayXXd laplacian_collapse(const LaplacianPyramid& pyr);

}  // namespace mag3d
