#pragma once

#include "mag3d/pyramid.hpp"
#include "mag3d/temporal_filter.hpp"
#include "mag3d/types.hpp"

namespace mag3d {

enum class LinearMode { Pixel, Laplacian };

// Eulerian linear magnification. Pixel mode runs amplify_band on every
// (pixel, channel) trajectory; Laplacian mode amplifies the trajectories of
// every pyramid level (bands and lowpass residual) and collapses. Color
// sequences are clamped to [0,1] afterwards, feature sequences never.
FrameSequence linear_magnify(const FrameSequence& seq, const BandpassSpec& spec,
                             LinearMode mode = LinearMode::Pixel,
                             int laplacian_levels = 0);

// Phase-based magnification on a complex steerable pyramid per frame.
// Per coefficient, the phase difference against frame 0 is computed as
// arg(coef_t * conj(coef_0)), temporally bandpassed, scaled by alpha and
// added back onto each frame's phase; amplitudes are untouched.
FrameSequence phase_magnify(const FrameSequence& seq, const BandpassSpec& spec,
                            const CspParams& pyr = {});

}  // namespace mag3d
