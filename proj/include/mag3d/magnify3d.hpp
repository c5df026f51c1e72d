#pragma once

#include "mag3d/magnify2d.hpp"
#include "mag3d/render.hpp"

namespace mag3d {

enum class Strategy { PositionShift, EncodingShift, LinearTriPlane, PhaseTriPlane };

struct MagnificationRequest {
  Strategy strategy = Strategy::LinearTriPlane;
  BandpassSpec spec;
  CspParams pyramid;  // phase strategy only
};

// Magnification in embedding space for the posenc variants: for every render
// sample point (rays and depths frozen across time) the shift-network
// trajectory [g(p,0)..g(p,T-1)] is temporally bandpassed and amplified, then
// applied per timestep as a position shift or as per-frequency phases before
// rendering. Frames are clamped to [0,1].
FrameSequence magnify_shift_field(const TimeVaryingField& tvf,
                                  const MagnificationRequest& req, const Camera& camera);

// Amplifies every (plane, channel, texel) trajectory of the tri-plane video
// via the linear 2D path; no clamping, MLP untouched.
TimeVaryingField magnify_triplane_linear(const TimeVaryingField& tvf,
                                         const BandpassSpec& spec);

// Phase-based magnification of each plane channel treated as a feature
// video; MLP untouched.
TimeVaryingField magnify_triplane_phase(const TimeVaryingField& tvf,
                                        const BandpassSpec& spec,
                                        const CspParams& pyr = CspParams());

// Dispatch over the two tri-plane strategies.
TimeVaryingField magnify_triplane(const TimeVaryingField& tvf,
                                  const MagnificationRequest& req);

// Renders every timestep of the field from one camera.
FrameSequence render_magnified(const TimeVaryingField& tvf, const Camera& camera);

}  // namespace mag3d
