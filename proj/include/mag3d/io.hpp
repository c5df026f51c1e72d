#pragma once

#include <cstdint>
#include <string>

#include "mag3d/magnify3d.hpp"
#include "mag3d/scene.hpp"

namespace mag3d {

// 8-bit PNG, values treated as linear in [0,1] (clamped on write).
// One-channel images round-trip as grayscale, three-channel as RGB.
void write_png(const std::string& path, const Image& img);
Image read_png(const std::string& path);

// Raw tensor file: magic "MAG3", u32 version, u32 ndims, u64 dims[],
// little-endian f32 payload in row-major order.
struct Tensor {
  std::vector<std::uint64_t> dims;
  std::vector<float> data;
};

void write_tensor(const std::string& path, const Tensor& t);
Tensor read_tensor(const std::string& path);

// Frame directory: meta.json (fps, kind) plus zero-padded frame files,
// frame_0000.png for color sequences or frame_0000.bin ([C,H,W] tensors)
// for feature sequences.
void write_frames(const std::string& dir, const FrameSequence& seq);
FrameSequence read_frames(const std::string& dir, double fps_fallback = 0.0);

// Camera JSON: {"cameras": [{fx, fy, cx, cy, width, height, pose: 3x4}]}.
// A file holding a single camera object is also accepted.
std::vector<Camera> read_cameras(const std::string& path);
void write_cameras(const std::string& path, const std::vector<Camera>& cams);

// Scene JSON: primitives, duration, fps, factors, cameras, optional render
// settings (filled into *render when given).
SceneSpec read_scene_spec(const std::string& path, RenderConfig* render = nullptr);

// Field checkpoint container: magic "MAG3", u32 version, u32 section count,
// then named sections (u32 name length, name, u64 byte length, payload).
// Parameter payloads are little-endian f32 blocks; a "magnified" section
// records the request a magnified field was produced with.
struct Checkpoint {
  TimeVaryingField field;
  std::optional<MagnificationRequest> provenance;
};

void save_checkpoint(const std::string& path, const TimeVaryingField& field,
                     const MagnificationRequest* provenance = nullptr);
Checkpoint load_checkpoint(const std::string& path);

std::string strategy_name(Strategy s);
Strategy strategy_from_name(const std::string& name);

}  // namespace mag3d
