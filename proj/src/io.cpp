#include "mag3d/io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <json.hpp>

namespace mag3d {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr char kMagic[4] = {'M', 'A', 'G', '3'};
constexpr std::uint32_t kVersion = 1;

void write_bytes(std::ostream& out, const void* p, std::size_t n) {
  out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

void read_bytes(std::istream& in, void* p, std::size_t n) {
  in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (!in) throw InputError("io: truncated file");
}

template <typename T>
void write_pod(std::ostream& out, T v) {
  write_bytes(out, &v, sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T v;
  read_bytes(in, &v, sizeof(T));
  return v;
}

void check_magic(std::istream& in, const std::string& what) {
  char m[4];
  read_bytes(in, m, 4);
  if (std::memcmp(m, kMagic, 4) != 0) throw InputError("io: bad magic in " + what);
  if (read_pod<std::uint32_t>(in) != kVersion)
    throw InputError("io: unsupported version in " + what);
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("io: cannot write " + path);
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("io: cannot read " + path);
  return in;
}

// Parameter blocks of a plain MLP: per layer, the weight matrix in storage
// order, then the bias.
std::vector<float> mlp_block(const Mlp& mlp) {
  std::vector<float> out;
  for (std::size_t l = 0; l < mlp.weights.size(); ++l) {
    const MatrixXd& w = mlp.weights[l];
    for (Eigen::Index i = 0; i < w.size(); ++i)
      out.push_back(static_cast<float>(w.data()[i]));
    const VectorXd& b = mlp.biases[l];
    for (Eigen::Index i = 0; i < b.size(); ++i)
      out.push_back(static_cast<float>(b(i)));
  }
  return out;
}

void fill_mlp(Mlp& mlp, const std::vector<float>& block) {
  std::size_t pos = 0;
  for (std::size_t l = 0; l < mlp.weights.size(); ++l) {
    MatrixXd& w = mlp.weights[l];
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = block.at(pos++);
    VectorXd& b = mlp.biases[l];
    for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = block.at(pos++);
  }
  if (pos != block.size()) throw InputError("io: parameter block size mismatch");
}

Mlp make_sized_mlp(const std::vector<int>& sizes) {
  if (sizes.size() < 2) throw InputError("io: mlp needs at least two layer sizes");
  Mlp mlp;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    mlp.weights.push_back(MatrixXd::Zero(sizes[l + 1], sizes[l]));
    mlp.biases.push_back(VectorXd::Zero(sizes[l + 1]));
  }
  return mlp;
}

std::vector<int> mlp_sizes(const Mlp& mlp) {
  std::vector<int> sizes{mlp.input_dim()};
  for (const MatrixXd& w : mlp.weights) sizes.push_back(static_cast<int>(w.rows()));
  return sizes;
}

std::vector<float> triplane_block(const TriPlane& tp) {
  std::vector<float> out;
  for (const MatrixXd& p : tp.planes)
    for (Eigen::Index i = 0; i < p.size(); ++i)
      out.push_back(static_cast<float>(p.data()[i]));
  return out;
}

void fill_triplane(TriPlane& tp, const std::vector<float>& block) {
  std::size_t pos = 0;
  for (MatrixXd& p : tp.planes)
    for (Eigen::Index i = 0; i < p.size(); ++i) p.data()[i] = block.at(pos++);
  if (pos != block.size()) throw InputError("io: tri-plane block size mismatch");
}

struct Section {
  std::string name;
  std::vector<char> payload;
};

void write_sections(std::ostream& out, const std::vector<Section>& sections) {
  write_bytes(out, kMagic, 4);
  write_pod<std::uint32_t>(out, kVersion);
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(sections.size()));
  for (const Section& s : sections) {
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(s.name.size()));
    write_bytes(out, s.name.data(), s.name.size());
    write_pod<std::uint64_t>(out, s.payload.size());
    write_bytes(out, s.payload.data(), s.payload.size());
  }
}

std::vector<Section> read_sections(std::istream& in, const std::string& what) {
  check_magic(in, what);
  const auto count = read_pod<std::uint32_t>(in);
  std::vector<Section> sections(count);
  for (Section& s : sections) {
    const auto name_len = read_pod<std::uint32_t>(in);
    s.name.resize(name_len);
    read_bytes(in, s.name.data(), name_len);
    const auto bytes = read_pod<std::uint64_t>(in);
    s.payload.resize(bytes);
    read_bytes(in, s.payload.data(), bytes);
  }
  return sections;
}

Section float_section(const std::string& name, const std::vector<float>& block) {
  Section s;
  s.name = name;
  s.payload.resize(block.size() * sizeof(float));
  std::memcpy(s.payload.data(), block.data(), s.payload.size());
  return s;
}

std::vector<float> as_floats(const Section& s) {
  if (s.payload.size() % sizeof(float) != 0)
    throw InputError("io: section " + s.name + " is not a float block");
  std::vector<float> out(s.payload.size() / sizeof(float));
  std::memcpy(out.data(), s.payload.data(), s.payload.size());
  return out;
}

json parse_json(const std::string& text, const std::string& what) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw InputError("io: invalid JSON in " + what);
  return j;
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("io: cannot read " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_json(text, path);
}

Vector3d vec3(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 3) throw InputError("io: " + what + " must be [x,y,z]");
  return Vector3d(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

json vec3_json(const Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

Camera camera_from_json(const json& j) {
  Camera cam;
  try {
    cam.fx = j.at("fx").get<double>();
    cam.fy = j.at("fy").get<double>();
    cam.cx = j.at("cx").get<double>();
    cam.cy = j.at("cy").get<double>();
    cam.width = j.at("width").get<int>();
    cam.height = j.at("height").get<int>();
    const json& pose = j.at("pose");
    if (!pose.is_array() || pose.size() != 3) throw InputError("io: pose must be 3x4");
    for (int r = 0; r < 3; ++r) {
      if (!pose[r].is_array() || pose[r].size() != 4)
        throw InputError("io: pose must be 3x4");
      for (int c = 0; c < 4; ++c) cam.pose(r, c) = pose[r][c].get<double>();
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("io: camera JSON: ") + e.what());
  }
  return cam;
}

json camera_to_json(const Camera& cam) {
  json pose = json::array();
  for (int r = 0; r < 3; ++r) {
    json row = json::array();
    for (int c = 0; c < 4; ++c) row.push_back(cam.pose(r, c));
    pose.push_back(row);
  }
  return json{{"fx", cam.fx},       {"fy", cam.fy},         {"cx", cam.cx},
              {"cy", cam.cy},       {"width", cam.width},   {"height", cam.height},
              {"pose", pose}};
}

std::string frame_name(int t, const char* ext) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%04d.%s", t, ext);
  return buf;
}

}  // namespace

void write_png(const std::string& path, const Image& img) {
  if (img.c() != 1 && img.c() != 3)
    throw ParameterError("write_png: image must have 1 or 3 channels");
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.w());
  image.height = static_cast<png_uint_32>(img.h());
  image.format = img.c() == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  std::vector<png_byte> buf(PNG_IMAGE_SIZE(image));
  const int c = img.c();
  for (int v = 0; v < img.h(); ++v)
    for (int u = 0; u < img.w(); ++u)
      for (int k = 0; k < c; ++k) {
        const double x = std::clamp(img.channels[k](v, u), 0.0, 1.0);
        buf[(static_cast<std::size_t>(v) * img.w() + u) * c + k] =
            static_cast<png_byte>(std::lround(x * 255.0));
      }
  if (!png_image_write_to_file(&image, path.c_str(), 0, buf.data(), 0, nullptr))
    throw InputError(std::string("write_png: ") + image.message);
}

Image read_png(const std::string& path) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str()))
    throw InputError(std::string("read_png: ") + image.message);
  const bool gray = PNG_IMAGE_PIXEL_CHANNELS(image.format) < 3;
  image.format = gray ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  std::vector<png_byte> buf(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr))
    throw InputError(std::string("read_png: ") + image.message);
  const int c = gray ? 1 : 3;
  Image img(static_cast<int>(image.height), static_cast<int>(image.width), c);
  for (int v = 0; v < img.h(); ++v)
    for (int u = 0; u < img.w(); ++u)
      for (int k = 0; k < c; ++k)
        img.channels[k](v, u) =
            buf[(static_cast<std::size_t>(v) * img.w() + u) * c + k] / 255.0;
  return img;
}

void write_tensor(const std::string& path, const Tensor& t) {
  std::size_t count = 1;
  for (std::uint64_t d : t.dims) count *= d;
  if (count != t.data.size()) throw ParameterError("write_tensor: dims/data mismatch");
  std::ofstream out = open_out(path);
  write_bytes(out, kMagic, 4);
  write_pod<std::uint32_t>(out, kVersion);
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(t.dims.size()));
  for (std::uint64_t d : t.dims) write_pod<std::uint64_t>(out, d);
  write_bytes(out, t.data.data(), t.data.size() * sizeof(float));
  if (!out) throw InputError("write_tensor: write failed for " + path);
}

Tensor read_tensor(const std::string& path) {
  std::ifstream in = open_in(path);
  check_magic(in, path);
  Tensor t;
  t.dims.resize(read_pod<std::uint32_t>(in));
  std::size_t count = 1;
  for (std::uint64_t& d : t.dims) {
    d = read_pod<std::uint64_t>(in);
    count *= d;
  }
  t.data.resize(count);
  read_bytes(in, t.data.data(), count * sizeof(float));
  return t;
}

void write_frames(const std::string& dir, const FrameSequence& seq) {
  if (seq.t() < 1) throw ParameterError("write_frames: empty sequence");
  fs::create_directories(dir);
  const bool color = seq.kind == SequenceKind::Color;
  for (int t = 0; t < seq.t(); ++t) {
    const Image& f = seq.frames[t];
    const std::string path = dir + "/" + frame_name(t, color ? "png" : "bin");
    if (color) {
      write_png(path, f);
    } else {
      Tensor tensor;
      tensor.dims = {static_cast<std::uint64_t>(f.c()), static_cast<std::uint64_t>(f.h()),
                     static_cast<std::uint64_t>(f.w())};
      for (int c = 0; c < f.c(); ++c)
        for (int v = 0; v < f.h(); ++v)
          for (int u = 0; u < f.w(); ++u)
            tensor.data.push_back(static_cast<float>(f.channels[c](v, u)));
      write_tensor(path, tensor);
    }
  }
  json meta{{"fps", seq.fps}, {"kind", color ? "color" : "feature"}, {"frames", seq.t()}};
  std::ofstream out(dir + "/meta.json");
  out << meta.dump(2) << "\n";
  if (!out) throw InputError("write_frames: cannot write meta.json in " + dir);
}

FrameSequence read_frames(const std::string& dir, double fps_fallback) {
  if (!fs::is_directory(dir)) throw InputError("read_frames: not a directory: " + dir);
  FrameSequence seq;
  seq.fps = fps_fallback;
  if (fs::exists(dir + "/meta.json")) {
    const json meta = load_json_file(dir + "/meta.json");
    seq.fps = meta.value("fps", fps_fallback);
    if (meta.value("kind", "color") == std::string("feature"))
      seq.kind = SequenceKind::Feature;
  }
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string ext = entry.path().extension().string();
    if (ext == ".png" || ext == ".bin") names.push_back(entry.path().string());
  }
  std::sort(names.begin(), names.end());
  if (names.empty()) throw InputError("read_frames: no frames in " + dir);
  for (const std::string& path : names) {
    if (path.size() > 4 && path.substr(path.size() - 4) == ".png") {
      seq.frames.push_back(read_png(path));
    } else {
      const Tensor t = read_tensor(path);
      if (t.dims.size() != 3) throw InputError("read_frames: frame tensor must be CxHxW");
      Image img(static_cast<int>(t.dims[1]), static_cast<int>(t.dims[2]),
                static_cast<int>(t.dims[0]));
      std::size_t pos = 0;
      for (int c = 0; c < img.c(); ++c)
        for (int v = 0; v < img.h(); ++v)
          for (int u = 0; u < img.w(); ++u) img.channels[c](v, u) = t.data[pos++];
      seq.frames.push_back(std::move(img));
      seq.kind = SequenceKind::Feature;
    }
  }
  if (seq.fps <= 0) throw InputError("read_frames: frame rate unknown for " + dir);
  return seq;
}

std::vector<Camera> read_cameras(const std::string& path) {
  const json j = load_json_file(path);
  std::vector<Camera> cams;
  if (j.contains("cameras")) {
    for (const json& c : j.at("cameras")) cams.push_back(camera_from_json(c));
  } else {
    cams.push_back(camera_from_json(j));
  }
  if (cams.empty()) throw InputError("io: no cameras in " + path);
  for (const Camera& c : cams) c.validate();
  return cams;
}

void write_cameras(const std::string& path, const std::vector<Camera>& cams) {
  json arr = json::array();
  for (const Camera& c : cams) arr.push_back(camera_to_json(c));
  std::ofstream out(path);
  out << json{{"cameras", arr}}.dump(2) << "\n";
  if (!out) throw InputError("io: cannot write " + path);
}

SceneSpec read_scene_spec(const std::string& path, RenderConfig* render) {
  const json j = load_json_file(path);
  SceneSpec spec;
  try {
    spec.duration = j.value("duration", 1.0);
    spec.fps = j.value("fps", 30.0);
    if (j.contains("factors"))
      spec.factors = j.at("factors").get<std::vector<double>>();
    for (const json& p : j.at("primitives")) {
      Primitive prim;
      const std::string shape = p.value("shape", "sphere");
      if (shape == "sphere")
        prim.shape = PrimitiveShape::Sphere;
      else if (shape == "box")
        prim.shape = PrimitiveShape::Box;
      else
        throw InputError("io: unknown primitive shape " + shape);
      prim.center = vec3(p.at("center"), "center");
      prim.size = p.value("size", prim.size);
      if (p.contains("color")) prim.color = vec3(p.at("color"), "color");
      prim.density = p.value("density", prim.density);
      if (p.contains("amplitude")) prim.motion_amplitude = vec3(p.at("amplitude"), "amplitude");
      prim.frequency = p.value("frequency", 0.0);
      prim.phase = p.value("phase", 0.0);
      spec.primitives.push_back(prim);
    }
    if (j.contains("cameras"))
      for (const json& c : j.at("cameras")) spec.cameras.push_back(camera_from_json(c));
    if (render && j.contains("render")) {
      const json& r = j.at("render");
      render->samples = r.value("samples", render->samples);
      render->near = r.value("near", render->near);
      render->far = r.value("far", render->far);
      if (r.contains("background")) render->background = vec3(r.at("background"), "background");
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("io: scene JSON: ") + e.what());
  }
  return spec;
}

std::string strategy_name(Strategy s) {
  switch (s) {
    case Strategy::PositionShift: return "posshift";
    case Strategy::EncodingShift: return "encshift";
    case Strategy::LinearTriPlane: return "linear-triplane";
    case Strategy::PhaseTriPlane: return "phase-triplane";
  }
  throw ParameterError("strategy_name: unknown strategy");
}

Strategy strategy_from_name(const std::string& name) {
  if (name == "posshift") return Strategy::PositionShift;
  if (name == "encshift") return Strategy::EncodingShift;
  if (name == "linear-triplane") return Strategy::LinearTriPlane;
  if (name == "phase-triplane") return Strategy::PhaseTriPlane;
  throw ParameterError("unknown strategy: " + name);
}

void save_checkpoint(const std::string& path, const TimeVaryingField& field,
                     const MagnificationRequest* provenance) {
  const bool triplane = field.variant == EmbeddingVariant::TriPlane;
  json config{{"variant", triplane ? "triplane" : "posenc"},
              {"posenc_k", field.posenc.k},
              {"use_dir", field.mlp.use_dir},
              {"mlp_sizes", mlp_sizes(field.mlp.net)},
              {"fps", field.fps},
              {"timesteps", field.timesteps()},
              {"render",
               {{"samples", field.render.samples},
                {"near", field.render.near},
                {"far", field.render.far},
                {"background", vec3_json(field.render.background)}}}};
  if (triplane) {
    if (field.triplanes.empty()) throw StructureError("save_checkpoint: no tri-planes");
    config["triplane_res"] = field.triplanes[0].res;
    config["triplane_channels"] = field.triplanes[0].channels;
  } else {
    if (field.shift_nets.empty()) throw StructureError("save_checkpoint: no shift networks");
    config["shift_mode"] =
        field.shift_nets[0].mode == ShiftMode::PositionShift ? "position" : "encoding";
    config["shift_sizes"] = mlp_sizes(field.shift_nets[0].net);
  }

  std::vector<Section> sections;
  const std::string config_text = config.dump();
  Section cfg{"config", std::vector<char>(config_text.begin(), config_text.end())};
  sections.push_back(std::move(cfg));
  sections.push_back(float_section("mlp", mlp_block(field.mlp.net)));
  for (int t = 0; t < field.timesteps(); ++t) {
    char name[32];
    std::snprintf(name, sizeof(name), "embed/%04d", t);
    sections.push_back(float_section(
        name, triplane ? triplane_block(field.triplanes[t])
                       : mlp_block(field.shift_nets[t].net)));
  }
  if (provenance) {
    json mag{{"strategy", strategy_name(provenance->strategy)},
             {"f_lo", provenance->spec.f_lo},
             {"f_hi", provenance->spec.f_hi},
             {"alpha", provenance->spec.alpha},
             {"levels", provenance->pyramid.levels},
             {"orientations", provenance->pyramid.orientations}};
    const std::string text = mag.dump();
    sections.push_back(Section{"magnified", std::vector<char>(text.begin(), text.end())});
  }
  std::ofstream out = open_out(path);
  write_sections(out, sections);
  if (!out) throw InputError("save_checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in = open_in(path);
  const std::vector<Section> sections = read_sections(in, path);
  auto find = [&](const std::string& name) -> const Section* {
    for (const Section& s : sections)
      if (s.name == name) return &s;
    return nullptr;
  };
  const Section* cfg_section = find("config");
  const Section* mlp_section = find("mlp");
  if (!cfg_section || !mlp_section)
    throw InputError("load_checkpoint: missing config or mlp section in " + path);
  const json config =
      parse_json(std::string(cfg_section->payload.begin(), cfg_section->payload.end()), path);

  Checkpoint ckpt;
  TimeVaryingField& field = ckpt.field;
  try {
    const std::string variant = config.at("variant").get<std::string>();
    if (variant == "triplane")
      field.variant = EmbeddingVariant::TriPlane;
    else if (variant == "posenc")
      field.variant = EmbeddingVariant::PosEncShift;
    else
      throw InputError("load_checkpoint: unknown variant " + variant);
    field.posenc.k = config.at("posenc_k").get<int>();
    field.fps = config.at("fps").get<double>();
    field.mlp.use_dir = config.at("use_dir").get<bool>();
    field.mlp.net = make_sized_mlp(config.at("mlp_sizes").get<std::vector<int>>());
    fill_mlp(field.mlp.net, as_floats(*mlp_section));
    const json& r = config.at("render");
    field.render.samples = r.at("samples").get<int>();
    field.render.near = r.at("near").get<double>();
    field.render.far = r.at("far").get<double>();
    field.render.background = vec3(r.at("background"), "background");

    const int timesteps = config.at("timesteps").get<int>();
    for (int t = 0; t < timesteps; ++t) {
      char name[32];
      std::snprintf(name, sizeof(name), "embed/%04d", t);
      const Section* s = find(name);
      if (!s) throw InputError(std::string("load_checkpoint: missing section ") + name);
      if (field.variant == EmbeddingVariant::TriPlane) {
        TriPlane tp;
        tp.res = config.at("triplane_res").get<int>();
        tp.channels = config.at("triplane_channels").get<int>();
        for (MatrixXd& p : tp.planes) p = MatrixXd::Zero(tp.channels, tp.res * tp.res);
        fill_triplane(tp, as_floats(*s));
        field.triplanes.push_back(std::move(tp));
      } else {
        ShiftNetwork net;
        net.mode = config.at("shift_mode").get<std::string>() == "encoding"
                       ? ShiftMode::EncodingShift
                       : ShiftMode::PositionShift;
        net.net = make_sized_mlp(config.at("shift_sizes").get<std::vector<int>>());
        fill_mlp(net.net, as_floats(*s));
        field.shift_nets.push_back(std::move(net));
      }
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("load_checkpoint: config: ") + e.what());
  }

  if (const Section* mag = find("magnified")) {
    const json m = parse_json(std::string(mag->payload.begin(), mag->payload.end()), path);
    MagnificationRequest req;
    try {
      req.strategy = strategy_from_name(m.at("strategy").get<std::string>());
      req.spec.f_lo = m.at("f_lo").get<double>();
      req.spec.f_hi = m.at("f_hi").get<double>();
      req.spec.alpha = m.at("alpha").get<double>();
      req.pyramid.levels = m.at("levels").get<int>();
      req.pyramid.orientations = m.at("orientations").get<int>();
    } catch (const json::exception& e) {
      throw InputError(std::string("load_checkpoint: magnified section: ") + e.what());
    }
    ckpt.provenance = req;
  }
  return ckpt;
}

}  // namespace mag3d
