#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace mag3d {

using Eigen::ArrayXXcd;
using Eigen::ArrayXXd;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::Vector3d;
using Eigen::VectorXd;

// Error taxonomy; the CLI maps these onto process exit codes.
struct ParameterError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;  // exit code 2
};
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;  // exit code 3
};
struct StructureError : std::runtime_error {
  using std::runtime_error::runtime_error;  // exit code 3
};
struct TrainingError : std::runtime_error {
  using std::runtime_error::runtime_error;  // exit code 4
};

// T x D real samples at a fixed rate. Rows are timesteps.
struct TimeSeries {
  MatrixXd data;
  double fps = 0.0;

  int t() const { return static_cast<int>(data.rows()); }
  int d() const { return static_cast<int>(data.cols()); }
};

struct BandpassSpec {
  double f_lo = 0.0;
  double f_hi = 0.0;
  double alpha = 0.0;
};

// H x W x C image stored as one array per channel.
struct Image {
  std::vector<ArrayXXd> channels;

  Image() = default;
  Image(int h, int w, int c) : channels(c, ArrayXXd::Zero(h, w)) {}

  int h() const { return channels.empty() ? 0 : static_cast<int>(channels[0].rows()); }
  int w() const { return channels.empty() ? 0 : static_cast<int>(channels[0].cols()); }
  int c() const { return static_cast<int>(channels.size()); }
};

enum class SequenceKind { Color, Feature };

struct FrameSequence {
  std::vector<Image> frames;
  double fps = 0.0;
  SequenceKind kind = SequenceKind::Color;

  int t() const { return static_cast<int>(frames.size()); }
};

}  // namespace mag3d
