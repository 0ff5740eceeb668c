#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dip/neural/model.hpp"
#include "dip/neural/train.hpp"
#include "dip/synth.hpp"

namespace dip::io {

// DIPD layout, little-endian:
//   "DIPD" | u16 version | u16 dtype (1 = f64) | u32 ndims | u64 dims[ndims]
//   | f64 payload[prod(dims)] (row-major)
//   | u32 class count | (u32 length, bytes) per class name
//   | u32 record count (= dims[0])
//   | per record: u64 id, i32 label, i32 state, f64 sampling rate, u64 segment start

inline constexpr std::uint16_t kDipdVersion = 1;
inline constexpr std::uint16_t kDipwVersion = 1;

struct RecordInfo {
  std::uint64_t id = 0;
  std::int32_t label = 0;
  std::int32_t state = 1;
  double sampling_rate_hz = 0.0;
  std::uint64_t segment_start = 0;

  friend bool operator==(const RecordInfo&, const RecordInfo&) = default;
};

struct DipdFile {
  std::vector<std::uint64_t> dims;  ///< dims[0] = record count
  std::vector<double> values;
  std::vector<std::string> class_names;
  std::vector<RecordInfo> records;

  friend bool operator==(const DipdFile&, const DipdFile&) = default;
};

std::string encode_dipd(const DipdFile& file);
/// Throws FormatError naming DIPD validation on bad magic, version, dtype,
/// truncation or inconsistent counts.
DipdFile decode_dipd(const std::string& bytes);

/// Records must share one channels x samples shape.
DipdFile from_dataset(const synth::Dataset& dataset);
synth::Dataset to_dataset(const DipdFile& file);

// ---------------------------------------------------------------------------
// DIPW: model spec, weights, batchnorm statistics, training config, seed.

struct ModelFile {
  nn::ModelSpec spec;
  /// Parameter tensors in Model::parameters() order, then Model::buffers().
  std::vector<nn::Tensor> tensors;
  nn::TrainConfig config;
  std::uint64_t seed = 0;
};

ModelFile capture(nn::Model& model, const nn::TrainConfig& config, std::uint64_t seed);
/// Rebuilds a model and copies the stored tensors in. Throws FormatError if
/// the tensor list does not match the model layout.
nn::Model restore(const ModelFile& file);

std::string encode_dipw(const ModelFile& file);
ModelFile decode_dipw(const std::string& bytes);

std::string read_file(const std::string& path);
/// Writes via a temporary file and rename. Throws NumericError on failure.
void write_file(const std::string& path, const std::string& bytes);

}  // namespace dip::io
