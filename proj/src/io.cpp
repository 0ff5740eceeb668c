#include "dip/io.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "dip/error.hpp"

namespace dip::io {

namespace {

class Writer {
 public:
  template <typename T>
  void uint(T v) {
    using U = std::make_unsigned_t<T>;
    auto u = static_cast<U>(v);
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      out_.push_back(static_cast<char>(u & 0xFF));
      if constexpr (sizeof(T) > 1) u = static_cast<U>(u >> 8);
    }
  }
  void f64(double v) { uint(std::bit_cast<std::uint64_t>(v)); }
  void bytes(const std::string& s) { out_ += s; }
  void str(const std::string& s) {
    uint(static_cast<std::uint32_t>(s.size()));
    out_ += s;
  }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  Reader(const std::string& data, const char* format) : data_(data), format_(format) {}

  template <typename T>
  T uint() {
    need(sizeof(T));
    std::make_unsigned_t<T> u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      u |= static_cast<std::make_unsigned_t<T>>(
          static_cast<std::make_unsigned_t<T>>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i));
    }
    pos_ += sizeof(T);
    return static_cast<T>(u);
  }
  double f64() { return std::bit_cast<double>(uint<std::uint64_t>()); }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::string str() { return bytes(uint<std::uint32_t>()); }
  std::size_t remaining() const { return data_.size() - pos_; }
  [[noreturn]] void fail(const std::string& what) const {
    throw FormatError(std::string(format_) + " validation failed: " + what);
  }

 private:
  void need(std::size_t n) const {
    if (remaining() < n) fail("truncated at byte " + std::to_string(pos_));
  }
  const std::string& data_;
  const char* format_;
  std::size_t pos_ = 0;
};

std::uint64_t product(const std::vector<std::uint64_t>& dims) {
  std::uint64_t p = 1;
  for (auto d : dims) p *= d;
  return p;
}

}  // namespace

std::string encode_dipd(const DipdFile& file) {
  if (file.dims.empty() || product(file.dims) != file.values.size()) {
    throw ShapeError("DIPD: payload size does not match dimensions");
  }
  if (file.records.size() != file.dims[0]) throw ShapeError("DIPD: record table length != dims[0]");
  Writer w;
  w.bytes("DIPD");
  w.uint(kDipdVersion);
  w.uint(std::uint16_t{1});
  w.uint(static_cast<std::uint32_t>(file.dims.size()));
  for (auto d : file.dims) w.uint(d);
  for (double v : file.values) w.f64(v);
  w.uint(static_cast<std::uint32_t>(file.class_names.size()));
  for (const auto& n : file.class_names) w.str(n);
  w.uint(static_cast<std::uint32_t>(file.records.size()));
  for (const auto& r : file.records) {
    w.uint(r.id);
    w.uint(r.label);
    w.uint(r.state);
    w.f64(r.sampling_rate_hz);
    w.uint(r.segment_start);
  }
  return w.take();
}

DipdFile decode_dipd(const std::string& bytes) {
  Reader r(bytes, "DIPD");
  if (bytes.size() < 4 || r.bytes(4) != "DIPD") r.fail("bad magic");
  const auto version = r.uint<std::uint16_t>();
  if (version != kDipdVersion) r.fail("unsupported version " + std::to_string(version));
  const auto dtype = r.uint<std::uint16_t>();
  if (dtype != 1) r.fail("unsupported dtype code " + std::to_string(dtype));
  DipdFile f;
  const auto ndims = r.uint<std::uint32_t>();
  if (ndims == 0 || ndims > 8) r.fail("bad dimension count");
  for (std::uint32_t i = 0; i < ndims; ++i) f.dims.push_back(r.uint<std::uint64_t>());
  const std::uint64_t count = product(f.dims);
  if (count > r.remaining() / 8) r.fail("payload shorter than dimensions imply");
  f.values.resize(count);
  for (auto& v : f.values) v = r.f64();
  const auto classes = r.uint<std::uint32_t>();
  for (std::uint32_t i = 0; i < classes; ++i) f.class_names.push_back(r.str());
  const auto records = r.uint<std::uint32_t>();
  if (records != f.dims[0]) r.fail("record table length does not match dims[0]");
  for (std::uint32_t i = 0; i < records; ++i) {
    RecordInfo info;
    info.id = r.uint<std::uint64_t>();
    info.label = r.uint<std::int32_t>();
    info.state = r.uint<std::int32_t>();
    info.sampling_rate_hz = r.f64();
    info.segment_start = r.uint<std::uint64_t>();
    if (info.label < 0 || static_cast<std::uint32_t>(info.label) >= classes) {
      r.fail("record " + std::to_string(info.id) + " has label outside the class table");
    }
    f.records.push_back(info);
  }
  if (r.remaining() != 0) r.fail("trailing bytes");
  return f;
}

DipdFile from_dataset(const synth::Dataset& dataset) {
  DipdFile f;
  f.class_names = dataset.class_names;
  if (dataset.records.empty()) throw InvalidArgument("DIPD: empty dataset");
  const auto channels = static_cast<std::uint64_t>(dataset.records.front().data.rows());
  const auto samples = static_cast<std::uint64_t>(dataset.records.front().data.cols());
  f.dims = {dataset.records.size(), channels, samples};
  f.values.reserve(dataset.records.size() * channels * samples);
  for (const auto& rec : dataset.records) {
    if (static_cast<std::uint64_t>(rec.data.rows()) != channels ||
        static_cast<std::uint64_t>(rec.data.cols()) != samples) {
      throw ShapeError("DIPD: record " + std::to_string(rec.record_id) + " has a different shape");
    }
    f.values.insert(f.values.end(), rec.data.data(), rec.data.data() + rec.data.size());
    f.records.push_back({rec.record_id, rec.label, rec.state, rec.sampling_rate_hz, rec.segment_start});
  }
  return f;
}

synth::Dataset to_dataset(const DipdFile& file) {
  if (file.dims.size() != 3) throw FormatError("DIPD validation failed: expected records x channels x samples");
  synth::Dataset d;
  d.class_names = file.class_names;
  const auto channels = static_cast<Eigen::Index>(file.dims[1]);
  const auto samples = static_cast<Eigen::Index>(file.dims[2]);
  const std::size_t per = file.dims[1] * file.dims[2];
  for (std::size_t i = 0; i < file.records.size(); ++i) {
    synth::SignalRecord rec;
    rec.data = Eigen::Map<const Matrix>(file.values.data() + i * per, channels, samples);
    rec.sampling_rate_hz = file.records[i].sampling_rate_hz;
    rec.label = file.records[i].label;
    rec.state = file.records[i].state;
    rec.record_id = file.records[i].id;
    rec.segment_start = file.records[i].segment_start;
    d.records.push_back(std::move(rec));
  }
  d.sampling_rate_hz = d.records.empty() ? 0.0 : d.records.front().sampling_rate_hz;
  return d;
}

// ---------------------------------------------------------------------------

namespace {

enum LayerCode : std::uint8_t { kConv = 1, kBatchNorm, kRelu, kMaxPool, kDropout, kDense, kSoftmax };

void write_layer(Writer& w, const nn::LayerSpec& spec) {
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, nn::ConvSpec>) {
          w.uint(std::uint8_t{kConv});
          for (int v : {s.filters, s.kernel_h, s.kernel_w, s.stride, s.pad_h, s.pad_w}) {
            w.uint(static_cast<std::int32_t>(v));
          }
        } else if constexpr (std::is_same_v<T, nn::BatchNormSpec>) {
          w.uint(std::uint8_t{kBatchNorm});
          w.f64(s.epsilon);
          w.f64(s.momentum);
        } else if constexpr (std::is_same_v<T, nn::ReluSpec>) {
          w.uint(std::uint8_t{kRelu});
        } else if constexpr (std::is_same_v<T, nn::MaxPoolSpec>) {
          w.uint(std::uint8_t{kMaxPool});
          for (int v : {s.pool_h, s.pool_w, s.stride_h, s.stride_w}) w.uint(static_cast<std::int32_t>(v));
        } else if constexpr (std::is_same_v<T, nn::DropoutSpec>) {
          w.uint(std::uint8_t{kDropout});
          w.f64(s.p);
        } else if constexpr (std::is_same_v<T, nn::DenseSpec>) {
          w.uint(std::uint8_t{kDense});
          w.uint(static_cast<std::int32_t>(s.outputs));
        } else {
          w.uint(std::uint8_t{kSoftmax});
        }
      },
      spec);
}

nn::LayerSpec read_layer(Reader& r) {
  const auto code = r.uint<std::uint8_t>();
  auto i32 = [&] { return static_cast<int>(r.uint<std::int32_t>()); };
  switch (code) {
    case kConv: {
      nn::ConvSpec s;
      s.filters = i32();
      s.kernel_h = i32();
      s.kernel_w = i32();
      s.stride = i32();
      s.pad_h = i32();
      s.pad_w = i32();
      return s;
    }
    case kBatchNorm: {
      nn::BatchNormSpec s;
      s.epsilon = r.f64();
      s.momentum = r.f64();
      return s;
    }
    case kRelu:
      return nn::ReluSpec{};
    case kMaxPool: {
      nn::MaxPoolSpec s;
      s.pool_h = i32();
      s.pool_w = i32();
      s.stride_h = i32();
      s.stride_w = i32();
      return s;
    }
    case kDropout:
      return nn::DropoutSpec{r.f64()};
    case kDense:
      return nn::DenseSpec{i32()};
    case kSoftmax:
      return nn::SoftmaxSpec{};
    default:
      r.fail("unknown layer code " + std::to_string(code));
  }
}

}  // namespace

ModelFile capture(nn::Model& model, const nn::TrainConfig& config, std::uint64_t seed) {
  ModelFile f{model.spec(), {}, config, seed};
  for (const auto& p : model.parameters()) f.tensors.push_back(*p.value);
  for (const auto* b : model.buffers()) f.tensors.push_back(*b);
  return f;
}

nn::Model restore(const ModelFile& file) {
  nn::Model model(file.spec, file.seed);
  std::vector<nn::Tensor*> slots;
  for (auto& p : model.parameters()) slots.push_back(p.value);
  for (auto* b : model.buffers()) slots.push_back(b);
  if (slots.size() != file.tensors.size()) {
    throw FormatError("DIPW validation failed: tensor count does not match the model spec");
  }
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (slots[i]->shape() != file.tensors[i].shape()) {
      throw FormatError("DIPW validation failed: tensor " + std::to_string(i) + " has shape " +
                        nn::to_string(file.tensors[i].shape()) + ", expected " +
                        nn::to_string(slots[i]->shape()));
    }
    *slots[i] = file.tensors[i];
  }
  return model;
}

std::string encode_dipw(const ModelFile& file) {
  Writer w;
  w.bytes("DIPW");
  w.uint(kDipwVersion);
  w.uint(static_cast<std::uint32_t>(file.spec.input_shape.size()));
  for (auto d : file.spec.input_shape) w.uint(static_cast<std::uint64_t>(d));
  w.uint(static_cast<std::uint64_t>(file.spec.class_count));
  w.uint(static_cast<std::uint32_t>(file.spec.layers.size()));
  for (const auto& l : file.spec.layers) write_layer(w, l);
  w.uint(static_cast<std::uint32_t>(file.tensors.size()));
  for (const auto& t : file.tensors) {
    w.uint(static_cast<std::uint32_t>(t.rank()));
    for (auto d : t.shape()) w.uint(static_cast<std::uint64_t>(d));
    for (double v : t.values()) w.f64(v);
  }
  const auto& c = file.config;
  w.f64(c.momentum);
  w.uint(static_cast<std::int32_t>(c.batch_size));
  w.uint(static_cast<std::int32_t>(c.max_epochs));
  w.f64(c.learning_rate);
  w.f64(c.l2_regularization);
  w.f64(c.lr_drop_factor);
  w.uint(static_cast<std::int32_t>(c.lr_drop_period));
  w.uint(c.seed);
  w.uint(file.seed);
  return w.take();
}

ModelFile decode_dipw(const std::string& bytes) {
  Reader r(bytes, "DIPW");
  if (bytes.size() < 4 || r.bytes(4) != "DIPW") r.fail("bad magic");
  const auto version = r.uint<std::uint16_t>();
  if (version != kDipwVersion) r.fail("unsupported version " + std::to_string(version));
  ModelFile f;
  const auto rank = r.uint<std::uint32_t>();
  if (rank > 8) r.fail("bad input rank");
  for (std::uint32_t i = 0; i < rank; ++i) f.spec.input_shape.push_back(r.uint<std::uint64_t>());
  f.spec.class_count = r.uint<std::uint64_t>();
  const auto layers = r.uint<std::uint32_t>();
  if (layers > 4096) r.fail("implausible layer count");
  for (std::uint32_t i = 0; i < layers; ++i) f.spec.layers.push_back(read_layer(r));
  const auto tensors = r.uint<std::uint32_t>();
  for (std::uint32_t i = 0; i < tensors; ++i) {
    const auto trank = r.uint<std::uint32_t>();
    if (trank > 8) r.fail("bad tensor rank");
    nn::Shape shape;
    for (std::uint32_t k = 0; k < trank; ++k) shape.push_back(r.uint<std::uint64_t>());
    const std::size_t n = nn::element_count(shape);
    if (n > r.remaining() / 8) r.fail("tensor payload truncated");
    std::vector<double> values(n);
    for (auto& v : values) v = r.f64();
    f.tensors.emplace_back(std::move(shape), std::move(values));
  }
  auto& c = f.config;
  c.momentum = r.f64();
  c.batch_size = r.uint<std::int32_t>();
  c.max_epochs = r.uint<std::int32_t>();
  c.learning_rate = r.f64();
  c.l2_regularization = r.f64();
  c.lr_drop_factor = r.f64();
  c.lr_drop_period = r.uint<std::int32_t>();
  c.seed = r.uint<std::uint64_t>();
  f.seed = r.uint<std::uint64_t>();
  if (r.remaining() != 0) r.fail("trailing bytes");
  try {
    f.spec.validate();
  } catch (const Error& e) {
    r.fail(std::string("invalid model spec: ") + e.what());
  }
  return f;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NumericError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& bytes) {
  const std::filesystem::path target(path);
  if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw NumericError("cannot write " + tmp);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw NumericError("write failed for " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, target, ec);
  if (ec) throw NumericError("cannot rename " + tmp + " to " + path + ": " + ec.message());
}

}  // namespace dip::io
