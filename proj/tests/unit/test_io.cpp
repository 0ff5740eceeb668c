#include <doctest.h>

#include <cstring>

#include "dip/config.hpp"
#include "dip/error.hpp"
#include "dip/image.hpp"
#include "dip/io.hpp"
#include "dip/pipeline.hpp"

using namespace dip;

namespace {

synth::Dataset small_dataset() {
  RunConfig cfg;
  cfg.synth.records_per_class = 3;
  return pipeline::generate(cfg.synth);
}

}  // namespace

TEST_CASE("DIPD round trip is lossless") {
  const auto data = small_dataset();
  const io::DipdFile file = io::from_dataset(data);
  CHECK(file.dims == std::vector<std::uint64_t>{12, 3, 1024});
  const std::string bytes = io::encode_dipd(file);
  CHECK(bytes.substr(0, 4) == "DIPD");
  const io::DipdFile back = io::decode_dipd(bytes);
  CHECK(back == file);
  CHECK(io::encode_dipd(back) == bytes);
  const auto restored = io::to_dataset(back);
  REQUIRE(restored.records.size() == data.records.size());
  for (std::size_t i = 0; i < data.records.size(); ++i) {
    CHECK(restored.records[i].data == data.records[i].data);
    CHECK(restored.records[i].label == data.records[i].label);
    CHECK(restored.records[i].record_id == data.records[i].record_id);
  }
  CHECK(restored.class_names == data.class_names);
}

TEST_CASE("DIPD validation errors") {
  const std::string bytes = io::encode_dipd(io::from_dataset(small_dataset()));
  std::string bad = bytes;
  bad[0] = 'X';
  try {
    io::decode_dipd(bad);
    FAIL("corrupt magic accepted");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("DIPD validation") != std::string::npos);
  }
  CHECK_THROWS_AS(io::decode_dipd(bytes.substr(0, bytes.size() / 2)), FormatError);
  std::string version = bytes;
  version[4] = 9;
  CHECK_THROWS_AS(io::decode_dipd(version), FormatError);
  std::string dtype = bytes;
  dtype[6] = 2;
  CHECK_THROWS_AS(io::decode_dipd(dtype), FormatError);
  CHECK_THROWS_AS(io::decode_dipd(bytes + "x"), FormatError);
}

TEST_CASE("DIPW round trip reproduces weights bit-exactly") {
  nn::Model m(nn::damage_architecture({3, 16, 64}, 4), 77);
  // Move batchnorm statistics away from their initial values.
  nn::Tensor x({4, 3, 16, 64});
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::sin(0.37 * i);
  m.forward(x, nn::Mode::train);
  nn::TrainConfig cfg;
  cfg.seed = 12;
  const io::ModelFile file = io::capture(m, cfg, 12);
  const std::string bytes = io::encode_dipw(file);
  CHECK(bytes.substr(0, 4) == "DIPW");
  const io::ModelFile back = io::decode_dipw(bytes);
  CHECK(io::encode_dipw(back) == bytes);
  CHECK(back.config == cfg);
  CHECK(back.seed == 12);
  nn::Model r = io::restore(back);
  auto pa = m.parameters(), pb = r.parameters();
  REQUIRE(pa.size() == pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) CHECK(std::memcmp(pa[i].value->data(), pb[i].value->data(), pa[i].value->size() * 8) == 0);
  auto ba = m.buffers(), bb = r.buffers();
  REQUIRE(ba.size() == bb.size());
  for (std::size_t i = 0; i < ba.size(); ++i) CHECK(*ba[i] == *bb[i]);
  CHECK(m.forward(x, nn::Mode::infer) == r.forward(x, nn::Mode::infer));

  std::string bad = bytes;
  bad[1] = 'X';
  CHECK_THROWS_AS(io::decode_dipw(bad), FormatError);
}

TEST_CASE("config defaults hold the training table values") {
  const RunConfig c = parse_config("");
  CHECK(c.train.momentum == 0.9);
  CHECK(c.train.batch_size == 32);
  CHECK(c.train.max_epochs == 200);
  CHECK(c.train.learning_rate == 0.002);
  CHECK(c.train.l2_regularization == 0.001);
  CHECK(c.train.lr_drop_factor == 0.1);
  CHECK(c.train.lr_drop_period == 20);
  CHECK(c.dsp.filter_order == 12);
  CHECK(c.eval.folds == 5);
  CHECK(c.synth.rate() == 200.0);
  RunConfig d = parse_config("[synth]\ncase = damage\n");
  CHECK(d.synth.rate() == 320.0);
  CHECK(d.synth.f1() == 20.0);
}

TEST_CASE("config parsing and rejection") {
  const RunConfig c = parse_config(
      "# comment\n[synth]\nseed = 9\nsnr_db = none\n[st]\nfreq_pool = 4\n[train]\nmax_epochs = 30\n"
      "[model]\nfilters = 4,8,16\n");
  CHECK(c.synth.seed == 9);
  CHECK_FALSE(c.synth.snr_db.has_value());
  CHECK(c.st.freq_pool == 4);
  CHECK(c.train.max_epochs == 30);
  CHECK(c.model.filters == std::vector<int>{4, 8, 16});
  CHECK_THROWS_AS(parse_config("[train]\nlearning_rat = 0.1\n"), FormatError);
  CHECK_THROWS_AS(parse_config("[bogus]\nx = 1\n"), FormatError);
  CHECK_THROWS_AS(parse_config("[train]\nmomentum = 1.5\n"), InvalidArgument);
  CHECK_THROWS_AS(parse_config("[train]\nbatch_size = -3\n"), InvalidArgument);
  CHECK_THROWS_AS(parse_config("[train]\nbatch_size = abc\n"), FormatError);
  // A dump parses back to the same configuration.
  CHECK(dump_config(parse_config(dump_config(c))) == dump_config(c));
}

TEST_CASE("image encoding") {
  CHECK(image::to_byte(0.0, 10.0) == 0);
  CHECK(image::to_byte(10.0, 10.0) == 255);
  CHECK(image::to_byte(5.0, 10.0) == 128);
  CHECK(image::to_byte(20.0, 10.0) == 255);
  CHECK(image::to_byte(3.0, 0.0) == 0);

  Matrix m = Matrix::Zero(256, 1024);
  const std::string black = image::encode_pgm(m);
  const std::string header = "P5\n1024 256\n255\n";
  REQUIRE(black.substr(0, header.size()) == header);
  CHECK(black.size() == header.size() + 256 * 1024);
  CHECK(black.find_first_not_of('\0', header.size()) == std::string::npos);

  m(0, 0) = 3.0;  // lowest frequency row lands at the bottom
  m(255, 1023) = 1.5;
  const std::string g = image::encode_pgm(m);
  CHECK(static_cast<unsigned char>(g[header.size() + 255 * 1024]) == 255);
  CHECK(static_cast<unsigned char>(g[header.size() + 1023]) == 128);

  const std::vector<Matrix> rgb{m, Matrix::Zero(256, 1024), m};
  const std::string p = image::encode_ppm(rgb);
  const std::string ph = "P6\n1024 256\n255\n";
  REQUIRE(p.substr(0, ph.size()) == ph);
  CHECK(p.size() == ph.size() + 3 * 256 * 1024);
}
