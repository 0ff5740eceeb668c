// dip: generate synthetic records, run the identification pipeline, export
// spectrogram images, and run the oracle self-test.

#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "dip/config.hpp"
#include "dip/error.hpp"
#include "dip/image.hpp"
#include "dip/io.hpp"
#include "dip/pipeline.hpp"
#include "dip/stransform.hpp"
#include "dip/verify.hpp"

namespace {

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  int threads = 1;
  std::string case_name;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config_path, "run configuration (INI sections)");
  app->add_option("--seed", c.seed, "overrides [synth] seed");
  app->add_option("--threads", c.threads, "worker threads; 1 is bit-exact")->check(CLI::Range(1, 256));
  app->add_option("--case", c.case_name, "deterioration or damage")
      ->check(CLI::IsMember({"deterioration", "damage"}));
}

dip::RunConfig resolve(const Common& c) {
  dip::RunConfig cfg = c.config_path.empty() ? dip::RunConfig{} : dip::load_config(c.config_path);
  if (c.seed) cfg.synth.seed = *c.seed;
  if (!c.case_name.empty()) cfg.synth.case_kind = dip::parse_case(c.case_name);
  cfg.validate();
  return cfg;
}

int cmd_generate(const Common& common, const std::string& out) {
  const dip::RunConfig cfg = resolve(common);
  const dip::synth::Dataset data = dip::pipeline::generate(cfg.synth, common.threads);
  dip::io::write_file(out, dip::io::encode_dipd(dip::io::from_dataset(data)));
  std::map<int, int> histogram;
  for (const auto& r : data.records) ++histogram[r.label];
  fmt::print("wrote {} records ({} classes, {} Hz) to {}\n", data.records.size(), data.class_names.size(),
             data.sampling_rate_hz, out);
  for (const auto& [label, count] : histogram) {
    fmt::print("  {:<12} {}\n", data.class_names[static_cast<std::size_t>(label)], count);
  }
  return 0;
}

int cmd_pipeline(const Common& common, const std::string& dataset_path, const std::string& stage,
                 const std::string& out_dir, bool quiet) {
  dip::pipeline::Options options;
  options.config = resolve(common);
  options.stage = dip::pipeline::parse_stage(stage);
  options.threads = common.threads;
  options.out_dir = out_dir;
  if (!quiet) options.progress = [](const std::string& m) { fmt::print(stderr, "{}\n", m); };

  dip::synth::Dataset data;
  if (dataset_path.empty()) {
    data = dip::pipeline::generate(options.config.synth, common.threads);
  } else {
    data = dip::io::to_dataset(dip::io::decode_dipd(dip::io::read_file(dataset_path)));
  }
  const auto result = dip::pipeline::run(data, options);
  if (out_dir.empty()) {
    fmt::print("{}", result.report_text);
  } else {
    fmt::print("report written to {}/report.txt\n", out_dir);
    for (const auto& t : result.tasks) fmt::print("  {:<32} accuracy {:.4f}\n", t.name, t.accuracy());
  }
  return 0;
}

int cmd_export(const std::string& dataset_path, std::uint64_t record_id, const std::string& prefix) {
  const auto file = dip::io::decode_dipd(dip::io::read_file(dataset_path));
  const auto data = dip::io::to_dataset(file);
  const dip::synth::SignalRecord* record = nullptr;
  for (const auto& r : data.records) {
    if (r.record_id == record_id) record = &r;
  }
  if (!record) throw dip::InvalidArgument(fmt::format("record {} not found in {}", record_id, dataset_path));

  std::vector<dip::Matrix> images;
  for (Eigen::Index ch = 0; ch < record->data.rows(); ++ch) {
    const std::vector<double> x(record->data.row(ch).begin(), record->data.row(ch).end());
    images.push_back(dip::st::crop_and_magnitude(dip::st::stockwell(x, record->sampling_rate_hz)));
    const std::string path = fmt::format("{}_ch{}.pgm", prefix, ch + 1);
    dip::io::write_file(path, dip::image::encode_pgm(images.back()));
    fmt::print("wrote {} ({}x{})\n", path, images.back().cols(), images.back().rows());
  }
  while (images.size() < 3) images.emplace_back(dip::Matrix::Zero(images[0].rows(), images[0].cols()));
  images.resize(3);
  const std::string path = prefix + "_rgb.ppm";
  dip::io::write_file(path, dip::image::encode_ppm(images));
  fmt::print("wrote {}\n", path);
  return 0;
}

int cmd_verify(std::uint64_t seed) {
  bool ok = true;
  for (const auto& c : dip::verify::run_all(seed)) {
    fmt::print("{} {}: {}\n", c.passed ? "PASS" : "FAIL", c.name, c.detail);
    ok = ok && c.passed;
  }
  return ok ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"deterioration / damage identification from floor accelerations"};
  app.require_subcommand(1);

  Common gen_common;
  std::string gen_out = "dataset.dipd";
  auto* gen = app.add_subcommand("generate", "simulate a labelled dataset and write it as DIPD");
  add_common(gen, gen_common);
  gen->add_option("-o,--out", gen_out, "output DIPD path");

  Common pipe_common;
  std::string pipe_dataset, pipe_stage = "full", pipe_out;
  bool pipe_quiet = false;
  auto* pipe = app.add_subcommand("pipeline", "preprocess, transform, train and evaluate");
  add_common(pipe, pipe_common);
  pipe->add_option("dataset", pipe_dataset, "DIPD dataset (simulated from the config when omitted)");
  pipe->add_option("--stage", pipe_stage, "preprocess, st-only or full")
      ->check(CLI::IsMember({"preprocess", "st-only", "full"}));
  pipe->add_option("-o,--out", pipe_out, "output directory for reports, models and logs");
  pipe->add_flag("-q,--quiet", pipe_quiet, "no progress on stderr");

  std::string exp_dataset, exp_prefix = "spectrogram";
  std::uint64_t exp_record = 0;
  auto* exp = app.add_subcommand("export-spectrogram", "write |ST| images of one record");
  exp->add_option("dataset", exp_dataset, "DIPD dataset")->required();
  exp->add_option("--record", exp_record, "record id")->required();
  exp->add_option("-o,--out", exp_prefix, "output path prefix");

  std::uint64_t verify_seed = 2024;
  auto* ver = app.add_subcommand("verify", "run the built-in oracle checks");
  ver->add_option("--seed", verify_seed, "seed for the random instances");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) return cmd_generate(gen_common, gen_out);
    if (pipe->parsed()) return cmd_pipeline(pipe_common, pipe_dataset, pipe_stage, pipe_out, pipe_quiet);
    if (exp->parsed()) return cmd_export(exp_dataset, exp_record, exp_prefix);
    if (ver->parsed()) return cmd_verify(verify_seed);
  } catch (const dip::Error& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return e.kind() == dip::ErrorKind::validation ? 1 : 2;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 2;
  }
  return 0;
}
