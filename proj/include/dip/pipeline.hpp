#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dip/config.hpp"
#include "dip/dsp.hpp"
#include "dip/eval.hpp"
#include "dip/stransform.hpp"
#include "dip/synth.hpp"

namespace dip::pipeline {

enum class Stage { preprocess, st_only, full };
Stage parse_stage(const std::string& s);

/// Builds the scenario set described by the [synth] section.
synth::ScenarioSet scenario_set(const SynthConfig& config);
/// generate_dataset with the [synth] parameters.
synth::Dataset generate(const SynthConfig& config, int threads = 1);

/// Low-pass (zero phase) then standardize, per channel. Errors carry the
/// stage name and record id.
Matrix preprocess_record(const Matrix& data, const dsp::LowpassFilter& filter,
                         std::uint64_t record_id = 0);

/// Cropped |ST| per channel, block-averaged by the [st] pooling factors.
std::vector<Matrix> st_channels(const Matrix& whitened, double sampling_rate_hz,
                                const StConfig& st);

/// Spectrogram shape [channels, freq bins, time steps] for a record length.
std::vector<std::size_t> spectrogram_shape(std::size_t channels, std::size_t samples,
                                           const StConfig& st);

struct TaskResult {
  std::string name;   ///< "localization" or "severity <class>"
  std::string slug;   ///< file-name form of name
  std::vector<std::string> class_names;
  std::vector<eval::ConfusionMatrix> folds;
  eval::ConfusionMatrix aggregate;
  std::vector<int> best_epochs;
  std::size_t nominal_layers = 0;
  double accuracy() const;
};

struct Result {
  std::vector<TaskResult> tasks;
  std::string report_text;
  std::string report_csv;
};

struct Options {
  RunConfig config;
  Stage stage = Stage::full;
  int threads = 1;
  /// Output directory for report.txt, report.csv, models/ and logs/; nothing
  /// is written when empty.
  std::string out_dir;
  std::function<void(const std::string&)> progress;
};

/// filter -> standardize -> per-fold ZCA -> ST -> crop -> pool -> min-max ->
/// train / evaluate over the configured folds, for localization and (when
/// enabled) one severity task per class holding several states.
/// Stage::preprocess and Stage::st_only stop early and write the
/// intermediate tensors (whitened on the whole set) as DIPD files.
Result run(const synth::Dataset& dataset, const Options& options);

}  // namespace dip::pipeline
