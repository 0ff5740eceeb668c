#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "dip/neural/model.hpp"
#include "dip/neural/train.hpp"

namespace dip {

enum class CaseKind { deterioration, damage };

std::string to_string(CaseKind c);
CaseKind parse_case(const std::string& s);

struct SynthConfig {
  CaseKind case_kind = CaseKind::deterioration;
  /// 0: localization set (all classes); 1..3: severity states of that story.
  int severity_story = 0;
  int records_per_class = 80;
  std::optional<double> sampling_rate_hz;  ///< 200 (deterioration) or 320 (damage) when unset
  std::optional<double> story_mass_kg;     ///< 1000 / 6.4 when unset
  std::optional<double> fundamental_hz;    ///< 3 / 20 when unset
  double damping_ratio = 0.02;
  double adr = 2e-3;
  double period_years = 50.0;
  double column_reduction = 0.875;
  double ground_rms = 1.0;
  double bandwidth_fraction = 0.4;
  std::optional<double> snr_db = 20.0;     ///< "none" disables sensor noise
  double warmup_seconds = 20.0;
  int segment_samples = 1024;
  std::uint64_t seed = 1;

  double rate() const;
  double mass() const;
  double f1() const;
};

struct DspConfig {
  int filter_order = 12;
  double ripple_db = 1.0;
  std::optional<double> cutoff_hz;  ///< 0.4 x Nyquist when unset
  double zca_epsilon = 1e-8;
};

struct StConfig {
  int freq_pool = 1;  ///< block-average factor along frequency
  int time_pool = 1;  ///< block-average factor along time
};

struct EvalConfig {
  int folds = 5;
  double validation_fraction = 0.1875;
  bool severity = true;  ///< also train the per-class severity CNNs
};

struct RunConfig {
  SynthConfig synth;
  DspConfig dsp;
  StConfig st;
  nn::TrainConfig train;
  EvalConfig eval;
  nn::ArchitectureOptions model;

  /// Range checks across all sections. Throws InvalidArgument.
  void validate() const;
};

/// INI-style sections of key = value lines; '#' and ';' start comments.
/// Unknown sections or keys and out-of-range values throw FormatError /
/// InvalidArgument. Missing keys keep their defaults.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

/// Every key with its effective value, in parse_config syntax.
std::string dump_config(const RunConfig& config);

}  // namespace dip
