#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dip/eval.hpp"

namespace dip::verify {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

// ---------------------------------------------------------------------------
// Published-table recomputation.

using ClassMetricFn = std::function<eval::MetricsRow(const eval::ConfusionMatrix&, std::size_t)>;

/// One printed cell that the counts do not reproduce within the tolerance.
struct CellFlag {
  std::string table;
  std::string row;     ///< class label or "Overall"
  std::string metric;  ///< "Sens", "Prec", "Spec", "F1" or "Accuracy"
  double printed = 0.0;
  double recomputed = 0.0;

  std::string key() const { return table + " | " + row + " | " + metric; }
};

struct TableVerification {
  std::vector<CellFlag> flags;  ///< every cell outside tolerance, including F1
  /// Sens/Prec/Spec/Accuracy flags that are not in known_misprints().
  std::vector<CellFlag> unexpected;
  /// Entries of known_misprints() that did not show up as flags.
  std::vector<std::string> missing;
  bool passed() const { return unexpected.empty() && missing.empty(); }
};

constexpr double kTableTolerance = 0.0005;

/// Sens/Prec/Spec cells whose printed value is inconsistent with the printed
/// counts (transcription slips and truncation rather than rounding). Keys in
/// CellFlag::key() form.
const std::vector<std::string>& known_misprints();

/// Recomputes every published table through `metric` (per class) and the
/// support-weighted Overall row. F1 cells are flagged but never fail.
TableVerification verify_published_tables(const ClassMetricFn& metric = eval::class_metrics);

std::string format_table_verification(const TableVerification& v);

// ---------------------------------------------------------------------------
// Numerical oracles.

/// FFT Stockwell vs direct summation, and the time-marginal identity.
/// Returns the worst relative errors seen.
struct StockwellReport {
  double max_definition_error = 0.0;
  double max_marginal_error = 0.0;
  int signals = 0;
};
StockwellReport check_stockwell(const std::vector<std::size_t>& lengths, int signals_per_length,
                                std::uint64_t seed);

/// Central finite differences against analytic gradients for one layer kind.
/// Relative error is ||analytic - numeric|| / max(||analytic||, ||numeric||)
/// over input and parameter gradients.
struct GradientReport {
  std::string layer;
  int instances = 0;
  double max_relative_error = 0.0;
};
std::vector<GradientReport> check_gradients(int instances, std::uint64_t seed, double step = 1e-5);

constexpr double kStockwellTolerance = 1e-9;
constexpr double kGradientTolerance = 1e-4;

/// Everything above, with pass/fail per check.
std::vector<CheckResult> run_all(std::uint64_t seed = 2024);

}  // namespace dip::verify
