#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dip::eval {

/// Stratified k-fold assignment over records indexed 0..n-1.
struct FoldPlan {
  int k = 0;
  std::vector<int> test_fold;                  ///< record -> fold
  std::vector<std::vector<bool>> validation;   ///< [fold][record], train-side carve-out

  std::vector<std::size_t> test_indices(int fold) const;
  std::vector<std::size_t> train_indices(int fold) const;       ///< excludes validation
  std::vector<std::size_t> validation_indices(int fold) const;
};

/// Each class is shuffled from `seed` and dealt round-robin over the folds,
/// with a per-class rotation so fold totals also stay within one record.
/// In every fold, round(validation_fraction * train pool) records of the
/// train pool are held out for validation, split over classes by largest
/// remainder. Throws InvalidArgument when k < 2, the fraction is outside
/// [0, 1) or some class has fewer than k records.
FoldPlan make_folds(std::span<const std::size_t> labels, int k, double validation_fraction,
                    std::uint64_t seed);

class ConfusionMatrix {
 public:
  ConfusionMatrix() = default;
  explicit ConfusionMatrix(std::vector<std::string> labels);
  ConfusionMatrix(std::vector<std::string> labels, const std::vector<std::vector<long>>& counts);

  std::size_t size() const { return labels_.size(); }
  const std::vector<std::string>& labels() const { return labels_; }

  void add(std::size_t actual, std::size_t predicted, long count = 1);
  long at(std::size_t actual, std::size_t predicted) const;
  long row_sum(std::size_t actual) const;
  long column_sum(std::size_t predicted) const;
  long total() const;
  long trace() const;

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  std::vector<std::string> labels_;
  std::vector<long> counts_;  ///< row-major, rows = actual
};

/// Missing values mark an undefined metric (zero denominator), printed "n/a".
struct MetricsRow {
  std::optional<double> sensitivity;
  std::optional<double> precision;
  std::optional<double> specificity;
  std::optional<double> f1;
};

MetricsRow class_metrics(const ConfusionMatrix& cm, std::size_t c);

struct OverallMetrics {
  double accuracy = 0.0;  ///< trace / total
  MetricsRow weighted;    ///< per-class values weighted by actual-class support
  MetricsRow macro;       ///< unweighted mean of defined per-class values
};

/// Throws InvalidArgument for an empty matrix.
OverallMetrics overall_metrics(const ConfusionMatrix& cm);

/// Elementwise sum. Throws InvalidArgument on mismatched labels or an empty list.
ConfusionMatrix aggregate_folds(std::span<const ConfusionMatrix> folds);

/// Mean of a localization and a severity accuracy, both in [0, 1].
double average_index(double localization_accuracy, double severity_accuracy);

/// "0.9625" style (4 decimals) or "n/a".
std::string format_metric(const std::optional<double>& v);

/// Human-readable table: matrix, then Sens/Prec/Spec/F1 columns, then the
/// Overall row.
std::string format_table(const ConfusionMatrix& cm, const std::string& title);
/// Same content, comma-separated.
std::string format_csv(const ConfusionMatrix& cm, const std::string& title);

}  // namespace dip::eval
