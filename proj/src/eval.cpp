#include "dip/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "dip/error.hpp"
#include "dip/seed.hpp"

namespace dip::eval {

std::vector<std::size_t> FoldPlan::test_indices(int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < test_fold.size(); ++i) {
    if (test_fold[i] == fold) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> FoldPlan::train_indices(int fold) const {
  std::vector<std::size_t> out;
  const auto& val = validation.at(static_cast<std::size_t>(fold));
  for (std::size_t i = 0; i < test_fold.size(); ++i) {
    if (test_fold[i] != fold && !val[i]) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> FoldPlan::validation_indices(int fold) const {
  std::vector<std::size_t> out;
  const auto& val = validation.at(static_cast<std::size_t>(fold));
  for (std::size_t i = 0; i < test_fold.size(); ++i) {
    if (val[i]) out.push_back(i);
  }
  return out;
}

namespace {

// Integer quotas proportional to `sizes` summing to `total`; ties in the
// fractional part go to the lower index.
std::vector<std::size_t> largest_remainder(const std::vector<std::size_t>& sizes, double fraction,
                                           std::size_t total) {
  std::vector<std::size_t> out(sizes.size());
  std::vector<std::pair<double, std::size_t>> rem;
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < sizes.size(); ++c) {
    const double q = fraction * static_cast<double>(sizes[c]);
    out[c] = static_cast<std::size_t>(std::floor(q));
    assigned += out[c];
    rem.emplace_back(q - std::floor(q), c);
  }
  std::stable_sort(rem.begin(), rem.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; assigned < total && i < rem.size(); ++i) {
    const std::size_t c = rem[i].second;
    if (out[c] < sizes[c]) {
      ++out[c];
      ++assigned;
    }
  }
  return out;
}

}  // namespace

FoldPlan make_folds(std::span<const std::size_t> labels, int k, double validation_fraction,
                    std::uint64_t seed) {
  if (k < 2) throw InvalidArgument("cross-validation needs k >= 2, got " + std::to_string(k));
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
    throw InvalidArgument("validation fraction must lie in [0, 1)");
  }
  if (labels.empty()) throw InvalidArgument("no records to split");
  const std::size_t classes = *std::max_element(labels.begin(), labels.end()) + 1;
  std::vector<std::vector<std::size_t>> members(classes);
  for (std::size_t i = 0; i < labels.size(); ++i) members[labels[i]].push_back(i);
  for (std::size_t c = 0; c < classes; ++c) {
    if (members[c].size() < static_cast<std::size_t>(k)) {
      throw InvalidArgument("stratification: class " + std::to_string(c) + " has " +
                            std::to_string(members[c].size()) + " records, fewer than k = " +
                            std::to_string(k));
    }
  }

  FoldPlan plan;
  plan.k = k;
  plan.test_fold.assign(labels.size(), -1);
  std::size_t offset = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    std::mt19937_64 rng(derive_seed(seed, 0xf0, c));
    auto order = members[c];
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t j = 0; j < order.size(); ++j) {
      plan.test_fold[order[j]] = static_cast<int>((j + offset) % static_cast<std::size_t>(k));
    }
    offset = (offset + order.size()) % static_cast<std::size_t>(k);
  }

  plan.validation.assign(static_cast<std::size_t>(k), std::vector<bool>(labels.size(), false));
  for (int f = 0; f < k; ++f) {
    std::vector<std::vector<std::size_t>> pool(classes);
    std::size_t pool_size = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (plan.test_fold[i] != f) {
        pool[labels[i]].push_back(i);
        ++pool_size;
      }
    }
    std::vector<std::size_t> sizes(classes);
    for (std::size_t c = 0; c < classes; ++c) sizes[c] = pool[c].size();
    const auto total =
        static_cast<std::size_t>(std::llround(validation_fraction * static_cast<double>(pool_size)));
    const auto quota = largest_remainder(sizes, validation_fraction, total);
    for (std::size_t c = 0; c < classes; ++c) {
      std::mt19937_64 rng(derive_seed(seed, 0xa1 + static_cast<std::uint64_t>(f), c));
      std::shuffle(pool[c].begin(), pool[c].end(), rng);
      for (std::size_t j = 0; j < quota[c]; ++j) {
        plan.validation[static_cast<std::size_t>(f)][pool[c][j]] = true;
      }
    }
  }
  return plan;
}

ConfusionMatrix::ConfusionMatrix(std::vector<std::string> labels)
    : labels_(std::move(labels)), counts_(labels_.size() * labels_.size(), 0) {}

ConfusionMatrix::ConfusionMatrix(std::vector<std::string> labels,
                                 const std::vector<std::vector<long>>& counts)
    : ConfusionMatrix(std::move(labels)) {
  if (counts.size() != size()) throw InvalidArgument("confusion matrix row count mismatch");
  for (std::size_t a = 0; a < size(); ++a) {
    if (counts[a].size() != size()) throw InvalidArgument("confusion matrix column count mismatch");
    for (std::size_t p = 0; p < size(); ++p) add(a, p, counts[a][p]);
  }
}

void ConfusionMatrix::add(std::size_t actual, std::size_t predicted, long count) {
  if (actual >= size() || predicted >= size()) {
    throw InvalidArgument("class index outside the confusion matrix");
  }
  if (count < 0) throw InvalidArgument("negative confusion count");
  counts_[actual * size() + predicted] += count;
}

long ConfusionMatrix::at(std::size_t actual, std::size_t predicted) const {
  return counts_.at(actual * size() + predicted);
}

long ConfusionMatrix::row_sum(std::size_t actual) const {
  long s = 0;
  for (std::size_t p = 0; p < size(); ++p) s += at(actual, p);
  return s;
}

long ConfusionMatrix::column_sum(std::size_t predicted) const {
  long s = 0;
  for (std::size_t a = 0; a < size(); ++a) s += at(a, predicted);
  return s;
}

long ConfusionMatrix::total() const { return std::accumulate(counts_.begin(), counts_.end(), 0L); }

long ConfusionMatrix::trace() const {
  long s = 0;
  for (std::size_t c = 0; c < size(); ++c) s += at(c, c);
  return s;
}

namespace {

std::optional<double> ratio(long num, long den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

MetricsRow class_metrics(const ConfusionMatrix& cm, std::size_t c) {
  if (c >= cm.size()) throw InvalidArgument("class index outside the confusion matrix");
  const long tp = cm.at(c, c);
  const long fp = cm.column_sum(c) - tp;
  const long fn = cm.row_sum(c) - tp;
  const long tn = cm.total() - tp - fp - fn;
  MetricsRow m;
  m.sensitivity = ratio(tp, tp + fn);
  m.precision = ratio(tp, tp + fp);
  m.specificity = ratio(tn, tn + fp);
  if (m.sensitivity && m.precision && *m.sensitivity + *m.precision > 0.0) {
    m.f1 = 2.0 * *m.precision * *m.sensitivity / (*m.precision + *m.sensitivity);
  }
  return m;
}

OverallMetrics overall_metrics(const ConfusionMatrix& cm) {
  if (cm.size() == 0 || cm.total() == 0) throw InvalidArgument("empty confusion matrix");
  OverallMetrics o;
  o.accuracy = static_cast<double>(cm.trace()) / static_cast<double>(cm.total());

  std::vector<MetricsRow> rows;
  for (std::size_t c = 0; c < cm.size(); ++c) rows.push_back(class_metrics(cm, c));
  auto average = [&](auto field, bool weighted) -> std::optional<double> {
    double sum = 0.0;
    double weight = 0.0;
    for (std::size_t c = 0; c < rows.size(); ++c) {
      const std::optional<double>& v = rows[c].*field;
      if (!v) continue;
      const double w = weighted ? static_cast<double>(cm.row_sum(c)) : 1.0;
      sum += w * *v;
      weight += w;
    }
    if (weight == 0.0) return std::nullopt;
    return sum / weight;
  };
  for (const bool weighted : {true, false}) {
    MetricsRow& r = weighted ? o.weighted : o.macro;
    r.sensitivity = average(&MetricsRow::sensitivity, weighted);
    r.precision = average(&MetricsRow::precision, weighted);
    r.specificity = average(&MetricsRow::specificity, weighted);
    r.f1 = average(&MetricsRow::f1, weighted);
  }
  return o;
}

ConfusionMatrix aggregate_folds(std::span<const ConfusionMatrix> folds) {
  if (folds.empty()) throw InvalidArgument("no folds to aggregate");
  ConfusionMatrix out(folds.front().labels());
  for (const auto& f : folds) {
    if (f.labels() != out.labels()) throw InvalidArgument("folds have different class sets");
    for (std::size_t a = 0; a < f.size(); ++a) {
      for (std::size_t p = 0; p < f.size(); ++p) out.add(a, p, f.at(a, p));
    }
  }
  return out;
}

double average_index(double localization_accuracy, double severity_accuracy) {
  for (double v : {localization_accuracy, severity_accuracy}) {
    if (!(v >= 0.0 && v <= 1.0)) throw InvalidArgument("accuracies must lie in [0, 1]");
  }
  return (localization_accuracy + severity_accuracy) / 2.0;
}

std::string format_metric(const std::optional<double>& v) {
  return v ? fmt::format("{:.4f}", *v) : std::string("n/a");
}

std::string format_table(const ConfusionMatrix& cm, const std::string& title) {
  const OverallMetrics overall = overall_metrics(cm);
  std::size_t width = 8;
  for (const auto& l : cm.labels()) width = std::max(width, l.size() + 2);
  std::string out = fmt::format("{}\nOverall accuracy = {:.4f}\n", title, overall.accuracy);
  out += fmt::format("{:<{}}", "actual\\pred", width + 4);
  for (const auto& l : cm.labels()) out += fmt::format("{:>{}}", l, width);
  out += fmt::format("{:>8}{:>8}{:>8}{:>8}\n", "Sens", "Prec", "Spec", "F1");
  for (std::size_t a = 0; a < cm.size(); ++a) {
    out += fmt::format("{:<{}}", cm.labels()[a], width + 4);
    for (std::size_t p = 0; p < cm.size(); ++p) out += fmt::format("{:>{}}", cm.at(a, p), width);
    const MetricsRow m = class_metrics(cm, a);
    out += fmt::format("{:>8}{:>8}{:>8}{:>8}\n", format_metric(m.sensitivity),
                       format_metric(m.precision), format_metric(m.specificity), format_metric(m.f1));
  }
  // Overall is support-weighted; Macro is the unweighted class mean.
  for (const auto& [name, r] : {std::pair{"Overall", overall.weighted}, std::pair{"Macro", overall.macro}}) {
    out += fmt::format("{:<{}}", name, width + 4 + width * cm.size());
    out += fmt::format("{:>8}{:>8}{:>8}{:>8}\n", format_metric(r.sensitivity), format_metric(r.precision),
                       format_metric(r.specificity), format_metric(r.f1));
  }
  return out;
}

std::string format_csv(const ConfusionMatrix& cm, const std::string& title) {
  const OverallMetrics overall = overall_metrics(cm);
  std::string out = fmt::format("# {}\n# overall_accuracy,{:.4f}\nactual", title, overall.accuracy);
  for (const auto& l : cm.labels()) out += "," + l;
  out += ",sens,prec,spec,f1\n";
  for (std::size_t a = 0; a < cm.size(); ++a) {
    out += cm.labels()[a];
    for (std::size_t p = 0; p < cm.size(); ++p) out += fmt::format(",{}", cm.at(a, p));
    const MetricsRow m = class_metrics(cm, a);
    out += fmt::format(",{},{},{},{}\n", format_metric(m.sensitivity), format_metric(m.precision),
                       format_metric(m.specificity), format_metric(m.f1));
  }
  for (const auto& [name, r] : {std::pair{"overall", overall.weighted}, std::pair{"macro", overall.macro}}) {
    out += name;
    for (std::size_t p = 0; p < cm.size(); ++p) out += ",";
    out += fmt::format(",{},{},{},{}\n", format_metric(r.sensitivity), format_metric(r.precision),
                       format_metric(r.specificity), format_metric(r.f1));
  }
  return out;
}

}  // namespace dip::eval
