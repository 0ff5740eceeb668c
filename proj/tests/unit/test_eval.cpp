#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "dip/error.hpp"
#include "dip/eval.hpp"
#include "dip/reference_tables.hpp"
#include "dip/verify.hpp"

using namespace dip;
using namespace dip::eval;

namespace {

std::vector<std::size_t> balanced_labels(std::size_t classes, std::size_t per_class) {
  std::vector<std::size_t> labels;
  for (std::size_t c = 0; c < classes; ++c) labels.insert(labels.end(), per_class, c);
  return labels;
}

const reference::PublishedTable& table(const std::string& name) {
  for (const auto& t : reference::published_tables()) {
    if (t.name == name) return t;
  }
  throw std::runtime_error("no table " + name);
}

ConfusionMatrix matrix_of(const reference::PublishedTable& t) { return ConfusionMatrix(t.classes, t.counts); }

}  // namespace

TEST_CASE("stratified folds: 320 records in 4 classes") {
  const auto labels = balanced_labels(4, 80);
  const FoldPlan plan = make_folds(labels, 5, 0.1875, 17);
  std::vector<int> seen(labels.size(), 0);
  for (int f = 0; f < 5; ++f) {
    const auto test = plan.test_indices(f);
    const auto train = plan.train_indices(f);
    const auto val = plan.validation_indices(f);
    CHECK(test.size() == 64);
    CHECK(train.size() == 208);
    CHECK(val.size() == 48);
    std::vector<int> per_class(4, 0);
    for (auto i : test) {
      ++seen[i];
      ++per_class[labels[i]];
    }
    for (int c : per_class) CHECK(c == 16);
    std::set<std::size_t> all(test.begin(), test.end());
    all.insert(train.begin(), train.end());
    all.insert(val.begin(), val.end());
    CHECK(all.size() == labels.size());
  }
  for (int s : seen) CHECK(s == 1);
  const FoldPlan again = make_folds(labels, 5, 0.1875, 17);
  CHECK(again.test_fold == plan.test_fold);
}

TEST_CASE("stratified folds: 80 severity records") {
  const FoldPlan plan = make_folds(balanced_labels(4, 20), 5, 0.1875, 3);
  for (int f = 0; f < 5; ++f) {
    CHECK(plan.test_indices(f).size() == 16);
    CHECK(plan.validation_indices(f).size() == 12);
    CHECK(plan.train_indices(f).size() == 52);
  }
}

TEST_CASE("fold balance for uneven classes") {
  const std::vector<std::size_t> labels = [] {
    std::vector<std::size_t> l;
    l.insert(l.end(), 50, 0);
    l.insert(l.end(), 200, 1);
    l.insert(l.end(), 100, 2);
    l.insert(l.end(), 100, 3);
    l.insert(l.end(), 7, 4);
    return l;
  }();
  const FoldPlan plan = make_folds(labels, 5, 0.1875, 1);
  for (std::size_t c = 0; c < 5; ++c) {
    std::vector<int> per_fold(5, 0);
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == c) ++per_fold[plan.test_fold[i]];
    }
    CHECK(*std::max_element(per_fold.begin(), per_fold.end()) - *std::min_element(per_fold.begin(), per_fold.end()) <= 1);
  }
}

TEST_CASE("fold preconditions") {
  CHECK_THROWS_AS(make_folds(balanced_labels(2, 10), 1, 0.2, 1), InvalidArgument);
  CHECK_THROWS_AS(make_folds(balanced_labels(2, 4), 5, 0.2, 1), InvalidArgument);
  CHECK_THROWS_AS(make_folds(balanced_labels(2, 10), 5, 1.0, 1), InvalidArgument);
}

TEST_CASE("class metrics on the deterioration localization table") {
  const auto cm = matrix_of(table("deterioration localization"));
  const auto healthy = class_metrics(cm, 0);
  CHECK(*healthy.sensitivity == doctest::Approx(0.95));
  CHECK(*healthy.precision == doctest::Approx(0.962).epsilon(5e-4));
  CHECK(*healthy.specificity == doctest::Approx(0.9875).epsilon(5e-4));
  CHECK(*healthy.f1 == doctest::Approx(0.9560).epsilon(5e-4));
  const auto s1 = class_metrics(cm, 1);
  CHECK(*s1.precision == doctest::Approx(0.9277).epsilon(5e-4));
  // The row printed as 0.9625 sums to 81 in the table: 77/81 = 0.9506.
  CHECK(cm.row_sum(1) == 81);
  CHECK(*s1.sensitivity == doctest::Approx(77.0 / 81.0));
}

TEST_CASE("overall accuracy of the published tables") {
  const auto det = overall_metrics(matrix_of(table("deterioration localization")));
  CHECK(det.accuracy == doctest::Approx(0.9470).epsilon(5e-4));
  const auto dmg = overall_metrics(matrix_of(table("damage localization")));
  CHECK(dmg.accuracy == doctest::Approx(0.982).epsilon(5e-4));
}

TEST_CASE("perfect and identity matrices") {
  ConfusionMatrix cm({"a", "b", "c"});
  for (std::size_t c = 0; c < 3; ++c) cm.add(c, c, 7);
  for (std::size_t c = 0; c < 3; ++c) {
    const auto r = class_metrics(cm, c);
    CHECK(*r.sensitivity == 1.0);
    CHECK(*r.precision == 1.0);
    CHECK(*r.specificity == 1.0);
    CHECK(*r.f1 == 1.0);
  }
  CHECK(overall_metrics(cm).accuracy == 1.0);
  CHECK_THROWS_AS(overall_metrics(ConfusionMatrix({"a", "b"})), InvalidArgument);
}

TEST_CASE("undefined metrics are reported as n/a") {
  ConfusionMatrix cm({"a", "b"});
  cm.add(0, 0, 5);
  const auto r = class_metrics(cm, 1);
  CHECK_FALSE(r.sensitivity.has_value());
  CHECK_FALSE(r.precision.has_value());
  CHECK(format_metric(r.sensitivity) == "n/a");
  const auto o = overall_metrics(cm);
  CHECK(*o.macro.sensitivity == 1.0);
}

TEST_CASE("metric identities on random matrices") {
  std::mt19937_64 rng(12);
  std::uniform_int_distribution<long> u(0, 30);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = 2 + trial % 5;
    std::vector<std::string> names;
    for (std::size_t i = 0; i < k; ++i) names.push_back(std::to_string(i));
    ConfusionMatrix cm(names);
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < k; ++j) cm.add(i, j, u(rng) + (i == j ? 1 : 0));
    }
    for (std::size_t c = 0; c < k; ++c) {
      const long tp = cm.at(c, c), fp = cm.column_sum(c) - tp, fn = cm.row_sum(c) - tp;
      const long tn = cm.total() - tp - fp - fn;
      CHECK(tp + fp + fn + tn == cm.total());
      const auto r = class_metrics(cm, c);
      CHECK(*r.sensitivity == doctest::Approx(static_cast<double>(tp) / (tp + fn)));
      CHECK(*r.specificity == doctest::Approx(static_cast<double>(tn) / (tn + fp)));
      const double p = *r.precision, s = *r.sensitivity;
      CHECK(*r.f1 == doctest::Approx(2 * p * s / (p + s)));
      CHECK(*r.f1 >= std::min(p, s) - 1e-15);
      CHECK(*r.f1 <= std::max(p, s) + 1e-15);
    }
    const auto o = overall_metrics(cm);
    CHECK(o.accuracy == doctest::Approx(static_cast<double>(cm.trace()) / cm.total()));
    // Support-weighted sensitivity is the accuracy.
    CHECK(*o.weighted.sensitivity == doctest::Approx(o.accuracy));
  }
}

TEST_CASE("fold aggregation") {
  std::vector<ConfusionMatrix> folds;
  for (int f = 0; f < 5; ++f) {
    ConfusionMatrix cm({"a", "b", "c", "d"});
    for (std::size_t c = 0; c < 4; ++c) {
      cm.add(c, c, 15);
      cm.add(c, (c + 1) % 4, 1);
    }
    folds.push_back(cm);
  }
  const auto sum = aggregate_folds(folds);
  for (std::size_t c = 0; c < 4; ++c) CHECK(sum.row_sum(c) == 80);
  CHECK(aggregate_folds(std::vector<ConfusionMatrix>{folds[0]}) == folds[0]);
  const ConfusionMatrix zero({"a", "b", "c", "d"});
  CHECK(aggregate_folds(std::vector<ConfusionMatrix>{zero, zero}).total() == 0);
  CHECK_THROWS_AS(aggregate_folds(std::vector<ConfusionMatrix>{zero, ConfusionMatrix({"a", "b"})}), InvalidArgument);
}

TEST_CASE("average index") {
  CHECK(format_metric(average_index(0.95, 0.975)) == "0.9625");
  CHECK(std::abs(average_index(0.95, 0.975) - 0.9625) < 4 * std::numeric_limits<double>::epsilon());
  CHECK(average_index(1.0, 1.0) == 1.0);
  CHECK(average_index(0.0, 1.0) == 0.5);
  CHECK_THROWS_AS(average_index(1.2, 0.5), InvalidArgument);
}

TEST_CASE("published tables recompute within tolerance apart from pinned misprints") {
  const auto v = verify::verify_published_tables();
  CHECK(v.unexpected.empty());
  CHECK(v.missing.empty());
  CHECK(v.passed());
  CHECK(reference::published_tables().size() == 8);
  // F1 slips are flagged but never fail.
  const bool has_f1 = std::any_of(v.flags.begin(), v.flags.end(), [](const auto& f) { return f.metric == "F1"; });
  CHECK(has_f1);
}

TEST_CASE("a tampered metric formula fails the table oracle") {
  const auto tampered = [](const ConfusionMatrix& cm, std::size_t c) {
    MetricsRow r = class_metrics(cm, c);
    // Precision computed with the row sum instead of the column sum.
    r.precision = static_cast<double>(cm.at(c, c)) / static_cast<double>(cm.row_sum(c));
    return r;
  };
  const auto v = verify::verify_published_tables(tampered);
  CHECK_FALSE(v.passed());
  const bool hits_first =
      std::any_of(v.unexpected.begin(), v.unexpected.end(),
                  [](const auto& f) { return f.table == "deterioration localization"; });
  CHECK(hits_first);
}

TEST_CASE("report tables carry counts and metric columns") {
  const auto cm = matrix_of(table("deterioration localization"));
  const std::string text = format_table(cm, "det");
  CHECK(text.find("Overall") != std::string::npos);
  CHECK(text.find("Sens") != std::string::npos);
  CHECK(text.find("Macro") != std::string::npos);
  const std::string csv = format_csv(cm, "det");
  CHECK(csv.find("Healthy,76,") != std::string::npos);
}
