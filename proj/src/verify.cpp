#include "dip/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <fmt/format.h>

#include "dip/neural/layers.hpp"
#include "dip/oracle.hpp"
#include "dip/reference_tables.hpp"
#include "dip/seed.hpp"
#include "dip/stransform.hpp"

namespace dip::verify {

const std::vector<std::string>& known_misprints() {
  static const std::vector<std::string> keys{
      "deterioration localization | Scenario 1 | Sens",
      "damage localization | Healthy | Spec",
      "damage severity, story 1 | State 3 | Prec",
      "damage severity, story 1 | State 4 | Prec",
      "damage severity, story 1 | State 5 | Spec",
      "damage severity, story 1 | Overall | Spec",
  };
  return keys;
}

TableVerification verify_published_tables(const ClassMetricFn& metric) {
  TableVerification out;
  auto compare = [&](const std::string& table, const std::string& row, const char* name,
                     double printed, const std::optional<double>& value) {
    const double recomputed = value.value_or(std::nan(""));
    if (!(std::abs(printed - recomputed) <= kTableTolerance)) {
      out.flags.push_back({table, row, name, printed, recomputed});
    }
  };

  for (const auto& t : reference::published_tables()) {
    const eval::ConfusionMatrix cm(t.classes, t.counts);
    eval::MetricsRow overall;
    double sums[4] = {0, 0, 0, 0};
    double weight = 0.0;
    for (std::size_t c = 0; c < cm.size(); ++c) {
      const eval::MetricsRow m = metric(cm, c);
      const auto& p = t.rows[c];
      compare(t.name, t.classes[c], "Sens", p.sensitivity, m.sensitivity);
      compare(t.name, t.classes[c], "Prec", p.precision, m.precision);
      compare(t.name, t.classes[c], "Spec", p.specificity, m.specificity);
      compare(t.name, t.classes[c], "F1", p.f1, m.f1);
      const double w = static_cast<double>(cm.row_sum(c));
      sums[0] += w * m.sensitivity.value_or(std::nan(""));
      sums[1] += w * m.precision.value_or(std::nan(""));
      sums[2] += w * m.specificity.value_or(std::nan(""));
      sums[3] += w * m.f1.value_or(std::nan(""));
      weight += w;
    }
    compare(t.name, "Overall", "Sens", t.overall.sensitivity, sums[0] / weight);
    compare(t.name, "Overall", "Prec", t.overall.precision, sums[1] / weight);
    compare(t.name, "Overall", "Spec", t.overall.specificity, sums[2] / weight);
    compare(t.name, "Overall", "F1", t.overall.f1, sums[3] / weight);
    compare(t.name, "Overall", "Accuracy", t.printed_accuracy,
            static_cast<double>(cm.trace()) / static_cast<double>(cm.total()));
  }

  const auto& known = known_misprints();
  for (const auto& f : out.flags) {
    if (f.metric == "F1") continue;
    if (std::find(known.begin(), known.end(), f.key()) == known.end()) out.unexpected.push_back(f);
  }
  for (const auto& k : known) {
    const bool seen = std::any_of(out.flags.begin(), out.flags.end(),
                                  [&](const CellFlag& f) { return f.key() == k; });
    if (!seen) out.missing.push_back(k);
  }
  return out;
}

std::string format_table_verification(const TableVerification& v) {
  std::string s;
  for (const auto& f : v.flags) {
    const auto& known = known_misprints();
    const char* tag = f.metric == "F1" ? "inconsistent F1"
                      : std::find(known.begin(), known.end(), f.key()) != known.end()
                          ? "known misprint"
                          : "UNEXPECTED";
    s += fmt::format("  [{}] {}: printed {:.4f}, recomputed {:.4f}\n", tag, f.key(), f.printed,
                     f.recomputed);
  }
  for (const auto& k : v.missing) s += fmt::format("  [MISSING] expected misprint not seen: {}\n", k);
  return s;
}

// ---------------------------------------------------------------------------

StockwellReport check_stockwell(const std::vector<std::size_t>& lengths, int signals_per_length,
                                std::uint64_t seed) {
  StockwellReport r;
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t li = 0; li < lengths.size(); ++li) {
    const std::size_t n = lengths[li];
    for (int s = 0; s < signals_per_length; ++s) {
      std::mt19937_64 rng(derive_seed(seed, n, static_cast<std::uint64_t>(s)));
      std::vector<double> x(n);
      for (double& v : x) v = normal(rng);
      const st::StMatrix fast = st::stockwell(x, 1.0);
      const ComplexMatrix direct = oracle::direct_stockwell(x);
      r.max_definition_error =
          std::max(r.max_definition_error, (fast.values - direct).norm() / direct.norm());

      const auto spectrum = oracle::direct_dft(x);
      double diff = 0.0, ref = 0.0;
      for (Eigen::Index f = 0; f <= static_cast<Eigen::Index>(n / 2); ++f) {
        const std::complex<double> marginal = fast.values.row(f).sum() / static_cast<double>(n);
        diff += std::norm(marginal - spectrum[static_cast<std::size_t>(f)]);
        ref += std::norm(spectrum[static_cast<std::size_t>(f)]);
      }
      r.max_marginal_error = std::max(r.max_marginal_error, std::sqrt(diff / ref));
      ++r.signals;
    }
  }
  return r;
}

namespace {

using nn::Layer;
using nn::Mode;
using nn::Tensor;

Tensor random_tensor(const nn::Shape& shape, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Tensor t(shape);
  for (double& v : t.values()) v = normal(rng);
  return t;
}

double dot(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double relative_error(const std::vector<double>& a, const std::vector<double>& n) {
  double diff = 0.0, na = 0.0, nn = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - n[i]) * (a[i] - n[i]);
    na += a[i] * a[i];
    nn += n[i] * n[i];
  }
  const double scale = std::max({std::sqrt(na), std::sqrt(nn), 1e-300});
  return std::sqrt(diff) / scale;
}

// Projects the layer output onto a random direction r, so L = <r, f(x)> and
// dL/dx is the layer's backward applied to r.
double check_layer(Layer& layer, Tensor x, std::mt19937_64& rng, double h) {
  const Tensor y = layer.forward(x, Mode::train);
  const Tensor r = random_tensor(y.shape(), rng);
  auto params = layer.parameters();
  for (auto& p : params) p.grad->fill(0.0);
  const Tensor dx = layer.backward(r);

  std::vector<double> analytic(dx.values().begin(), dx.values().end());
  for (auto& p : params) analytic.insert(analytic.end(), p.grad->values().begin(), p.grad->values().end());

  std::vector<double> numeric;
  auto probe = [&](double& slot) {
    const double saved = slot;
    slot = saved + h;
    const double up = dot(r, layer.forward(x, Mode::train));
    slot = saved - h;
    const double down = dot(r, layer.forward(x, Mode::train));
    slot = saved;
    numeric.push_back((up - down) / (2.0 * h));
  };
  for (std::size_t i = 0; i < x.size(); ++i) probe(x[i]);
  for (auto& p : params) {
    for (std::size_t i = 0; i < p.value->size(); ++i) probe((*p.value)[i]);
  }
  return relative_error(analytic, numeric);
}

// Mean cross-entropy of softmax(z) against labels; gradient (p - onehot) / N.
double check_softmax_cross_entropy(std::mt19937_64& rng, double h) {
  const std::size_t n = 4, k = 5;
  Tensor z = random_tensor({n, k}, rng);
  std::vector<std::size_t> labels(n);
  for (auto& l : labels) l = std::uniform_int_distribution<std::size_t>(0, k - 1)(rng);
  auto loss = [&](const Tensor& logits) {
    const Tensor p = nn::softmax(logits);
    double s = 0.0;
    for (std::size_t r = 0; r < n; ++r) s += nn::cross_entropy(p.values().subspan(r * k, k), labels[r]);
    return s / static_cast<double>(n);
  };
  const Tensor p = nn::softmax(z);
  std::vector<double> analytic(n * k);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < k; ++c) {
      analytic[r * k + c] = (p[r * k + c] - (c == labels[r] ? 1.0 : 0.0)) / static_cast<double>(n);
    }
  }
  std::vector<double> numeric;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double saved = z[i];
    z[i] = saved + h;
    const double up = loss(z);
    z[i] = saved - h;
    const double down = loss(z);
    z[i] = saved;
    numeric.push_back((up - down) / (2.0 * h));
  }
  return relative_error(analytic, numeric);
}

// Values at least `gap` apart so that max selection and relu kinks stay put
// under a perturbation of size h.
Tensor separated_tensor(const nn::Shape& shape, std::mt19937_64& rng, double gap) {
  Tensor t(shape);
  std::vector<double> v(t.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] = (static_cast<double>(i) - static_cast<double>(v.size()) / 2.0 + 0.5) * gap;
  }
  std::shuffle(v.begin(), v.end(), rng);
  std::copy(v.begin(), v.end(), t.data());
  return t;
}

}  // namespace

std::vector<GradientReport> check_gradients(int instances, std::uint64_t seed, double step) {
  std::vector<GradientReport> reports;
  auto run = [&](const std::string& name, auto&& one) {
    GradientReport r{name, 0, 0.0};
    for (int i = 0; i < instances; ++i) {
      std::mt19937_64 rng(derive_seed(seed, std::hash<std::string>{}(name), static_cast<std::uint64_t>(i)));
      r.max_relative_error = std::max(r.max_relative_error, one(rng, i));
      ++r.instances;
    }
    reports.push_back(r);
  };

  run("conv", [&](std::mt19937_64& rng, int i) {
    const int stride = 1 + i % 2;
    nn::Conv2d layer(nn::ConvSpec{3, 3, 2 + i % 2, stride, 1, i % 2}, 2, rng);
    return check_layer(layer, random_tensor({2, 2, 5, 6}, rng), rng, step);
  });
  run("batchnorm", [&](std::mt19937_64& rng, int i) {
    nn::BatchNorm layer(nn::BatchNormSpec{}, 3);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (double& g : layer.gamma().values()) g = 1.0 + 0.3 * normal(rng);
    for (double& b : layer.beta().values()) b = 0.3 * normal(rng);
    const nn::Shape shape = i % 2 == 0 ? nn::Shape{4, 3, 2, 3} : nn::Shape{6, 3};
    return check_layer(layer, random_tensor(shape, rng), rng, step);
  });
  run("relu", [&](std::mt19937_64& rng, int) {
    nn::Relu layer;
    return check_layer(layer, separated_tensor({3, 2, 4}, rng, 0.05), rng, step);
  });
  run("maxpool", [&](std::mt19937_64& rng, int i) {
    nn::MaxPool2d layer(i % 2 == 0 ? nn::MaxPoolSpec{2, 4, 2, 4} : nn::MaxPoolSpec{2, 2, 1, 2});
    return check_layer(layer, separated_tensor({2, 2, 4, 8}, rng, 0.01), rng, step);
  });
  run("fullyconnected", [&](std::mt19937_64& rng, int) {
    nn::Dense layer(nn::DenseSpec{5}, 24, rng);
    return check_layer(layer, random_tensor({3, 2, 3, 4}, rng), rng, step);
  });
  run("softmax", [&](std::mt19937_64& rng, int) {
    nn::Softmax layer;
    return check_layer(layer, random_tensor({3, 6}, rng), rng, step);
  });
  run("softmax+crossentropy", [&](std::mt19937_64& rng, int) {
    return check_softmax_cross_entropy(rng, step);
  });
  return reports;
}

std::vector<CheckResult> run_all(std::uint64_t seed) {
  std::vector<CheckResult> out;

  const auto tables = verify_published_tables();
  out.push_back({"published confusion matrices recompute", tables.passed(),
                 fmt::format("{} flagged cells, {} unexpected, {} missing", tables.flags.size(),
                             tables.unexpected.size(), tables.missing.size())});

  const auto st = check_stockwell({8, 16, 64, 128}, 100, seed);
  out.push_back({"stockwell fft vs direct summation", st.max_definition_error < kStockwellTolerance,
                 fmt::format("max relative error {:.3e} over {} signals", st.max_definition_error,
                             st.signals)});
  out.push_back({"stockwell time marginal vs dft", st.max_marginal_error < kStockwellTolerance,
                 fmt::format("max relative error {:.3e}", st.max_marginal_error)});

  for (const auto& g : check_gradients(20, seed)) {
    out.push_back({"gradient " + g.layer, g.max_relative_error < kGradientTolerance,
                   fmt::format("max relative error {:.3e} over {} instances", g.max_relative_error,
                               g.instances)});
  }

  const double avg = eval::average_index(0.95, 0.975);
  // 0.95 and 0.975 are not binary fractions; the mean of their doubles lands
  // one ulp below double(0.9625). Exact at the reported four decimals.
  const std::string shown = fmt::format("{:.4f}", avg);
  const bool ok = shown == "0.9625" && std::abs(avg - 0.9625) <= 4 * std::numeric_limits<double>::epsilon();
  out.push_back({"average index", ok, fmt::format("(0.95, 0.975) -> {} (binary {:.17g})", shown, avg)});
  return out;
}

}  // namespace dip::verify
