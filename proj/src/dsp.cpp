#include "dip/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

#include <Eigen/Eigenvalues>

#include "dip/error.hpp"

namespace dip::dsp {

namespace {

using cplx = std::complex<double>;

double section_dc_gain(const Biquad& s) { return (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2); }

struct SectionState {
  double s1 = 0.0;
  double s2 = 0.0;
};

// Steady state of every section for a unit constant input to the cascade.
std::vector<SectionState> unit_step_state(const LowpassFilter& filter) {
  std::vector<SectionState> states;
  states.reserve(filter.sections.size());
  double u = 1.0;
  for (const auto& s : filter.sections) {
    const double g = section_dc_gain(s);
    states.push_back({(g - s.b0) * u, (s.b2 - s.a2 * g) * u});
    u *= g;
  }
  return states;
}

void run_cascade(const LowpassFilter& filter, std::vector<SectionState> states,
                 std::vector<double>& data) {
  for (std::size_t k = 0; k < filter.sections.size(); ++k) {
    const Biquad& s = filter.sections[k];
    double s1 = states[k].s1;
    double s2 = states[k].s2;
    for (double& v : data) {
      const double x = v;
      const double y = s.b0 * x + s1;
      s1 = s.b1 * x - s.a1 * y + s2;
      s2 = s.b2 * x - s.a2 * y;
      v = y;
    }
  }
}

std::vector<SectionState> scaled(std::vector<SectionState> states, double factor) {
  for (auto& st : states) {
    st.s1 *= factor;
    st.s2 *= factor;
  }
  return states;
}

}  // namespace

LowpassFilter design_lowpass(const FilterSpec& spec, double sampling_rate_hz) {
  if (spec.order < 1) throw InvalidArgument("filter order must be >= 1");
  if (!(spec.passband_ripple_db > 0.0)) throw InvalidArgument("passband ripple must be > 0 dB");
  if (!(sampling_rate_hz > 0.0)) throw InvalidArgument("sampling rate must be > 0");
  if (!(spec.cutoff_hz > 0.0) || spec.cutoff_hz >= sampling_rate_hz / 2.0) {
    throw InvalidArgument("invalid cutoff: " + std::to_string(spec.cutoff_hz) +
                          " Hz must lie in (0, " + std::to_string(sampling_rate_hz / 2.0) + ") Hz");
  }

  const int n = spec.order;
  const double pi = std::numbers::pi;
  const double eps = std::sqrt(std::pow(10.0, spec.passband_ripple_db / 10.0) - 1.0);
  const double mu = std::asinh(1.0 / eps) / n;
  const double fs2 = 2.0 * sampling_rate_hz;
  const double warped = fs2 * std::tan(pi * spec.cutoff_hz / sampling_rate_hz);

  auto digital_pole = [&](int k) {
    const double theta = pi * (2.0 * k - 1.0) / (2.0 * n);
    const cplx s = warped * cplx(-std::sinh(mu) * std::sin(theta), std::cosh(mu) * std::cos(theta));
    return (1.0 + s / fs2) / (1.0 - s / fs2);
  };

  LowpassFilter filter;
  filter.order = n;
  filter.cutoff_hz = spec.cutoff_hz;
  filter.sampling_rate_hz = sampling_rate_hz;
  filter.passband_ripple_db = spec.passband_ripple_db;

  std::vector<std::pair<double, Biquad>> sections;
  for (int k = 1; k <= n / 2; ++k) {
    const cplx z = digital_pole(k);
    Biquad b;
    b.a1 = -2.0 * z.real();
    b.a2 = std::norm(z);
    const double g = (1.0 + b.a1 + b.a2) / 4.0;
    b.b0 = g;
    b.b1 = 2.0 * g;
    b.b2 = g;
    sections.emplace_back(std::abs(z), b);
  }
  if (n % 2 == 1) {
    const double zr = digital_pole((n + 1) / 2).real();
    Biquad b;
    b.a1 = -zr;
    const double g = (1.0 - zr) / 2.0;
    b.b0 = g;
    b.b1 = g;
    sections.emplace_back(std::abs(zr), b);
  }
  // Poles nearest the unit circle last.
  std::stable_sort(sections.begin(), sections.end(),
                   [](const auto& l, const auto& r) { return l.first < r.first; });
  for (auto& [radius, b] : sections) filter.sections.push_back(b);

  if (n % 2 == 0) {
    const double dc = 1.0 / std::sqrt(1.0 + eps * eps);
    auto& first = filter.sections.front();
    first.b0 *= dc;
    first.b1 *= dc;
    first.b2 *= dc;
  }
  return filter;
}

std::complex<double> frequency_response(const LowpassFilter& filter, double freq_hz) {
  const double w = 2.0 * std::numbers::pi * freq_hz / filter.sampling_rate_hz;
  const cplx z1 = std::polar(1.0, -w);
  const cplx z2 = z1 * z1;
  cplx h = 1.0;
  for (const auto& s : filter.sections) {
    h *= (s.b0 + s.b1 * z1 + s.b2 * z2) / (1.0 + s.a1 * z1 + s.a2 * z2);
  }
  return h;
}

std::vector<double> filter_causal(const LowpassFilter& filter, std::span<const double> signal) {
  std::vector<double> out(signal.begin(), signal.end());
  run_cascade(filter, std::vector<SectionState>(filter.sections.size()), out);
  return out;
}

std::vector<double> apply_zero_phase(const LowpassFilter& filter, std::span<const double> signal) {
  const std::size_t pad = filter.pad_length();
  const std::size_t n = signal.size();
  if (n <= pad) {
    throw InvalidArgument("signal of length " + std::to_string(n) +
                          " is too short for zero-phase filtering (needs > " +
                          std::to_string(pad) + " samples)");
  }

  std::vector<double> ext(n + 2 * pad);
  for (std::size_t i = 1; i <= pad; ++i) {
    ext[pad - i] = 2.0 * signal[0] - signal[i];
    ext[pad + n - 1 + i] = 2.0 * signal[n - 1] - signal[n - 1 - i];
  }
  std::copy(signal.begin(), signal.end(), ext.begin() + static_cast<std::ptrdiff_t>(pad));

  const auto unit = unit_step_state(filter);
  run_cascade(filter, scaled(unit, ext.front()), ext);
  std::reverse(ext.begin(), ext.end());
  run_cascade(filter, scaled(unit, ext.front()), ext);
  std::reverse(ext.begin(), ext.end());

  return {ext.begin() + static_cast<std::ptrdiff_t>(pad),
          ext.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

std::vector<double> standardize(std::span<const double> signal) {
  const std::size_t n = signal.size();
  if (n < 2) throw InvalidArgument("degenerate signal: need at least 2 samples to standardize");
  const double mean = std::accumulate(signal.begin(), signal.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  double peak = 0.0;
  for (double v : signal) {
    ss += (v - mean) * (v - mean);
    peak = std::max(peak, std::abs(v));
  }
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  if (!std::isfinite(sd)) throw NumericError("non-finite values in signal");
  // Rounding noise from filtering a constant sits near 1e-14 of the peak.
  if (sd <= 1e-10 * peak || sd == 0.0) {
    throw InvalidArgument("degenerate signal: standard deviation is zero");
  }
  std::vector<double> out(n);
  std::transform(signal.begin(), signal.end(), out.begin(),
                 [&](double v) { return (v - mean) / sd; });
  return out;
}

Matrix channel_covariance(const Matrix& record) {
  const Eigen::Index n = record.cols();
  if (n < 2) throw InvalidArgument("covariance needs at least 2 samples");
  const Eigen::VectorXd mean = record.rowwise().mean();
  const Matrix centered = record.colwise() - mean;
  return (centered * centered.transpose()) / static_cast<double>(n - 1);
}

WhiteningTransform fit_zca(std::span<const Matrix> records, double epsilon) {
  if (records.empty()) throw InvalidArgument("ZCA fit needs at least one record");
  if (!(epsilon >= 0.0)) throw InvalidArgument("ZCA epsilon must be >= 0");
  const Eigen::Index channels = records.front().rows();
  if (channels < 2) throw InvalidArgument("ZCA needs at least 2 channels");

  Eigen::Index total = 0;
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(channels);
  for (const auto& r : records) {
    if (r.rows() != channels) throw ShapeError("ZCA fit: records have differing channel counts");
    sum += r.rowwise().sum();
    total += r.cols();
  }
  if (total <= channels) {
    throw InvalidArgument("ZCA fit: pooled sample count must exceed the channel count");
  }
  const Eigen::VectorXd mean = sum / static_cast<double>(total);

  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(channels, channels);
  for (const auto& r : records) {
    const Matrix centered = r.colwise() - mean;
    cov.noalias() += centered * centered.transpose();
  }
  cov /= static_cast<double>(total - 1);
  if (!cov.allFinite()) throw NumericError("ZCA fit: channel covariance is not finite");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) throw NumericError("ZCA fit: eigendecomposition failed");
  const Eigen::VectorXd scale =
      (eig.eigenvalues().array().max(0.0) + epsilon).rsqrt().matrix();
  const Eigen::MatrixXd& e = eig.eigenvectors();
  Eigen::MatrixXd w = e * scale.asDiagonal() * e.transpose();
  w = 0.5 * (w + w.transpose()).eval();
  if (!w.allFinite()) throw NumericError("ZCA fit: whitening matrix is not finite");

  return {Matrix(w), epsilon};
}

Matrix apply_whitening(const WhiteningTransform& transform, const Matrix& record) {
  if (transform.matrix.cols() != record.rows()) {
    throw ShapeError("whitening transform expects " + std::to_string(transform.matrix.cols()) +
                     " channels, record has " + std::to_string(record.rows()));
  }
  return transform.matrix * record;
}

}  // namespace dip::dsp
