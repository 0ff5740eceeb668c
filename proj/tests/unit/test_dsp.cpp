#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "dip/dsp.hpp"
#include "dip/error.hpp"
#include "dip/oracle.hpp"

using namespace dip;

namespace {

oracle::Polynomials polynomials(const dsp::LowpassFilter& f) {
  std::vector<std::array<double, 5>> s;
  for (const auto& b : f.sections) s.push_back({b.b0, b.b1, b.b2, b.a1, b.a2});
  return oracle::expand_sections(s);
}

double gain(const dsp::LowpassFilter& f, double hz) {
  return std::abs(oracle::evaluate_rational(polynomials(f), 2.0 * std::numbers::pi * hz / f.sampling_rate_hz));
}

dsp::LowpassFilter default_filter(double fs = 200.0) {
  dsp::FilterSpec spec;
  spec.cutoff_hz = 0.2 * fs;
  return dsp::design_lowpass(spec, fs);
}

std::vector<double> tone(std::size_t n, double hz, double fs, double phase = 0.0) {
  std::vector<double> x(n);
  for (std::size_t k = 0; k < n; ++k) x[k] = std::sin(2.0 * std::numbers::pi * hz * k / fs + phase);
  return x;
}

double covariance(const Matrix& r, int a, int b) {
  const double ma = r.row(a).mean(), mb = r.row(b).mean();
  return ((r.row(a).array() - ma) * (r.row(b).array() - mb)).sum() / static_cast<double>(r.cols() - 1);
}

Matrix correlated_pair(std::size_t n, double rho, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Matrix r(2, static_cast<Eigen::Index>(n));
  for (Eigen::Index k = 0; k < r.cols(); ++k) {
    const double a = g(rng), b = g(rng);
    r(0, k) = a;
    r(1, k) = rho * a + std::sqrt(1.0 - rho * rho) * b;
  }
  return r;
}

}  // namespace

TEST_CASE("lowpass response: passband ripple and stopband attenuation") {
  for (double fs : {200.0, 320.0}) {
    const auto f = default_filter(fs);
    CHECK(f.order == 12);
    CHECK(f.sections.size() == 6);
    const double floor = std::pow(10.0, -1.0 / 20.0);
    CHECK(gain(f, 0.0) >= floor - 1e-12);
    CHECK(gain(f, 0.0) <= 1.0 + 1e-12);
    for (int i = 0; i <= 200; ++i) {
      const double g = gain(f, f.cutoff_hz * i / 200.0);
      CHECK(g >= floor - 1e-9);
      CHECK(g <= 1.0 + 1e-9);
    }
    CHECK(20.0 * std::log10(gain(f, 2.0 * f.cutoff_hz)) <= -60.0);
    // Library response agrees with the expanded polynomial oracle.
    for (double hz : {1.0, 10.0, 0.5 * f.cutoff_hz, f.cutoff_hz, 1.5 * f.cutoff_hz}) {
      CHECK(std::abs(dsp::frequency_response(f, hz)) == doctest::Approx(gain(f, hz)).epsilon(1e-9));
    }
  }
}

TEST_CASE("every biquad is stable") {
  for (double fs : {200.0, 320.0}) {
    for (const auto& s : default_filter(fs).sections) {
      const std::complex<double> disc = std::sqrt(std::complex<double>(s.a1 * s.a1 - 4.0 * s.a2));
      const std::complex<double> p1 = (-s.a1 + disc) / 2.0, p2 = (-s.a1 - disc) / 2.0;
      CHECK(std::abs(p1) < 1.0 - 1e-9);
      CHECK(std::abs(p2) < 1.0 - 1e-9);
    }
  }
}

TEST_CASE("invalid cutoffs are rejected") {
  dsp::FilterSpec spec;
  spec.cutoff_hz = 100.0;
  CHECK_THROWS_AS(dsp::design_lowpass(spec, 200.0), InvalidArgument);
  spec.cutoff_hz = 0.0;
  CHECK_THROWS_AS(dsp::design_lowpass(spec, 200.0), InvalidArgument);
  spec.cutoff_hz = 40.0;
  spec.passband_ripple_db = 0.0;
  CHECK_THROWS_AS(dsp::design_lowpass(spec, 200.0), InvalidArgument);
}

TEST_CASE("zero-phase filtering: zero, constant and length contracts") {
  const auto f = default_filter();
  const std::vector<double> zero(512, 0.0);
  for (double v : dsp::apply_zero_phase(f, zero)) CHECK(v == 0.0);
  const double dc = std::pow(10.0, -1.0 / 20.0);  // even order: DC sits at the ripple floor
  const auto c = dsp::apply_zero_phase(f, std::vector<double>(512, 2.0));
  CHECK(c.size() == 512);
  for (double v : c) CHECK(v == doctest::Approx(2.0 * dc * dc).epsilon(1e-9));
  CHECK_THROWS_AS(dsp::apply_zero_phase(f, std::vector<double>(36, 1.0)), InvalidArgument);
  CHECK_NOTHROW(dsp::apply_zero_phase(f, std::vector<double>(37, 1.0)));
}

TEST_CASE("zero-phase filtering of a passband tone: amplitude and lag") {
  const auto f = default_filter();
  const double fs = 200.0, hz = 0.1 * f.cutoff_hz;
  const std::size_t n = 2048;
  const auto x = tone(n, hz, fs, 0.3);
  const auto y = dsp::apply_zero_phase(f, x);
  // Sinusoid fit over a whole number of periods (30 x 50 samples) on the interior.
  double ss = 0, sc = 0, xs = 0;
  for (std::size_t k = 256; k < 256 + 1500; ++k) {
    const double ph = 2.0 * std::numbers::pi * hz * k / fs + 0.3;
    ss += y[k] * std::sin(ph);
    sc += y[k] * std::cos(ph);
    xs += std::sin(ph) * std::sin(ph);
  }
  const double amp = std::hypot(ss, sc) / xs;
  CHECK(std::abs(20.0 * std::log10(amp)) <= 2.0);
  CHECK(std::abs(std::atan2(sc, ss)) < 1e-3);  // no phase shift
  // Cross-correlation peak at lag 0.
  int best_lag = 99;
  double best = -1e300;
  for (int lag = -20; lag <= 20; ++lag) {
    double acc = 0.0;
    for (std::size_t k = 256; k < n - 256; ++k) acc += x[k] * y[k + lag];
    if (acc > best) {
      best = acc;
      best_lag = lag;
    }
  }
  CHECK(best_lag == 0);
}

TEST_CASE("zero-phase filtering attenuates a tone at twice the cutoff by 120 dB") {
  const auto f = default_filter();
  const std::size_t n = 4096;
  const auto x = tone(n, 2.0 * f.cutoff_hz, 200.0, 0.1);
  const auto y = dsp::apply_zero_phase(f, x);
  double ex = 0, ey = 0;
  for (std::size_t k = 512; k < n - 512; ++k) {
    ex += x[k] * x[k];
    ey += y[k] * y[k];
  }
  CHECK(10.0 * std::log10(ey / ex) <= -120.0);
}

TEST_CASE("zero-phase filtering is linear") {
  const auto f = default_filter();
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> a(700), b(700), s(700);
    for (std::size_t i = 0; i < a.size(); ++i) {
      a[i] = g(rng);
      b[i] = g(rng);
      s[i] = a[i] + b[i];
    }
    const auto fa = dsp::apply_zero_phase(f, a), fb = dsp::apply_zero_phase(f, b), fs = dsp::apply_zero_phase(f, s);
    double num = 0, den = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      num += std::pow(fs[i] - fa[i] - fb[i], 2);
      den += fs[i] * fs[i];
    }
    CHECK(std::sqrt(num / den) < 1e-10);
  }
}

TEST_CASE("standardize") {
  const auto y = dsp::standardize(std::vector<double>{1.0, 2.0, 3.0});
  CHECK(y[0] == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(y[1] == doctest::Approx(0.0));
  CHECK(y[2] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(dsp::standardize(std::vector<double>(10, 4.0)), InvalidArgument);

  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-50.0, 300.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> x(1024);
    for (auto& v : x) v = u(rng);
    const auto z = dsp::standardize(x);
    double m = 0;
    for (double v : z) m += v;
    m /= z.size();
    double var = 0;
    for (double v : z) var += (v - m) * (v - m);
    CHECK(std::abs(m) < 1e-12);
    CHECK(std::abs(std::sqrt(var / (z.size() - 1)) - 1.0) < 1e-12);
    const auto again = dsp::standardize(z);
    for (std::size_t i = 0; i < z.size(); ++i) CHECK(std::abs(again[i] - z[i]) < 1e-12);
  }
}

TEST_CASE("ZCA of strongly correlated channels") {
  const Matrix r = correlated_pair(20000, 0.9, 4);
  const auto w = dsp::fit_zca(std::vector<Matrix>{r}, 1e-8);
  CHECK((w.matrix - w.matrix.transpose()).norm() < 1e-12);
  const Matrix z = dsp::apply_whitening(w, r);
  CHECK(std::abs(covariance(z, 0, 1)) < 1e-6);
  CHECK(covariance(z, 0, 0) == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(covariance(z, 1, 1) == doctest::Approx(1.0).epsilon(1e-3));
  // Same result from the Jacobi oracle: W = E diag((l + eps)^-1/2) E^T.
  Matrix cov(2, 2);
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) cov(a, b) = covariance(r, a, b);
  }
  const auto eig = oracle::jacobi_eigen(cov);
  Matrix expect = Matrix::Zero(2, 2);
  for (int i = 0; i < 2; ++i) {
    expect += eig.vectors.col(i) * eig.vectors.col(i).transpose() / std::sqrt(eig.values[i] + 1e-8);
  }
  CHECK((w.matrix - expect).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("ZCA of white data is the identity") {
  // Exactly decorrelated unit-variance rows: orthogonal sign patterns.
  Matrix r(3, 4096);
  for (Eigen::Index k = 0; k < r.cols(); ++k) {
    r(0, k) = (k & 1) ? 1.0 : -1.0;
    r(1, k) = (k & 2) ? 1.0 : -1.0;
    r(2, k) = (k & 4) ? 1.0 : -1.0;
  }
  r *= std::sqrt(4095.0 / 4096.0);
  const auto w = dsp::fit_zca(std::vector<Matrix>{r}, 1e-8);
  CHECK((w.matrix - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-7);
}

TEST_CASE("whitening application contracts") {
  dsp::WhiteningTransform id;
  id.matrix = Matrix::Identity(3, 3);
  Matrix r = Matrix::Random(3, 50);
  CHECK(dsp::apply_whitening(id, r) == r);
  CHECK(dsp::apply_whitening(id, Matrix::Zero(3, 50)).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(dsp::apply_whitening(id, Matrix::Zero(2, 50)), ShapeError);
  CHECK_THROWS_AS(dsp::fit_zca(std::vector<Matrix>{Matrix::Random(1, 50)}), InvalidArgument);
}

TEST_CASE("ZCA fitted on a multi-record pool whitens the pool") {
  std::vector<Matrix> pool;
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g;
  for (int r = 0; r < 20; ++r) {
    Matrix m(3, 1024);
    for (Eigen::Index k = 0; k < m.cols(); ++k) {
      const double a = g(rng), b = g(rng), c = g(rng);
      m(0, k) = a;
      m(1, k) = 0.8 * a + 0.6 * b;
      m(2, k) = 0.5 * a + 0.5 * b + 0.7 * c;
    }
    pool.push_back(m);
  }
  const auto w = dsp::fit_zca(pool);
  Matrix all(3, 20 * 1024);
  for (int r = 0; r < 20; ++r) all.middleCols(r * 1024, 1024) = dsp::apply_whitening(w, pool[r]);
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      if (a == b) {
        CHECK(std::abs(covariance(all, a, b) - 1.0) < 1e-3);
      } else {
        CHECK(std::abs(covariance(all, a, b)) < 1e-6);
      }
    }
  }
}
