#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "dip/error.hpp"
#include "dip/oracle.hpp"
#include "dip/stransform.hpp"

using namespace dip;

namespace {

std::vector<double> random_signal(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  std::vector<double> x(n);
  for (auto& v : x) v = g(rng);
  return x;
}

// Second moment over tau of |S[tau, n]| around its centroid.
double time_spread(const Matrix& mag, Eigen::Index row) {
  double w = 0, m1 = 0, m2 = 0;
  for (Eigen::Index t = 0; t < mag.cols(); ++t) {
    const double a = mag(row, t);
    w += a;
    m1 += a * t;
    m2 += a * t * t;
  }
  const double mean = m1 / w;
  return m2 / w - mean * mean;
}

}  // namespace

TEST_CASE("stockwell shape and frequency axis") {
  std::mt19937_64 rng(1);
  const auto st = st::stockwell(random_signal(1024, rng), 200.0);
  CHECK(st.values.rows() == 513);
  CHECK(st.values.cols() == 1024);
  CHECK(st.frequency_hz(512) == doctest::Approx(100.0));
  CHECK(st.frequency_hz(256) == doctest::Approx(50.0));
  CHECK_THROWS_AS(st::stockwell(std::vector<double>(7, 1.0), 200.0), InvalidArgument);
  CHECK_THROWS_AS(st::stockwell(std::vector<double>(6, 1.0), 200.0), InvalidArgument);
  CHECK_THROWS_AS(st::stockwell(std::vector<double>(33, 1.0), 200.0), InvalidArgument);
}

TEST_CASE("stockwell of zero and constant signals") {
  const auto z = st::stockwell(std::vector<double>(64, 0.0), 100.0);
  CHECK(z.values.cwiseAbs().maxCoeff() == 0.0);

  const double c = -2.5;
  const auto s = st::stockwell(std::vector<double>(64, c), 100.0);
  for (Eigen::Index t = 0; t < 64; ++t) CHECK(s.values(0, t).real() == doctest::Approx(c).epsilon(1e-14));
  const double bound = std::abs(c) * std::exp(-2.0 * std::numbers::pi * std::numbers::pi);
  for (Eigen::Index n = 1; n < s.values.rows(); ++n) {
    for (Eigen::Index t = 0; t < 64; ++t) CHECK(std::abs(s.values(n, t)) <= bound * (1 + 1e-9) + 1e-15);
  }
  // The bound is attained by the oracle at row 1, so it is tight.
  const auto direct = oracle::direct_stockwell(std::vector<double>(64, c));
  CHECK(std::abs(direct(1, 0)) == doctest::Approx(bound).epsilon(1e-6));
}

TEST_CASE("a cosine peaks at its own frequency bin at every time") {
  std::vector<double> x(64);
  for (std::size_t k = 0; k < 64; ++k) x[k] = std::cos(2.0 * std::numbers::pi * 16.0 * k / 64.0);
  const auto s = st::stockwell(x, 64.0);
  const auto d = oracle::direct_stockwell(x);
  for (Eigen::Index t = 0; t < 64; ++t) {
    Eigen::Index best = 0, best_d = 0;
    s.values.col(t).cwiseAbs().maxCoeff(&best);
    d.col(t).cwiseAbs().maxCoeff(&best_d);
    CHECK(best == 16);
    CHECK(best_d == 16);
  }
}

TEST_CASE("fft stockwell equals direct summation and the time marginal holds") {
  std::mt19937_64 rng(77);
  for (std::size_t n : {8u, 16u, 64u}) {
    for (int trial = 0; trial < 10; ++trial) {
      const auto x = random_signal(n, rng);
      const auto fast = st::stockwell(x, 1.0).values;
      const auto slow = oracle::direct_stockwell(x);
      CHECK((fast - slow).norm() / slow.norm() < 1e-9);
      const auto dft = oracle::direct_dft(x);
      for (Eigen::Index row = 1; row < fast.rows(); ++row) {
        const std::complex<double> marginal = fast.row(row).sum() / static_cast<double>(n);
        CHECK(std::abs(marginal - dft[row]) <= 1e-9 * std::max(std::abs(dft[row]), 1e-3));
      }
    }
  }
}

TEST_CASE("magnitude rows match the full transform") {
  std::mt19937_64 rng(4);
  const auto x = random_signal(256, rng);
  const auto full = st::stockwell(x, 200.0);
  const Matrix part = st::stockwell_magnitude(x, 1, 64);
  CHECK(part.rows() == 64);
  CHECK(part.cols() == 256);
  CHECK((part - full.values.middleRows(1, 64).cwiseAbs()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((st::crop_and_magnitude(full) - part).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("crop keeps rows 1..N/4") {
  std::mt19937_64 rng(9);
  const auto full = st::stockwell(random_signal(1024, rng), 200.0);
  const Matrix crop = st::crop_and_magnitude(full);
  CHECK(crop.rows() == 256);
  CHECK(crop.cols() == 1024);
  CHECK(crop.minCoeff() >= 0.0);
  CHECK(st::cropped_band(1024, 320.0).high_hz == 80.0);
  CHECK(st::cropped_band(1024, 200.0).high_hz == 50.0);
  CHECK(st::cropped_band(1024, 200.0).first_row == 1);
  CHECK(st::cropped_band(1024, 200.0).last_row == 256);

  st::StMatrix zero;
  zero.samples = 1024;
  zero.sampling_rate_hz = 200.0;
  zero.values = ComplexMatrix::Zero(513, 1024);
  CHECK(st::crop_and_magnitude(zero).cwiseAbs().maxCoeff() == 0.0);
  zero.values = ComplexMatrix::Zero(512, 1024);
  CHECK_THROWS_AS(st::crop_and_magnitude(zero), ShapeError);
}

TEST_CASE("windows narrow in time as frequency rises") {
  // Two short bursts carrying both a low and a high tone.
  const std::size_t n = 512;
  std::vector<double> x(n, 0.0);
  for (std::size_t centre : {128u, 384u}) {
    for (std::size_t k = centre - 8; k < centre + 8; ++k) {
      x[k] = std::cos(2.0 * std::numbers::pi * 8.0 * k / n) + std::cos(2.0 * std::numbers::pi * 100.0 * k / n);
    }
  }
  const Matrix mag = st::stockwell(x, 1.0).values.cwiseAbs();
  CHECK(time_spread(mag, 100) < time_spread(mag, 8));
}

TEST_CASE("spectrogram assembly and min-max scaling") {
  Matrix a(2, 3);
  a << 0, 5, 10, 2, 4, 6;
  const std::vector<Matrix> same{a, a, a};
  const auto stats = st::fit_normalization(std::vector<std::vector<Matrix>>{same});
  const auto s = st::assemble_spectrogram(same, stats);
  CHECK(s.freq_bins == 2);
  CHECK(s.time_steps == 3);
  CHECK(s.channels == 3);
  for (std::size_t f = 0; f < 2; ++f) {
    for (std::size_t t = 0; t < 3; ++t) {
      CHECK(s.at(f, t, 0) == s.at(f, t, 1));
      CHECK(s.at(f, t, 1) == s.at(f, t, 2));
    }
  }
  CHECK(s.at(0, 1, 0) == 0.5);

  Matrix big = a;
  big(0, 0) = 25.0;
  big(1, 2) = -3.0;
  const auto clamped = st::assemble_spectrogram(std::vector<Matrix>{big, a, a}, stats);
  CHECK(clamped.at(0, 0, 0) == 1.0);
  CHECK(clamped.at(1, 2, 0) == 0.0);

  CHECK_THROWS_AS(st::assemble_spectrogram(std::vector<Matrix>{a, a, Matrix::Zero(3, 3)}, stats), ShapeError);
  CHECK_THROWS_AS(st::assemble_spectrogram(std::vector<Matrix>{a, a}, stats), ShapeError);
}

TEST_CASE("block-average downsampling") {
  Matrix m(4, 8);
  for (Eigen::Index i = 0; i < 4; ++i) {
    for (Eigen::Index j = 0; j < 8; ++j) m(i, j) = static_cast<double>(i * 8 + j);
  }
  const Matrix d = st::downsample(m, 2, 4);
  CHECK(d.rows() == 2);
  CHECK(d.cols() == 2);
  CHECK(d(0, 0) == doctest::Approx((0 + 1 + 2 + 3 + 8 + 9 + 10 + 11) / 8.0));
  CHECK(st::downsample(m, 1, 1) == m);
  CHECK_THROWS(st::downsample(m, 3, 1));
}
