#include "dip/oracle.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace dip::oracle {

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<std::complex<double>> twiddles(std::size_t n, double sign) {
  std::vector<std::complex<double>> w(n);
  for (std::size_t k = 0; k < n; ++k) {
    w[k] = std::polar(1.0, sign * 2.0 * kPi * static_cast<double>(k) / static_cast<double>(n));
  }
  return w;
}

}  // namespace

std::vector<std::complex<double>> direct_dft(std::span<const double> x) {
  const std::size_t n = x.size();
  const auto w = twiddles(n, -1.0);
  std::vector<std::complex<double>> out(n);
  for (std::size_t m = 0; m < n; ++m) {
    std::complex<double> acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) acc += x[k] * w[(m * k) % n];
    out[m] = acc / static_cast<double>(n);
  }
  return out;
}

ComplexMatrix direct_stockwell(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 2 || n % 2 != 0) throw std::invalid_argument("direct_stockwell: even length required");
  const auto spectrum = direct_dft(x);
  const auto w = twiddles(n, +1.0);
  const long half = static_cast<long>(n / 2);
  ComplexMatrix s(static_cast<Eigen::Index>(n / 2 + 1), static_cast<Eigen::Index>(n));

  double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  for (std::size_t tau = 0; tau < n; ++tau) s(0, static_cast<Eigen::Index>(tau)) = mean;

  std::vector<std::complex<double>> weighted(n);
  for (std::size_t f = 1; f <= n / 2; ++f) {
    const double fd = static_cast<double>(f);
    for (long m = -half; m < half; ++m) {
      const double g = std::exp(-2.0 * kPi * kPi * static_cast<double>(m * m) / (fd * fd));
      const std::size_t idx = static_cast<std::size_t>((m + static_cast<long>(f) + 2 * static_cast<long>(n)) %
                                                       static_cast<long>(n));
      weighted[static_cast<std::size_t>(m + half)] = spectrum[idx] * g;
    }
    for (std::size_t tau = 0; tau < n; ++tau) {
      std::complex<double> acc = 0.0;
      for (long m = -half; m < half; ++m) {
        const std::size_t phase = static_cast<std::size_t>(
            ((m * static_cast<long>(tau)) % static_cast<long>(n) + static_cast<long>(n)) % static_cast<long>(n));
        acc += weighted[static_cast<std::size_t>(m + half)] * w[phase];
      }
      s(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(tau)) = acc;
    }
  }
  return s;
}

EigenPairs jacobi_eigen(const Matrix& symmetric, double tolerance, int max_sweeps) {
  const Eigen::Index n = symmetric.rows();
  if (symmetric.cols() != n) throw std::invalid_argument("jacobi_eigen: square matrix required");
  Matrix a = symmetric;
  Matrix v = Matrix::Identity(n, n);
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    }
    if (std::sqrt(off) <= tolerance * std::max(1.0, a.norm())) break;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto i, auto j) { return a(i, i) < a(j, j); });
  EigenPairs out;
  out.vectors.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out.values.push_back(a(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(i)]));
    out.vectors.col(i) = v.col(order[static_cast<std::size_t>(i)]);
  }
  return out;
}

Polynomials expand_sections(std::span<const std::array<double, 5>> sections) {
  Polynomials p{{1.0}, {1.0}};
  auto convolve = [](const std::vector<double>& x, const std::array<double, 3>& y) {
    std::vector<double> out(x.size() + 2, 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) {
      for (std::size_t j = 0; j < 3; ++j) out[i + j] += x[i] * y[j];
    }
    return out;
  };
  for (const auto& s : sections) {
    p.b = convolve(p.b, {s[0], s[1], s[2]});
    p.a = convolve(p.a, {1.0, s[3], s[4]});
  }
  return p;
}

std::complex<double> evaluate_rational(const Polynomials& p, double omega) {
  const std::complex<double> zinv = std::polar(1.0, -omega);
  auto horner = [&](const std::vector<double>& c) {
    std::complex<double> acc = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * zinv + *it;
    return acc;
  };
  return horner(p.b) / horner(p.a);
}

}  // namespace dip::oracle
