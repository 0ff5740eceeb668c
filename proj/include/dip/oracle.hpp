#pragma once

// Slow, direct reference implementations used to cross-check the fast code
// paths. None of these share code with the library proper.

#include <array>
#include <complex>
#include <span>
#include <vector>

#include "dip/types.hpp"

namespace dip::oracle {

/// X[m] = (1/N) sum_k x[k] exp(-j 2 pi m k / N), m = 0..N-1, by direct summation.
std::vector<std::complex<double>> direct_dft(std::span<const double> x);

/// Stockwell matrix ((N/2 + 1) x N) by direct double summation over the
/// Gaussian-weighted, frequency-shifted spectrum.
ComplexMatrix direct_stockwell(std::span<const double> x);

struct EigenPairs {
  std::vector<double> values;  ///< ascending
  Matrix vectors;              ///< column i pairs with values[i]
};

/// Cyclic Jacobi rotations on a symmetric matrix.
EigenPairs jacobi_eigen(const Matrix& symmetric, double tolerance = 1e-15, int max_sweeps = 100);

/// Expands cascaded sections into numerator / denominator coefficient
/// vectors in powers of z^-1.
struct Polynomials {
  std::vector<double> b;
  std::vector<double> a;
};
Polynomials expand_sections(std::span<const std::array<double, 5>> sections);

/// b(e^{-jw}) / a(e^{-jw}) by Horner evaluation.
std::complex<double> evaluate_rational(const Polynomials& p, double omega);

}  // namespace dip::oracle
