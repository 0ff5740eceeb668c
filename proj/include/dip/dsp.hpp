#pragma once

#include <complex>
#include <span>
#include <vector>

#include "dip/types.hpp"

namespace dip::dsp {

/// Low-pass Chebyshev type I filter request.
struct FilterSpec {
  int order = 12;
  double passband_ripple_db = 1.0;
  double cutoff_hz = 40.0;
  /// Forward-backward application. Only consulted by callers that pick
  /// between causal and zero-phase filtering.
  bool zero_phase = true;
};

/// One second-order section, a0 normalized to 1:
///   H(z) = (b0 + b1 z^-1 + b2 z^-2) / (1 + a1 z^-1 + a2 z^-2)
/// First-order sections (odd orders) carry b2 = a2 = 0.
struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;
};

struct LowpassFilter {
  int order = 0;
  double cutoff_hz = 0.0;
  double sampling_rate_hz = 0.0;
  double passband_ripple_db = 0.0;
  std::vector<Biquad> sections;

  /// Edge padding used by apply_zero_phase.
  std::size_t pad_length() const { return 3 * static_cast<std::size_t>(order); }
};

/// Chebyshev I analog prototype, prewarped bilinear transform, cascaded
/// biquads. Throws InvalidArgument unless 0 < cutoff < fs/2, ripple > 0 and
/// order >= 1.
LowpassFilter design_lowpass(const FilterSpec& spec, double sampling_rate_hz);

/// H(e^{j 2 pi f / fs}) evaluated section by section.
std::complex<double> frequency_response(const LowpassFilter& filter, double freq_hz);

/// Single causal pass (transposed direct form II), zero initial state.
std::vector<double> filter_causal(const LowpassFilter& filter, std::span<const double> signal);

/// Forward pass, reversal, second pass, reversal. Odd-reflection padding of
/// pad_length() samples on both ends; section states start at the
/// steady-state response to the first padded sample, so constants pass
/// through without a start-up transient.
std::vector<double> apply_zero_phase(const LowpassFilter& filter, std::span<const double> signal);

/// (x - mean) / std with the N-1 divisor. Throws InvalidArgument for a
/// constant (zero-variance) signal.
std::vector<double> standardize(std::span<const double> signal);

/// Symmetric (ZCA) whitening matrix, channels x channels.
struct WhiteningTransform {
  Matrix matrix;
  double epsilon = 1e-8;

  Eigen::Index channels() const { return matrix.rows(); }
};

/// Pooled channel covariance (N-1 divisor, pooled mean removed) over all
/// records, then E diag((lambda + eps)^-1/2) E^T.
WhiteningTransform fit_zca(std::span<const Matrix> records, double epsilon = 1e-8);

/// matrix * record. Throws ShapeError on a channel-count mismatch.
Matrix apply_whitening(const WhiteningTransform& transform, const Matrix& record);

/// Sample covariance of a channels x samples matrix (N-1 divisor).
Matrix channel_covariance(const Matrix& record);

}  // namespace dip::dsp
