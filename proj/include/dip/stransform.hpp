#pragma once

#include <span>
#include <vector>

#include "dip/types.hpp"

namespace dip::st {

/// Discrete Stockwell transform of one N-sample signal.
///
/// Row n (0..N/2) holds frequency n * fs / N, column tau the time index:
///
///   S[tau, n] = sum_{m=-N/2}^{N/2-1} X[m + n] exp(-2 pi^2 m^2 / n^2) exp(+j 2 pi m tau / N)
///
/// with X[m] = (1/N) sum_k x[k] exp(-j 2 pi m k / N) and indices of X taken
/// modulo N. Row 0 is the signal mean in every column. With this scaling
/// (1/N) sum_tau S[tau, n] = X[n].
struct StMatrix {
  ComplexMatrix values;  ///< (N/2 + 1) x N
  double sampling_rate_hz = 0.0;
  std::size_t samples = 0;

  double frequency_hz(Eigen::Index row) const {
    return static_cast<double>(row) * sampling_rate_hz / static_cast<double>(samples);
  }
};

/// One forward FFT plus one inverse FFT per frequency row. Throws
/// InvalidArgument unless N is even and N >= 8.
StMatrix stockwell(std::span<const double> signal, double sampling_rate_hz);

/// |S| for rows first_row..last_row (inclusive) only, as a
/// (last_row - first_row + 1) x N real matrix. Same values as
/// |stockwell(...)| on those rows without computing the rest.
Matrix stockwell_magnitude(std::span<const double> signal, std::size_t first_row,
                           std::size_t last_row);

/// Frequency band kept by crop_and_magnitude: rows 1..N/4.
struct Band {
  std::size_t first_row = 1;
  std::size_t last_row = 0;
  double low_hz = 0.0;
  double high_hz = 0.0;
};
Band cropped_band(std::size_t samples, double sampling_rate_hz);

/// Drops the zero-frequency row and everything above fs/4, returns
/// magnitudes: (N/4) x N. Throws ShapeError unless the matrix has N/2 + 1
/// rows for N divisible by 4.
Matrix crop_and_magnitude(const StMatrix& st);

/// Block-average pooling. Both factors must divide the matching dimension.
Matrix downsample(const Matrix& image, int freq_factor, int time_factor);

/// Stack of per-channel magnitude images, scaled to [0, 1].
/// Logical shape freq_bins x time_steps x channels; stored channel-major
/// ([c][f][t]) which is the layout the CNN consumes.
struct Spectrogram {
  std::size_t freq_bins = 0;
  std::size_t time_steps = 0;
  std::size_t channels = 0;
  std::vector<double> values;

  double at(std::size_t f, std::size_t t, std::size_t c) const {
    return values[(c * freq_bins + f) * time_steps + t];
  }
};

/// Per-channel min/max fitted on training spectrograms.
struct NormalizationStats {
  std::vector<double> min;
  std::vector<double> max;
};

/// `images[r][c]` is channel c of record r.
NormalizationStats fit_normalization(std::span<const std::vector<Matrix>> images);

/// Stacks channels and maps each through (v - min) / (max - min), clamped to
/// [0, 1]. A channel with max == min maps to 0. Throws ShapeError for
/// mismatched channel shapes or a channel count that differs from `stats`.
Spectrogram assemble_spectrogram(std::span<const Matrix> per_channel,
                                 const NormalizationStats& stats);

}  // namespace dip::st
