#include "dip/stransform.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <memory>
#include <mutex>
#include <numbers>
#include <string>

#include <fftw3.h>

#include "dip/error.hpp"

namespace dip::st {

namespace {

// FFTW planning is not thread-safe; execution with new-array execute is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwDeleter {
  void operator()(fftw_complex* p) const { fftw_free(p); }
};
using FftwBuffer = std::unique_ptr<fftw_complex[], FftwDeleter>;

FftwBuffer make_buffer(std::size_t n) {
  auto* p = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n));
  if (p == nullptr) throw std::bad_alloc();
  return FftwBuffer(p);
}

class FftPlan {
 public:
  FftPlan(std::size_t n, int sign) {
    auto in = make_buffer(n);
    auto out = make_buffer(n);
    std::lock_guard lock(planner_mutex());
    plan_ = fftw_plan_dft_1d(static_cast<int>(n), in.get(), out.get(), sign, FFTW_ESTIMATE);
    if (plan_ == nullptr) throw NumericError("FFTW planning failed");
  }
  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;
  ~FftPlan() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan_);
  }

  void execute(fftw_complex* in, fftw_complex* out) const { fftw_execute_dft(plan_, in, out); }

 private:
  fftw_plan plan_ = nullptr;
};

void check_length(std::size_t n) {
  if (n < 8 || n % 2 != 0) {
    throw InvalidArgument("Stockwell transform needs an even length >= 8, got " +
                          std::to_string(n));
  }
}

// Computes rows first..last of S, handing each finished row (as an FFTW
// buffer of N values) to `sink`.
template <typename Sink>
void stockwell_rows(std::span<const double> signal, std::size_t first, std::size_t last,
                    Sink&& sink) {
  const std::size_t n = signal.size();
  check_length(n);
  if (first > last || last > n / 2) throw InvalidArgument("Stockwell row range out of bounds");

  auto time = make_buffer(n);
  auto spectrum = make_buffer(n);
  auto shifted = make_buffer(n);
  auto row = make_buffer(n);
  for (std::size_t k = 0; k < n; ++k) {
    time[k][0] = signal[k];
    time[k][1] = 0.0;
  }
  const FftPlan forward(n, FFTW_FORWARD);
  const FftPlan inverse(n, FFTW_BACKWARD);
  forward.execute(time.get(), spectrum.get());
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k) {
    spectrum[k][0] *= inv_n;
    spectrum[k][1] *= inv_n;
  }

  const auto half = static_cast<std::ptrdiff_t>(n / 2);
  const double two_pi_sq = 2.0 * std::numbers::pi * std::numbers::pi;
  for (std::size_t r = first; r <= last; ++r) {
    if (r == 0) {
      for (std::size_t t = 0; t < n; ++t) {
        row[t][0] = spectrum[0][0];
        row[t][1] = 0.0;
      }
      sink(r, row.get());
      continue;
    }
    const double inv_r2 = 1.0 / (static_cast<double>(r) * static_cast<double>(r));
    // Index m in 0..N-1 stands for the centered offset m' in [-N/2, N/2).
    for (std::size_t m = 0; m < n; ++m) {
      const auto centered = static_cast<std::ptrdiff_t>(m) < half
                                ? static_cast<double>(m)
                                : static_cast<double>(m) - static_cast<double>(n);
      const double g = std::exp(-two_pi_sq * centered * centered * inv_r2);
      const std::size_t src = (m + r) % n;
      shifted[m][0] = spectrum[src][0] * g;
      shifted[m][1] = spectrum[src][1] * g;
    }
    inverse.execute(shifted.get(), row.get());
    sink(r, row.get());
  }
}

}  // namespace

StMatrix stockwell(std::span<const double> signal, double sampling_rate_hz) {
  const std::size_t n = signal.size();
  check_length(n);
  if (!(sampling_rate_hz > 0.0)) throw InvalidArgument("sampling rate must be > 0");
  StMatrix out;
  out.samples = n;
  out.sampling_rate_hz = sampling_rate_hz;
  out.values.resize(static_cast<Eigen::Index>(n / 2 + 1), static_cast<Eigen::Index>(n));
  stockwell_rows(signal, 0, n / 2, [&](std::size_t r, const fftw_complex* row) {
    for (std::size_t t = 0; t < n; ++t) {
      out.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(t)) = {row[t][0], row[t][1]};
    }
  });
  return out;
}

Matrix stockwell_magnitude(std::span<const double> signal, std::size_t first_row,
                           std::size_t last_row) {
  const std::size_t n = signal.size();
  check_length(n);
  Matrix out(static_cast<Eigen::Index>(last_row - first_row + 1), static_cast<Eigen::Index>(n));
  stockwell_rows(signal, first_row, last_row, [&](std::size_t r, const fftw_complex* row) {
    for (std::size_t t = 0; t < n; ++t) {
      out(static_cast<Eigen::Index>(r - first_row), static_cast<Eigen::Index>(t)) =
          std::hypot(row[t][0], row[t][1]);
    }
  });
  return out;
}

Band cropped_band(std::size_t samples, double sampling_rate_hz) {
  if (samples < 8 || samples % 4 != 0) {
    throw ShapeError("cropping needs a record length divisible by 4, got " +
                     std::to_string(samples));
  }
  Band b;
  b.first_row = 1;
  b.last_row = samples / 4;
  b.low_hz = sampling_rate_hz / static_cast<double>(samples);
  b.high_hz = static_cast<double>(b.last_row) * sampling_rate_hz / static_cast<double>(samples);
  return b;
}

Matrix crop_and_magnitude(const StMatrix& st) {
  const std::size_t n = st.samples;
  if (n % 4 != 0 || st.values.rows() != static_cast<Eigen::Index>(n / 2 + 1) ||
      st.values.cols() != static_cast<Eigen::Index>(n)) {
    throw ShapeError("crop expects an (N/2+1) x N Stockwell matrix with N divisible by 4, got " +
                     std::to_string(st.values.rows()) + "x" + std::to_string(st.values.cols()));
  }
  const Band band = cropped_band(n, st.sampling_rate_hz);
  const auto rows = static_cast<Eigen::Index>(band.last_row - band.first_row + 1);
  return st.values.middleRows(static_cast<Eigen::Index>(band.first_row), rows).cwiseAbs();
}

Matrix downsample(const Matrix& image, int freq_factor, int time_factor) {
  if (freq_factor < 1 || time_factor < 1) throw InvalidArgument("pooling factors must be >= 1");
  if (image.rows() % freq_factor != 0 || image.cols() % time_factor != 0) {
    throw ShapeError("pooling factors " + std::to_string(freq_factor) + "x" +
                     std::to_string(time_factor) + " do not divide " +
                     std::to_string(image.rows()) + "x" + std::to_string(image.cols()));
  }
  if (freq_factor == 1 && time_factor == 1) return image;
  const Eigen::Index rows = image.rows() / freq_factor;
  const Eigen::Index cols = image.cols() / time_factor;
  Matrix out(rows, cols);
  const double scale = 1.0 / (freq_factor * time_factor);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      out(r, c) = image.block(r * freq_factor, c * time_factor, freq_factor, time_factor).sum() * scale;
    }
  }
  return out;
}

NormalizationStats fit_normalization(std::span<const std::vector<Matrix>> images) {
  if (images.empty()) throw InvalidArgument("normalization fit needs at least one record");
  const std::size_t channels = images.front().size();
  NormalizationStats stats;
  stats.min.assign(channels, std::numeric_limits<double>::infinity());
  stats.max.assign(channels, -std::numeric_limits<double>::infinity());
  for (const auto& rec : images) {
    if (rec.size() != channels) throw ShapeError("normalization fit: channel counts differ");
    for (std::size_t c = 0; c < channels; ++c) {
      stats.min[c] = std::min(stats.min[c], rec[c].minCoeff());
      stats.max[c] = std::max(stats.max[c], rec[c].maxCoeff());
    }
  }
  return stats;
}

Spectrogram assemble_spectrogram(std::span<const Matrix> per_channel,
                                 const NormalizationStats& stats) {
  if (per_channel.empty()) throw ShapeError("spectrogram needs at least one channel");
  if (per_channel.size() != stats.min.size() || per_channel.size() != stats.max.size()) {
    throw ShapeError("spectrogram channel count does not match normalization stats");
  }
  const auto rows = per_channel.front().rows();
  const auto cols = per_channel.front().cols();
  for (const auto& m : per_channel) {
    if (m.rows() != rows || m.cols() != cols) throw ShapeError("spectrogram channels differ in shape");
  }
  Spectrogram s;
  s.freq_bins = static_cast<std::size_t>(rows);
  s.time_steps = static_cast<std::size_t>(cols);
  s.channels = per_channel.size();
  s.values.resize(s.freq_bins * s.time_steps * s.channels);
  auto out = s.values.begin();
  for (std::size_t c = 0; c < s.channels; ++c) {
    const double lo = stats.min[c];
    const double span = stats.max[c] - lo;
    const Matrix& m = per_channel[c];
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      const double v = span > 0.0 ? (m.data()[i] - lo) / span : 0.0;
      *out++ = std::clamp(v, 0.0, 1.0);
    }
  }
  return s;
}

}  // namespace dip::st
