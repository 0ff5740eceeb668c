#include "dip/neural/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Core>

#include "dip/error.hpp"

namespace dip::nn {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMatrix>;
using ConstMatMap = Eigen::Map<const RowMatrix>;
using VecMap = Eigen::Map<Eigen::VectorXd>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

struct ConvGeometry {
  std::size_t n, c, h, w;
  std::size_t o, kh, kw;
  std::size_t stride, ph, pw;
  std::size_t oh, ow;

  std::size_t k() const { return c * kh * kw; }
  std::size_t p() const { return oh * ow; }
};

std::size_t conv_extent(std::size_t in, int k, int pad, int stride, const char* axis) {
  const long padded = static_cast<long>(in) + 2L * pad;
  if (k < 1 || stride < 1 || pad < 0) throw InvalidArgument("invalid convolution hyperparameters");
  if (k > padded) {
    throw ShapeError(std::string("kernel larger than padded input along ") + axis + " (" +
                     std::to_string(k) + " > " + std::to_string(padded) + ")");
  }
  return static_cast<std::size_t>((padded - k) / stride + 1);
}

ConvGeometry conv_geometry(const Tensor& x, const Tensor& kernels, int stride, int pad_h,
                           int pad_w) {
  if (x.rank() != 4) throw ShapeError("conv2d expects [N, C, H, W], got " + to_string(x.shape()));
  if (kernels.rank() != 4) throw ShapeError("conv2d kernels must be [O, C, kh, kw]");
  if (kernels.dim(1) != x.dim(1)) throw ShapeError("conv2d: kernel channels do not match input");
  ConvGeometry g{};
  g.n = x.dim(0);
  g.c = x.dim(1);
  g.h = x.dim(2);
  g.w = x.dim(3);
  g.o = kernels.dim(0);
  g.kh = kernels.dim(2);
  g.kw = kernels.dim(3);
  g.stride = static_cast<std::size_t>(stride);
  g.ph = static_cast<std::size_t>(pad_h);
  g.pw = static_cast<std::size_t>(pad_w);
  g.oh = conv_extent(g.h, static_cast<int>(g.kh), pad_h, stride, "height");
  g.ow = conv_extent(g.w, static_cast<int>(g.kw), pad_w, stride, "width");
  return g;
}

// cols is (C kh kw) x (oh ow), row-major.
void im2col(const ConvGeometry& g, const double* x, double* cols) {
  const std::size_t p = g.p();
  for (std::size_t c = 0; c < g.c; ++c) {
    const double* plane = x + c * g.h * g.w;
    for (std::size_t i = 0; i < g.kh; ++i) {
      for (std::size_t j = 0; j < g.kw; ++j) {
        double* dst = cols + ((c * g.kh + i) * g.kw + j) * p;
        for (std::size_t oy = 0; oy < g.oh; ++oy) {
          const long iy = static_cast<long>(oy * g.stride + i) - static_cast<long>(g.ph);
          double* row = dst + oy * g.ow;
          if (iy < 0 || iy >= static_cast<long>(g.h)) {
            std::fill(row, row + g.ow, 0.0);
            continue;
          }
          const double* src = plane + static_cast<std::size_t>(iy) * g.w;
          for (std::size_t ox = 0; ox < g.ow; ++ox) {
            const long ix = static_cast<long>(ox * g.stride + j) - static_cast<long>(g.pw);
            row[ox] = (ix < 0 || ix >= static_cast<long>(g.w)) ? 0.0 : src[ix];
          }
        }
      }
    }
  }
}

void col2im(const ConvGeometry& g, const double* cols, double* dx) {
  const std::size_t p = g.p();
  for (std::size_t c = 0; c < g.c; ++c) {
    double* plane = dx + c * g.h * g.w;
    for (std::size_t i = 0; i < g.kh; ++i) {
      for (std::size_t j = 0; j < g.kw; ++j) {
        const double* src = cols + ((c * g.kh + i) * g.kw + j) * p;
        for (std::size_t oy = 0; oy < g.oh; ++oy) {
          const long iy = static_cast<long>(oy * g.stride + i) - static_cast<long>(g.ph);
          if (iy < 0 || iy >= static_cast<long>(g.h)) continue;
          double* dst = plane + static_cast<std::size_t>(iy) * g.w;
          const double* row = src + oy * g.ow;
          for (std::size_t ox = 0; ox < g.ow; ++ox) {
            const long ix = static_cast<long>(ox * g.stride + j) - static_cast<long>(g.pw);
            if (ix >= 0 && ix < static_cast<long>(g.w)) dst[ix] += row[ox];
          }
        }
      }
    }
  }
}

void he_init(Tensor& t, std::size_t fan_in, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
  for (double& v : t.values()) v = normal(rng);
}

std::size_t batch_rows(const Tensor& x, const char* what) {
  if (x.rank() < 2) throw ShapeError(std::string(what) + " expects a batched tensor");
  return x.dim(0);
}

}  // namespace

std::string layer_name(const LayerSpec& spec) {
  return std::visit(overloaded{
                        [](const ConvSpec&) { return std::string("conv"); },
                        [](const BatchNormSpec&) { return std::string("batchnorm"); },
                        [](const ReluSpec&) { return std::string("relu"); },
                        [](const MaxPoolSpec&) { return std::string("maxpool"); },
                        [](const DropoutSpec&) { return std::string("dropout"); },
                        [](const DenseSpec&) { return std::string("fullyconnected"); },
                        [](const SoftmaxSpec&) { return std::string("softmax"); },
                    },
                    spec);
}

Shape output_shape(const LayerSpec& spec, const Shape& input) {
  auto need_image = [&](const char* what) {
    if (input.size() != 3) {
      throw ShapeError(std::string(what) + " needs a [C, H, W] input, got " + to_string(input));
    }
  };
  return std::visit(
      overloaded{
          [&](const ConvSpec& s) -> Shape {
            need_image("conv");
            if (s.filters < 1) throw InvalidArgument("conv filter count must be >= 1");
            return {static_cast<std::size_t>(s.filters),
                    conv_extent(input[1], s.kernel_h, s.pad_h, s.stride, "height"),
                    conv_extent(input[2], s.kernel_w, s.pad_w, s.stride, "width")};
          },
          [&](const BatchNormSpec& s) -> Shape {
            if (input.size() != 3 && input.size() != 1) throw ShapeError("batchnorm input rank");
            if (!(s.epsilon >= 0.0) || !(s.momentum >= 0.0 && s.momentum < 1.0)) {
              throw InvalidArgument("invalid batchnorm hyperparameters");
            }
            return input;
          },
          [&](const ReluSpec&) -> Shape { return input; },
          [&](const MaxPoolSpec& s) -> Shape {
            need_image("maxpool");
            if (s.pool_h < 1 || s.pool_w < 1 || s.stride_h < 1 || s.stride_w < 1) {
              throw InvalidArgument("pool size and stride must be >= 1");
            }
            if (static_cast<std::size_t>(s.pool_h) > input[1] ||
                static_cast<std::size_t>(s.pool_w) > input[2]) {
              throw ShapeError("pool window larger than input " + to_string(input));
            }
            return {input[0], (input[1] - s.pool_h) / s.stride_h + 1,
                    (input[2] - s.pool_w) / s.stride_w + 1};
          },
          [&](const DropoutSpec& s) -> Shape {
            if (!(s.p > 0.0 && s.p < 1.0)) throw InvalidArgument("dropout p must lie in (0, 1)");
            return input;
          },
          [&](const DenseSpec& s) -> Shape {
            if (s.outputs < 1) throw InvalidArgument("fully connected width must be >= 1");
            return {static_cast<std::size_t>(s.outputs)};
          },
          [&](const SoftmaxSpec&) -> Shape {
            if (input.size() != 1) throw ShapeError("softmax needs a flat input");
            return input;
          },
      },
      spec);
}

// ---------------------------------------------------------------------------

Tensor relu(const Tensor& x) {
  Tensor y = x;
  for (double& v : y.values()) v = v > 0.0 ? v : 0.0;
  return y;
}

Tensor relu_backward(const Tensor& x, const Tensor& grad_out) {
  if (x.size() != grad_out.size()) throw ShapeError("relu backward: shape mismatch");
  Tensor g = grad_out;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!(x[i] > 0.0)) g[i] = 0.0;
  }
  return g;
}

Tensor conv2d(const Tensor& x, const Tensor& kernels, const Tensor& bias, int stride, int pad_h,
              int pad_w) {
  const ConvGeometry g = conv_geometry(x, kernels, stride, pad_h, pad_w);
  if (bias.size() != g.o) throw ShapeError("conv2d: bias length must equal filter count");
  Tensor y({g.n, g.o, g.oh, g.ow});
  AlignedBuffer cols(g.k() * g.p());
  const ConstMatMap w(kernels.data(), static_cast<Eigen::Index>(g.o), static_cast<Eigen::Index>(g.k()));
  const ConstMatMap cm(cols.data(), static_cast<Eigen::Index>(g.k()), static_cast<Eigen::Index>(g.p()));
  const ConstVecMap b(bias.data(), static_cast<Eigen::Index>(g.o));
  const std::size_t in_stride = g.c * g.h * g.w;
  const std::size_t out_stride = g.o * g.p();
  for (std::size_t n = 0; n < g.n; ++n) {
    im2col(g, x.data() + n * in_stride, cols.data());
    MatMap out(y.data() + n * out_stride, static_cast<Eigen::Index>(g.o), static_cast<Eigen::Index>(g.p()));
    out.noalias() = w * cm;
    out.colwise() += b;
  }
  return y;
}

ConvGradients conv2d_backward(const Tensor& x, const Tensor& kernels, const Tensor& grad_out,
                              int stride, int pad_h, int pad_w) {
  const ConvGeometry g = conv_geometry(x, kernels, stride, pad_h, pad_w);
  if (grad_out.shape() != Shape{g.n, g.o, g.oh, g.ow}) {
    throw ShapeError("conv2d backward: gradient shape " + to_string(grad_out.shape()));
  }
  ConvGradients out{Tensor(x.shape()), Tensor(kernels.shape()), Tensor({g.o})};
  AlignedBuffer cols(g.k() * g.p());
  AlignedBuffer dcols(g.k() * g.p());
  const auto o = static_cast<Eigen::Index>(g.o);
  const auto k = static_cast<Eigen::Index>(g.k());
  const auto p = static_cast<Eigen::Index>(g.p());
  const ConstMatMap w(kernels.data(), o, k);
  MatMap dw(out.kernels.data(), o, k);
  VecMap db(out.bias.data(), o);
  const ConstMatMap cm(cols.data(), k, p);
  MatMap dcm(dcols.data(), k, p);
  const std::size_t in_stride = g.c * g.h * g.w;
  const std::size_t out_stride = g.o * g.p();
  for (std::size_t n = 0; n < g.n; ++n) {
    im2col(g, x.data() + n * in_stride, cols.data());
    const ConstMatMap dy(grad_out.data() + n * out_stride, o, p);
    dw.noalias() += dy * cm.transpose();
    db += dy.rowwise().sum();
    dcm.noalias() = w.transpose() * dy;
    col2im(g, dcols.data(), out.input.data() + n * in_stride);
  }
  return out;
}

PoolResult maxpool(const Tensor& x, const MaxPoolSpec& spec) {
  if (x.rank() != 4) throw ShapeError("maxpool expects [N, C, H, W], got " + to_string(x.shape()));
  const Shape per = output_shape(spec, {x.dim(1), x.dim(2), x.dim(3)});
  const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::size_t oh = per[1], ow = per[2];
  PoolResult r{Tensor({n, c, oh, ow}), std::vector<std::size_t>(n * c * oh * ow)};
  std::size_t out = 0;
  for (std::size_t plane = 0; plane < n * c; ++plane) {
    const std::size_t base = plane * h * w;
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox, ++out) {
        const std::size_t y0 = oy * static_cast<std::size_t>(spec.stride_h);
        const std::size_t x0 = ox * static_cast<std::size_t>(spec.stride_w);
        std::size_t best = base + y0 * w + x0;
        for (std::size_t i = 0; i < static_cast<std::size_t>(spec.pool_h); ++i) {
          for (std::size_t j = 0; j < static_cast<std::size_t>(spec.pool_w); ++j) {
            const std::size_t idx = base + (y0 + i) * w + x0 + j;
            if (x[idx] > x[best]) best = idx;
          }
        }
        r.output[out] = x[best];
        r.argmax[out] = best;
      }
    }
  }
  return r;
}

Tensor maxpool_backward(const Shape& input_shape, const std::vector<std::size_t>& argmax,
                        const Tensor& grad_out) {
  if (argmax.size() != grad_out.size()) throw ShapeError("maxpool backward: shape mismatch");
  Tensor dx(input_shape);
  for (std::size_t i = 0; i < argmax.size(); ++i) dx[argmax[i]] += grad_out[i];
  return dx;
}

Tensor dropout(const Tensor& x, double p, Mode mode, std::uint64_t seed) {
  if (!(p > 0.0 && p < 1.0)) throw InvalidArgument("dropout p must lie in (0, 1)");
  if (mode == Mode::infer) return x;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const double keep_scale = 1.0 / (1.0 - p);
  Tensor y = x;
  for (double& v : y.values()) v = uniform(rng) < p ? 0.0 : v * keep_scale;
  return y;
}

Tensor fully_connected(const Tensor& x, const Tensor& weights, const Tensor& bias) {
  const std::size_t n = batch_rows(x, "fully connected");
  const std::size_t f = x.stride0();
  if (weights.rank() != 2 || weights.dim(1) != f) {
    throw ShapeError("fully connected: weights " + to_string(weights.shape()) +
                     " do not match input features " + std::to_string(f));
  }
  const std::size_t o = weights.dim(0);
  if (bias.size() != o) throw ShapeError("fully connected: bias length mismatch");
  Tensor y({n, o});
  const ConstMatMap xm(x.data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(f));
  const ConstMatMap wm(weights.data(), static_cast<Eigen::Index>(o), static_cast<Eigen::Index>(f));
  MatMap ym(y.data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(o));
  ym.noalias() = xm * wm.transpose();
  ym.rowwise() += ConstVecMap(bias.data(), static_cast<Eigen::Index>(o)).transpose();
  return y;
}

Tensor softmax(const Tensor& logits) {
  if (!logits.all_finite()) throw NumericError("softmax: non-finite logits");
  const std::size_t k = logits.rank() == 1 ? logits.size() : logits.stride0();
  const std::size_t rows = k == 0 ? 0 : logits.size() / k;
  Tensor p = logits;
  for (std::size_t r = 0; r < rows; ++r) {
    double* row = p.data() + r * k;
    const double peak = *std::max_element(row, row + k);
    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      row[i] = std::exp(row[i] - peak);
      sum += row[i];
    }
    for (std::size_t i = 0; i < k; ++i) row[i] /= sum;
  }
  return p;
}

Tensor softmax_backward(const Tensor& probabilities, const Tensor& grad_out) {
  if (probabilities.size() != grad_out.size()) throw ShapeError("softmax backward: shape mismatch");
  const std::size_t k = probabilities.rank() == 1 ? probabilities.size() : probabilities.stride0();
  const std::size_t rows = k == 0 ? 0 : probabilities.size() / k;
  Tensor dx(probabilities.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* pr = probabilities.data() + r * k;
    const double* gr = grad_out.data() + r * k;
    double dot = 0.0;
    for (std::size_t i = 0; i < k; ++i) dot += pr[i] * gr[i];
    for (std::size_t i = 0; i < k; ++i) dx[r * k + i] = pr[i] * (gr[i] - dot);
  }
  return dx;
}

double cross_entropy(std::span<const double> probabilities, std::size_t label) {
  if (label >= probabilities.size()) {
    throw InvalidArgument("label " + std::to_string(label) + " outside " +
                          std::to_string(probabilities.size()) + " classes");
  }
  return -std::log(std::max(probabilities[label], std::numeric_limits<double>::min()));
}

void sgdm_step(std::span<double> weights, std::span<double> velocity,
               std::span<const double> gradient, double lr, double momentum, double l2) {
  if (weights.size() != velocity.size() || weights.size() != gradient.size()) {
    throw ShapeError("sgdm step: parameter, velocity and gradient sizes differ");
  }
  for (std::size_t i = 0; i < weights.size(); ++i) {
    velocity[i] = momentum * velocity[i] - lr * (gradient[i] + l2 * weights[i]);
    weights[i] += velocity[i];
  }
}

// ---------------------------------------------------------------------------

Conv2d::Conv2d(const ConvSpec& spec, std::size_t in_channels, std::mt19937_64& rng)
    : spec_(spec),
      kernels_({static_cast<std::size_t>(spec.filters), in_channels,
                static_cast<std::size_t>(spec.kernel_h), static_cast<std::size_t>(spec.kernel_w)}),
      bias_({static_cast<std::size_t>(spec.filters)}),
      grad_kernels_(kernels_.shape()),
      grad_bias_(bias_.shape()) {
  he_init(kernels_, in_channels * static_cast<std::size_t>(spec.kernel_h * spec.kernel_w), rng);
}

Tensor Conv2d::forward(const Tensor& x, Mode) {
  input_ = x;
  return conv2d(x, kernels_, bias_, spec_.stride, spec_.pad_h, spec_.pad_w);
}

Tensor Conv2d::backward(const Tensor& grad_out) {
  auto g = conv2d_backward(input_, kernels_, grad_out, spec_.stride, spec_.pad_h, spec_.pad_w);
  for (std::size_t i = 0; i < grad_kernels_.size(); ++i) grad_kernels_[i] += g.kernels[i];
  for (std::size_t i = 0; i < grad_bias_.size(); ++i) grad_bias_[i] += g.bias[i];
  return std::move(g.input);
}

std::vector<Parameter> Conv2d::parameters() {
  return {{"kernels", &kernels_, &grad_kernels_, true}, {"bias", &bias_, &grad_bias_, false}};
}

BatchNorm::BatchNorm(const BatchNormSpec& spec, std::size_t channels)
    : spec_(spec),
      gamma_({channels}, 1.0),
      beta_({channels}, 0.0),
      grad_gamma_({channels}),
      grad_beta_({channels}),
      running_mean_({channels}, 0.0),
      running_var_({channels}, 1.0) {}

Tensor BatchNorm::forward(const Tensor& x, Mode mode) {
  if (x.rank() != 2 && x.rank() != 4) throw ShapeError("batchnorm expects [N, F] or [N, C, H, W]");
  const std::size_t n = x.dim(0);
  const std::size_t c = x.dim(1);
  if (c != gamma_.size()) throw ShapeError("batchnorm channel count mismatch");
  const std::size_t spatial = x.stride0() / c;
  mode_ = mode;
  inv_std_.assign(c, 0.0);
  normalized_ = Tensor(x.shape());
  Tensor y(x.shape());

  if (mode == Mode::train) {
    if (n < 2) throw InvalidArgument("batchnorm needs a batch of at least 2 in train mode");
    const double count = static_cast<double>(n * spatial);
    for (std::size_t ch = 0; ch < c; ++ch) {
      double sum = 0.0;
      for (std::size_t b = 0; b < n; ++b) {
        const double* p = x.data() + (b * c + ch) * spatial;
        for (std::size_t s = 0; s < spatial; ++s) sum += p[s];
      }
      const double mean = sum / count;
      double ss = 0.0;
      for (std::size_t b = 0; b < n; ++b) {
        const double* p = x.data() + (b * c + ch) * spatial;
        for (std::size_t s = 0; s < spatial; ++s) ss += (p[s] - mean) * (p[s] - mean);
      }
      const double var = ss / count;
      inv_std_[ch] = 1.0 / std::sqrt(var + spec_.epsilon);
      running_mean_[ch] = spec_.momentum * running_mean_[ch] + (1.0 - spec_.momentum) * mean;
      running_var_[ch] = spec_.momentum * running_var_[ch] + (1.0 - spec_.momentum) * var;
      for (std::size_t b = 0; b < n; ++b) {
        const std::size_t off = (b * c + ch) * spatial;
        for (std::size_t s = 0; s < spatial; ++s) {
          const double xh = (x[off + s] - mean) * inv_std_[ch];
          normalized_[off + s] = xh;
          y[off + s] = gamma_[ch] * xh + beta_[ch];
        }
      }
    }
  } else {
    for (std::size_t ch = 0; ch < c; ++ch) {
      inv_std_[ch] = 1.0 / std::sqrt(running_var_[ch] + spec_.epsilon);
      for (std::size_t b = 0; b < n; ++b) {
        const std::size_t off = (b * c + ch) * spatial;
        for (std::size_t s = 0; s < spatial; ++s) {
          const double xh = (x[off + s] - running_mean_[ch]) * inv_std_[ch];
          normalized_[off + s] = xh;
          y[off + s] = gamma_[ch] * xh + beta_[ch];
        }
      }
    }
  }
  return y;
}

Tensor BatchNorm::backward(const Tensor& grad_out) {
  if (grad_out.shape() != normalized_.shape()) throw ShapeError("batchnorm backward: shape mismatch");
  const std::size_t n = grad_out.dim(0);
  const std::size_t c = grad_out.dim(1);
  const std::size_t spatial = grad_out.stride0() / c;
  const double count = static_cast<double>(n * spatial);
  Tensor dx(grad_out.shape());
  for (std::size_t ch = 0; ch < c; ++ch) {
    double sum_dy = 0.0;
    double sum_dy_xh = 0.0;
    for (std::size_t b = 0; b < n; ++b) {
      const std::size_t off = (b * c + ch) * spatial;
      for (std::size_t s = 0; s < spatial; ++s) {
        sum_dy += grad_out[off + s];
        sum_dy_xh += grad_out[off + s] * normalized_[off + s];
      }
    }
    grad_gamma_[ch] += sum_dy_xh;
    grad_beta_[ch] += sum_dy;
    const double scale = gamma_[ch] * inv_std_[ch];
    for (std::size_t b = 0; b < n; ++b) {
      const std::size_t off = (b * c + ch) * spatial;
      for (std::size_t s = 0; s < spatial; ++s) {
        if (mode_ == Mode::train) {
          dx[off + s] = scale / count *
                        (count * grad_out[off + s] - sum_dy - normalized_[off + s] * sum_dy_xh);
        } else {
          dx[off + s] = scale * grad_out[off + s];
        }
      }
    }
  }
  return dx;
}

std::vector<Parameter> BatchNorm::parameters() {
  return {{"gamma", &gamma_, &grad_gamma_, false}, {"beta", &beta_, &grad_beta_, false}};
}

Tensor Relu::forward(const Tensor& x, Mode) {
  input_ = x;
  return relu(x);
}

Tensor Relu::backward(const Tensor& grad_out) { return relu_backward(input_, grad_out); }

Tensor MaxPool2d::forward(const Tensor& x, Mode) {
  input_shape_ = x.shape();
  auto r = maxpool(x, spec_);
  argmax_ = std::move(r.argmax);
  return std::move(r.output);
}

Tensor MaxPool2d::backward(const Tensor& grad_out) {
  return maxpool_backward(input_shape_, argmax_, grad_out);
}

Dropout::Dropout(const DropoutSpec& spec) : spec_(spec) {
  if (!(spec.p > 0.0 && spec.p < 1.0)) throw InvalidArgument("dropout p must lie in (0, 1)");
}

Tensor Dropout::forward(const Tensor& x, Mode mode) {
  if (mode == Mode::infer) {
    mask_.clear();
    return x;
  }
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const double keep_scale = 1.0 / (1.0 - spec_.p);
  mask_.resize(x.size());
  Tensor y = x;
  for (std::size_t i = 0; i < y.size(); ++i) {
    mask_[i] = uniform(rng_) < spec_.p ? 0.0 : keep_scale;
    y[i] *= mask_[i];
  }
  return y;
}

Tensor Dropout::backward(const Tensor& grad_out) {
  if (mask_.empty()) return grad_out;
  if (mask_.size() != grad_out.size()) throw ShapeError("dropout backward: shape mismatch");
  Tensor g = grad_out;
  for (std::size_t i = 0; i < g.size(); ++i) g[i] *= mask_[i];
  return g;
}

Dense::Dense(const DenseSpec& spec, std::size_t inputs, std::mt19937_64& rng)
    : spec_(spec),
      weights_({static_cast<std::size_t>(spec.outputs), inputs}),
      bias_({static_cast<std::size_t>(spec.outputs)}),
      grad_weights_(weights_.shape()),
      grad_bias_(bias_.shape()) {
  he_init(weights_, inputs, rng);
}

Tensor Dense::forward(const Tensor& x, Mode) {
  input_ = x;
  return fully_connected(x, weights_, bias_);
}

Tensor Dense::backward(const Tensor& grad_out) {
  const std::size_t n = input_.dim(0);
  const std::size_t f = input_.stride0();
  const std::size_t o = weights_.dim(0);
  if (grad_out.size() != n * o) throw ShapeError("fully connected backward: shape mismatch");
  const auto ni = static_cast<Eigen::Index>(n);
  const auto fi = static_cast<Eigen::Index>(f);
  const auto oi = static_cast<Eigen::Index>(o);
  const ConstMatMap dy(grad_out.data(), ni, oi);
  const ConstMatMap xm(input_.data(), ni, fi);
  const ConstMatMap wm(weights_.data(), oi, fi);
  MatMap(grad_weights_.data(), oi, fi).noalias() += dy.transpose() * xm;
  VecMap(grad_bias_.data(), oi) += dy.colwise().sum().transpose();
  Tensor dx(input_.shape());
  MatMap(dx.data(), ni, fi).noalias() = dy * wm;
  return dx;
}

std::vector<Parameter> Dense::parameters() {
  return {{"weights", &weights_, &grad_weights_, true}, {"bias", &bias_, &grad_bias_, false}};
}

Tensor Softmax::forward(const Tensor& x, Mode) {
  output_ = softmax(x);
  return output_;
}

Tensor Softmax::backward(const Tensor& grad_out) { return softmax_backward(output_, grad_out); }

std::unique_ptr<Layer> make_layer(const LayerSpec& spec, const Shape& input, std::mt19937_64& rng) {
  output_shape(spec, input);  // validates
  return std::visit(
      overloaded{
          [&](const ConvSpec& s) -> std::unique_ptr<Layer> {
            return std::make_unique<Conv2d>(s, input[0], rng);
          },
          [&](const BatchNormSpec& s) -> std::unique_ptr<Layer> {
            return std::make_unique<BatchNorm>(s, input[0]);
          },
          [&](const ReluSpec&) -> std::unique_ptr<Layer> { return std::make_unique<Relu>(); },
          [&](const MaxPoolSpec& s) -> std::unique_ptr<Layer> {
            return std::make_unique<MaxPool2d>(s);
          },
          [&](const DropoutSpec& s) -> std::unique_ptr<Layer> {
            return std::make_unique<Dropout>(s);
          },
          [&](const DenseSpec& s) -> std::unique_ptr<Layer> {
            return std::make_unique<Dense>(s, element_count(input), rng);
          },
          [&](const SoftmaxSpec&) -> std::unique_ptr<Layer> { return std::make_unique<Softmax>(); },
      },
      spec);
}

}  // namespace dip::nn
