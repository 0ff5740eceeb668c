#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "dip/neural/tensor.hpp"

namespace dip::nn {

enum class Mode { train, infer };

// ---------------------------------------------------------------------------
// Layer hyperparameters.

struct ConvSpec {
  int filters = 8;
  int kernel_h = 3;
  int kernel_w = 3;
  int stride = 1;
  int pad_h = 0;
  int pad_w = 0;
};

struct BatchNormSpec {
  double epsilon = 1e-5;
  /// running = momentum * running + (1 - momentum) * batch
  double momentum = 0.9;
};

struct ReluSpec {};

struct MaxPoolSpec {
  int pool_h = 2;
  int pool_w = 2;
  int stride_h = 2;
  int stride_w = 2;
};

struct DropoutSpec {
  double p = 0.5;
};

struct DenseSpec {
  int outputs = 1;
};

struct SoftmaxSpec {};

using LayerSpec =
    std::variant<ConvSpec, BatchNormSpec, ReluSpec, MaxPoolSpec, DropoutSpec, DenseSpec, SoftmaxSpec>;

std::string layer_name(const LayerSpec& spec);

/// Per-sample output shape; input is [C, H, W] or [F]. Throws ShapeError or
/// InvalidArgument when the layer cannot consume `input`.
Shape output_shape(const LayerSpec& spec, const Shape& input);

// ---------------------------------------------------------------------------
// Stateless kernels. Batched tensors carry the batch on axis 0; image
// tensors are [N, C, H, W].

Tensor relu(const Tensor& x);
Tensor relu_backward(const Tensor& x, const Tensor& grad_out);

/// Cross-correlation (no kernel flip) with zero padding.
/// kernels: [O, C, kh, kw], bias: [O].
Tensor conv2d(const Tensor& x, const Tensor& kernels, const Tensor& bias, int stride, int pad_h,
              int pad_w);

struct ConvGradients {
  Tensor input;
  Tensor kernels;
  Tensor bias;
};
ConvGradients conv2d_backward(const Tensor& x, const Tensor& kernels, const Tensor& grad_out,
                              int stride, int pad_h, int pad_w);

struct PoolResult {
  Tensor output;
  std::vector<std::size_t> argmax;  ///< flat input index per output element
};
/// Window maxima; ties go to the first element in row-major scan order.
PoolResult maxpool(const Tensor& x, const MaxPoolSpec& spec);
Tensor maxpool_backward(const Shape& input_shape, const std::vector<std::size_t>& argmax,
                        const Tensor& grad_out);

/// Inverted dropout: zero with probability p, survivors scaled by
/// 1 / (1 - p). Identity in infer mode.
Tensor dropout(const Tensor& x, double p, Mode mode, std::uint64_t seed);

/// x: [N, F...] flattened to [N, F], weights: [O, F], bias: [O].
Tensor fully_connected(const Tensor& x, const Tensor& weights, const Tensor& bias);

/// Row-wise softmax of [N, K] (or [K]) logits with max subtraction.
/// Throws NumericError for non-finite logits.
Tensor softmax(const Tensor& logits);
Tensor softmax_backward(const Tensor& probabilities, const Tensor& grad_out);

/// -ln p[label] for one probability vector.
double cross_entropy(std::span<const double> probabilities, std::size_t label);

/// v <- momentum v - lr (g + l2 w);  w <- w + v
void sgdm_step(std::span<double> weights, std::span<double> velocity,
               std::span<const double> gradient, double lr, double momentum, double l2);

// ---------------------------------------------------------------------------
// Stateful layers.

struct Parameter {
  std::string name;
  Tensor* value = nullptr;
  Tensor* grad = nullptr;
  bool decay = false;  ///< subject to L2 regularization
};

class Layer {
 public:
  virtual ~Layer() = default;

  virtual Tensor forward(const Tensor& x, Mode mode) = 0;
  /// Gradient w.r.t. the input of the latest forward call; accumulates
  /// parameter gradients.
  virtual Tensor backward(const Tensor& grad_out) = 0;

  virtual std::vector<Parameter> parameters() { return {}; }
  /// Non-trainable persistent tensors (batchnorm running statistics).
  virtual std::vector<Tensor*> buffers() { return {}; }
  virtual void reseed(std::uint64_t) {}

  virtual std::unique_ptr<Layer> clone() const = 0;
  virtual LayerSpec spec() const = 0;
};

/// Builds a layer for per-sample `input` shape. Weights of conv and dense
/// layers are drawn from N(0, 2 / fan_in); biases start at zero, batchnorm
/// at gamma = 1, beta = 0, running mean 0, running variance 1.
std::unique_ptr<Layer> make_layer(const LayerSpec& spec, const Shape& input, std::mt19937_64& rng);

class Conv2d final : public Layer {
 public:
  Conv2d(const ConvSpec& spec, std::size_t in_channels, std::mt19937_64& rng);

  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& grad_out) override;
  std::vector<Parameter> parameters() override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Conv2d>(*this); }
  LayerSpec spec() const override { return spec_; }

 private:
  ConvSpec spec_;
  Tensor kernels_, bias_, grad_kernels_, grad_bias_;
  Tensor input_;
};

class BatchNorm final : public Layer {
 public:
  BatchNorm(const BatchNormSpec& spec, std::size_t channels);

  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& grad_out) override;
  std::vector<Parameter> parameters() override;
  std::vector<Tensor*> buffers() override { return {&running_mean_, &running_var_}; }
  std::unique_ptr<Layer> clone() const override { return std::make_unique<BatchNorm>(*this); }
  LayerSpec spec() const override { return spec_; }

  const Tensor& running_mean() const { return running_mean_; }
  const Tensor& running_var() const { return running_var_; }
  Tensor& gamma() { return gamma_; }
  Tensor& beta() { return beta_; }

 private:
  BatchNormSpec spec_;
  Tensor gamma_, beta_, grad_gamma_, grad_beta_;
  Tensor running_mean_, running_var_;
  // Cache of the latest forward call.
  Tensor normalized_;
  std::vector<double> inv_std_;
  Mode mode_ = Mode::infer;
};

class Relu final : public Layer {
 public:
  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& grad_out) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Relu>(*this); }
  LayerSpec spec() const override { return ReluSpec{}; }

 private:
  Tensor input_;
};

class MaxPool2d final : public Layer {
 public:
  explicit MaxPool2d(const MaxPoolSpec& spec) : spec_(spec) {}

  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& grad_out) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<MaxPool2d>(*this); }
  LayerSpec spec() const override { return spec_; }

 private:
  MaxPoolSpec spec_;
  Shape input_shape_;
  std::vector<std::size_t> argmax_;
};

class Dropout final : public Layer {
 public:
  explicit Dropout(const DropoutSpec& spec);

  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& grad_out) override;
  void reseed(std::uint64_t seed) override { rng_.seed(seed); }
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Dropout>(*this); }
  LayerSpec spec() const override { return spec_; }

 private:
  DropoutSpec spec_;
  std::mt19937_64 rng_;
  std::vector<double> mask_;  ///< empty after an infer-mode forward
};

class Dense final : public Layer {
 public:
  Dense(const DenseSpec& spec, std::size_t inputs, std::mt19937_64& rng);

  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& grad_out) override;
  std::vector<Parameter> parameters() override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Dense>(*this); }
  LayerSpec spec() const override { return spec_; }

 private:
  DenseSpec spec_;
  Tensor weights_, bias_, grad_weights_, grad_bias_;
  Tensor input_;
};

class Softmax final : public Layer {
 public:
  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& grad_out) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Softmax>(*this); }
  LayerSpec spec() const override { return SoftmaxSpec{}; }

 private:
  Tensor output_;
};

}  // namespace dip::nn
