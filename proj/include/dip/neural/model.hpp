#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "dip/neural/layers.hpp"

namespace dip::nn {

struct ModelSpec {
  std::vector<LayerSpec> layers;
  Shape input_shape;  ///< [C, H, W]
  std::size_t class_count = 0;

  /// Throws ShapeError / InvalidArgument unless the layers chain from
  /// input_shape to a softmax over class_count outputs.
  void validate() const;
  /// Per-sample shapes: element 0 is the input, element i + 1 the output of
  /// layer i.
  std::vector<Shape> shapes() const;
  /// Hidden layers plus the input and the classification output.
  std::size_t nominal_layer_count() const { return layers.size() + 2; }
};

struct ArchitectureOptions {
  std::vector<int> filters{8, 16, 32};
  std::vector<int> kernels{5, 3, 3};  ///< square, "same" zero padding
  int pool_h = 2;
  int pool_w = 4;
  double dropout = 0.5;
  int hidden = 128;
  int hidden2 = 64;  ///< second fully connected layer, localization only
};

/// [conv, BN, relu, pool] x3, FC, relu, dropout, FC, relu, dropout, FC, softmax
/// (22 layers counted with input and output).
ModelSpec localization_architecture(const Shape& input, std::size_t classes,
                                    const ArchitectureOptions& options = {});
/// [conv, BN, relu, pool] x3, FC, relu, dropout, FC, softmax (19 layers).
ModelSpec severity_architecture(const Shape& input, std::size_t classes,
                                const ArchitectureOptions& options = {});
/// [conv, BN, relu, pool] x3, FC, BN, relu, dropout, FC, softmax (20 layers).
ModelSpec damage_architecture(const Shape& input, std::size_t classes,
                              const ArchitectureOptions& options = {});

class Model {
 public:
  /// Initializes weights from `seed`; dropout streams derive from it too.
  Model(ModelSpec spec, std::uint64_t seed);
  Model(const Model& other);
  Model& operator=(const Model& other);
  Model(Model&&) noexcept = default;
  Model& operator=(Model&&) noexcept = default;

  const ModelSpec& spec() const { return spec_; }
  std::size_t size() const { return layers_.size(); }
  Layer& layer(std::size_t i) { return *layers_.at(i); }
  const Layer& layer(std::size_t i) const { return *layers_.at(i); }

  /// batch: [N, C, H, W] -> class probabilities [N, K].
  Tensor forward(const Tensor& batch, Mode mode);
  /// Backpropagates dL/dlogits (the input of the final softmax) and
  /// accumulates parameter gradients.
  void backward_from_logits(const Tensor& grad_logits);

  std::vector<Parameter> parameters();
  std::vector<Tensor*> buffers();
  void zero_grad();
  void reseed(std::uint64_t seed);

 private:
  ModelSpec spec_;
  std::vector<std::unique_ptr<Layer>> layers_;
};

/// Index of the largest value; the lowest index wins ties.
std::size_t argmax(std::span<const double> values);

struct Prediction {
  std::size_t label = 0;
  std::vector<double> probabilities;
};

/// Inference on one [C, H, W] sample. Throws ShapeError on mismatch.
Prediction predict(Model& model, const Tensor& sample);

}  // namespace dip::nn
