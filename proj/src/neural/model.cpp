#include "dip/neural/model.hpp"

#include <random>
#include <string>

#include "dip/error.hpp"
#include "dip/seed.hpp"

namespace dip::nn {

void ModelSpec::validate() const { shapes(); }

std::vector<Shape> ModelSpec::shapes() const {
  if (input_shape.size() != 3 || element_count(input_shape) == 0) {
    throw ShapeError("model input must be a non-empty [C, H, W], got " + to_string(input_shape));
  }
  if (class_count < 2) throw InvalidArgument("model needs at least 2 classes");
  if (layers.empty() || !std::holds_alternative<SoftmaxSpec>(layers.back())) {
    throw InvalidArgument("model must end with a softmax layer");
  }
  std::vector<Shape> out{input_shape};
  for (std::size_t i = 0; i < layers.size(); ++i) {
    try {
      out.push_back(output_shape(layers[i], out.back()));
    } catch (const ShapeError& e) {
      throw ShapeError("layer " + std::to_string(i) + " (" + layer_name(layers[i]) + "): " + e.what());
    }
  }
  if (out.back() != Shape{class_count}) {
    throw ShapeError("model output " + to_string(out.back()) + " does not match " +
                     std::to_string(class_count) + " classes");
  }
  return out;
}

namespace {

void conv_stack(std::vector<LayerSpec>& layers, const ArchitectureOptions& o) {
  if (o.filters.size() != o.kernels.size()) {
    throw InvalidArgument("architecture: filters and kernels lists differ in length");
  }
  for (std::size_t i = 0; i < o.filters.size(); ++i) {
    const int k = o.kernels[i];
    if (k < 1 || k % 2 == 0) throw InvalidArgument("architecture: kernels must be odd");
    layers.emplace_back(ConvSpec{o.filters[i], k, k, 1, k / 2, k / 2});
    layers.emplace_back(BatchNormSpec{});
    layers.emplace_back(ReluSpec{});
    layers.emplace_back(MaxPoolSpec{o.pool_h, o.pool_w, o.pool_h, o.pool_w});
  }
}

ModelSpec finish(std::vector<LayerSpec> layers, const Shape& input, std::size_t classes) {
  layers.emplace_back(DenseSpec{static_cast<int>(classes)});
  layers.emplace_back(SoftmaxSpec{});
  ModelSpec spec{std::move(layers), input, classes};
  spec.validate();
  return spec;
}

}  // namespace

ModelSpec localization_architecture(const Shape& input, std::size_t classes,
                                    const ArchitectureOptions& options) {
  std::vector<LayerSpec> layers;
  conv_stack(layers, options);
  layers.emplace_back(DenseSpec{options.hidden});
  layers.emplace_back(ReluSpec{});
  layers.emplace_back(DropoutSpec{options.dropout});
  layers.emplace_back(DenseSpec{options.hidden2});
  layers.emplace_back(ReluSpec{});
  layers.emplace_back(DropoutSpec{options.dropout});
  return finish(std::move(layers), input, classes);
}

ModelSpec severity_architecture(const Shape& input, std::size_t classes,
                                const ArchitectureOptions& options) {
  std::vector<LayerSpec> layers;
  conv_stack(layers, options);
  layers.emplace_back(DenseSpec{options.hidden});
  layers.emplace_back(ReluSpec{});
  layers.emplace_back(DropoutSpec{options.dropout});
  return finish(std::move(layers), input, classes);
}

ModelSpec damage_architecture(const Shape& input, std::size_t classes,
                              const ArchitectureOptions& options) {
  std::vector<LayerSpec> layers;
  conv_stack(layers, options);
  layers.emplace_back(DenseSpec{options.hidden});
  layers.emplace_back(BatchNormSpec{});
  layers.emplace_back(ReluSpec{});
  layers.emplace_back(DropoutSpec{options.dropout});
  return finish(std::move(layers), input, classes);
}

Model::Model(ModelSpec spec, std::uint64_t seed) : spec_(std::move(spec)) {
  const auto shapes = spec_.shapes();
  std::mt19937_64 rng(derive_seed(seed, 0x1a7e, 0));
  for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
    layers_.push_back(make_layer(spec_.layers[i], shapes[i], rng));
  }
  reseed(seed);
}

Model::Model(const Model& other) : spec_(other.spec_) {
  layers_.reserve(other.layers_.size());
  for (const auto& l : other.layers_) layers_.push_back(l->clone());
}

Model& Model::operator=(const Model& other) {
  if (this != &other) {
    Model copy(other);
    *this = std::move(copy);
  }
  return *this;
}

Tensor Model::forward(const Tensor& batch, Mode mode) {
  Shape expected = spec_.input_shape;
  if (batch.rank() != 4 || Shape(batch.shape().begin() + 1, batch.shape().end()) != expected) {
    throw ShapeError("model expects [N]" + to_string(expected) + " input, got " +
                     to_string(batch.shape()));
  }
  if (batch.dim(0) == 0) throw ShapeError("empty batch");
  Tensor x = batch;
  for (auto& l : layers_) x = l->forward(x, mode);
  return x;
}

void Model::backward_from_logits(const Tensor& grad_logits) {
  Tensor g = grad_logits;
  for (std::size_t i = layers_.size() - 1; i-- > 0;) g = layers_[i]->backward(g);
}

std::vector<Parameter> Model::parameters() {
  std::vector<Parameter> out;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    for (auto& p : layers_[i]->parameters()) {
      p.name = std::to_string(i) + "." + layer_name(spec_.layers[i]) + "." + p.name;
      out.push_back(p);
    }
  }
  return out;
}

std::vector<Tensor*> Model::buffers() {
  std::vector<Tensor*> out;
  for (auto& l : layers_) {
    for (auto* b : l->buffers()) out.push_back(b);
  }
  return out;
}

void Model::zero_grad() {
  for (auto& p : parameters()) p.grad->fill(0.0);
}

void Model::reseed(std::uint64_t seed) {
  for (std::size_t i = 0; i < layers_.size(); ++i) layers_[i]->reseed(derive_seed(seed, 0xd0, i));
}

std::size_t argmax(std::span<const double> values) {
  if (values.empty()) throw InvalidArgument("argmax of an empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

Prediction predict(Model& model, const Tensor& sample) {
  if (sample.shape() != model.spec().input_shape) {
    throw ShapeError("sample shape " + to_string(sample.shape()) + " does not match model input " +
                     to_string(model.spec().input_shape));
  }
  Shape batched{1};
  batched.insert(batched.end(), sample.shape().begin(), sample.shape().end());
  const Tensor probs = model.forward(sample.reshaped(batched), Mode::infer);
  Prediction p;
  p.probabilities.assign(probs.values().begin(), probs.values().end());
  p.label = argmax(p.probabilities);
  return p;
}

}  // namespace dip::nn
