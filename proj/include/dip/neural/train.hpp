#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "dip/neural/model.hpp"
#include "dip/stransform.hpp"

namespace dip::nn {

struct TrainConfig {
  double momentum = 0.9;
  int batch_size = 32;
  int max_epochs = 200;
  double learning_rate = 0.002;
  double l2_regularization = 0.001;
  double lr_drop_factor = 0.1;
  int lr_drop_period = 20;
  std::uint64_t seed = 0;

  /// Throws InvalidArgument for non-positive values or a drop factor > 1.
  void validate() const;
  /// Piecewise-constant schedule, epochs counted from 1.
  double learning_rate_at(int epoch) const;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct Sample {
  const st::Spectrogram* input = nullptr;
  std::size_t label = 0;
};

/// Copies samples into one [N, C, F, T] batch.
Tensor make_batch(std::span<const Sample> samples, std::span<const std::size_t> indices);

struct EpochLog {
  int epoch = 0;
  double learning_rate = 0.0;
  double train_loss = 0.0;     ///< mean cross-entropy, without the L2 term
  double val_accuracy = 0.0;
};

/// "epoch, lr, trainLoss, valAccuracy" with fixed formatting.
std::string format_log_line(const EpochLog& e);

struct TrainResult {
  Model model;  ///< weights with the best validation accuracy (earliest on ties)
  std::vector<EpochLog> log;
  int best_epoch = 0;
  double best_val_accuracy = 0.0;
};

using EpochCallback = std::function<void(const EpochLog&)>;

/// Mini-batch SGDM. Batches are reshuffled each epoch from the config seed;
/// a trailing batch of one sample is merged into the previous batch so that
/// batchnorm always sees at least two. With an empty validation set the
/// final weights are returned. Throws TrainingFailure on a non-finite loss.
TrainResult train(const ModelSpec& spec, std::span<const Sample> train_set,
                  std::span<const Sample> validation_set, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

/// Fraction of samples whose predicted label matches.
double accuracy(Model& model, std::span<const Sample> samples);

/// Predicted labels in infer mode, evaluated in batches.
std::vector<std::size_t> predict_labels(Model& model, std::span<const Sample> samples,
                                        int batch_size = 32);

}  // namespace dip::nn
