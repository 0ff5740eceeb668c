#include "dip/neural/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "dip/error.hpp"
#include "dip/seed.hpp"

namespace dip::nn {

void TrainConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw InvalidArgument(std::string("train: ") + name + " must be positive");
    }
  };
  positive(momentum, "momentum");
  positive(batch_size, "batch size");
  positive(max_epochs, "max epochs");
  positive(learning_rate, "learning rate");
  positive(l2_regularization, "l2 regularization");
  positive(lr_drop_factor, "lr drop factor");
  positive(lr_drop_period, "lr drop period");
  if (momentum >= 1.0) throw InvalidArgument("train: momentum must be < 1");
  if (lr_drop_factor > 1.0) throw InvalidArgument("train: lr drop factor must be <= 1");
}

double TrainConfig::learning_rate_at(int epoch) const {
  if (epoch < 1) throw InvalidArgument("epochs are counted from 1");
  return learning_rate * std::pow(lr_drop_factor, (epoch - 1) / lr_drop_period);
}

Tensor make_batch(std::span<const Sample> samples, std::span<const std::size_t> indices) {
  if (indices.empty()) throw InvalidArgument("empty batch");
  const st::Spectrogram* first = samples[indices.front()].input;
  if (first == nullptr) throw InvalidArgument("sample without input");
  const std::size_t per = first->values.size();
  Tensor batch({indices.size(), first->channels, first->freq_bins, first->time_steps});
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const st::Spectrogram* s = samples[indices[i]].input;
    if (s == nullptr || s->channels != first->channels || s->freq_bins != first->freq_bins ||
        s->time_steps != first->time_steps) {
      throw ShapeError("batch samples differ in spectrogram shape");
    }
    std::copy(s->values.begin(), s->values.end(), batch.data() + i * per);
  }
  return batch;
}

std::string format_log_line(const EpochLog& e) {
  return fmt::format("{}, {:.6g}, {:.6f}, {:.4f}", e.epoch, e.learning_rate, e.train_loss,
                     e.val_accuracy);
}

std::vector<std::size_t> predict_labels(Model& model, std::span<const Sample> samples,
                                        int batch_size) {
  std::vector<std::size_t> out;
  out.reserve(samples.size());
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < samples.size(); start += static_cast<std::size_t>(batch_size)) {
    const std::size_t end = std::min(samples.size(), start + static_cast<std::size_t>(batch_size));
    idx.resize(end - start);
    std::iota(idx.begin(), idx.end(), start);
    const Tensor probs = model.forward(make_batch(samples, idx), Mode::infer);
    const std::size_t k = probs.stride0();
    for (std::size_t r = 0; r < idx.size(); ++r) {
      out.push_back(argmax(probs.values().subspan(r * k, k)));
    }
  }
  return out;
}

double accuracy(Model& model, std::span<const Sample> samples) {
  if (samples.empty()) return 0.0;
  const auto labels = predict_labels(model, samples);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) hits += labels[i] == samples[i].label;
  return static_cast<double>(hits) / static_cast<double>(samples.size());
}

namespace {

// Batch boundaries over a permutation of n items; a lone trailing item joins
// the previous batch.
std::vector<std::pair<std::size_t, std::size_t>> batch_ranges(std::size_t n, std::size_t size) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t s = 0; s < n; s += size) out.emplace_back(s, std::min(n, s + size));
  if (out.size() > 1 && out.back().second - out.back().first == 1) {
    out.pop_back();
    out.back().second = n;
  }
  return out;
}

}  // namespace

TrainResult train(const ModelSpec& spec, std::span<const Sample> train_set,
                  std::span<const Sample> validation_set, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  config.validate();
  spec.validate();
  if (train_set.size() < 2) throw InvalidArgument("training needs at least 2 samples");
  for (const auto& s : train_set) {
    if (s.label >= spec.class_count) throw InvalidArgument("training label outside class range");
  }

  Model model(spec, config.seed);
  auto params = model.parameters();
  std::vector<std::vector<double>> velocity;
  velocity.reserve(params.size());
  for (const auto& p : params) velocity.emplace_back(p.value->size(), 0.0);

  TrainResult result{model, {}, 0, -1.0};
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  const auto ranges = batch_ranges(order.size(), static_cast<std::size_t>(config.batch_size));

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const double lr = config.learning_rate_at(epoch);
    std::mt19937_64 shuffle_rng(derive_seed(config.seed, 0x5b, static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    double loss_sum = 0.0;
    for (const auto& [begin, end] : ranges) {
      const std::span<const std::size_t> idx(order.data() + begin, end - begin);
      const Tensor batch = make_batch(train_set, idx);
      model.zero_grad();
      Tensor probs;
      try {
        probs = model.forward(batch, Mode::train);
      } catch (const TrainingFailure&) {
        throw;
      } catch (const NumericError& e) {
        throw TrainingFailure(epoch, e.what());
      }
      const std::size_t n = idx.size();
      const std::size_t k = spec.class_count;
      // d(mean CE)/dlogits = (p - onehot) / N
      Tensor grad(probs.shape());
      for (std::size_t r = 0; r < n; ++r) {
        const std::size_t label = train_set[idx[r]].label;
        loss_sum += cross_entropy(probs.values().subspan(r * k, k), label);
        for (std::size_t c = 0; c < k; ++c) {
          grad[r * k + c] = (probs[r * k + c] - (c == label ? 1.0 : 0.0)) / static_cast<double>(n);
        }
      }
      if (!std::isfinite(loss_sum)) throw TrainingFailure(epoch, "non-finite loss");
      model.backward_from_logits(grad);
      for (std::size_t i = 0; i < params.size(); ++i) {
        sgdm_step(params[i].value->values(), velocity[i], params[i].grad->values(), lr,
                  config.momentum, params[i].decay ? config.l2_regularization : 0.0);
      }
    }

    EpochLog entry;
    entry.epoch = epoch;
    entry.learning_rate = lr;
    entry.train_loss = loss_sum / static_cast<double>(train_set.size());
    entry.val_accuracy = validation_set.empty() ? 0.0 : accuracy(model, validation_set);
    result.log.push_back(entry);
    if (on_epoch) on_epoch(entry);

    if (validation_set.empty() || entry.val_accuracy > result.best_val_accuracy) {
      result.best_val_accuracy = entry.val_accuracy;
      result.best_epoch = epoch;
      result.model = model;
    }
  }
  return result;
}

}  // namespace dip::nn
