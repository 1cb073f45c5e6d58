#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "edgesched/dataset.hpp"
#include "edgesched/metrics.hpp"
#include "edgesched/neural/adam.hpp"
#include "edgesched/neural/model.hpp"

namespace edgesched::neural {

struct TrainConfig {
  int batch_size = 128;
  int max_epochs = 20;
  AdamConfig adam;
  double train_fraction = 0.8;
  double test_fraction = 0.1;
  double validation_fraction = 0.1;
  bool weighted_loss = false;
  WeightDecay weight_decay = WeightDecay::kLinear;
  bool teacher_forcing = false;
  std::uint64_t rng_seed = 0;
  ModelShape shape;

  void validate() const {
    if (batch_size < 1) throw ValidationError("batch size must be >= 1");
    if (max_epochs < 1) throw ValidationError("max epochs must be >= 1");
    if (!(adam.learning_rate > 0.0)) throw ValidationError("learning rate must be positive");
    if (shape.embed_dim < 1 || shape.hidden < 1) throw ValidationError("model dimensions must be >= 1");
    const double total = train_fraction + test_fraction + validation_fraction;
    if (train_fraction <= 0.0 || test_fraction < 0.0 || validation_fraction < 0.0 || std::abs(total - 1.0) > 1e-9) {
      throw ValidationError("split fractions must be non-negative and sum to 1");
    }
  }

  LossOptions loss_options() const {
    LossOptions options;
    options.weighted = weighted_loss;
    options.decay = weight_decay;
    return options;
  }

  DecodeMode training_mode() const {
    return teacher_forcing ? DecodeMode::kTeacherForced : DecodeMode::kSequential;
  }
};

struct DatasetSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  std::vector<std::size_t> validation;
};

/// Seeded shuffle, then train / test / validation slices in that order.
inline DatasetSplit split_dataset(std::size_t count, const TrainConfig& cfg) {
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(cfg.rng_seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_train = static_cast<std::size_t>(std::floor(cfg.train_fraction * static_cast<double>(count)));
  const auto n_test = static_cast<std::size_t>(std::floor(cfg.test_fraction * static_cast<double>(count)));
  DatasetSplit split;
  split.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
                    order.begin() + static_cast<std::ptrdiff_t>(n_train + n_test));
  split.validation.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train + n_test), order.end());
  return split;
}

inline constexpr std::size_t kEvalBatch = 512;

/// Sequential-decoding probability rows for the selected samples.
inline std::vector<PredictedSequence> predict_sequences(const ModelParams& p, std::span<const DatasetSample> samples,
                                                        std::span<const std::size_t> indices) {
  std::vector<PredictedSequence> out;
  out.reserve(indices.size());
  for (std::size_t start = 0; start < indices.size(); start += kEvalBatch) {
    const auto chunk = indices.subspan(start, std::min(kEvalBatch, indices.size() - start));
    const SequenceBatch batch = SequenceBatch::from_samples(samples, chunk);
    BatchOutput result = forward(p, batch, DecodeMode::kSequential);
    for (std::size_t b = 0; b < batch.size(); ++b) {
      out.push_back(PredictedSequence{std::move(result.rows[b]), batch.targets[b]});
    }
  }
  return out;
}

/// Mean unweighted soft sequence loss under sequential decoding.
inline double evaluation_loss(const ModelParams& p, std::span<const DatasetSample> samples,
                              std::span<const std::size_t> indices) {
  if (indices.empty()) return std::numeric_limits<double>::quiet_NaN();
  double total = 0.0;
  for (const PredictedSequence& seq : predict_sequences(p, samples, indices)) {
    total += soft_sequence_loss(seq.rows, seq.targets);
  }
  return total / static_cast<double>(indices.size());
}

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double seconds = 0.0;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  double best_val_loss = 0.0;
  MetricsReport test_metrics;
  std::size_t test_count = 0;
};

struct TrainResult {
  ModelParams params;
  TrainReport report;
};

/// Minibatch training with Adam. Returns the parameters from the epoch with
/// the lowest validation loss (training loss when there is no validation
/// split). Single-threaded and therefore deterministic for a given seed.
inline TrainResult train(std::span<const DatasetSample> samples, const TrainConfig& cfg,
                         const std::function<void(const EpochRecord&)>& on_epoch = {}) {
  cfg.validate();
  if (samples.empty()) throw ValidationError("training needs a non-empty dataset");
  for (std::size_t k = 0; k < samples.size(); ++k) {
    if (std::string why = sample_violation(samples[k]); !why.empty()) {
      throw ValidationError("sample " + std::to_string(k) + ": " + why);
    }
  }
  const DatasetSplit split = split_dataset(samples.size(), cfg);
  if (split.train.empty()) throw ValidationError("training split is empty");

  ModelParams params = ModelParams::random(cfg.shape, cfg.rng_seed);
  ModelParams grads = ModelParams::zeros(cfg.shape);
  Adam optimizer(cfg.shape, cfg.adam);
  std::mt19937_64 rng(cfg.rng_seed ^ 0x5DEECE66DULL);
  const LossOptions loss_options = cfg.loss_options();

  TrainResult result{params, {}};
  double best = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> order = split.train;
  const auto batch = static_cast<std::size_t>(cfg.batch_size);
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    std::shuffle(order.begin(), order.end(), rng);
    double weighted_loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const auto chunk = std::span<const std::size_t>(order).subspan(start, std::min(batch, order.size() - start));
      const SequenceBatch mb = SequenceBatch::from_samples(samples, chunk);
      const double loss = loss_and_gradient(params, mb, cfg.training_mode(), loss_options, grads);
      if (!std::isfinite(loss)) {
        throw std::runtime_error("non-finite training loss at epoch " + std::to_string(epoch) + ", sample offset " +
                                 std::to_string(start));
      }
      optimizer.step(params, grads);
      weighted_loss_sum += loss * static_cast<double>(chunk.size());
    }
    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = weighted_loss_sum / static_cast<double>(order.size());
    record.val_loss = evaluation_loss(params, samples, split.validation);
    record.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    if (!params.all_finite()) throw std::runtime_error("parameters became non-finite at epoch " + std::to_string(epoch));
    const double score = split.validation.empty() ? record.train_loss : record.val_loss;
    if (score < best) {
      best = score;
      result.params = params;
      result.report.best_epoch = epoch;
      result.report.best_val_loss = score;
    }
    result.report.epochs.push_back(record);
    if (on_epoch) on_epoch(record);
  }
  if (!split.test.empty()) {
    result.report.test_metrics = compute_metrics(predict_sequences(result.params, samples, split.test));
    result.report.test_count = split.test.size();
  }
  return result;
}

}  // namespace edgesched::neural
