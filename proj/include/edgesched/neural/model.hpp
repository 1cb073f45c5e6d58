#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "edgesched/dataset.hpp"
#include "edgesched/neural/lstm.hpp"
#include "edgesched/neural/params.hpp"
#include "edgesched/task_model.hpp"

namespace edgesched::neural {

inline constexpr double kMaskValue = -1e9;
inline constexpr std::size_t kClasses = static_cast<std::size_t>(Vocabulary::kClasses);

using ClassRow = std::array<double, kClasses>;
using ClassCounts = std::array<int, kClasses>;

/// Additive mask: 0 for classes still available, -1e9 for exhausted ones.
inline ClassRow build_mask(std::span<const int> remaining_counts) {
  if (remaining_counts.size() != kClasses) throw ValidationError("mask expects 9 class counts");
  ClassRow mask{};
  bool any = false;
  for (std::size_t k = 0; k < kClasses; ++k) {
    if (remaining_counts[k] < 0) throw ValidationError("negative remaining count");
    mask[k] = remaining_counts[k] > 0 ? 0.0 : kMaskValue;
    any = any || remaining_counts[k] > 0;
  }
  if (!any) throw ValidationError("all task types exhausted; decoding should have stopped");
  return mask;
}

/// Softmax of logits + mask, written into `probs`.
inline void masked_softmax(const double* logits, const ClassRow& mask, double* probs) {
  double max_logit = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < kClasses; ++k) max_logit = std::max(max_logit, logits[k] + mask[k]);
  double total = 0.0;
  for (std::size_t k = 0; k < kClasses; ++k) {
    probs[k] = std::exp(logits[k] + mask[k] - max_logit);
    total += probs[k];
  }
  for (std::size_t k = 0; k < kClasses; ++k) probs[k] /= total;
}

/// Index of the largest probability; ties go to the lowest class id.
inline int argmax_class(const double* probs) {
  int best = 0;
  for (int k = 1; k < Vocabulary::kClasses; ++k) {
    if (probs[k] > probs[best]) best = k;
  }
  return best;
}

inline ClassCounts class_counts(std::span<const int> tokens) {
  ClassCounts counts{};
  for (int tok : tokens) ++counts[static_cast<std::size_t>(Vocabulary::type_of(tok))];
  return counts;
}

// ---------------------------------------------------------------------------
// Single-sequence inference API.

struct RecurrentState {
  Matrix h;  // 1 x H
  Matrix c;  // 1 x H
};

namespace detail {

inline Matrix single_input_gates(const ModelParams& p, const LstmWeights& cell, int token) {
  Matrix gates = p.embedding.row(token) * cell.w_ih.transpose();
  gates += cell.bias;
  return gates;
}

inline void check_task_tokens(std::span<const int> tokens, std::size_t length) {
  if (length == 0) throw ValidationError("sequence length must be at least 1");
  if (length > tokens.size()) throw ValidationError("length exceeds token count");
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    if (!Vocabulary::is_valid(tokens[t])) {
      throw ValidationError("token out of vocabulary: " + std::to_string(tokens[t]));
    }
    if (t < length && !Vocabulary::is_task(tokens[t])) {
      throw ValidationError("non-task token inside the sequence");
    }
  }
}

}  // namespace detail

/// Runs the encoder over the first `length` tokens; padding never enters
/// the recurrence.
inline RecurrentState encode(const ModelParams& p, std::span<const int> tokens, std::size_t length) {
  detail::check_task_tokens(tokens, length);
  const int hidden = p.shape.hidden;
  RecurrentState state{Matrix::Zero(1, hidden), Matrix::Zero(1, hidden)};
  const std::array<char, 1> active{1};
  for (std::size_t t = 0; t < length; ++t) {
    lstm_forward(p.encoder.w_hh, detail::single_input_gates(p, p.encoder, tokens[t]), active, state.h, state.c,
                 nullptr);
  }
  return state;
}

struct DecodeStepResult {
  ClassRow logits{};
  ClassRow probabilities{};
  RecurrentState state;
};

inline DecodeStepResult decode_step(const ModelParams& p, int prev_token, const RecurrentState& state,
                                    std::span<const int> remaining_counts) {
  if (prev_token != Vocabulary::kStart && !Vocabulary::is_task(prev_token)) {
    throw ValidationError("decoder input must be the start token or a task token");
  }
  const ClassRow mask = build_mask(remaining_counts);
  DecodeStepResult out{{}, {}, state};
  const std::array<char, 1> active{1};
  lstm_forward(p.decoder.w_hh, detail::single_input_gates(p, p.decoder, prev_token), active, out.state.h,
               out.state.c, nullptr);
  Matrix logits = out.state.h * p.proj_weight + p.proj_bias;
  std::copy(logits.data(), logits.data() + kClasses, out.logits.begin());
  masked_softmax(out.logits.data(), mask, out.probabilities.data());
  return out;
}

/// Sequential decoding: each step's argmax is fed back as the next input and
/// removed from the available multiset. Returns task tokens.
inline std::vector<int> greedy_decode(const ModelParams& p, std::span<const int> tokens, std::size_t length) {
  RecurrentState state = encode(p, tokens, length);
  ClassCounts counts = class_counts(tokens.first(length));
  std::vector<int> out;
  out.reserve(length);
  int prev = Vocabulary::kStart;
  for (std::size_t t = 0; t < length; ++t) {
    DecodeStepResult step = decode_step(p, prev, state, counts);
    const int chosen = argmax_class(step.probabilities.data());
    --counts[static_cast<std::size_t>(chosen)];
    prev = Vocabulary::token_of(chosen);
    out.push_back(prev);
    state = std::move(step.state);
  }
  return out;
}

/// Probability rows when the decoder is fed the ground-truth previous token.
inline std::vector<ClassRow> teacher_forced_forward(const ModelParams& p, const DatasetSample& sample) {
  if (std::string why = sample_violation(sample); !why.empty()) throw ValidationError("invalid sample: " + why);
  std::vector<int> tokens(kMaxSequenceLength, Vocabulary::kPad);
  for (int t = 0; t < sample.length; ++t) tokens[static_cast<std::size_t>(t)] = Vocabulary::token_of(sample.input[t]);
  const auto length = static_cast<std::size_t>(sample.length);
  RecurrentState state = encode(p, tokens, length);
  ClassCounts counts = class_counts(std::span<const int>(tokens).first(length));
  std::vector<ClassRow> rows;
  int prev = Vocabulary::kStart;
  for (std::size_t t = 0; t < length; ++t) {
    DecodeStepResult step = decode_step(p, prev, state, counts);
    rows.push_back(step.probabilities);
    const int truth = sample.target[t];
    --counts[static_cast<std::size_t>(truth)];
    prev = Vocabulary::token_of(truth);
    state = std::move(step.state);
  }
  return rows;
}

/// Serving order predicted by the model. Tasks of equal type are served in
/// instance order.
inline Schedule schedule_with_model(const ModelParams& p, const ProblemInstance& instance) {
  std::vector<int> tokens;
  tokens.reserve(instance.size());
  for (const Task& t : instance.tasks()) tokens.push_back(Vocabulary::token_of(t.type_id));
  const std::vector<int> decoded = greedy_decode(p, tokens, tokens.size());
  std::vector<int> types;
  types.reserve(decoded.size());
  for (int tok : decoded) types.push_back(Vocabulary::type_of(tok));
  return schedule_for_types(instance, types);
}

// ---------------------------------------------------------------------------
// Batched forward/backward used for training and bulk evaluation.

enum class DecodeMode { kSequential, kTeacherForced };

/// Variable-length sequences without padding: inputs are task tokens,
/// targets are class ids (type ids) and may be empty for unlabeled batches.
struct SequenceBatch {
  std::vector<std::vector<int>> inputs;
  std::vector<std::vector<int>> targets;

  std::size_t size() const { return inputs.size(); }
  std::size_t max_length() const {
    std::size_t m = 0;
    for (const auto& s : inputs) m = std::max(m, s.size());
    return m;
  }

  static SequenceBatch from_samples(std::span<const DatasetSample> samples, std::span<const std::size_t> indices) {
    SequenceBatch batch;
    batch.inputs.reserve(indices.size());
    batch.targets.reserve(indices.size());
    for (std::size_t idx : indices) {
      const DatasetSample& s = samples[idx];
      std::vector<int> in;
      for (int type : s.input_ids()) in.push_back(Vocabulary::token_of(type));
      batch.inputs.push_back(std::move(in));
      batch.targets.emplace_back(s.target_ids().begin(), s.target_ids().end());
    }
    return batch;
  }
};

struct BatchOutput {
  std::vector<std::vector<ClassRow>> rows;     // per sequence, one row per step
  std::vector<std::vector<int>> predictions;   // per sequence, argmax class per step
};

struct ForwardTape {
  std::vector<LstmStepCache> encoder;
  std::vector<LstmStepCache> decoder;
  std::vector<Matrix> decoder_h;  // decoder output state per step, B x H
};

inline BatchOutput forward(const ModelParams& p, const SequenceBatch& batch, DecodeMode mode,
                           ForwardTape* tape = nullptr) {
  const std::size_t n = batch.size();
  const std::size_t steps = batch.max_length();
  const int hidden = p.shape.hidden;
  if (mode == DecodeMode::kTeacherForced && batch.targets.size() != n) {
    throw ValidationError("teacher forcing needs targets");
  }
  for (const auto& seq : batch.inputs) detail::check_task_tokens(seq, seq.size());

  const Matrix enc_table = input_gate_table(p.embedding, p.encoder);
  const Matrix dec_table = input_gate_table(p.embedding, p.decoder);
  Matrix h = Matrix::Zero(static_cast<Eigen::Index>(n), hidden);
  Matrix c = Matrix::Zero(static_cast<Eigen::Index>(n), hidden);
  std::vector<char> active(n);
  std::vector<int> tokens(n);
  Matrix gates(static_cast<Eigen::Index>(n), 4 * hidden);
  if (tape) {
    tape->encoder.assign(steps, {});
    tape->decoder.assign(steps, {});
    tape->decoder_h.assign(steps, {});
  }

  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t b = 0; b < n; ++b) {
      active[b] = t < batch.inputs[b].size();
      tokens[b] = active[b] ? batch.inputs[b][t] : Vocabulary::kPad;
      gates.row(static_cast<Eigen::Index>(b)) = enc_table.row(tokens[b]);
    }
    LstmStepCache* cache = tape ? &tape->encoder[t] : nullptr;
    if (cache) cache->tokens = tokens;
    lstm_forward(p.encoder.w_hh, gates, active, h, c, cache);
  }

  BatchOutput out;
  out.rows.resize(n);
  out.predictions.resize(n);
  std::vector<ClassCounts> counts(n);
  for (std::size_t b = 0; b < n; ++b) counts[b] = class_counts(batch.inputs[b]);
  std::vector<int> prev(n, Vocabulary::kStart);
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t b = 0; b < n; ++b) {
      active[b] = t < batch.inputs[b].size();
      tokens[b] = prev[b];
      gates.row(static_cast<Eigen::Index>(b)) = dec_table.row(tokens[b]);
    }
    LstmStepCache* cache = tape ? &tape->decoder[t] : nullptr;
    if (cache) cache->tokens = tokens;
    lstm_forward(p.decoder.w_hh, gates, active, h, c, cache);
    if (tape) tape->decoder_h[t] = h;
    Matrix logits = h * p.proj_weight;
    logits.rowwise() += p.proj_bias.row(0);
    for (std::size_t b = 0; b < n; ++b) {
      if (!active[b]) continue;
      ClassRow row{};
      masked_softmax(logits.row(static_cast<Eigen::Index>(b)).data(), build_mask(counts[b]), row.data());
      const int chosen = argmax_class(row.data());
      out.rows[b].push_back(row);
      out.predictions[b].push_back(chosen);
      int consumed = chosen;
      if (mode == DecodeMode::kTeacherForced) {
        consumed = batch.targets[b][t];
        if (consumed < 0 || consumed >= Vocabulary::kClasses || counts[b][static_cast<std::size_t>(consumed)] == 0) {
          throw ValidationError("target is not a permutation of the input");
        }
      }
      --counts[b][static_cast<std::size_t>(consumed)];
      prev[b] = Vocabulary::token_of(consumed);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Losses.

enum class WeightDecay { kLinear, kExponential };

struct LossOptions {
  bool weighted = false;
  WeightDecay decay = WeightDecay::kLinear;
  double exponential_rate = 0.8;
};

/// Per-position weights summing to one. Unweighted: 1/L each. Linear:
/// (L - t + 1) / sum(1..L) for 1-based t. Exponential: rate^(t-1), normalized.
inline std::vector<double> position_weights(std::size_t length, const LossOptions& options) {
  std::vector<double> w(length, 1.0 / static_cast<double>(length));
  if (!options.weighted) return w;
  double total = 0.0;
  for (std::size_t t = 0; t < length; ++t) {
    w[t] = options.decay == WeightDecay::kLinear ? static_cast<double>(length - t)
                                                 : std::pow(options.exponential_rate, static_cast<double>(t));
    total += w[t];
  }
  for (double& v : w) v /= total;
  return w;
}

/// 1 - sum_t w_t * P_t(target_t) for one sequence.
inline double sequence_loss(std::span<const ClassRow> rows, std::span<const int> targets, const LossOptions& options) {
  if (rows.size() != targets.size() || rows.empty()) throw ValidationError("loss needs one row per target token");
  const std::vector<double> w = position_weights(rows.size(), options);
  double credited = 0.0;
  for (std::size_t t = 0; t < rows.size(); ++t) credited += w[t] * rows[t][static_cast<std::size_t>(targets[t])];
  return 1.0 - credited;
}

inline double soft_sequence_loss(std::span<const ClassRow> rows, std::span<const int> targets) {
  return sequence_loss(rows, targets, LossOptions{});
}

inline double weighted_soft_loss(std::span<const ClassRow> rows, std::span<const int> targets,
                                 WeightDecay decay = WeightDecay::kLinear) {
  LossOptions options;
  options.weighted = true;
  options.decay = decay;
  return sequence_loss(rows, targets, options);
}

inline double batch_loss(const BatchOutput& out, const SequenceBatch& batch, const LossOptions& options) {
  double total = 0.0;
  for (std::size_t b = 0; b < batch.size(); ++b) total += sequence_loss(out.rows[b], batch.targets[b], options);
  return total / static_cast<double>(batch.size());
}

/// Mean batch loss and its gradient with respect to every parameter.
/// `grads` is overwritten.
inline double loss_and_gradient(const ModelParams& p, const SequenceBatch& batch, DecodeMode mode,
                                const LossOptions& options, ModelParams& grads) {
  ForwardTape tape;
  const BatchOutput out = forward(p, batch, mode, &tape);
  const double loss = batch_loss(out, batch, options);

  const std::size_t n = batch.size();
  const std::size_t steps = batch.max_length();
  const int hidden = p.shape.hidden;
  const auto rows = static_cast<Eigen::Index>(n);
  grads = ModelParams::zeros(p.shape);
  Matrix dtable_enc = Matrix::Zero(Vocabulary::kSize, 4 * hidden);
  Matrix dtable_dec = Matrix::Zero(Vocabulary::kSize, 4 * hidden);
  Matrix dh = Matrix::Zero(rows, hidden);
  Matrix dc = Matrix::Zero(rows, hidden);

  std::vector<std::vector<double>> weights(n);
  for (std::size_t b = 0; b < n; ++b) weights[b] = position_weights(batch.inputs[b].size(), options);
  const double inv_batch = 1.0 / static_cast<double>(n);

  Matrix dlogits(rows, static_cast<Eigen::Index>(kClasses));
  for (std::size_t t = steps; t-- > 0;) {
    dlogits.setZero();
    for (std::size_t b = 0; b < n; ++b) {
      if (t >= batch.inputs[b].size()) continue;
      const ClassRow& prob = out.rows[b][t];
      const auto y = static_cast<std::size_t>(batch.targets[b][t]);
      const double d_py = -weights[b][t] * inv_batch;
      for (std::size_t k = 0; k < kClasses; ++k) {
        dlogits(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(k)) =
            d_py * prob[y] * ((k == y ? 1.0 : 0.0) - prob[k]);
      }
    }
    grads.proj_weight.noalias() += tape.decoder_h[t].transpose() * dlogits;
    grads.proj_bias += dlogits.colwise().sum();
    dh.noalias() += dlogits * p.proj_weight.transpose();
    lstm_backward(p.decoder.w_hh, tape.decoder[t], dh, dc, grads.decoder.w_hh, dtable_dec);
  }
  for (std::size_t t = steps; t-- > 0;) {
    lstm_backward(p.encoder.w_hh, tape.encoder[t], dh, dc, grads.encoder.w_hh, dtable_enc);
  }
  accumulate_table_gradient(dtable_enc, p.embedding, p.encoder, grads.embedding, grads.encoder);
  accumulate_table_gradient(dtable_dec, p.embedding, p.decoder, grads.embedding, grads.decoder);
  return loss;
}

}  // namespace edgesched::neural
