#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "edgesched/task_model.hpp"

namespace edgesched {

inline constexpr double kMetricsEpsilon = 1e-9;

/// Model output for one sequence: a probability row over the nine task
/// classes for each non-pad position, and the class id expected there.
struct PredictedSequence {
  std::vector<std::array<double, kTypeCount>> rows;
  std::vector<int> targets;
};

struct MetricsReport {
  double avg_soft_accuracy = 0.0;
  double avg_soft_precision = 0.0;
  double avg_soft_recall = 0.0;
  double weighted_f1 = 0.0;
  std::array<double, kTypeCount> per_class_f1{};
  double epsilon = kMetricsEpsilon;
};

namespace detail {

inline void check_batch(std::span<const PredictedSequence> batch) {
  if (batch.empty()) throw ValidationError("metrics need a non-empty batch");
  for (const auto& seq : batch) {
    if (seq.rows.size() != seq.targets.size() || seq.rows.empty()) {
      throw ValidationError("each sequence needs one probability row per target token");
    }
    for (int y : seq.targets) {
      if (y < 0 || y >= static_cast<int>(kTypeCount)) throw ValidationError("target class out of range");
    }
  }
}

}  // namespace detail

/// Mean over sequences of the mean probability given to the correct class.
inline double soft_accuracy(std::span<const PredictedSequence> batch) {
  detail::check_batch(batch);
  double total = 0.0;
  for (const auto& seq : batch) {
    double credited = 0.0;
    for (std::size_t t = 0; t < seq.rows.size(); ++t) {
      credited += seq.rows[t][static_cast<std::size_t>(seq.targets[t])];
    }
    total += credited / static_cast<double>(seq.rows.size());
  }
  return total / static_cast<double>(batch.size());
}

struct SoftConfusion {
  std::array<double, kTypeCount> tp{};
  std::array<double, kTypeCount> fp{};
  std::array<double, kTypeCount> fn{};
};

/// Soft TP/FP/FN accumulated over every token: a row adds P(c) to TP_c when
/// c is the target and to FP_c otherwise, and 1 - P(c) to FN_c at targets.
inline SoftConfusion soft_confusion(std::span<const PredictedSequence> batch) {
  detail::check_batch(batch);
  SoftConfusion acc;
  for (const auto& seq : batch) {
    for (std::size_t t = 0; t < seq.rows.size(); ++t) {
      const auto y = static_cast<std::size_t>(seq.targets[t]);
      for (std::size_t c = 0; c < kTypeCount; ++c) {
        const double p = seq.rows[t][c];
        if (c == y) {
          acc.tp[c] += p;
          acc.fn[c] += 1.0 - p;
        } else {
          acc.fp[c] += p;
        }
      }
    }
  }
  return acc;
}

/// Macro-averaged soft precision and recall over all nine classes.
inline std::pair<double, double> soft_precision_recall(std::span<const PredictedSequence> batch,
                                                       double epsilon = kMetricsEpsilon) {
  const SoftConfusion acc = soft_confusion(batch);
  double precision = 0.0;
  double recall = 0.0;
  for (std::size_t c = 0; c < kTypeCount; ++c) {
    precision += acc.tp[c] / (acc.tp[c] + acc.fp[c] + epsilon);
    recall += acc.tp[c] / (acc.tp[c] + acc.fn[c] + epsilon);
  }
  return {precision / kTypeCount, recall / kTypeCount};
}

/// Support-weighted F1 over hard token predictions. Per-class F1 is zero when
/// precision + recall is zero.
inline double weighted_f1(std::span<const int> predicted, std::span<const int> targets,
                          std::array<double, kTypeCount>* per_class = nullptr) {
  if (predicted.size() != targets.size()) throw ValidationError("prediction and target counts differ");
  if (targets.empty()) throw ValidationError("weighted F1 needs at least one token");
  std::array<double, kTypeCount> tp{}, fp{}, fn{}, support{};
  for (std::size_t k = 0; k < targets.size(); ++k) {
    const int p = predicted[k];
    const int y = targets[k];
    if (p < 0 || y < 0 || p >= static_cast<int>(kTypeCount) || y >= static_cast<int>(kTypeCount)) {
      throw ValidationError("class id out of range");
    }
    support[static_cast<std::size_t>(y)] += 1;
    if (p == y) {
      tp[static_cast<std::size_t>(y)] += 1;
    } else {
      fp[static_cast<std::size_t>(p)] += 1;
      fn[static_cast<std::size_t>(y)] += 1;
    }
  }
  double weighted = 0.0;
  for (std::size_t c = 0; c < kTypeCount; ++c) {
    const double prec = tp[c] + fp[c] > 0 ? tp[c] / (tp[c] + fp[c]) : 0.0;
    const double rec = tp[c] + fn[c] > 0 ? tp[c] / (tp[c] + fn[c]) : 0.0;
    const double f1 = prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0.0;
    if (per_class) (*per_class)[c] = f1;
    weighted += support[c] * f1;
  }
  return weighted / static_cast<double>(targets.size());
}

inline int argmax_row(const std::array<double, kTypeCount>& row) {
  int best = 0;
  for (int k = 1; k < static_cast<int>(kTypeCount); ++k) {
    if (row[static_cast<std::size_t>(k)] > row[static_cast<std::size_t>(best)]) best = k;
  }
  return best;
}

inline MetricsReport compute_metrics(std::span<const PredictedSequence> batch, double epsilon = kMetricsEpsilon) {
  MetricsReport report;
  report.epsilon = epsilon;
  report.avg_soft_accuracy = soft_accuracy(batch);
  std::tie(report.avg_soft_precision, report.avg_soft_recall) = soft_precision_recall(batch, epsilon);
  std::vector<int> predicted;
  std::vector<int> targets;
  for (const auto& seq : batch) {
    for (std::size_t t = 0; t < seq.rows.size(); ++t) {
      predicted.push_back(argmax_row(seq.rows[t]));
      targets.push_back(seq.targets[t]);
    }
  }
  report.weighted_f1 = weighted_f1(predicted, targets, &report.per_class_f1);
  return report;
}

}  // namespace edgesched
