#pragma once

// Test-only oracles that stay independent of the code paths they check.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "edgesched/evaluator.hpp"
#include "edgesched/neural/model.hpp"

namespace edgesched::oracle {

struct TensorGradientError {
  std::string name;
  double relative_error = 0.0;
  double analytic_norm = 0.0;
};

/// Central finite differences of the mean batch loss for every parameter,
/// compared tensor by tensor as ||g_a - g_fd|| / max(||g_a||, ||g_fd||).
inline std::vector<TensorGradientError> finite_difference_check(const neural::ModelParams& params,
                                                                const neural::SequenceBatch& batch,
                                                                neural::DecodeMode mode,
                                                                const neural::LossOptions& options, double step) {
  using namespace neural;
  ModelParams analytic;
  loss_and_gradient(params, batch, mode, options, analytic);
  ModelParams probe = params;
  std::vector<TensorGradientError> errors;
  auto probe_tensors = probe.tensors();
  const auto grad_tensors = analytic.tensors();
  for (std::size_t k = 0; k < ModelParams::kTensorCount; ++k) {
    Matrix& m = *probe_tensors[k];
    Matrix numeric = Matrix::Zero(m.rows(), m.cols());
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      const double saved = m.data()[i];
      m.data()[i] = saved + step;
      const double up = batch_loss(forward(probe, batch, mode), batch, options);
      m.data()[i] = saved - step;
      const double down = batch_loss(forward(probe, batch, mode), batch, options);
      m.data()[i] = saved;
      numeric.data()[i] = (up - down) / (2 * step);
    }
    const Matrix& a = *grad_tensors[k];
    const double scale = std::max({a.norm(), numeric.norm(), 1e-300});
    errors.push_back({std::string(ModelParams::kTensorNames[k]), (a - numeric).norm() / scale, a.norm()});
  }
  return errors;
}

/// Random batch of variable-length sequences with permutation targets.
inline neural::SequenceBatch random_batch(std::size_t count, std::size_t max_len, std::mt19937_64& rng,
                                          std::size_t min_len = 1) {
  neural::SequenceBatch batch;
  std::uniform_int_distribution<std::size_t> len_dist(min_len, max_len);
  std::uniform_int_distribution<int> type_dist(0, 8);
  for (std::size_t b = 0; b < count; ++b) {
    const std::size_t len = len_dist(rng);
    std::vector<int> types(len);
    for (int& t : types) t = type_dist(rng);
    std::vector<int> target = types;
    std::shuffle(target.begin(), target.end(), rng);
    std::vector<int> tokens;
    for (int t : types) tokens.push_back(neural::Vocabulary::token_of(t));
    batch.inputs.push_back(std::move(tokens));
    batch.targets.push_back(std::move(target));
  }
  return batch;
}

/// Waiting times read off an assignment matrix: task i waits for every task
/// j placed at an earlier position, t_w(i) = sum_j sum_{k < J_i} x_jk t_p(j).
inline std::vector<double> matrix_waiting_times(const ProblemInstance& inst, const BinaryAssignment& x) {
  const std::size_t n = inst.size();
  std::vector<double> w(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t pos_i = 0;
    while (!x.at(i, pos_i)) ++pos_i;
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t k = 0; k < pos_i; ++k) {
        if (x.at(j, k)) w[i] += inst[j].processing_time;
      }
    }
  }
  return w;
}

/// Per-task drop flags from first principles (occupy-server semantics).
inline std::vector<int> direct_drops(const ProblemInstance& inst, const std::vector<double>& waits, double t_exe) {
  std::vector<int> d(inst.size());
  for (std::size_t i = 0; i < inst.size(); ++i) {
    d[i] = inst[i].deadline < waits[i] + inst[i].processing_time + t_exe ? 1 : 0;
  }
  return d;
}

/// Mean of the per-task normalized waits over served tasks, summed then divided by N.
inline double average_of_normalized(const ProblemInstance& inst, const std::vector<double>& waits,
                                    const std::vector<int>& d) {
  double total_tp = 0.0;
  for (std::size_t i = 0; i < inst.size(); ++i) total_tp += inst[i].processing_time;
  double acc = 0.0;
  for (std::size_t i = 0; i < inst.size(); ++i) acc += (waits[i] / total_tp) * (1 - d[i]);
  return acc / static_cast<double>(inst.size());
}

/// Same quantity with the normalization pulled out of the sum.
inline double normalized_total(const ProblemInstance& inst, const std::vector<double>& waits,
                               const std::vector<int>& d) {
  double total_tp = 0.0;
  double served = 0.0;
  for (std::size_t i = 0; i < inst.size(); ++i) {
    total_tp += inst[i].processing_time;
    served += waits[i] * (1 - d[i]);
  }
  return served / (static_cast<double>(inst.size()) * total_tp);
}

}  // namespace edgesched::oracle
