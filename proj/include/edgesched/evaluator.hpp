#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "edgesched/task_model.hpp"

namespace edgesched {

struct EvaluationReport {
  std::vector<double> waiting_times;       // indexed by task
  std::vector<double> normalized_waiting;  // waiting / total processing time
  std::vector<std::uint8_t> drop_flags;
  double drop_ratio = 0.0;
  double avg_waiting = 0.0;  // normalized, dropped tasks count as zero
  double objective = 0.0;
};

namespace detail {

inline void check_sizes(const ProblemInstance& instance, std::size_t order_size) {
  if (instance.size() != order_size) {
    throw ValidationError("schedule size " + std::to_string(order_size) +
                          " does not match instance size " + std::to_string(instance.size()));
  }
}

/// Walks the serving order once. on_task(task index, waiting, dropped) is
/// called in serving order. Returns {drop count, sum of normalized waiting
/// over served tasks}, both accumulated in serving order so that the fast
/// objective path and the full report agree bit for bit.
template <typename OnTask>
std::pair<std::size_t, double> walk_schedule(const ProblemInstance& instance,
                                             std::span<const std::size_t> order,
                                             const EvaluationContext& ctx, OnTask&& on_task) {
  const double total_p = instance.total_processing_time();
  if (!(total_p > 0.0)) throw ValidationError("total processing time must be positive");
  double elapsed = 0.0;
  double served_norm_sum = 0.0;
  std::size_t drops = 0;
  for (std::size_t i : order) {
    const Task& task = instance[i];
    const double waiting = elapsed;
    const double relative_deadline = task.deadline - ctx.t_cur;
    const bool dropped = relative_deadline < waiting + task.processing_time + ctx.solver_exec_time;
    if (dropped) {
      ++drops;
    } else {
      served_norm_sum += waiting / total_p;
    }
    if (!dropped || ctx.drop_policy == DropPolicy::kOccupyServer) elapsed += task.processing_time;
    on_task(i, waiting, dropped);
  }
  return {drops, served_norm_sum};
}

inline double combine_objective(std::size_t drops, double served_norm_sum, std::size_t n,
                                double lambda) {
  const double nd = static_cast<double>(n);
  const double drop_ratio = static_cast<double>(drops) / nd;
  const double avg_waiting = served_norm_sum / nd;
  return lambda * drop_ratio + (1.0 - lambda) * avg_waiting;
}

}  // namespace detail

/// Waiting time of every task (indexed by task, not position).
inline std::vector<double> waiting_times(const ProblemInstance& instance, const Schedule& sched,
                                         const EvaluationContext& ctx = {}) {
  detail::check_sizes(instance, sched.size());
  std::vector<double> waits(instance.size(), 0.0);
  detail::walk_schedule(instance, sched.order(), ctx,
                        [&](std::size_t i, double w, bool) { waits[i] = w; });
  return waits;
}

inline std::vector<std::uint8_t> drop_flags(const ProblemInstance& instance, const Schedule& sched,
                                            const EvaluationContext& ctx) {
  detail::check_sizes(instance, sched.size());
  std::vector<std::uint8_t> flags(instance.size(), 0);
  detail::walk_schedule(instance, sched.order(), ctx,
                        [&](std::size_t i, double, bool d) { flags[i] = d ? 1 : 0; });
  return flags;
}

/// Scalar objective only; no allocation. Used as GA fitness.
inline double objective_of(const ProblemInstance& instance, std::span<const std::size_t> order,
                           const EvaluationContext& ctx) {
  auto [drops, norm_sum] = detail::walk_schedule(instance, order, ctx, [](std::size_t, double, bool) {});
  return detail::combine_objective(drops, norm_sum, instance.size(), ctx.lambda);
}

inline EvaluationReport evaluate(const ProblemInstance& instance, const Schedule& sched,
                                 const EvaluationContext& ctx) {
  ctx.validate();
  detail::check_sizes(instance, sched.size());
  const std::size_t n = instance.size();
  const double total_p = instance.total_processing_time();
  EvaluationReport report;
  report.waiting_times.assign(n, 0.0);
  report.normalized_waiting.assign(n, 0.0);
  report.drop_flags.assign(n, 0);
  auto [drops, norm_sum] =
      detail::walk_schedule(instance, sched.order(), ctx, [&](std::size_t i, double w, bool d) {
        report.waiting_times[i] = w;
        report.normalized_waiting[i] = w / total_p;
        report.drop_flags[i] = d ? 1 : 0;
      });
  report.drop_ratio = static_cast<double>(drops) / static_cast<double>(n);
  report.avg_waiting = norm_sum / static_cast<double>(n);
  report.objective = detail::combine_objective(drops, norm_sum, n, ctx.lambda);
  return report;
}

inline EvaluationReport evaluate(const ProblemInstance& instance, const BinaryAssignment& x,
                                 const EvaluationContext& ctx) {
  return evaluate(instance, schedule_from_matrix(x), ctx);
}

/// J_i: the 1-based serving position of task i.
inline std::size_t position_of(const BinaryAssignment& x, std::size_t i) {
  std::size_t position = 0;
  for (std::size_t j = 0; j < x.size(); ++j) position += (j + 1) * x.at(i, j);
  return position;
}

}  // namespace edgesched
