#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "edgesched/evaluator.hpp"
#include "edgesched/task_model.hpp"

namespace edgesched {

inline Schedule fifo_order(const ProblemInstance& instance) {
  return Schedule::identity(instance.size());
}

namespace detail {

template <typename Key>
Schedule stable_order_by(const ProblemInstance& instance, Key key) {
  std::vector<std::size_t> order(instance.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return key(instance[a]) < key(instance[b]);
  });
  return Schedule(std::move(order));
}

}  // namespace detail

/// Shortest task first; ties keep instance order.
inline Schedule stf_order(const ProblemInstance& instance) {
  return detail::stable_order_by(instance, [](const Task& t) { return t.processing_time; });
}

/// Shortest deadline first; ties keep instance order.
inline Schedule sdf_order(const ProblemInstance& instance) {
  return detail::stable_order_by(instance, [](const Task& t) { return t.deadline; });
}

struct OracleResult {
  Schedule schedule;
  EvaluationReport report;
};

inline constexpr std::size_t kDefaultOracleMaxN = 8;

/// Exhaustive search over all N! serving orders. Permutations are visited in
/// lexicographic order and only a strictly better objective replaces the
/// incumbent, so ties resolve to the lexicographically smallest order.
inline OracleResult brute_force_optimal(const ProblemInstance& instance,
                                        const EvaluationContext& ctx,
                                        std::size_t max_n = kDefaultOracleMaxN) {
  ctx.validate();
  if (instance.size() > max_n) {
    throw ValidationError("brute force limited to N <= " + std::to_string(max_n) + ", got " +
                          std::to_string(instance.size()));
  }
  std::vector<std::size_t> order(instance.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<std::size_t> best = order;
  double best_objective = objective_of(instance, order, ctx);
  while (std::next_permutation(order.begin(), order.end())) {
    const double value = objective_of(instance, order, ctx);
    if (value < best_objective) {
      best_objective = value;
      best = order;
    }
  }
  Schedule schedule(std::move(best));
  EvaluationReport report = evaluate(instance, schedule, ctx);
  return {std::move(schedule), std::move(report)};
}

}  // namespace edgesched
