#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace edgesched {

/// Raised when an input violates a documented precondition or invariant.
/// The CLI maps it to exit code 2; every other exception maps to 1.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr std::size_t kTypeCount = 9;

struct TaskType {
  int id = 0;
  double processing_time = 0.0;
  double deadline = 0.0;  // relative to t_cur = 0

  friend bool operator==(const TaskType&, const TaskType&) = default;
};

/// The fixed set of nine task classes: processing times {10, 20, 30} crossed
/// with deadlines {50, 100, 150}, deadline varying fastest.
class TaskCatalog {
 public:
  static constexpr std::array<double, 3> kProcessingTimes{10.0, 20.0, 30.0};
  static constexpr std::array<double, 3> kDeadlines{50.0, 100.0, 150.0};

  static TaskCatalog standard() {
    TaskCatalog catalog;
    int id = 0;
    for (double tp : kProcessingTimes) {
      for (double td : kDeadlines) {
        catalog.entries_[static_cast<std::size_t>(id)] = TaskType{id, tp, td};
        ++id;
      }
    }
    return catalog;
  }

  const TaskType& operator[](int id) const {
    if (id < 0 || id >= static_cast<int>(kTypeCount)) {
      throw ValidationError("task type id out of range: " + std::to_string(id));
    }
    return entries_[static_cast<std::size_t>(id)];
  }

  std::span<const TaskType, kTypeCount> entries() const { return entries_; }
  static constexpr std::size_t size() { return kTypeCount; }

  friend bool operator==(const TaskCatalog&, const TaskCatalog&) = default;

 private:
  std::array<TaskType, kTypeCount> entries_{};
};

inline TaskCatalog catalog_default() { return TaskCatalog::standard(); }

struct Task {
  int type_id = 0;
  double arrival_time = 0.0;  // informational only
  double processing_time = 0.0;
  double deadline = 0.0;
};

/// An unordered batch of queued tasks. Type ids may repeat.
class ProblemInstance {
 public:
  ProblemInstance() = default;

  explicit ProblemInstance(std::vector<Task> tasks) : tasks_(std::move(tasks)) {
    if (tasks_.empty()) throw ValidationError("problem instance needs at least one task");
    for (const Task& t : tasks_) {
      if (t.type_id < 0 || t.type_id >= static_cast<int>(kTypeCount)) {
        throw ValidationError("task type id out of range: " + std::to_string(t.type_id));
      }
      if (!(t.processing_time > 0.0) || !(t.deadline > 0.0)) {
        throw ValidationError("task processing time and deadline must be positive");
      }
    }
  }

  static ProblemInstance from_type_ids(std::span<const int> type_ids,
                                       const TaskCatalog& catalog = TaskCatalog::standard()) {
    std::vector<Task> tasks;
    tasks.reserve(type_ids.size());
    for (int id : type_ids) {
      const TaskType& type = catalog[id];
      tasks.push_back(Task{id, 0.0, type.processing_time, type.deadline});
    }
    return ProblemInstance(std::move(tasks));
  }

  std::size_t size() const { return tasks_.size(); }
  const Task& operator[](std::size_t i) const { return tasks_[i]; }
  std::span<const Task> tasks() const { return tasks_; }

  std::vector<int> type_ids() const {
    std::vector<int> ids;
    ids.reserve(tasks_.size());
    for (const Task& t : tasks_) ids.push_back(t.type_id);
    return ids;
  }

  double total_processing_time() const {
    double total = 0.0;
    for (const Task& t : tasks_) total += t.processing_time;
    return total;
  }

 private:
  std::vector<Task> tasks_;
};

inline bool is_permutation_of_iota(std::span<const std::size_t> order) {
  std::vector<char> seen(order.size(), 0);
  for (std::size_t v : order) {
    if (v >= order.size() || seen[v]) return false;
    seen[v] = 1;
  }
  return true;
}

/// Serving order: order()[j] is the index of the task served j-th (0-based).
class Schedule {
 public:
  Schedule() = default;

  explicit Schedule(std::vector<std::size_t> order) : order_(std::move(order)) {
    if (!is_permutation_of_iota(order_)) {
      throw ValidationError("schedule is not a permutation of 0..N-1");
    }
  }

  static Schedule identity(std::size_t n) {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    return Schedule(std::move(order));
  }

  std::size_t size() const { return order_.size(); }
  std::size_t operator[](std::size_t j) const { return order_[j]; }
  std::span<const std::size_t> order() const { return order_; }

  /// positions()[i] is the 0-based serving position of task i.
  std::vector<std::size_t> positions() const {
    std::vector<std::size_t> pos(order_.size());
    for (std::size_t j = 0; j < order_.size(); ++j) pos[order_[j]] = j;
    return pos;
  }

  friend bool operator==(const Schedule&, const Schedule&) = default;

 private:
  std::vector<std::size_t> order_;
};

/// How dropped tasks affect their successors.
enum class DropPolicy {
  kOccupyServer,  // dropped tasks still consume server time
  kSkipDropped,   // dropped tasks are discarded and free the server
};

struct EvaluationContext {
  double lambda = 0.9;
  double t_cur = 0.0;
  double solver_exec_time = 0.0;  // in task time units
  double time_unit_scale = 1.0;   // task time units per wall-clock second
  DropPolicy drop_policy = DropPolicy::kOccupyServer;

  void validate() const {
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw ValidationError("lambda must lie in [0, 1]");
    if (!(t_cur >= 0.0)) throw ValidationError("t_cur must be non-negative");
    if (!(solver_exec_time >= 0.0)) throw ValidationError("solver execution time must be non-negative");
    if (!(time_unit_scale >= 0.0)) throw ValidationError("time unit scale must be non-negative");
  }

  EvaluationContext with_exec_seconds(double seconds) const {
    EvaluationContext ctx = *this;
    ctx.solver_exec_time = seconds * time_unit_scale;
    return ctx;
  }

  EvaluationContext without_exec() const {
    EvaluationContext ctx = *this;
    ctx.solver_exec_time = 0.0;
    return ctx;
  }
};

/// N x N 0/1 matrix; at(i, j) == 1 iff task i sits at serving position j.
class BinaryAssignment {
 public:
  BinaryAssignment() = default;
  explicit BinaryAssignment(std::size_t n) : n_(n), bits_(n * n, 0) {}
  BinaryAssignment(std::size_t n, std::vector<std::uint8_t> bits) : n_(n), bits_(std::move(bits)) {
    if (bits_.size() != n_ * n_) throw ValidationError("assignment matrix has wrong element count");
  }

  std::size_t size() const { return n_; }
  std::uint8_t at(std::size_t i, std::size_t j) const { return bits_[i * n_ + j]; }
  void set(std::size_t i, std::size_t j, std::uint8_t v) { bits_[i * n_ + j] = v ? 1 : 0; }
  std::span<const std::uint8_t> bits() const { return bits_; }

  /// Every row and every column holds exactly one 1.
  bool is_permutation() const {
    std::vector<int> col(n_, 0);
    for (std::size_t i = 0; i < n_; ++i) {
      int row = 0;
      for (std::size_t j = 0; j < n_; ++j) {
        const std::uint8_t b = at(i, j);
        if (b > 1) return false;
        row += b;
        col[j] += b;
      }
      if (row != 1) return false;
    }
    return std::all_of(col.begin(), col.end(), [](int c) { return c == 1; });
  }

  friend bool operator==(const BinaryAssignment&, const BinaryAssignment&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<std::uint8_t> bits_;
};

inline Schedule schedule_from_matrix(const BinaryAssignment& x) {
  if (!x.is_permutation()) {
    throw ValidationError("assignment matrix is not a permutation matrix");
  }
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (x.at(i, j)) order[j] = i;
    }
  }
  return Schedule(std::move(order));
}

inline BinaryAssignment matrix_from_schedule(const Schedule& sched) {
  BinaryAssignment x(sched.size());
  for (std::size_t j = 0; j < sched.size(); ++j) x.set(sched[j], j, 1);
  return x;
}

}  // namespace edgesched
