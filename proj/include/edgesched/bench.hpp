#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "edgesched/baselines.hpp"
#include "edgesched/dataset.hpp"
#include "edgesched/evaluator.hpp"
#include "edgesched/ga.hpp"
#include "edgesched/neural/model.hpp"

namespace edgesched {

inline constexpr std::array<std::string_view, 6> kBenchSchedulers{"fifo",       "stf",       "sdf",
                                                                  "ga-integer", "ga-binary", "pnt-net"};

inline constexpr std::string_view kBenchCsvHeader =
    "scheduler,n,drop_no_exec,exec_seconds,drop_with_exec,mean_waiting,trials";

struct BenchmarkRow {
  std::string scheduler;
  std::size_t n = 0;
  double drop_no_exec = 0.0;
  /// Median wall-clock of one scheduling call.
  double exec_seconds = 0.0;
  double mean_exec_seconds = 0.0;
  double drop_with_exec = 0.0;
  /// Normalized average waiting time under the with-exec evaluation.
  double mean_waiting = 0.0;
  double objective_no_exec = 0.0;
  double objective_with_exec = 0.0;
  std::size_t trials = 0;
  /// Per-trial wall-clock and chosen schedule, in instance order.
  std::vector<double> trial_seconds;
  std::vector<Schedule> trial_schedules;
};

/// Schedules one instance. The seed varies per trial for stochastic solvers.
using SchedulerFn = std::function<Schedule(const ProblemInstance&, std::uint64_t seed)>;

/// Builds a named scheduler. Schedulers only ever see a context with zero
/// execution time.
inline SchedulerFn make_scheduler(std::string_view name, const EvaluationContext& ctx, const GAConfig& ga,
                                  const neural::ModelParams* model = nullptr) {
  const EvaluationContext search = ctx.without_exec();
  if (name == "fifo") return [](const ProblemInstance& i, std::uint64_t) { return fifo_order(i); };
  if (name == "stf") return [](const ProblemInstance& i, std::uint64_t) { return stf_order(i); };
  if (name == "sdf") return [](const ProblemInstance& i, std::uint64_t) { return sdf_order(i); };
  if (name == "ga-integer" || name == "ga-binary") {
    const bool binary = name == "ga-binary";
    return [search, ga, binary](const ProblemInstance& i, std::uint64_t seed) {
      GAConfig cfg = ga;
      cfg.rng_seed = seed;
      return binary ? run_ga_binary(i, search, cfg).best_schedule : run_ga_integer(i, search, cfg).best_schedule;
    };
  }
  if (name == "brute-force") {
    return [search](const ProblemInstance& i, std::uint64_t) { return brute_force_optimal(i, search).schedule; };
  }
  if (name == "pnt-net") {
    if (model == nullptr) throw ValidationError("scheduler pnt-net needs a checkpoint");
    return [model](const ProblemInstance& i, std::uint64_t) { return neural::schedule_with_model(*model, i); };
  }
  throw ValidationError("unknown scheduler: " + std::string(name));
}

struct BenchmarkConfig {
  std::vector<std::size_t> sizes{10, 20, 30, 40, 50};
  std::vector<std::string> schedulers{kBenchSchedulers.begin(), kBenchSchedulers.end()};
  std::size_t trials = 20;
  std::uint64_t seed = 0;
  EvaluationContext context;
  GAConfig ga;

  void validate() const {
    context.validate();
    ga.validate();
    if (trials < 1) throw ValidationError("benchmark needs at least one trial");
    if (sizes.empty() || schedulers.empty()) throw ValidationError("benchmark needs sizes and schedulers");
    for (std::size_t n : sizes) {
      if (n < 1) throw ValidationError("benchmark task counts must be >= 1");
    }
  }
};

/// Instances shared by every scheduler at size n.
inline std::vector<ProblemInstance> benchmark_instances(std::size_t n, std::size_t trials, std::uint64_t seed) {
  std::vector<ProblemInstance> out;
  out.reserve(trials);
  for (std::size_t t = 0; t < trials; ++t) {
    std::mt19937_64 rng(derive_seed(seed, n * 1000003ULL + t));
    out.push_back(random_instance_of_length(n, rng));
  }
  return out;
}

inline double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

/// One benchmark cell. A warm-up call precedes the timed trials; each trial is
/// evaluated without and then with its own measured runtime.
inline BenchmarkRow benchmark_cell(std::string_view name, const SchedulerFn& scheduler,
                                   const std::vector<ProblemInstance>& instances, const EvaluationContext& ctx,
                                   std::uint64_t seed) {
  using clock = std::chrono::steady_clock;
  BenchmarkRow row;
  row.scheduler = std::string(name);
  row.n = instances.front().size();
  row.trials = instances.size();
  (void)scheduler(instances.front(), derive_seed(seed, 0xFFFF));
  std::vector<double> seconds;
  for (std::size_t t = 0; t < instances.size(); ++t) {
    const auto start = clock::now();
    const Schedule sched = scheduler(instances[t], derive_seed(seed, t));
    const double elapsed = std::chrono::duration<double>(clock::now() - start).count();
    seconds.push_back(elapsed);
    row.trial_schedules.push_back(sched);
    const EvaluationReport plain = evaluate(instances[t], sched, ctx.without_exec());
    const EvaluationReport timed = evaluate(instances[t], sched, ctx.with_exec_seconds(elapsed));
    row.drop_no_exec += plain.drop_ratio;
    row.objective_no_exec += plain.objective;
    row.drop_with_exec += timed.drop_ratio;
    row.objective_with_exec += timed.objective;
    row.mean_waiting += timed.avg_waiting;
  }
  const auto k = static_cast<double>(instances.size());
  row.drop_no_exec /= k;
  row.drop_with_exec /= k;
  row.objective_no_exec /= k;
  row.objective_with_exec /= k;
  row.mean_waiting /= k;
  for (double s : seconds) row.mean_exec_seconds += s / k;
  row.exec_seconds = median_of(seconds);
  row.trial_seconds = std::move(seconds);
  return row;
}

/// Runs every (scheduler, n) cell serially so timings do not contend.
inline std::vector<BenchmarkRow> run_benchmark(const BenchmarkConfig& cfg, const neural::ModelParams* model = nullptr,
                                               const std::function<void(const BenchmarkRow&)>& on_row = {}) {
  cfg.validate();
  std::vector<SchedulerFn> fns;
  for (const auto& name : cfg.schedulers) fns.push_back(make_scheduler(name, cfg.context, cfg.ga, model));
  std::vector<BenchmarkRow> rows;
  for (std::size_t n : cfg.sizes) {
    const auto instances = benchmark_instances(n, cfg.trials, cfg.seed);
    for (std::size_t s = 0; s < fns.size(); ++s) {
      rows.push_back(benchmark_cell(cfg.schedulers[s], fns[s], instances, cfg.context, derive_seed(cfg.seed, n)));
      if (on_row) on_row(rows.back());
    }
  }
  return rows;
}

inline std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

inline std::string benchmark_csv_row(const BenchmarkRow& r) {
  std::ostringstream os;
  os << r.scheduler << ',' << r.n << ',' << format_double(r.drop_no_exec) << ',' << format_double(r.exec_seconds)
     << ',' << format_double(r.drop_with_exec) << ',' << format_double(r.mean_waiting) << ',' << r.trials;
  return os.str();
}

inline std::string benchmark_csv(const std::vector<BenchmarkRow>& rows) {
  std::string text = std::string(kBenchCsvHeader) + '\n';
  for (const auto& r : rows) text += benchmark_csv_row(r) + '\n';
  return text;
}

/// gnuplot data: one block per scheduler (separated by two blank lines, so
/// `index k` selects it). Columns: n, drop_no_exec, exec_median, exec_mean,
/// drop_with_exec, mean_waiting.
inline std::string benchmark_dat(const std::vector<BenchmarkRow>& rows) {
  std::map<std::string, std::vector<const BenchmarkRow*>> by_scheduler;
  std::vector<std::string> order;
  for (const auto& r : rows) {
    if (!by_scheduler.contains(r.scheduler)) order.push_back(r.scheduler);
    by_scheduler[r.scheduler].push_back(&r);
  }
  std::ostringstream os;
  os << "# exec_median, exec_mean and drop_with_exec depend on wall-clock time and are not deterministic\n";
  bool first = true;
  for (const auto& name : order) {
    if (!first) os << "\n\n";
    first = false;
    os << "# scheduler " << name << "\n# n drop_no_exec exec_median exec_mean drop_with_exec mean_waiting\n";
    for (const BenchmarkRow* r : by_scheduler[name]) {
      os << r->n << ' ' << format_double(r->drop_no_exec) << ' ' << format_double(r->exec_seconds) << ' '
         << format_double(r->mean_exec_seconds) << ' ' << format_double(r->drop_with_exec) << ' '
         << format_double(r->mean_waiting) << '\n';
    }
  }
  return os.str();
}

}  // namespace edgesched
