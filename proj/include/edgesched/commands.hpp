#pragma once

// Implementation of the command-line subcommands. Each command validates its
// inputs, writes its files and prints a short human-readable summary.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "edgesched/baselines.hpp"
#include "edgesched/bench.hpp"
#include "edgesched/dataset.hpp"
#include "edgesched/evaluator.hpp"
#include "edgesched/ga.hpp"
#include "edgesched/metrics.hpp"
#include "edgesched/neural/checkpoint.hpp"
#include "edgesched/neural/train.hpp"

namespace edgesched::cmd {

struct GlobalOptions {
  std::uint64_t seed = 0;
  double lambda = 0.9;
  double time_unit_scale = 1.0;

  EvaluationContext context() const {
    EvaluationContext ctx;
    ctx.lambda = lambda;
    ctx.time_unit_scale = time_unit_scale;
    ctx.validate();
    return ctx;
  }
};

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

// ---------------------------------------------------------------------------

struct GenDataOptions {
  std::size_t count = 1000;
  std::filesystem::path out = "dataset.jsonl";
  GAConfig ga = GAConfig::desk_labeling();
  unsigned threads = 0;
  std::size_t audit_samples = 200;
};

struct AuditResult {
  std::size_t matched = 0;
  std::size_t total = 0;
};

/// Labels `total` fresh instances with N <= 8 exactly like the dataset and
/// counts how many reach the brute-force optimum.
inline AuditResult audit_labels(const GAConfig& ga, const EvaluationContext& ctx, std::uint64_t seed,
                                std::size_t total) {
  AuditResult r{0, total};
  for (std::size_t k = 0; k < total; ++k) {
    std::mt19937_64 rng(derive_seed(seed ^ 0xA0D17ULL, k));
    const ProblemInstance inst = random_instance(kDefaultOracleMaxN, rng);
    GAConfig cfg = ga;
    cfg.rng_seed = derive_seed(seed ^ 0xA0D17ULL, total + k);
    const double got = run_ga_integer(inst, ctx, cfg).best_objective;
    const double best = brute_force_optimal(inst, ctx).report.objective;
    if (std::abs(got - best) <= 1e-12) ++r.matched;
  }
  return r;
}

inline AuditResult cmd_gen_data(const GlobalOptions& g, const GenDataOptions& o, std::ostream& log) {
  const EvaluationContext ctx = g.context().without_exec();
  o.ga.validate();
  const auto samples = generate_dataset(o.count, g.seed, o.ga, ctx, o.threads);
  DatasetManifest manifest;
  manifest.ga_config = o.ga;
  manifest.lambda = g.lambda;
  manifest.generator_seed = g.seed;
  if (o.out.has_parent_path()) std::filesystem::create_directories(o.out.parent_path());
  write_dataset(samples, manifest, o.out);
  log << "wrote " << samples.size() << " samples to " << o.out.string() << '\n';
  const AuditResult audit = audit_labels(o.ga, ctx, g.seed, o.audit_samples);
  if (audit.total > 0) {
    log << "label audit: " << audit.matched << "/" << audit.total << " oracle-optimal (N <= "
        << kDefaultOracleMaxN << " probe, fraction " << std::fixed << std::setprecision(3)
        << static_cast<double>(audit.matched) / static_cast<double>(audit.total) << ")\n"
        << std::defaultfloat;
  }
  return audit;
}

// ---------------------------------------------------------------------------

struct TrainOptions {
  std::filesystem::path data;
  std::filesystem::path checkpoint = "model.json";
  std::filesystem::path loss_csv = "loss.csv";
  neural::TrainConfig config;
  bool quiet = false;
};

inline std::string loss_csv_text(const std::vector<neural::EpochRecord>& epochs) {
  std::string text = "epoch,train_loss,val_loss\n";
  for (const auto& e : epochs) {
    text += std::to_string(e.epoch) + ',' + format_double(e.train_loss) + ',' + format_double(e.val_loss) + '\n';
  }
  return text;
}

inline std::string metrics_csv_text(const MetricsReport& m, std::size_t count) {
  return "avg_soft_accuracy,avg_soft_precision,avg_soft_recall,weighted_f1,test_samples\n" +
         format_double(m.avg_soft_accuracy) + ',' + format_double(m.avg_soft_precision) + ',' +
         format_double(m.avg_soft_recall) + ',' + format_double(m.weighted_f1) + ',' + std::to_string(count) + '\n';
}

inline neural::TrainResult cmd_train(const GlobalOptions& g, const TrainOptions& o, std::ostream& log) {
  const Dataset data = read_dataset(o.data);
  neural::TrainConfig cfg = o.config;
  cfg.rng_seed = g.seed;
  const auto result = neural::train(data.samples, cfg, [&](const neural::EpochRecord& e) {
    if (!o.quiet) {
      log << "epoch " << e.epoch << "  train_loss " << std::setprecision(6) << e.train_loss << "  val_loss "
          << e.val_loss << "  (" << std::setprecision(3) << e.seconds << " s)\n"
          << std::setprecision(6);
    }
  });
  if (o.checkpoint.has_parent_path()) std::filesystem::create_directories(o.checkpoint.parent_path());
  neural::save_checkpoint({result.params, cfg}, o.checkpoint);
  write_text(o.loss_csv, loss_csv_text(result.report.epochs));
  log << "best epoch " << result.report.best_epoch << " (val_loss " << result.report.best_val_loss << ")\n";
  if (result.report.test_count > 0) {
    const auto& m = result.report.test_metrics;
    log << "test: soft_accuracy " << m.avg_soft_accuracy << "  soft_precision " << m.avg_soft_precision
        << "  soft_recall " << m.avg_soft_recall << "  weighted_f1 " << m.weighted_f1 << "  ("
        << result.report.test_count << " samples)\n";
  }
  log << "checkpoint " << o.checkpoint.string() << ", loss curve " << o.loss_csv.string() << '\n';
  return result;
}

// ---------------------------------------------------------------------------

struct EvalOptions {
  std::filesystem::path data;
  std::filesystem::path checkpoint;
  std::filesystem::path out = "metrics.csv";
  /// Evaluate every sample instead of the checkpoint's held-out test split.
  bool all_samples = false;
};

inline MetricsReport cmd_eval(const GlobalOptions&, const EvalOptions& o, std::ostream& log) {
  const neural::Checkpoint ckpt = neural::load_checkpoint(o.checkpoint);
  const Dataset data = read_dataset(o.data);
  std::vector<std::size_t> indices;
  if (o.all_samples) {
    indices.resize(data.samples.size());
    std::iota(indices.begin(), indices.end(), std::size_t{0});
  } else {
    indices = neural::split_dataset(data.samples.size(), ckpt.train_config).test;
  }
  if (indices.empty()) throw ValidationError("no samples to evaluate");
  const MetricsReport m = compute_metrics(neural::predict_sequences(ckpt.params, data.samples, indices));
  write_text(o.out, metrics_csv_text(m, indices.size()));
  log << "soft_accuracy " << m.avg_soft_accuracy << "\nsoft_precision " << m.avg_soft_precision << "\nsoft_recall "
      << m.avg_soft_recall << "\nweighted_f1 " << m.weighted_f1 << "\nsamples " << indices.size() << '\n';
  return m;
}

// ---------------------------------------------------------------------------

struct BenchOptions {
  std::optional<std::filesystem::path> checkpoint;
  std::vector<std::size_t> sizes{10, 20, 30, 40, 50};
  std::vector<std::string> schedulers{kBenchSchedulers.begin(), kBenchSchedulers.end()};
  std::size_t trials = 20;
  GAConfig ga;
  std::filesystem::path out_csv = "bench.csv";
  std::filesystem::path out_dat = "bench.dat";
};

inline std::vector<BenchmarkRow> cmd_bench(const GlobalOptions& g, const BenchOptions& o, std::ostream& log) {
  BenchmarkConfig cfg;
  cfg.sizes = o.sizes;
  cfg.schedulers = o.schedulers;
  cfg.trials = o.trials;
  cfg.seed = g.seed;
  cfg.context = g.context();
  cfg.ga = o.ga;
  std::optional<neural::Checkpoint> ckpt;
  const bool wants_net = std::find(cfg.schedulers.begin(), cfg.schedulers.end(), "pnt-net") != cfg.schedulers.end();
  if (wants_net) {
    if (!o.checkpoint) throw ValidationError("scheduler pnt-net needs --checkpoint");
    ckpt = neural::load_checkpoint(*o.checkpoint);
  }
  log << kBenchCsvHeader << '\n';
  const auto rows = run_benchmark(cfg, ckpt ? &ckpt->params : nullptr, [&](const BenchmarkRow& r) {
    log << benchmark_csv_row(r) << std::endl;
  });
  write_text(o.out_csv, benchmark_csv(rows));
  write_text(o.out_dat, benchmark_dat(rows));
  return rows;
}

// ---------------------------------------------------------------------------

struct ScheduleOptions {
  std::string scheduler = "fifo";
  std::optional<std::filesystem::path> checkpoint;
  std::vector<int> types;
  GAConfig ga;
  bool json = false;
};

struct ScheduleOutcome {
  Schedule schedule;
  EvaluationReport report;
};

inline ScheduleOutcome cmd_schedule(const GlobalOptions& g, const ScheduleOptions& o, std::ostream& out) {
  const EvaluationContext ctx = g.context();
  const ProblemInstance inst = ProblemInstance::from_type_ids(o.types, TaskCatalog::standard());
  std::optional<neural::Checkpoint> ckpt;
  if (o.scheduler == "pnt-net") {
    if (!o.checkpoint) throw ValidationError("scheduler pnt-net needs --checkpoint");
    ckpt = neural::load_checkpoint(*o.checkpoint);
  }
  const SchedulerFn fn = make_scheduler(o.scheduler, ctx, o.ga, ckpt ? &ckpt->params : nullptr);
  ScheduleOutcome result{fn(inst, g.seed), {}};
  result.report = evaluate(inst, result.schedule, ctx);
  const auto& order = result.schedule.order();
  const auto& r = result.report;
  if (o.json) {
    nlohmann::ordered_json j;
    j["scheduler"] = o.scheduler;
    j["order"] = std::vector<std::size_t>(order.begin(), order.end());
    nlohmann::ordered_json tasks = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < inst.size(); ++i) {
      tasks.push_back({{"index", i},
                       {"type", inst[i].type_id},
                       {"waiting", r.waiting_times[i]},
                       {"dropped", r.drop_flags[i] != 0}});
    }
    j["tasks"] = tasks;
    j["drop_ratio"] = r.drop_ratio;
    j["avg_waiting"] = r.avg_waiting;
    j["objective"] = r.objective;
    out << j.dump(2) << '\n';
  } else {
    out << "order:";
    for (std::size_t i : order) out << ' ' << i;
    out << "\nposition task type processing deadline waiting dropped\n";
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
      const std::size_t i = order[pos];
      out << pos + 1 << ' ' << i << ' ' << inst[i].type_id << ' ' << inst[i].processing_time << ' '
          << inst[i].deadline << ' ' << r.waiting_times[i] << ' ' << (r.drop_flags[i] ? "yes" : "no") << '\n';
    }
    out << "drop_ratio " << r.drop_ratio << "\navg_waiting " << r.avg_waiting << "\nobjective " << r.objective
        << '\n';
  }
  return result;
}

}  // namespace edgesched::cmd
