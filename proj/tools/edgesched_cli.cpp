#include <CLI11.hpp>

#include <exception>
#include <iostream>

#include "edgesched/commands.hpp"

namespace {

using namespace edgesched;

void add_ga_flags(CLI::App* sub, GAConfig& ga) {
  sub->add_option("--population", ga.population_size, "GA population size")->capture_default_str();
  sub->add_option("--generations", ga.generations, "GA generation limit")->capture_default_str();
  sub->add_option("--patience", ga.patience, "stop after this many generations without improvement")
      ->capture_default_str();
  sub->add_option("--mutation", ga.mutation_probability, "GA mutation probability")->capture_default_str();
  sub->add_option("--elitism", ga.elitism_fraction, "fraction of the population kept as elites")
      ->capture_default_str();
  sub->add_option("--parents", ga.parents_fraction, "fraction of the population selected as parents")
      ->capture_default_str();
  sub->add_option("--tournament", ga.tournament_size, "tournament size")->capture_default_str();
}

const std::vector<std::string> kSchedulerNames{"fifo", "stf", "sdf", "ga-integer", "ga-binary", "brute-force",
                                               "pnt-net"};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Task scheduling workbench for edge servers"};
  app.require_subcommand(1);
  app.fallthrough();

  cmd::GlobalOptions global;
  app.add_option("--seed", global.seed, "base random seed")->capture_default_str();
  app.add_option("--lambda", global.lambda, "weight of the drop ratio in the objective")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  app.add_option("--time-unit-scale", global.time_unit_scale, "task time units per wall-clock second")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();

  cmd::GenDataOptions gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "generate a GA-labeled dataset");
  gen_cmd->add_option("--count", gen.count, "number of samples")->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "dataset path (manifest goes next to it)")->capture_default_str();
  gen_cmd->add_option("--threads", gen.threads, "labeling threads, 0 = all cores")->capture_default_str();
  gen_cmd->add_option("--audit", gen.audit_samples, "oracle audit probe size")->capture_default_str();
  add_ga_flags(gen_cmd, gen.ga);

  cmd::TrainOptions tr;
  std::string decay = "linear";
  auto* train_cmd = app.add_subcommand("train", "train the pointer network");
  train_cmd->add_option("--data", tr.data, "dataset path")->required();
  train_cmd->add_option("--out", tr.checkpoint, "checkpoint path")->capture_default_str();
  train_cmd->add_option("--loss-csv", tr.loss_csv, "per-epoch loss curve")->capture_default_str();
  train_cmd->add_option("--epochs", tr.config.max_epochs)->capture_default_str();
  train_cmd->add_option("--batch-size", tr.config.batch_size)->capture_default_str();
  train_cmd->add_option("--lr", tr.config.adam.learning_rate)->capture_default_str();
  train_cmd->add_option("--embed", tr.config.shape.embed_dim, "embedding width")->capture_default_str();
  train_cmd->add_option("--hidden", tr.config.shape.hidden, "LSTM hidden width")->capture_default_str();
  train_cmd->add_flag("--weighted-loss", tr.config.weighted_loss, "weight early positions more");
  train_cmd->add_option("--decay", decay, "position weight decay")
      ->check(CLI::IsMember({"linear", "exponential"}))
      ->capture_default_str();
  train_cmd->add_flag("--teacher-forcing", tr.config.teacher_forcing, "feed ground truth to the decoder");
  train_cmd->add_flag("--quiet", tr.quiet, "no per-epoch log");

  cmd::EvalOptions ev;
  auto* eval_cmd = app.add_subcommand("eval", "compute test-split metrics for a checkpoint");
  eval_cmd->add_option("--data", ev.data, "dataset path")->required();
  eval_cmd->add_option("--checkpoint", ev.checkpoint)->required();
  eval_cmd->add_option("--out", ev.out, "metrics CSV")->capture_default_str();
  eval_cmd->add_flag("--all", ev.all_samples, "evaluate every sample, not only the test split");

  cmd::BenchOptions bench;
  std::string checkpoint;
  auto* bench_cmd = app.add_subcommand("bench", "execution-time-aware benchmark");
  bench_cmd->add_option("--checkpoint", checkpoint, "model for pnt-net");
  bench_cmd->add_option("--sizes", bench.sizes, "task counts")->delimiter(',')->capture_default_str();
  bench_cmd->add_option("--schedulers", bench.schedulers)
      ->delimiter(',')
      ->check(CLI::IsMember(kSchedulerNames))
      ->capture_default_str();
  bench_cmd->add_option("--trials", bench.trials)->capture_default_str();
  bench_cmd->add_option("--csv", bench.out_csv)->capture_default_str();
  bench_cmd->add_option("--dat", bench.out_dat)->capture_default_str();
  add_ga_flags(bench_cmd, bench.ga);

  cmd::ScheduleOptions sched;
  auto* sched_cmd = app.add_subcommand("schedule", "schedule one instance");
  sched_cmd->add_option("--scheduler", sched.scheduler)->check(CLI::IsMember(kSchedulerNames))->capture_default_str();
  sched_cmd->add_option("--checkpoint", checkpoint, "model for pnt-net");
  sched_cmd->add_option("--types", sched.types, "task type ids, e.g. 0,4,8")->delimiter(',')->required();
  sched_cmd->add_flag("--json", sched.json, "print JSON");
  add_ga_flags(sched_cmd, sched.ga);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (!checkpoint.empty()) bench.checkpoint = sched.checkpoint = checkpoint;
    tr.config.weight_decay = decay == "linear" ? neural::WeightDecay::kLinear : neural::WeightDecay::kExponential;
    if (*gen_cmd) cmd::cmd_gen_data(global, gen, std::cout);
    if (*train_cmd) cmd::cmd_train(global, tr, std::cout);
    if (*eval_cmd) cmd::cmd_eval(global, ev, std::cout);
    if (*bench_cmd) cmd::cmd_bench(global, bench, std::cout);
    if (*sched_cmd) cmd::cmd_schedule(global, sched, std::cout);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
