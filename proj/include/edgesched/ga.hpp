#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "edgesched/baselines.hpp"
#include "edgesched/evaluator.hpp"
#include "edgesched/task_model.hpp"

namespace edgesched {

struct GAConfig {
  int population_size = 200;
  int generations = 500;
  int patience = 100;
  double mutation_probability = 0.3;
  double elitism_fraction = 0.05;
  double parents_fraction = 0.30;
  int tournament_size = 3;
  std::uint64_t rng_seed = 0;

  /// Reduced budget used for bulk dataset labeling.
  static GAConfig desk_labeling() {
    GAConfig cfg;
    cfg.population_size = 60;
    cfg.generations = 120;
    cfg.patience = 40;
    return cfg;
  }

  void validate() const {
    if (population_size < 2) throw ValidationError("GA population size must be >= 2");
    if (generations < 0) throw ValidationError("GA generations must be >= 0");
    if (patience < 1) throw ValidationError("GA patience must be >= 1");
    if (!(mutation_probability >= 0.0 && mutation_probability <= 1.0)) {
      throw ValidationError("GA mutation probability must lie in [0, 1]");
    }
    if (!(elitism_fraction > 0.0 && elitism_fraction < 1.0)) {
      throw ValidationError("GA elitism fraction must lie in (0, 1)");
    }
    if (!(parents_fraction > 0.0 && parents_fraction <= 1.0)) {
      throw ValidationError("GA parents fraction must lie in (0, 1]");
    }
    if (tournament_size < 1) throw ValidationError("GA tournament size must be >= 1");
  }

  int elite_count() const {
    return std::max(1, static_cast<int>(std::lround(elitism_fraction * population_size)));
  }
  int parent_count() const {
    return std::max(2, static_cast<int>(std::lround(parents_fraction * population_size)));
  }
};

struct GAResult {
  Schedule best_schedule;
  double best_objective = 0.0;
  int generations_run = 0;
  double wall_clock_seconds = 0.0;
  /// history[0] is the initial population's best; history[g] the best after generation g.
  std::vector<double> history;
};

/// OX1: keeps p1[cut1, cut2) in place and fills the other slots, starting at
/// cut2 and wrapping, with the missing genes in p2's cyclic order from cut2.
inline Schedule ordered_crossover(const Schedule& p1, const Schedule& p2, std::size_t cut1,
                                  std::size_t cut2) {
  const std::size_t n = p1.size();
  if (p2.size() != n) throw ValidationError("ordered crossover parents differ in length");
  if (!(cut1 < cut2 && cut2 <= n)) throw ValidationError("ordered crossover cuts out of range");
  std::vector<std::size_t> child(n);
  std::vector<char> used(n, 0);
  for (std::size_t k = cut1; k < cut2; ++k) {
    child[k] = p1[k];
    used[p1[k]] = 1;
  }
  std::size_t write = cut2 % n;
  for (std::size_t step = 0; step < n; ++step) {
    const std::size_t gene = p2[(cut2 + step) % n];
    if (used[gene]) continue;
    child[write] = gene;
    used[gene] = 1;
    write = (write + 1) % n;
  }
  return Schedule(std::move(child));
}

/// With the given probability swaps two distinct, uniformly chosen positions.
template <typename Rng>
Schedule swap_mutation(const Schedule& s, double probability, Rng& rng) {
  if (s.size() < 2) return s;
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  if (!(coin(rng) < probability)) return s;
  std::uniform_int_distribution<std::size_t> pick(0, s.size() - 1);
  const std::size_t a = pick(rng);
  std::size_t b = pick(rng);
  while (b == a) b = pick(rng);
  std::vector<std::size_t> genes(s.order().begin(), s.order().end());
  std::swap(genes[a], genes[b]);
  return Schedule(std::move(genes));
}

/// Restores exact row/column sums of one: scans row-major and clears every 1
/// whose row or column is already taken, then gives unplaced tasks the free
/// positions in ascending order.
inline void repair_assignment(std::span<std::uint8_t> bits, std::size_t n) {
  std::vector<char> row_used(n, 0);
  std::vector<char> col_used(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      std::uint8_t& b = bits[i * n + j];
      if (!b) continue;
      if (row_used[i] || col_used[j]) {
        b = 0;
      } else {
        row_used[i] = 1;
        col_used[j] = 1;
      }
    }
  }
  std::size_t free_col = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (row_used[i]) continue;
    while (col_used[free_col]) ++free_col;
    bits[i * n + free_col] = 1;
    col_used[free_col] = 1;
  }
}

namespace detail {

template <typename Chromosome>
struct Individual {
  Chromosome genes;
  std::vector<std::size_t> order;
  double fitness = 0.0;
};

/// Total order used for ranking: objective, then the served type sequence,
/// then task indices. Equal-objective schedules thus resolve to the one that
/// lists lower type ids first.
class RankLess {
 public:
  explicit RankLess(const ProblemInstance& instance) : instance_(&instance) {}

  bool operator()(double fa, std::span<const std::size_t> a, double fb,
                  std::span<const std::size_t> b) const {
    if (fa != fb) return fa < fb;
    for (std::size_t k = 0; k < a.size(); ++k) {
      const int ta = (*instance_)[a[k]].type_id;
      const int tb = (*instance_)[b[k]].type_id;
      if (ta != tb) return ta < tb;
    }
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
  }

 private:
  const ProblemInstance* instance_;
};

/// Generation loop shared by both encodings. Encoding supplies seeds(),
/// random_individual(rng), crossover(a, b, rng), mutate(genes, rng) and
/// decode(genes) -> serving order.
template <typename Encoding>
GAResult run_ga(const ProblemInstance& instance, const EvaluationContext& ctx,
                const GAConfig& cfg, Encoding& encoding) {
  using Genes = typename Encoding::Genes;
  using Member = Individual<Genes>;
  cfg.validate();
  ctx.validate();
  const auto started = std::chrono::steady_clock::now();
  const EvaluationContext search_ctx = ctx.without_exec();
  const RankLess rank_less(instance);
  std::mt19937_64 rng(cfg.rng_seed);

  auto make = [&](Genes genes) {
    Member m;
    m.order = encoding.decode(genes);
    m.fitness = objective_of(instance, m.order, search_ctx);
    m.genes = std::move(genes);
    return m;
  };
  auto by_rank = [&](const Member& a, const Member& b) {
    return rank_less(a.fitness, a.order, b.fitness, b.order);
  };
  auto finish = [&](GAResult result) {
    result.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return result;
  };

  GAResult result;
  if (instance.size() == 1) {
    result.best_schedule = Schedule::identity(1);
    result.best_objective = objective_of(instance, result.best_schedule.order(), search_ctx);
    result.history.push_back(result.best_objective);
    return finish(std::move(result));
  }

  const auto pop_size = static_cast<std::size_t>(cfg.population_size);
  std::vector<Member> population;
  population.reserve(pop_size);
  for (Genes& seed : encoding.seeds()) {
    if (population.size() == pop_size) break;
    population.push_back(make(std::move(seed)));
  }
  while (population.size() < pop_size) population.push_back(make(encoding.random_individual(rng)));
  std::stable_sort(population.begin(), population.end(), by_rank);
  result.history.push_back(population.front().fitness);

  const auto elites = static_cast<std::size_t>(cfg.elite_count());
  const auto parent_count = static_cast<std::size_t>(cfg.parent_count());
  std::uniform_int_distribution<std::size_t> pick_member(0, pop_size - 1);
  std::vector<const Member*> parents(parent_count);
  std::vector<Member> next;
  next.reserve(pop_size);
  int stale = 0;
  int generation = 0;
  while (generation < cfg.generations && stale < cfg.patience) {
    // Population is sorted, so the tournament winner is the lowest index drawn.
    for (auto& parent : parents) {
      std::size_t winner = pick_member(rng);
      for (int k = 1; k < cfg.tournament_size; ++k) winner = std::min(winner, pick_member(rng));
      parent = &population[winner];
    }
    next.clear();
    for (std::size_t e = 0; e < std::min(elites, pop_size); ++e) next.push_back(population[e]);
    for (std::size_t k = 0; next.size() < pop_size; ++k) {
      const Member& a = *parents[k % parent_count];
      const Member& b = *parents[(k + 1) % parent_count];
      Genes child = encoding.crossover(a.genes, b.genes, rng);
      encoding.mutate(child, rng);
      next.push_back(make(std::move(child)));
    }
    const double previous_best = population.front().fitness;
    population.swap(next);
    std::stable_sort(population.begin(), population.end(), by_rank);
    ++generation;
    result.history.push_back(population.front().fitness);
    stale = population.front().fitness < previous_best ? 0 : stale + 1;
  }

  result.best_schedule = Schedule(population.front().order);
  result.best_objective = population.front().fitness;
  result.generations_run = generation;
  return finish(std::move(result));
}

struct PermutationEncoding {
  using Genes = std::vector<std::size_t>;

  const ProblemInstance& instance;
  double mutation_probability;

  std::vector<Genes> seeds() const {
    auto genes = [](const Schedule& s) { return Genes(s.order().begin(), s.order().end()); };
    return {genes(fifo_order(instance)), genes(stf_order(instance)), genes(sdf_order(instance))};
  }

  template <typename Rng>
  Genes random_individual(Rng& rng) const {
    Genes g(instance.size());
    std::iota(g.begin(), g.end(), std::size_t{0});
    std::shuffle(g.begin(), g.end(), rng);
    return g;
  }

  template <typename Rng>
  Genes crossover(const Genes& a, const Genes& b, Rng& rng) const {
    const std::size_t n = a.size();
    std::uniform_int_distribution<std::size_t> pick(0, n);
    std::size_t c1 = pick(rng);
    std::size_t c2 = pick(rng);
    while (c2 == c1) c2 = pick(rng);
    if (c1 > c2) std::swap(c1, c2);
    Schedule child = ordered_crossover(Schedule(a), Schedule(b), c1, c2);
    return Genes(child.order().begin(), child.order().end());
  }

  template <typename Rng>
  void mutate(Genes& genes, Rng& rng) const {
    Schedule mutated = swap_mutation(Schedule(std::move(genes)), mutation_probability, rng);
    genes.assign(mutated.order().begin(), mutated.order().end());
  }

  std::vector<std::size_t> decode(const Genes& genes) const { return genes; }
};

struct AssignmentEncoding {
  using Genes = std::vector<std::uint8_t>;

  const ProblemInstance& instance;
  double mutation_probability;

  std::size_t n() const { return instance.size(); }

  Genes from_schedule(const Schedule& s) const {
    BinaryAssignment x = matrix_from_schedule(s);
    return Genes(x.bits().begin(), x.bits().end());
  }

  std::vector<Genes> seeds() const {
    return {from_schedule(fifo_order(instance)), from_schedule(stf_order(instance)),
            from_schedule(sdf_order(instance))};
  }

  template <typename Rng>
  Genes random_individual(Rng& rng) const {
    std::vector<std::size_t> order(n());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    return from_schedule(Schedule(std::move(order)));
  }

  template <typename Rng>
  Genes crossover(const Genes& a, const Genes& b, Rng& rng) const {
    std::uniform_int_distribution<std::size_t> pick(1, a.size() - 1);
    const std::size_t point = pick(rng);
    Genes child(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(point));
    child.insert(child.end(), b.begin() + static_cast<std::ptrdiff_t>(point), b.end());
    repair_assignment(child, n());
    return child;
  }

  template <typename Rng>
  void mutate(Genes& genes, Rng& rng) const {
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    if (coin(rng) < mutation_probability) {
      std::uniform_int_distribution<std::size_t> pick(0, genes.size() - 1);
      genes[pick(rng)] ^= 1;
    }
    repair_assignment(genes, n());
  }

  std::vector<std::size_t> decode(const Genes& genes) const {
    Schedule s = schedule_from_matrix(BinaryAssignment(n(), genes));
    return std::vector<std::size_t>(s.order().begin(), s.order().end());
  }
};

}  // namespace detail

/// GA over permutations of task indices (ordered crossover, swap mutation).
/// Fitness ignores solver execution time.
inline GAResult run_ga_integer(const ProblemInstance& instance, const EvaluationContext& ctx,
                               const GAConfig& cfg) {
  detail::PermutationEncoding encoding{instance, cfg.mutation_probability};
  return detail::run_ga(instance, ctx, cfg, encoding);
}

/// GA over flattened N x N assignment matrices (single-point crossover,
/// bit-flip mutation, repair to a permutation matrix).
inline GAResult run_ga_binary(const ProblemInstance& instance, const EvaluationContext& ctx,
                              const GAConfig& cfg) {
  detail::AssignmentEncoding encoding{instance, cfg.mutation_probability};
  return detail::run_ga(instance, ctx, cfg, encoding);
}

}  // namespace edgesched
