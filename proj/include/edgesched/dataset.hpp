#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "edgesched/ga.hpp"
#include "edgesched/task_model.hpp"

namespace edgesched {

inline constexpr std::size_t kMaxSequenceLength = 10;
inline constexpr int kDatasetFormatVersion = 1;

/// One training triple. Sequences hold raw type ids; slots at and beyond
/// `length` are zero.
struct DatasetSample {
  std::array<int, kMaxSequenceLength> input{};
  std::array<int, kMaxSequenceLength> target{};
  int length = 0;

  std::span<const int> input_ids() const { return {input.data(), static_cast<std::size_t>(length)}; }
  std::span<const int> target_ids() const { return {target.data(), static_cast<std::size_t>(length)}; }

  friend bool operator==(const DatasetSample&, const DatasetSample&) = default;
};

struct DatasetManifest {
  std::size_t sample_count = 0;
  std::size_t max_length = kMaxSequenceLength;
  TaskCatalog catalog = TaskCatalog::standard();
  GAConfig ga_config = GAConfig::desk_labeling();
  double lambda = 0.9;
  std::uint64_t generator_seed = 0;
  int format_version = kDatasetFormatVersion;
  std::string length_distribution = "uniform";
};

/// splitmix64 finalizer over (base, index); gives independent per-sample streams.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

template <typename Rng>
ProblemInstance random_instance_of_length(std::size_t n, Rng& rng,
                                          const TaskCatalog& catalog = TaskCatalog::standard()) {
  std::uniform_int_distribution<int> type_dist(0, static_cast<int>(kTypeCount) - 1);
  std::vector<int> ids(n);
  for (int& id : ids) id = type_dist(rng);
  return ProblemInstance::from_type_ids(ids, catalog);
}

/// Uniform length in 1..max_len, i.i.d. uniform type ids.
template <typename Rng>
ProblemInstance random_instance(std::size_t max_len, Rng& rng,
                                const TaskCatalog& catalog = TaskCatalog::standard()) {
  std::uniform_int_distribution<std::size_t> length_dist(1, max_len);
  return random_instance_of_length(length_dist(rng), rng, catalog);
}

/// Checks every per-sample invariant; returns an empty string when valid.
inline std::string sample_violation(const DatasetSample& s) {
  if (s.length < 1 || s.length > static_cast<int>(kMaxSequenceLength)) {
    return "len out of range 1.." + std::to_string(kMaxSequenceLength);
  }
  std::array<int, kTypeCount> counts{};
  for (std::size_t k = 0; k < kMaxSequenceLength; ++k) {
    const bool pad = k >= static_cast<std::size_t>(s.length);
    for (int v : {s.input[k], s.target[k]}) {
      if (v < 0 || v >= static_cast<int>(kTypeCount)) return "type id out of range";
      if (pad && v != 0) return "non-zero value in padding";
    }
    if (!pad) {
      ++counts[static_cast<std::size_t>(s.input[k])];
      --counts[static_cast<std::size_t>(s.target[k])];
    }
  }
  if (std::any_of(counts.begin(), counts.end(), [](int c) { return c != 0; })) {
    return "target is not a permutation of input";
  }
  return {};
}

/// Schedule that realizes an ordering of type ids over the instance's tasks.
/// Tasks of equal type are taken in instance order.
inline Schedule schedule_for_types(const ProblemInstance& instance, std::span<const int> types) {
  if (types.size() != instance.size()) throw ValidationError("type sequence length mismatch");
  std::vector<char> used(instance.size(), 0);
  std::vector<std::size_t> order;
  order.reserve(types.size());
  for (int type : types) {
    std::size_t i = 0;
    while (i < instance.size() && (used[i] || instance[i].type_id != type)) ++i;
    if (i == instance.size()) throw ValidationError("type sequence is not a permutation of the instance");
    used[i] = 1;
    order.push_back(i);
  }
  return Schedule(std::move(order));
}

inline DatasetSample label_with_ga(const ProblemInstance& instance, const EvaluationContext& ctx,
                                   const GAConfig& ga_cfg) {
  if (instance.size() > kMaxSequenceLength) {
    throw ValidationError("dataset samples hold at most " + std::to_string(kMaxSequenceLength) + " tasks");
  }
  const GAResult ga = run_ga_integer(instance, ctx, ga_cfg);
  DatasetSample sample;
  sample.length = static_cast<int>(instance.size());
  for (std::size_t k = 0; k < instance.size(); ++k) {
    sample.input[k] = instance[k].type_id;
    sample.target[k] = instance[ga.best_schedule[k]].type_id;
  }
  return sample;
}

/// Generates and labels `count` samples. Each sample draws from its own
/// derived seed, so the output does not depend on the thread count.
inline std::vector<DatasetSample> generate_dataset(std::size_t count, std::uint64_t generator_seed,
                                                   const GAConfig& ga_cfg, const EvaluationContext& ctx,
                                                   unsigned threads = 0) {
  ga_cfg.validate();
  ctx.validate();
  std::vector<DatasetSample> samples(count);
  auto work = [&](std::size_t begin, std::size_t stride) {
    for (std::size_t i = begin; i < count; i += stride) {
      std::mt19937_64 rng(derive_seed(generator_seed, 2 * i));
      ProblemInstance instance = random_instance(kMaxSequenceLength, rng);
      GAConfig cfg = ga_cfg;
      cfg.rng_seed = derive_seed(generator_seed, 2 * i + 1);
      samples[i] = label_with_ga(instance, ctx, cfg);
    }
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  if (threads == 1 || count < 2) {
    work(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t, threads);
  }
  return samples;
}

inline std::filesystem::path manifest_path(const std::filesystem::path& dataset) {
  return std::filesystem::path(dataset.string() + ".manifest.json");
}

inline nlohmann::ordered_json manifest_to_json(const DatasetManifest& m) {
  nlohmann::ordered_json catalog = nlohmann::ordered_json::array();
  for (const TaskType& t : m.catalog.entries()) {
    catalog.push_back({{"id", t.id}, {"processing_time", t.processing_time}, {"deadline", t.deadline}});
  }
  const GAConfig& g = m.ga_config;
  return {
      {"format_version", m.format_version},
      {"sample_count", m.sample_count},
      {"max_length", m.max_length},
      {"length_distribution", m.length_distribution},
      {"lambda", m.lambda},
      {"generator_seed", m.generator_seed},
      {"catalog", catalog},
      {"ga_config",
       {{"population_size", g.population_size},
        {"generations", g.generations},
        {"patience", g.patience},
        {"mutation_probability", g.mutation_probability},
        {"elitism_fraction", g.elitism_fraction},
        {"parents_fraction", g.parents_fraction},
        {"tournament_size", g.tournament_size}}},
  };
}

inline DatasetManifest manifest_from_json(const nlohmann::json& j) {
  DatasetManifest m;
  try {
    m.format_version = j.at("format_version").get<int>();
    m.sample_count = j.at("sample_count").get<std::size_t>();
    m.max_length = j.at("max_length").get<std::size_t>();
    m.length_distribution = j.value("length_distribution", std::string("uniform"));
    m.lambda = j.at("lambda").get<double>();
    m.generator_seed = j.at("generator_seed").get<std::uint64_t>();
    const auto& g = j.at("ga_config");
    m.ga_config.population_size = g.at("population_size").get<int>();
    m.ga_config.generations = g.at("generations").get<int>();
    m.ga_config.patience = g.at("patience").get<int>();
    m.ga_config.mutation_probability = g.at("mutation_probability").get<double>();
    m.ga_config.elitism_fraction = g.at("elitism_fraction").get<double>();
    m.ga_config.parents_fraction = g.at("parents_fraction").get<double>();
    m.ga_config.tournament_size = g.at("tournament_size").get<int>();
    const auto& cat = j.at("catalog");
    if (cat.size() != kTypeCount) throw ValidationError("manifest catalog must have 9 entries");
    for (std::size_t k = 0; k < kTypeCount; ++k) {
      const TaskType expected = TaskCatalog::standard()[static_cast<int>(k)];
      const TaskType got{cat[k].at("id").get<int>(), cat[k].at("processing_time").get<double>(),
                         cat[k].at("deadline").get<double>()};
      if (!(got == expected)) throw ValidationError("manifest catalog differs from the standard catalog");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed dataset manifest: ") + e.what());
  }
  if (m.format_version != kDatasetFormatVersion) throw ValidationError("unsupported dataset format version");
  if (m.max_length != kMaxSequenceLength) throw ValidationError("unsupported max_length in manifest");
  return m;
}

inline std::string sample_to_line(const DatasetSample& s) {
  std::string line = "{\"input\":[";
  for (std::size_t k = 0; k < kMaxSequenceLength; ++k) {
    if (k) line += ',';
    line += std::to_string(s.input[k]);
  }
  line += "],\"target\":[";
  for (std::size_t k = 0; k < kMaxSequenceLength; ++k) {
    if (k) line += ',';
    line += std::to_string(s.target[k]);
  }
  line += "],\"len\":" + std::to_string(s.length) + "}";
  return line;
}

inline DatasetSample sample_from_line(const std::string& line, std::size_t line_number) {
  auto fail = [&](const std::string& why) {
    return ValidationError("dataset line " + std::to_string(line_number) + ": " + why);
  };
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception&) {
    throw fail("not valid JSON");
  }
  DatasetSample s;
  try {
    const auto& in = j.at("input");
    const auto& tg = j.at("target");
    if (!in.is_array() || !tg.is_array() || in.size() != kMaxSequenceLength ||
        tg.size() != kMaxSequenceLength) {
      throw fail("input and target must be arrays of 10 integers");
    }
    for (std::size_t k = 0; k < kMaxSequenceLength; ++k) {
      if (!in[k].is_number_integer() || !tg[k].is_number_integer()) throw fail("non-integer token");
      s.input[k] = in[k].get<int>();
      s.target[k] = tg[k].get<int>();
    }
    if (!j.at("len").is_number_integer()) throw fail("len must be an integer");
    s.length = j.at("len").get<int>();
  } catch (const nlohmann::json::exception&) {
    throw fail("missing field");
  }
  if (std::string why = sample_violation(s); !why.empty()) throw fail(why);
  return s;
}

inline void write_dataset(std::span<const DatasetSample> samples, DatasetManifest manifest,
                          const std::filesystem::path& path) {
  manifest.sample_count = samples.size();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write dataset file " + path.string());
  for (const DatasetSample& s : samples) {
    if (std::string why = sample_violation(s); !why.empty()) throw ValidationError("invalid sample: " + why);
    out << sample_to_line(s) << '\n';
  }
  if (!out) throw std::runtime_error("failed writing dataset file " + path.string());
  std::ofstream mout(manifest_path(path), std::ios::binary);
  if (!mout) throw std::runtime_error("cannot write manifest " + manifest_path(path).string());
  mout << manifest_to_json(manifest).dump(2) << '\n';
}

struct Dataset {
  std::vector<DatasetSample> samples;
  DatasetManifest manifest;
};

inline Dataset read_dataset(const std::filesystem::path& path) {
  std::ifstream min(manifest_path(path));
  if (!min) throw ValidationError("missing dataset manifest " + manifest_path(path).string());
  nlohmann::json mj;
  try {
    mj = nlohmann::json::parse(min);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("manifest is not valid JSON: ") + e.what());
  }
  Dataset data;
  data.manifest = manifest_from_json(mj);
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open dataset file " + path.string());
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    data.samples.push_back(sample_from_line(line, line_number));
  }
  if (data.samples.size() != data.manifest.sample_count) {
    throw ValidationError("manifest sample_count " + std::to_string(data.manifest.sample_count) +
                          " does not match " + std::to_string(data.samples.size()) + " lines");
  }
  return data;
}

}  // namespace edgesched
