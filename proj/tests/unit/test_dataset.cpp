#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "edgesched/baselines.hpp"
#include "edgesched/dataset.hpp"

using namespace edgesched;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("edgesched_test_" + name);
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST(RandomInstance, IdsInRangeAndLengthBounds) {
  std::mt19937_64 rng(1);
  for (int k = 0; k < 2000; ++k) {
    const auto inst = random_instance(kMaxSequenceLength, rng);
    ASSERT_GE(inst.size(), 1u);
    ASSERT_LE(inst.size(), kMaxSequenceLength);
    for (const Task& t : inst.tasks()) ASSERT_TRUE(t.type_id >= 0 && t.type_id <= 8);
  }
}

TEST(RandomInstance, TypeFrequenciesAreUniform) {
  std::mt19937_64 rng(2);
  std::array<double, 9> counts{};
  const int draws = 100000;
  int seen = 0;
  while (seen < draws) {
    const auto inst = random_instance_of_length(10, rng);
    for (const Task& t : inst.tasks()) {
      if (seen == draws) break;
      counts[static_cast<std::size_t>(t.type_id)] += 1;
      ++seen;
    }
  }
  const double p = 1.0 / 9.0;
  const double mean = draws * p;
  const double sigma = std::sqrt(draws * p * (1 - p));
  double chi2 = 0.0;
  for (double c : counts) {
    EXPECT_LT(std::abs(c - mean), 3 * sigma);
    chi2 += (c - mean) * (c - mean) / mean;
  }
  // chi-square with 8 dof: 99.9th percentile is 26.12
  EXPECT_LT(chi2, 26.12);
}

TEST(RandomInstance, LengthFiveSequenceSpace) {
  EXPECT_EQ(static_cast<long>(std::pow(9, 5)), 59049);
}

TEST(LabelWithGa, TrivialCases) {
  const GAConfig cfg = GAConfig::desk_labeling();
  const auto one = label_with_ga(ProblemInstance::from_type_ids(std::vector<int>{7}), EvaluationContext{}, cfg);
  EXPECT_EQ(one.length, 1);
  EXPECT_EQ(one.target, one.input);
  const auto same =
      label_with_ga(ProblemInstance::from_type_ids(std::vector<int>{4, 4, 4, 4}), EvaluationContext{}, cfg);
  EXPECT_EQ(same.target, same.input);
  EXPECT_THROW(label_with_ga(ProblemInstance::from_type_ids(std::vector<int>(11, 0)), EvaluationContext{}, cfg),
               ValidationError);
}

TEST(LabelWithGa, LabelsMatchOracleAndBeatIdentity) {
  const EvaluationContext ctx;
  const auto samples = generate_dataset(300, 42, GAConfig::desk_labeling(), ctx, 1);
  int probes = 0;
  int matches = 0;
  for (const DatasetSample& s : samples) {
    ASSERT_TRUE(sample_violation(s).empty());
    const auto inst = ProblemInstance::from_type_ids(s.input_ids());
    const double label = evaluate(inst, schedule_for_types(inst, s.target_ids()), ctx).objective;
    ASSERT_LE(label, evaluate(inst, fifo_order(inst), ctx).objective);
    if (s.length <= 8) {
      ++probes;
      matches += std::abs(label - brute_force_optimal(inst, ctx).report.objective) <= 1e-12;
    }
  }
  EXPECT_GE(matches, static_cast<int>(0.95 * probes));
}

TEST(GenerateDataset, IndependentOfThreadCount) {
  const auto a = generate_dataset(64, 9, GAConfig::desk_labeling(), EvaluationContext{}, 1);
  const auto b = generate_dataset(64, 9, GAConfig::desk_labeling(), EvaluationContext{}, 4);
  EXPECT_EQ(a, b);
}

TEST(DatasetIo, RoundTripAndByteDeterminism) {
  std::mt19937_64 rng(5);
  std::vector<DatasetSample> samples;
  for (int k = 0; k < 1000; ++k) {
    const auto inst = random_instance(kMaxSequenceLength, rng);
    DatasetSample s;
    s.length = static_cast<int>(inst.size());
    std::vector<int> ids = inst.type_ids();
    std::vector<int> shuffled = ids;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    std::copy(ids.begin(), ids.end(), s.input.begin());
    std::copy(shuffled.begin(), shuffled.end(), s.target.begin());
    samples.push_back(s);
  }
  DatasetManifest manifest;
  manifest.generator_seed = 5;
  const auto path = temp_file("roundtrip.jsonl");
  write_dataset(samples, manifest, path);
  const Dataset back = read_dataset(path);
  EXPECT_EQ(back.samples, samples);
  EXPECT_EQ(back.manifest.sample_count, 1000u);
  EXPECT_EQ(back.manifest.generator_seed, 5u);

  const std::string first = slurp(path);
  write_dataset(samples, manifest, path);
  EXPECT_EQ(slurp(path), first);
}

TEST(DatasetIo, LineFormatIsFixed) {
  DatasetSample s;
  s.length = 3;
  s.input = {2, 0, 5, 0, 0, 0, 0, 0, 0, 0};
  s.target = {0, 2, 5, 0, 0, 0, 0, 0, 0, 0};
  EXPECT_EQ(sample_to_line(s),
            R"({"input":[2,0,5,0,0,0,0,0,0,0],"target":[0,2,5,0,0,0,0,0,0,0],"len":3})");
}

TEST(DatasetIo, RejectsCorruptLinesWithLineNumber) {
  const auto path = temp_file("corrupt.jsonl");
  DatasetManifest manifest;
  manifest.sample_count = 2;
  {
    std::ofstream out(path);
    out << R"({"input":[1,2,0,0,0,0,0,0,0,0],"target":[2,1,0,0,0,0,0,0,0,0],"len":2})" << '\n';
    out << R"({"input":[1,2,0,0,0,0,0,0,0,0],"target":[2,2,0,0,0,0,0,0,0,0],"len":2})" << '\n';
    std::ofstream mout(manifest_path(path));
    mout << manifest_to_json(manifest).dump();
  }
  try {
    read_dataset(path);
    FAIL() << "expected rejection";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }

  for (const char* bad : {R"({"input":[1,2,0,0,0,0,0,0,0,0],"target":[2,1,0,0,0,0,0,0,0,0],"len":0})",
                          R"({"input":[1,2,0,0,0,0,0,0,0,0],"target":[2,1,0,0,0,0,0,0,0,0],"len":11})",
                          R"({"input":[1,2,3],"target":[2,1,3],"len":3})", R"(not json)"}) {
    EXPECT_THROW(sample_from_line(bad, 1), ValidationError) << bad;
  }
}

TEST(DatasetIo, EmptyDatasetIsValid) {
  const auto path = temp_file("empty.jsonl");
  write_dataset(std::vector<DatasetSample>{}, DatasetManifest{}, path);
  const Dataset back = read_dataset(path);
  EXPECT_TRUE(back.samples.empty());
  EXPECT_EQ(back.manifest.sample_count, 0u);
}
