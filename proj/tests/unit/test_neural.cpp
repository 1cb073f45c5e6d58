#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <random>

#include "edgesched/neural/checkpoint.hpp"
#include "edgesched/neural/model.hpp"
#include "edgesched/neural/train.hpp"
#include "oracles.hpp"

using namespace edgesched;
using namespace edgesched::neural;

namespace {

ModelParams tiny_params(std::uint64_t seed, int dim = 8) { return ModelParams::random(ModelShape{dim, dim}, seed); }

std::vector<int> tokens_of(std::vector<int> types) {
  for (int& t : types) t = Vocabulary::token_of(t);
  return types;
}

std::vector<int> sorted(std::vector<int> v) {
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace

TEST(Vocabulary, ShiftedTaskTokens) {
  for (int type = 0; type < 9; ++type) {
    EXPECT_TRUE(Vocabulary::is_task(Vocabulary::token_of(type)));
    EXPECT_EQ(Vocabulary::type_of(Vocabulary::token_of(type)), type);
  }
  EXPECT_FALSE(Vocabulary::is_task(Vocabulary::kPad));
  EXPECT_FALSE(Vocabulary::is_task(Vocabulary::kStart));
}

TEST(BuildMask, ExhaustedClassesGetLargeNegative) {
  const std::array<int, 9> counts{2, 0, 1, 0, 0, 0, 0, 0, 0};
  const ClassRow mask = build_mask(counts);
  EXPECT_EQ(mask[0], 0.0);
  EXPECT_EQ(mask[1], -1e9);
  EXPECT_EQ(mask[2], 0.0);
  for (std::size_t k = 3; k < 9; ++k) EXPECT_EQ(mask[k], -1e9);
  const std::array<int, 9> all{1, 1, 1, 1, 1, 1, 1, 1, 1};
  for (double m : build_mask(all)) EXPECT_EQ(m, 0.0);
  EXPECT_THROW(build_mask(std::array<int, 9>{}), ValidationError);

  ClassRow logits{};
  ClassRow probs{};
  logits[1] = 50.0;
  masked_softmax(logits.data(), mask, probs.data());
  EXPECT_LT(probs[1], 1e-300);
  EXPECT_NEAR(probs[0] + probs[2], 1.0, 1e-15);
}

TEST(Encode, PadsNeverEnterRecurrence) {
  const ModelParams p = tiny_params(1);
  const std::vector<int> a{3, 5, 2, 0, 0, 0};
  const std::vector<int> b{3, 5, 2, 0};
  const RecurrentState sa = encode(p, a, 3);
  const RecurrentState sb = encode(p, b, 3);
  EXPECT_EQ(sa.h, sb.h);
  EXPECT_EQ(sa.c, sb.c);
  EXPECT_TRUE(sa.h.allFinite());
  EXPECT_THROW(encode(p, a, 0), ValidationError);
  EXPECT_THROW(encode(p, std::vector<int>{3, 11}, 2), ValidationError);
  EXPECT_THROW(encode(p, std::vector<int>{3, 10}, 2), ValidationError);
}

TEST(DecodeStep, ProbabilitiesNormalizedAndMasked) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const ModelParams p = tiny_params(100 + static_cast<std::uint64_t>(trial), 16);
    const RecurrentState s = encode(p, tokens_of({1, 4, 4}), 3);
    std::array<int, 9> counts{};
    for (int& c : counts) c = static_cast<int>(rng() % 2);
    counts[rng() % 9] = 1;
    const auto step = decode_step(p, Vocabulary::kStart, s, counts);
    double total = 0.0;
    for (std::size_t k = 0; k < 9; ++k) {
      total += step.probabilities[k];
      if (counts[k] == 0) {
        EXPECT_LT(step.probabilities[k], 1e-300);
      }
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
  const ModelParams p = tiny_params(2);
  const RecurrentState s = encode(p, tokens_of({1}), 1);
  EXPECT_THROW(decode_step(p, Vocabulary::kPad, s, std::array<int, 9>{0, 1}), ValidationError);
}

TEST(GreedyDecode, OutputIsInputMultiset) {
  const ModelParams p = tiny_params(4);
  const auto in = tokens_of({1, 1, 3});
  EXPECT_EQ(sorted(greedy_decode(p, in, 3)), sorted(in));
  EXPECT_EQ(greedy_decode(p, tokens_of({6}), 1), tokens_of({6}));
}

TEST(GreedyDecode, LongSequencesWithDefaultShape) {
  const ModelParams p = ModelParams::random(ModelShape{}, 9);
  std::mt19937_64 rng(9);
  std::vector<int> in;
  for (int k = 0; k < 50; ++k) in.push_back(Vocabulary::token_of(static_cast<int>(rng() % 9)));
  const auto out = greedy_decode(p, in, in.size());
  EXPECT_EQ(out.size(), 50u);
  EXPECT_EQ(sorted(out), sorted(in));
}

TEST(GreedyDecode, AgreesWithBatchedForward) {
  std::mt19937_64 rng(5);
  const ModelParams p = tiny_params(5, 12);
  const SequenceBatch batch = oracle::random_batch(40, 14, rng);
  const BatchOutput out = forward(p, batch, DecodeMode::kSequential);
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto decoded = greedy_decode(p, batch.inputs[b], batch.inputs[b].size());
    ASSERT_EQ(decoded.size(), out.predictions[b].size());
    for (std::size_t t = 0; t < decoded.size(); ++t) {
      ASSERT_EQ(Vocabulary::type_of(decoded[t]), out.predictions[b][t]);
    }
  }
}

TEST(TeacherForced, RowsPerStepAndBatchedAgreement) {
  std::mt19937_64 rng(6);
  const ModelParams p = tiny_params(6);
  DatasetSample s;
  s.length = 4;
  s.input = {2, 7, 2, 0, 0, 0, 0, 0, 0, 0};
  s.target = {7, 2, 2, 0, 0, 0, 0, 0, 0, 0};
  s.length = 3;
  const auto rows = teacher_forced_forward(p, s);
  ASSERT_EQ(rows.size(), 3u);
  const std::vector<std::size_t> idx{0};
  const std::vector<DatasetSample> samples{s};
  const SequenceBatch batch = SequenceBatch::from_samples(samples, idx);
  const BatchOutput out = forward(p, batch, DecodeMode::kTeacherForced);
  for (std::size_t t = 0; t < 3; ++t) {
    for (std::size_t k = 0; k < 9; ++k) EXPECT_NEAR(rows[t][k], out.rows[0][t][k], 1e-12);
  }
  // last step has a single remaining class, so it is certain
  EXPECT_NEAR(rows[2][2], 1.0, 1e-12);

  DatasetSample bad = s;
  bad.target = {7, 7, 2, 0, 0, 0, 0, 0, 0, 0};
  EXPECT_THROW(teacher_forced_forward(p, bad), ValidationError);
}

TEST(SoftLoss, WorkedValues) {
  const std::vector<int> targets{0, 1, 2};
  std::vector<ClassRow> perfect(3, ClassRow{});
  for (std::size_t t = 0; t < 3; ++t) perfect[t][t] = 1.0;
  EXPECT_EQ(soft_sequence_loss(perfect, targets), 0.0);
  EXPECT_NEAR(weighted_soft_loss(perfect, targets), 0.0, 1e-15);

  ClassRow uniform{};
  uniform.fill(1.0 / 9.0);
  std::vector<ClassRow> flat(3, uniform);
  EXPECT_NEAR(soft_sequence_loss(flat, targets), 1.0 - 1.0 / 9.0, 1e-15);

  std::vector<ClassRow> partial(3, ClassRow{});
  partial[0][0] = 1.0;
  partial[1][1] = 0.5;
  partial[1][3] = 0.5;
  partial[2][4] = 1.0;
  EXPECT_NEAR(soft_sequence_loss(partial, targets), 0.5, 1e-15);

  std::vector<ClassRow> first_only(3, ClassRow{});
  first_only[0][0] = 1.0;
  first_only[1][5] = 1.0;
  first_only[2][5] = 1.0;
  EXPECT_NEAR(weighted_soft_loss(first_only, targets), 0.5, 1e-15);
  EXPECT_NEAR(soft_sequence_loss(first_only, targets), 2.0 / 3.0, 1e-15);
}

TEST(SoftLoss, PositionWeights) {
  LossOptions linear;
  linear.weighted = true;
  const auto w = position_weights(3, linear);
  EXPECT_NEAR(w[0], 3.0 / 6.0, 1e-15);
  EXPECT_NEAR(w[1], 2.0 / 6.0, 1e-15);
  EXPECT_NEAR(w[2], 1.0 / 6.0, 1e-15);
  LossOptions expo = linear;
  expo.decay = WeightDecay::kExponential;
  for (std::size_t len : {1u, 4u, 10u, 50u}) {
    for (const auto& opt : {linear, expo, LossOptions{}}) {
      const auto ws = position_weights(len, opt);
      double total = 0.0;
      for (std::size_t t = 0; t < len; ++t) {
        total += ws[t];
        if (t && opt.weighted) {
          EXPECT_LT(ws[t], ws[t - 1]);
        }
      }
      EXPECT_NEAR(total, 1.0, 1e-12);
    }
  }
}

TEST(SoftLoss, BoundedOnRandomModels) {
  std::mt19937_64 rng(8);
  const ModelParams p = tiny_params(8);
  const SequenceBatch batch = oracle::random_batch(64, 10, rng);
  const BatchOutput out = forward(p, batch, DecodeMode::kSequential);
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const double l = soft_sequence_loss(out.rows[b], batch.targets[b]);
    const double lw = weighted_soft_loss(out.rows[b], batch.targets[b]);
    EXPECT_TRUE(l >= 0.0 && l <= 1.0);
    EXPECT_TRUE(lw >= 0.0 && lw <= 1.0);
  }
}

TEST(Gradient, MatchesFiniteDifferencesAllModes) {
  std::mt19937_64 rng(10);
  const ModelParams p = tiny_params(10);
  const SequenceBatch batch = oracle::random_batch(3, 5, rng, 2);
  for (DecodeMode mode : {DecodeMode::kSequential, DecodeMode::kTeacherForced}) {
    for (bool weighted : {false, true}) {
      LossOptions options;
      options.weighted = weighted;
      for (const auto& e : oracle::finite_difference_check(p, batch, mode, options, 1e-4)) {
        EXPECT_LT(e.relative_error, 1e-4) << e.name << " weighted=" << weighted;
      }
    }
  }
}

TEST(Train, OverfitsSmallDataset) {
  const auto samples = generate_dataset(100, 3, GAConfig::desk_labeling(), EvaluationContext{}, 1);
  TrainConfig cfg;
  cfg.max_epochs = 200;
  cfg.batch_size = 16;
  cfg.adam.learning_rate = 0.005;
  cfg.shape = ModelShape{32, 64};
  cfg.rng_seed = 3;
  const TrainResult r = train(samples, cfg);
  EXPECT_LT(r.report.epochs.back().train_loss, 0.05);
  EXPECT_EQ(r.report.epochs.size(), 200u);
}

TEST(Train, DeterministicAndRejectsBadInput) {
  const auto samples = generate_dataset(200, 4, GAConfig::desk_labeling(), EvaluationContext{}, 1);
  TrainConfig cfg;
  cfg.max_epochs = 2;
  cfg.shape = ModelShape{16, 16};
  cfg.rng_seed = 11;
  const TrainResult a = train(samples, cfg);
  const TrainResult b = train(samples, cfg);
  ASSERT_EQ(a.report.epochs.size(), b.report.epochs.size());
  for (std::size_t e = 0; e < a.report.epochs.size(); ++e) {
    EXPECT_EQ(a.report.epochs[e].train_loss, b.report.epochs[e].train_loss);
    EXPECT_EQ(a.report.epochs[e].val_loss, b.report.epochs[e].val_loss);
  }
  EXPECT_EQ(a.params.embedding, b.params.embedding);
  EXPECT_THROW(train(std::vector<DatasetSample>{}, cfg), ValidationError);
  TrainConfig bad = cfg;
  bad.train_fraction = 0.9;
  EXPECT_THROW(train(samples, bad), ValidationError);
}

TEST(Split, EightyTenTen) {
  TrainConfig cfg;
  cfg.rng_seed = 2;
  const auto split = split_dataset(1000, cfg);
  EXPECT_EQ(split.train.size(), 800u);
  EXPECT_EQ(split.test.size(), 100u);
  EXPECT_EQ(split.validation.size(), 100u);
  std::vector<std::size_t> all = split.train;
  all.insert(all.end(), split.test.begin(), split.test.end());
  all.insert(all.end(), split.validation.begin(), split.validation.end());
  std::sort(all.begin(), all.end());
  for (std::size_t i = 0; i < all.size(); ++i) ASSERT_EQ(all[i], i);
}

TEST(Checkpoint, RoundTripIsBitExact) {
  Checkpoint ckpt{ModelParams::random(ModelShape{12, 20}, 77), TrainConfig{}};
  ckpt.train_config.rng_seed = 77;
  const auto path = std::filesystem::temp_directory_path() / "edgesched_test_ckpt.json";
  save_checkpoint(ckpt, path);
  const Checkpoint back = load_checkpoint(path);
  const auto a = ckpt.params.tensors();
  const auto b = back.params.tensors();
  for (std::size_t k = 0; k < ModelParams::kTensorCount; ++k) EXPECT_EQ(*a[k], *b[k]);
  EXPECT_EQ(back.train_config.rng_seed, 77u);
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<int> in;
    for (int k = 0; k < 15; ++k) in.push_back(Vocabulary::token_of(static_cast<int>(rng() % 9)));
    EXPECT_EQ(greedy_decode(ckpt.params, in, in.size()), greedy_decode(back.params, in, in.size()));
  }
}

TEST(Checkpoint, RejectsIncompatibleVocabulary) {
  Checkpoint ckpt{ModelParams::random(ModelShape{4, 4}, 1), TrainConfig{}};
  auto j = checkpoint_to_json(ckpt);
  j["vocabulary"]["start_token"] = 12;
  EXPECT_THROW(checkpoint_from_json(nlohmann::json::parse(j.dump())), ValidationError);
  auto k = checkpoint_to_json(ckpt);
  k["tensors"]["embedding"]["shape"] = {11, 5};
  EXPECT_THROW(checkpoint_from_json(nlohmann::json::parse(k.dump())), ValidationError);
}
