#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "edgesched/neural/params.hpp"
#include "edgesched/neural/train.hpp"

namespace edgesched::neural {

inline constexpr int kCheckpointFormatVersion = 1;

struct Checkpoint {
  ModelParams params;
  TrainConfig train_config;
};

inline nlohmann::ordered_json train_config_to_json(const TrainConfig& c) {
  return {{"batch_size", c.batch_size},
          {"max_epochs", c.max_epochs},
          {"learning_rate", c.adam.learning_rate},
          {"beta1", c.adam.beta1},
          {"beta2", c.adam.beta2},
          {"adam_epsilon", c.adam.epsilon},
          {"train_fraction", c.train_fraction},
          {"test_fraction", c.test_fraction},
          {"validation_fraction", c.validation_fraction},
          {"weighted_loss", c.weighted_loss},
          {"weight_decay", c.weight_decay == WeightDecay::kLinear ? "linear" : "exponential"},
          {"teacher_forcing", c.teacher_forcing},
          {"rng_seed", c.rng_seed},
          {"embed_dim", c.shape.embed_dim},
          {"hidden", c.shape.hidden}};
}

inline TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.batch_size = j.at("batch_size").get<int>();
  c.max_epochs = j.at("max_epochs").get<int>();
  c.adam.learning_rate = j.at("learning_rate").get<double>();
  c.adam.beta1 = j.at("beta1").get<double>();
  c.adam.beta2 = j.at("beta2").get<double>();
  c.adam.epsilon = j.at("adam_epsilon").get<double>();
  c.train_fraction = j.at("train_fraction").get<double>();
  c.test_fraction = j.at("test_fraction").get<double>();
  c.validation_fraction = j.at("validation_fraction").get<double>();
  c.weighted_loss = j.at("weighted_loss").get<bool>();
  c.weight_decay = j.at("weight_decay").get<std::string>() == "linear" ? WeightDecay::kLinear : WeightDecay::kExponential;
  c.teacher_forcing = j.at("teacher_forcing").get<bool>();
  c.rng_seed = j.at("rng_seed").get<std::uint64_t>();
  c.shape.embed_dim = j.at("embed_dim").get<int>();
  c.shape.hidden = j.at("hidden").get<int>();
  return c;
}

inline nlohmann::ordered_json checkpoint_to_json(const Checkpoint& ckpt) {
  nlohmann::ordered_json tensors = nlohmann::ordered_json::object();
  const auto views = ckpt.params.tensors();
  for (std::size_t k = 0; k < ModelParams::kTensorCount; ++k) {
    const Matrix& m = *views[k];
    tensors[std::string(ModelParams::kTensorNames[k])] = {
        {"shape", {m.rows(), m.cols()}},
        {"data", std::vector<double>(m.data(), m.data() + m.size())}};
  }
  return {{"format_version", kCheckpointFormatVersion},
          {"vocabulary",
           {{"pad_token", Vocabulary::kPad},
            {"first_task_token", Vocabulary::kFirstTask},
            {"start_token", Vocabulary::kStart},
            {"vocab_size", Vocabulary::kSize},
            {"output_classes", Vocabulary::kClasses}}},
          {"model", {{"embed_dim", ckpt.params.shape.embed_dim}, {"hidden", ckpt.params.shape.hidden}}},
          {"train_config", train_config_to_json(ckpt.train_config)},
          {"tensors", tensors}};
}

inline Checkpoint checkpoint_from_json(const nlohmann::json& j) {
  Checkpoint ckpt;
  try {
    if (j.at("format_version").get<int>() != kCheckpointFormatVersion) {
      throw ValidationError("unsupported checkpoint format version");
    }
    const auto& v = j.at("vocabulary");
    if (v.at("pad_token").get<int>() != Vocabulary::kPad || v.at("start_token").get<int>() != Vocabulary::kStart ||
        v.at("first_task_token").get<int>() != Vocabulary::kFirstTask ||
        v.at("vocab_size").get<int>() != Vocabulary::kSize ||
        v.at("output_classes").get<int>() != Vocabulary::kClasses) {
      throw ValidationError("checkpoint vocabulary is incompatible");
    }
    ModelShape shape;
    shape.embed_dim = j.at("model").at("embed_dim").get<int>();
    shape.hidden = j.at("model").at("hidden").get<int>();
    if (shape.embed_dim < 1 || shape.hidden < 1) throw ValidationError("checkpoint model dimensions invalid");
    ckpt.train_config = train_config_from_json(j.at("train_config"));
    ckpt.params = ModelParams::zeros(shape);
    auto views = ckpt.params.tensors();
    const auto& tensors = j.at("tensors");
    for (std::size_t k = 0; k < ModelParams::kTensorCount; ++k) {
      const std::string name(ModelParams::kTensorNames[k]);
      const auto& t = tensors.at(name);
      Matrix& m = *views[k];
      const auto shape_arr = t.at("shape").get<std::vector<long>>();
      if (shape_arr.size() != 2 || shape_arr[0] != m.rows() || shape_arr[1] != m.cols()) {
        throw ValidationError("tensor " + name + " has the wrong shape");
      }
      const auto data = t.at("data").get<std::vector<double>>();
      if (data.size() != static_cast<std::size_t>(m.size())) throw ValidationError("tensor " + name + " has the wrong size");
      std::copy(data.begin(), data.end(), m.data());
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed checkpoint: ") + e.what());
  }
  if (!ckpt.params.all_finite()) throw ValidationError("checkpoint contains non-finite values");
  return ckpt;
}

inline void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out << checkpoint_to_json(ckpt).dump() << '\n';
  if (!out) throw std::runtime_error("failed writing checkpoint " + path.string());
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open checkpoint " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  return checkpoint_from_json(j);
}

}  // namespace edgesched::neural
