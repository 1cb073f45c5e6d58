#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

#include <Eigen/Dense>

#include "edgesched/task_model.hpp"

namespace edgesched::neural {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Token ids seen by the network. Task tokens are type_id + 1 so that the
/// pad value never collides with type 0.
struct Vocabulary {
  static constexpr int kPad = 0;
  static constexpr int kFirstTask = 1;
  static constexpr int kStart = 10;
  static constexpr int kSize = 11;
  static constexpr int kClasses = static_cast<int>(kTypeCount);

  static constexpr int token_of(int type_id) { return type_id + kFirstTask; }
  static constexpr int type_of(int token) { return token - kFirstTask; }
  static constexpr bool is_task(int token) { return token >= kFirstTask && token < kFirstTask + kClasses; }
  static constexpr bool is_valid(int token) { return token >= 0 && token < kSize; }
};

struct ModelShape {
  int embed_dim = 128;
  int hidden = 128;

  friend bool operator==(const ModelShape&, const ModelShape&) = default;
};

/// One LSTM cell. Gate blocks along the 4H axis are ordered input, forget,
/// cell candidate, output.
struct LstmWeights {
  Matrix w_ih;  // 4H x E
  Matrix w_hh;  // 4H x H
  Matrix bias;  // 1 x 4H
};

struct ModelParams {
  static constexpr std::size_t kTensorCount = 9;
  static constexpr std::array<std::string_view, kTensorCount> kTensorNames{
      "embedding",      "encoder.w_ih",  "encoder.w_hh",      "encoder.bias",   "decoder.w_ih",
      "decoder.w_hh",   "decoder.bias",  "projection.weight", "projection.bias"};

  ModelShape shape;
  Matrix embedding;  // V x E, shared by encoder and decoder
  LstmWeights encoder;
  LstmWeights decoder;
  Matrix proj_weight;  // H x 9
  Matrix proj_bias;    // 1 x 9

  static ModelParams zeros(const ModelShape& shape) {
    const int e = shape.embed_dim;
    const int h = shape.hidden;
    ModelParams p;
    p.shape = shape;
    p.embedding = Matrix::Zero(Vocabulary::kSize, e);
    for (LstmWeights* cell : {&p.encoder, &p.decoder}) {
      cell->w_ih = Matrix::Zero(4 * h, e);
      cell->w_hh = Matrix::Zero(4 * h, h);
      cell->bias = Matrix::Zero(1, 4 * h);
    }
    p.proj_weight = Matrix::Zero(h, Vocabulary::kClasses);
    p.proj_bias = Matrix::Zero(1, Vocabulary::kClasses);
    return p;
  }

  /// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)]. Embedding rows see a
  /// one-hot input (fan_in 1); recurrent and projection tensors use the
  /// hidden size, input weights the embedding size.
  static ModelParams random(const ModelShape& shape, std::uint64_t seed) {
    ModelParams p = zeros(shape);
    std::mt19937_64 rng(seed);
    const std::array<double, kTensorCount> fan_in{
        1.0, double(shape.embed_dim), double(shape.hidden), double(shape.hidden), double(shape.embed_dim),
        double(shape.hidden), double(shape.hidden), double(shape.hidden), double(shape.hidden)};
    auto tensors = p.tensors();
    for (std::size_t k = 0; k < kTensorCount; ++k) {
      const double bound = 1.0 / std::sqrt(fan_in[k]);
      std::uniform_real_distribution<double> dist(-bound, bound);
      Matrix& m = *tensors[k];
      for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
    }
    return p;
  }

  std::array<Matrix*, kTensorCount> tensors() {
    return {&embedding,    &encoder.w_ih, &encoder.w_hh, &encoder.bias, &decoder.w_ih,
            &decoder.w_hh, &decoder.bias, &proj_weight,  &proj_bias};
  }
  std::array<const Matrix*, kTensorCount> tensors() const {
    return {&embedding,    &encoder.w_ih, &encoder.w_hh, &encoder.bias, &decoder.w_ih,
            &decoder.w_hh, &decoder.bias, &proj_weight,  &proj_bias};
  }

  void set_zero() {
    for (Matrix* m : tensors()) m->setZero();
  }

  bool all_finite() const {
    for (const Matrix* m : tensors()) {
      if (!m->allFinite()) return false;
    }
    return true;
  }
};

}  // namespace edgesched::neural
