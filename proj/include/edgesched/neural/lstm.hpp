#pragma once

#include <span>
#include <vector>

#include "edgesched/neural/params.hpp"

namespace edgesched::neural {

/// Activations of one batched LSTM step, kept for the backward pass.
struct LstmStepCache {
  Matrix h_prev, c_prev;
  Matrix i, f, g, o;
  Matrix tanh_c;
  std::vector<int> tokens;
  std::vector<char> active;
};

/// Input-side gate contribution for every vocabulary token:
/// row v = embedding[v] * W_ih^T + bias.
inline Matrix input_gate_table(const Matrix& embedding, const LstmWeights& cell) {
  Matrix table = embedding * cell.w_ih.transpose();
  table.rowwise() += cell.bias.row(0);
  return table;
}

/// Advances (h, c) by one step for every active row; inactive rows keep
/// their state. `input_gates` holds the gathered input contribution (B x 4H).
inline void lstm_forward(const Matrix& w_hh, Matrix input_gates, std::span<const char> active, Matrix& h,
                         Matrix& c, LstmStepCache* cache) {
  const Eigen::Index hidden = h.cols();
  input_gates.noalias() += h * w_hh.transpose();
  auto sigmoid = [](const auto& x) { return (1.0 / (1.0 + (-x.array()).exp())).matrix(); };
  Matrix i = sigmoid(input_gates.leftCols(hidden));
  Matrix f = sigmoid(input_gates.middleCols(hidden, hidden));
  Matrix g = input_gates.middleCols(2 * hidden, hidden).array().tanh().matrix();
  Matrix o = sigmoid(input_gates.rightCols(hidden));
  Matrix c_new = (f.array() * c.array() + i.array() * g.array()).matrix();
  Matrix tanh_c = c_new.array().tanh().matrix();
  Matrix h_new = (o.array() * tanh_c.array()).matrix();
  if (cache) {
    cache->h_prev = h;
    cache->c_prev = c;
  }
  for (Eigen::Index b = 0; b < h.rows(); ++b) {
    if (active[static_cast<std::size_t>(b)]) {
      h.row(b) = h_new.row(b);
      c.row(b) = c_new.row(b);
    }
  }
  if (cache) {
    cache->i = std::move(i);
    cache->f = std::move(f);
    cache->g = std::move(g);
    cache->o = std::move(o);
    cache->tanh_c = std::move(tanh_c);
    cache->active.assign(active.begin(), active.end());
  }
}

/// Reverse of lstm_forward. On entry dh/dc are gradients w.r.t. the step's
/// output state; on exit, w.r.t. its input state. Gate gradients are
/// accumulated into dw_hh and, per input token, into dtable.
inline void lstm_backward(const Matrix& w_hh, const LstmStepCache& s, Matrix& dh, Matrix& dc, Matrix& dw_hh,
                          Matrix& dtable) {
  const Eigen::Index batch = dh.rows();
  const Eigen::Index hidden = dh.cols();
  const auto dct = (dc.array() + dh.array() * s.o.array() * (1.0 - s.tanh_c.array().square())).eval();
  Matrix dgates(batch, 4 * hidden);
  dgates.leftCols(hidden) = (dct * s.g.array() * s.i.array() * (1.0 - s.i.array())).matrix();
  dgates.middleCols(hidden, hidden) = (dct * s.c_prev.array() * s.f.array() * (1.0 - s.f.array())).matrix();
  dgates.middleCols(2 * hidden, hidden) = (dct * s.i.array() * (1.0 - s.g.array().square())).matrix();
  dgates.rightCols(hidden) = (dh.array() * s.tanh_c.array() * s.o.array() * (1.0 - s.o.array())).matrix();
  Matrix dc_prev = (dct * s.f.array()).matrix();
  for (Eigen::Index b = 0; b < batch; ++b) {
    if (!s.active[static_cast<std::size_t>(b)]) {
      dgates.row(b).setZero();
      dc_prev.row(b) = dc.row(b);
    }
  }
  dw_hh.noalias() += dgates.transpose() * s.h_prev;
  for (Eigen::Index b = 0; b < batch; ++b) {
    if (s.active[static_cast<std::size_t>(b)]) dtable.row(s.tokens[static_cast<std::size_t>(b)]) += dgates.row(b);
  }
  Matrix dh_prev = dgates * w_hh;
  for (Eigen::Index b = 0; b < batch; ++b) {
    if (!s.active[static_cast<std::size_t>(b)]) dh_prev.row(b) = dh.row(b);
  }
  dh = std::move(dh_prev);
  dc = std::move(dc_prev);
}

/// Folds the per-token gate gradient back into W_ih, bias and the embedding.
inline void accumulate_table_gradient(const Matrix& dtable, const Matrix& embedding, const LstmWeights& cell,
                                      Matrix& d_embedding, LstmWeights& d_cell) {
  d_cell.w_ih.noalias() += dtable.transpose() * embedding;
  d_cell.bias += dtable.colwise().sum();
  d_embedding.noalias() += dtable * cell.w_ih;
}

}  // namespace edgesched::neural
