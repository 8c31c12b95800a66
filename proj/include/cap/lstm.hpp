#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cap/ops.hpp"

namespace cap {

/// Fully-gated LSTM weights; input maps are [C x n], recurrent maps [n x n], biases [n].
template <typename T>
struct LstmParams {
  T w_i, w_f, w_o, w_g;
  T u_i, u_f, u_o, u_g;
  T b_i, b_f, b_o, b_g;

  template <typename F>
  void visit(F&& f) {
    f("w_i", w_i);
    f("w_f", w_f);
    f("w_o", w_o);
    f("w_g", w_g);
    f("u_i", u_i);
    f("u_f", u_f);
    f("u_o", u_o);
    f("u_g", u_g);
    f("b_i", b_i);
    f("b_f", b_f);
    f("b_o", b_o);
    f("b_g", b_g);
  }
};

/// Glorot weights, zero biases except the forget gate (1.0).
LstmParams<Tensor> init_lstm(std::size_t input_size, std::size_t hidden_size, Rng& rng);

struct LstmState {
  Var hidden;  // [n]
  Var cell;    // [n]
};

/**
 * One step:
 *   i = sig(f W_i + h U_i + b_i), f_g = sig(...), o = sig(...), g = tanh(...)
 *   cell = f_g * c_prev + i * g,  h = o * tanh(cell)
 */
LstmState lstm_step(Var input, const LstmState& prev, const LstmParams<Var>& p);

/// Zero state of the given hidden size on `tape`.
LstmState lstm_zero_state(Tape& tape, std::size_t hidden_size);

/// Left-to-right scan from the zero state; returns every hidden state. Throws on empty input.
std::vector<Var> encode_sequence(std::span<const Var> features, const LstmParams<Var>& p);

}  // namespace cap
