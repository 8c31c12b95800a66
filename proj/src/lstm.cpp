#include "cap/lstm.hpp"

namespace cap {

LstmParams<Tensor> init_lstm(std::size_t input_size, std::size_t hidden_size, Rng& rng) {
  const std::size_t c = input_size, n = hidden_size;
  LstmParams<Tensor> p;
  for (Tensor* w : {&p.w_i, &p.w_f, &p.w_o, &p.w_g}) *w = glorot_uniform({c, n}, c, n, rng);
  for (Tensor* u : {&p.u_i, &p.u_f, &p.u_o, &p.u_g}) *u = glorot_uniform({n, n}, n, n, rng);
  p.b_i = Tensor({n}, 0.0);
  p.b_f = Tensor({n}, 1.0);
  p.b_o = Tensor({n}, 0.0);
  p.b_g = Tensor({n}, 0.0);
  return p;
}

LstmState lstm_zero_state(Tape& tape, std::size_t hidden_size) {
  return {tape.constant(Tensor({hidden_size}, 0.0)), tape.constant(Tensor({hidden_size}, 0.0))};
}

namespace {

Var gate_preactivation(Var x, Var h, Var w, Var u, Var b) {
  return add(add(matmul(x, w), matmul(h, u)), b);
}

}  // namespace

LstmState lstm_step(Var input, const LstmState& prev, const LstmParams<Var>& p) {
  const Shape& ws = p.w_i.shape();
  if (ws.size() != 2) throw DimensionError("lstm_step: input weights must be rank 2");
  const std::size_t c = ws[0], n = ws[1];
  if (input.size() != c)
    throw DimensionError("lstm_step: input " + to_string(input.shape()) + " does not match " +
                         to_string(ws));
  if (prev.hidden.size() != n || prev.cell.size() != n)
    throw DimensionError("lstm_step: state size does not match hidden size " + std::to_string(n));
  if (p.u_i.shape() != Shape{n, n} || p.b_i.shape() != Shape{n})
    throw DimensionError("lstm_step: recurrent weights do not match hidden size " +
                         std::to_string(n));

  Var x = reshape(input, {1, c});
  Var h = reshape(prev.hidden, {1, n});
  Var i = sigmoid(gate_preactivation(x, h, p.w_i, p.u_i, p.b_i));
  Var f = sigmoid(gate_preactivation(x, h, p.w_f, p.u_f, p.b_f));
  Var o = sigmoid(gate_preactivation(x, h, p.w_o, p.u_o, p.b_o));
  Var g = tanh(gate_preactivation(x, h, p.w_g, p.u_g, p.b_g));
  Var cell = add(mul(f, reshape(prev.cell, {1, n})), mul(i, g));
  Var hidden = mul(o, tanh(cell));
  return {reshape(hidden, {n}), reshape(cell, {n})};
}

std::vector<Var> encode_sequence(std::span<const Var> features, const LstmParams<Var>& p) {
  if (features.empty()) throw ContractViolation("encode_sequence: empty feature sequence");
  LstmState state = lstm_zero_state(features.front().tape(), p.u_i.shape().at(0));
  std::vector<Var> hiddens;
  hiddens.reserve(features.size());
  for (const auto& f : features) {
    state = lstm_step(f, state, p);
    hiddens.push_back(state.hidden);
  }
  return hiddens;
}

}  // namespace cap
