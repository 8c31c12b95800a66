#pragma once

#include <cstddef>
#include <span>

#include "cap/ops.hpp"

namespace cap {

/// Residual-less NetVLAD head: cluster weights [n x K], biases [K], output weights [(n*K) x classes].
template <typename T>
struct VladParams {
  T w_cluster;
  T b_cluster;
  T w_out;

  template <typename F>
  void visit(F&& f) {
    f("w_c", w_cluster);
    f("b_c", b_cluster);
    f("w_n", w_out);
  }
};

VladParams<Tensor> init_vlad(std::size_t hidden_size, std::size_t clusters, std::size_t classes,
                             Rng& rng);

/// gamma(h) = softmax(h W_c + b_c), shape [K].
Var soft_assign(Var hidden, const VladParams<Var>& p);

/**
 * N_v[o][k] = sum_r gamma_k(h_r) * h_r[o], shape [n x K]. Raw responses are
 * summed, no cluster centres are subtracted. When `normalize` is set, each
 * column and then the whole matrix are L2-normalised (classic NetVLAD; off
 * by default).
 */
Var vlad_encode(std::span<const Var> hiddens, const VladParams<Var>& p, bool normalize = false);

/// softmax(flat(N_v) W_n), shape [classes].
Var classify(Var encoded, const VladParams<Var>& p);

}  // namespace cap
