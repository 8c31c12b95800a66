#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cap/ops.hpp"

namespace cap {

/**
 * Context-aware attention over pooled regions. Every region feature is
 * flattened to a d-vector (d = w*h*C); query/key maps are d x d and act on
 * the right of row vectors.
 */
template <typename T>
struct CapAttnParams {
  T w_query;   // W_beta       [d x d]
  T w_key;     // W_beta'      [d x d]
  T b_beta;    //              [d]
  T w_alpha;   // logit weight [d]
  T b_alpha;   // logit bias   [1]

  template <typename F>
  void visit(F&& f) {
    f("w_beta", w_query);
    f("w_beta_prime", w_key);
    f("b_beta", b_beta);
    f("w_alpha", w_alpha);
    f("b_alpha", b_alpha);
  }
};

CapAttnParams<Tensor> init_cap_attention(std::size_t feature_len, Rng& rng);

struct ContextAttentionResult {
  std::vector<Var> contexts;  // one [h x w x C] context per region, input order
  Var alpha;                  // [|R| x |R|], rows sum to one
};

/**
 * c_r = sum_r' alpha(r, r') fbar_r', where alpha(r, .) is the softmax over r'
 * of w_alpha . tanh(q_r + k_r' + b_beta) + b_alpha.
 *
 * Throws ContractViolation on an empty list and DimensionError when region
 * shapes differ or do not match the parameter sizes.
 */
ContextAttentionResult context_attention(std::span<const Var> fbars, const CapAttnParams<Var>& p);

/// Global average pooling of each context, order preserved.
std::vector<Var> contexts_to_features(std::span<const Var> contexts);

}  // namespace cap
