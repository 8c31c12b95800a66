#pragma once

#include <cstddef>

#include "cap/ops.hpp"

namespace cap {

/// ceil(C / 8), at least 1.
std::size_t attention_channels(std::size_t channels);

/**
 * Pixel self-attention weights. key/query/value are 1x1 maps C -> Ca; `proj`
 * maps the attended values back to C and only exists when Ca < C
 * (`projected`). `gamma` is the [1] residual gate.
 */
template <typename T>
struct PixelAttnParams {
  T w_key;
  T w_query;
  T w_value;
  T w_proj;
  T gamma;
  bool projected = false;

  template <typename F>
  void visit(F&& f) {
    f("w_k", w_key);
    f("w_q", w_query);
    f("w_v", w_value);
    if (projected) f("w_o", w_proj);
    f("gamma", gamma);
  }
};

/// Glorot weights for C channels with Ca = attention_channels(C); gamma starts at 0.
PixelAttnParams<Tensor> init_pixel_attention(std::size_t channels, Rng& rng);
/// Empty handle set for binding, with the projection slot shaped for `channels`.
PixelAttnParams<Var> pixel_attention_slots(std::size_t channels);

struct PixelAttentionResult {
  Var output;     // [H x W x C]
  Var attention;  // [(H*W) x (H*W)], row i = weights of query position i over all positions
};

/**
 * o = x + gamma * proj(softmax(q k^T / sqrt(Ca)) v), where q, k, v are the
 * 1x1 projections of x. Rows of the attention matrix index query positions.
 */
PixelAttentionResult self_attention(Var x, const PixelAttnParams<Var>& p);

}  // namespace cap
