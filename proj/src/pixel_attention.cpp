#include "cap/pixel_attention.hpp"

#include <algorithm>
#include <cmath>

namespace cap {

std::size_t attention_channels(std::size_t channels) {
  return channels == 0 ? 1 : std::max<std::size_t>(1, (channels + 7) / 8);
}

PixelAttnParams<Tensor> init_pixel_attention(std::size_t channels, Rng& rng) {
  const std::size_t ca = attention_channels(channels);
  PixelAttnParams<Tensor> p;
  p.w_key = glorot_uniform({channels, ca}, channels, ca, rng);
  p.w_query = glorot_uniform({channels, ca}, channels, ca, rng);
  p.w_value = glorot_uniform({channels, ca}, channels, ca, rng);
  if (ca < channels) p.w_proj = glorot_uniform({ca, channels}, ca, channels, rng);
  p.gamma = Tensor::scalar(0.0);
  p.projected = ca < channels;
  return p;
}

PixelAttnParams<Var> pixel_attention_slots(std::size_t channels) {
  PixelAttnParams<Var> p;
  p.projected = attention_channels(channels) < channels;
  return p;
}

PixelAttentionResult self_attention(Var x, const PixelAttnParams<Var>& p) {
  const Shape& s = x.shape();
  if (s.size() != 3) throw DimensionError("self_attention: expected [H x W x C], got " + to_string(s));
  const std::size_t h = s[0], w = s[1], c = s[2];
  const Shape& wk = p.w_key.shape();
  if (wk.size() != 2 || wk[0] != c || p.w_query.shape() != wk || p.w_value.shape() != wk)
    throw DimensionError("self_attention: weights " + to_string(wk) + " do not fit " +
                         std::to_string(c) + " channels");
  const std::size_t ca = wk[1];
  if (ca > c) throw DimensionError("self_attention: attention channels exceed input channels");

  Var flat = reshape(x, {h * w, c});
  Var q = matmul(flat, p.w_query);
  Var k = matmul(flat, p.w_key);
  Var v = matmul(flat, p.w_value);
  Var logits = scale(matmul(q, transpose(k)), 1.0 / std::sqrt(static_cast<double>(ca)));
  Var attn = softmax(logits, 1);
  Var attended = matmul(attn, v);
  if (ca < c) {
    if (!p.projected || !p.w_proj.valid()) throw DimensionError("self_attention: missing projection for Ca < C");
    attended = matmul(attended, p.w_proj);
  }
  Var out = add(flat, mul(attended, p.gamma));
  return {reshape(out, {h, w, c}), attn};
}

}  // namespace cap
