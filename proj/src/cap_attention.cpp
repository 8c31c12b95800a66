#include "cap/cap_attention.hpp"

namespace cap {

CapAttnParams<Tensor> init_cap_attention(std::size_t feature_len, Rng& rng) {
  const std::size_t d = feature_len;
  CapAttnParams<Tensor> p;
  p.w_query = glorot_uniform({d, d}, d, d, rng);
  p.w_key = glorot_uniform({d, d}, d, d, rng);
  p.b_beta = Tensor({d}, 0.0);
  p.w_alpha = glorot_uniform({d}, d, 1, rng);
  p.b_alpha = Tensor::scalar(0.0);
  return p;
}

ContextAttentionResult context_attention(std::span<const Var> fbars, const CapAttnParams<Var>& p) {
  if (fbars.empty()) throw ContractViolation("context_attention: empty region list");
  const Shape& region_shape = fbars.front().shape();
  for (const auto& f : fbars)
    if (f.shape() != region_shape)
      throw DimensionError("context_attention: region shapes " + to_string(f.shape()) + " and " +
                           to_string(region_shape) + " differ");
  const std::size_t r = fbars.size();
  const std::size_t d = num_elements(region_shape);
  if (p.w_query.shape() != Shape{d, d} || p.w_key.shape() != Shape{d, d} ||
      p.b_beta.shape() != Shape{d} || p.w_alpha.shape() != Shape{d} || p.b_alpha.size() != 1)
    throw DimensionError("context_attention: parameters do not fit feature length " +
                         std::to_string(d));

  Var feats = reshape(stack(fbars), {r, d});
  Var q = matmul(feats, p.w_query);
  Var k = matmul(feats, p.w_key);
  Var beta = tanh(add(pairwise_sum(q, k), p.b_beta));         // [r x r x d]
  Var logits = matmul(reshape(beta, {r * r, d}), reshape(p.w_alpha, {d, 1}));
  logits = reshape(add(logits, p.b_alpha), {r, r});
  Var alpha = softmax(logits, 1);
  Var ctx = matmul(alpha, feats);                              // [r x d]

  ContextAttentionResult out;
  out.alpha = alpha;
  out.contexts.reserve(r);
  for (std::size_t i = 0; i < r; ++i) out.contexts.push_back(reshape(row(ctx, i), region_shape));
  return out;
}

std::vector<Var> contexts_to_features(std::span<const Var> contexts) {
  std::vector<Var> out;
  out.reserve(contexts.size());
  for (const auto& c : contexts) out.push_back(global_avg_pool(c));
  return out;
}

}  // namespace cap
