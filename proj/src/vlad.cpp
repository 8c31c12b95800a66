#include "cap/vlad.hpp"

#include <cmath>
#include <vector>

namespace cap {

VladParams<Tensor> init_vlad(std::size_t hidden_size, std::size_t clusters, std::size_t classes,
                             Rng& rng) {
  if (clusters == 0) throw ConfigError("VLAD needs at least one cluster");
  VladParams<Tensor> p;
  p.w_cluster = glorot_uniform({hidden_size, clusters}, hidden_size, clusters, rng);
  p.b_cluster = Tensor({clusters}, 0.0);
  p.w_out = glorot_uniform({hidden_size * clusters, classes}, hidden_size * clusters, classes, rng);
  return p;
}

namespace {

void check_cluster_params(std::size_t n, const VladParams<Var>& p) {
  const Shape& wc = p.w_cluster.shape();
  if (wc.size() != 2 || wc[0] != n)
    throw DimensionError("VLAD: cluster weights " + to_string(wc) + " do not fit hidden size " +
                         std::to_string(n));
  if (p.b_cluster.shape() != Shape{wc[1]})
    throw DimensionError("VLAD: cluster biases " + to_string(p.b_cluster.shape()) +
                         " do not match " + std::to_string(wc[1]) + " clusters");
}

// L2 normalisation of each column of an [m x k] matrix.
Var normalize_columns(Var x) {
  const Tensor& xv = x.value();
  const std::size_t m = xv.dim(0), k = xv.dim(1);
  constexpr double eps = 1e-12;
  std::vector<double> norms(k, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < k; ++j) norms[j] += xv[i * k + j] * xv[i * k + j];
  for (auto& n : norms) n = std::sqrt(n + eps);
  Tensor out(xv.shape());
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < k; ++j) out[i * k + j] = xv[i * k + j] / norms[j];
  return x.tape().record(std::move(out), {x}, [norms, m, k](const GradContext& ctx) {
    const Tensor& y = ctx.output;
    const Tensor& g = ctx.grad_output;
    Tensor& gx = *ctx.grads[0];
    for (std::size_t j = 0; j < k; ++j) {
      double dot = 0.0;
      for (std::size_t i = 0; i < m; ++i) dot += y[i * k + j] * g[i * k + j];
      for (std::size_t i = 0; i < m; ++i)
        gx[i * k + j] += (g[i * k + j] - y[i * k + j] * dot) / norms[j];
    }
  });
}

}  // namespace

Var soft_assign(Var hidden, const VladParams<Var>& p) {
  const std::size_t n = hidden.size();
  check_cluster_params(n, p);
  Var logits = add(matmul(reshape(hidden, {1, n}), p.w_cluster), p.b_cluster);
  return reshape(softmax(logits, 1), {p.b_cluster.size()});
}

Var vlad_encode(std::span<const Var> hiddens, const VladParams<Var>& p, bool normalize) {
  if (hiddens.empty()) throw ContractViolation("vlad_encode: empty hidden-state list");
  const std::size_t r = hiddens.size();
  const std::size_t n = hiddens.front().size();
  check_cluster_params(n, p);
  Var h = reshape(stack(hiddens), {r, n});
  Var assign = softmax(add(matmul(h, p.w_cluster), p.b_cluster), 1);  // [r x K]
  Var encoded = matmul(transpose(h), assign);                         // [n x K]
  if (normalize) {
    const std::size_t k = p.b_cluster.size();
    encoded = normalize_columns(encoded);
    encoded = reshape(normalize_columns(reshape(encoded, {n * k, 1})), {n, k});
  }
  return encoded;
}

Var classify(Var encoded, const VladParams<Var>& p) {
  const std::size_t len = encoded.size();
  const Shape& wn = p.w_out.shape();
  if (wn.size() != 2 || wn[0] != len)
    throw DimensionError("classify: output weights " + to_string(wn) + " do not fit encoding " +
                         to_string(encoded.shape()));
  Var logits = matmul(reshape(encoded, {1, len}), p.w_out);
  return reshape(softmax(logits, 1), {wn[1]});
}

}  // namespace cap
