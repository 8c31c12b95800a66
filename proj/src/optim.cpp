#include "cap/optim.hpp"

#include <cmath>

namespace cap {

double lr_at_epoch(std::size_t epoch, double lr0, double factor, std::size_t every) {
  if (every == 0) throw ConfigError("lr_decay_every must be >= 1");
  return lr0 * std::pow(factor, static_cast<double>(epoch / every));
}

void sgd_step(ParamSet& params, const ParamSet& grads, ParamSet& velocity, double lr, double momentum) {
  auto& p = params.entries();
  const auto& g = grads.entries();
  auto& v = velocity.entries();
  if (g.size() != p.size() || v.size() != p.size())
    throw DimensionError("sgd_step: parameter, gradient and velocity sets differ in size");
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (g[i].first != p[i].first || v[i].first != p[i].first)
      throw DimensionError("sgd_step: entry order mismatch at '" + p[i].first + "'");
    auto pd = p[i].second.data();
    auto gd = g[i].second.data();
    auto vd = v[i].second.data();
    if (gd.size() != pd.size() || vd.size() != pd.size() ||
        g[i].second.shape() != p[i].second.shape() || v[i].second.shape() != p[i].second.shape())
      throw DimensionError("sgd_step: shape mismatch at '" + p[i].first + "': " +
                           to_string(p[i].second.shape()) + " vs " + to_string(g[i].second.shape()));
    for (std::size_t k = 0; k < pd.size(); ++k) {
      vd[k] = momentum * vd[k] + gd[k];
      pd[k] -= lr * vd[k];
    }
  }
}

}  // namespace cap
