#include "cap/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace cap {

double EvalMetrics::top(std::size_t n) const {
  for (std::size_t i = 0; i < ns.size(); ++i)
    if (ns[i] == n) return top_n[i];
  throw ContractViolation("top-" + std::to_string(n) + " accuracy was not computed");
}

EvalMetrics score_predictions(std::span<const Tensor> probs, std::span<const std::size_t> labels,
                              std::size_t num_classes, std::span<const std::size_t> ns) {
  if (probs.size() != labels.size()) throw DimensionError("score_predictions: size mismatch");
  if (probs.empty()) throw ContractViolation("score_predictions: no predictions");
  EvalMetrics m;
  m.ns.assign(ns.begin(), ns.end());
  m.count = probs.size();
  m.confusion.assign(num_classes, std::vector<std::size_t>(num_classes, 0));
  std::vector<std::size_t> hits(ns.size(), 0), class_total(num_classes, 0), class_hit(num_classes, 0);
  double loss = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const Tensor& p = probs[i];
    const std::size_t y = labels[i];
    if (p.size() != num_classes || y >= num_classes)
      throw DimensionError("score_predictions: prediction does not match class count");
    const double py = p[y];
    std::size_t higher = 0;
    for (std::size_t c = 0; c < num_classes; ++c)
      if (p[c] > py) ++higher;
    for (std::size_t k = 0; k < ns.size(); ++k)
      if (higher < ns[k]) ++hits[k];
    const auto pred = static_cast<std::size_t>(
        std::max_element(p.data().begin(), p.data().end()) - p.data().begin());
    ++m.confusion[y][pred];
    ++class_total[y];
    if (pred == y) ++class_hit[y];
    loss += -std::log(std::max(py, 1e-300));
  }
  for (std::size_t k = 0; k < ns.size(); ++k)
    m.top_n.push_back(100.0 * static_cast<double>(hits[k]) / static_cast<double>(m.count));
  for (std::size_t c = 0; c < num_classes; ++c)
    m.per_class.push_back(class_total[c] ? 100.0 * static_cast<double>(class_hit[c]) /
                                               static_cast<double>(class_total[c])
                                         : 0.0);
  m.mean_loss = loss / static_cast<double>(m.count);
  return m;
}

}  // namespace cap
