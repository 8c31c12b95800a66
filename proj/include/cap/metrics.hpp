#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cap/tensor.hpp"

namespace cap {

struct EvalMetrics {
  std::vector<std::size_t> ns;                      // requested N values
  std::vector<double> top_n;                        // percent, aligned with ns
  std::vector<double> per_class;                    // top-1 percent per true class
  std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]
  double mean_loss = 0.0;
  std::size_t count = 0;

  /// Top-N accuracy in percent. Throws ContractViolation if N was not requested.
  double top(std::size_t n) const;
};

/**
 * Scores probability vectors against labels. A prediction is a top-N hit
 * when fewer than N classes have strictly higher probability than the true
 * class, so top-1 <= top-2 <= ... by construction. The top-1 prediction is
 * the first maximal class.
 */
EvalMetrics score_predictions(std::span<const Tensor> probs, std::span<const std::size_t> labels,
                              std::size_t num_classes, std::span<const std::size_t> ns);

}  // namespace cap
