#pragma once

#include <cstddef>

#include "cap/params.hpp"

namespace cap {

/// lr0 * factor^floor(epoch / every)
double lr_at_epoch(std::size_t epoch, double lr0, double factor, std::size_t every);

/**
 * Classical momentum SGD, applied entry by entry:
 *   v <- momentum * v + g
 *   p <- p - lr * v
 * `velocity` must have the same names and shapes as `params` (see ParamSet::zeros_like).
 */
void sgd_step(ParamSet& params, const ParamSet& grads, ParamSet& velocity, double lr, double momentum);

}  // namespace cap
