#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "cap/ops.hpp"
#include "cap/regions.hpp"

namespace cap {

/// Fixed output size of every pooled region.
struct PoolSpec {
  std::size_t width = 7;
  std::size_t height = 7;
};

/// The two source samples bracketing one target coordinate along an axis.
struct BilinearTap {
  std::size_t lo = 0;
  std::size_t hi = 0;
  double w_lo = 1.0;
  double w_hi = 0.0;
};

/**
 * Align-corners taps mapping `target` samples onto `extent` source samples
 * starting at `origin`: target t sits at origin + t*(extent-1)/(target-1),
 * or at the window centre when target == 1. Weights are non-negative and
 * sum to one; samples outside the direct neighbours get zero weight.
 */
std::vector<BilinearTap> bilinear_taps(std::size_t origin, std::size_t extent, std::size_t target);

/// Bilinear crop-and-resize of `window` of an [H x W x C] map to [out_h x out_w x C].
Var crop_resize(Var map, const Region& window, std::size_t out_h, std::size_t out_w);

/// Pools one region to [spec.height x spec.width x C]. Throws ContractViolation when out of bounds.
Var pool_region(Var map, const Region& region, const PoolSpec& spec);

/// pool_region for each region, in order.
std::vector<Var> pool_all(Var map, const RegionSet& regions, const PoolSpec& spec);

}  // namespace cap
