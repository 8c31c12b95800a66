#pragma once

#include <cstddef>

#include "cap/tensor.hpp"

namespace cap {

struct AugmentConfig {
  double rot_deg = 0.0;       // rotation drawn from U(-rot_deg, +rot_deg)
  double scale_jitter = 0.0;  // zoom drawn from U(1 - s, 1 + s)
  std::size_t crop_from = 64;
  std::size_t crop_to = 64;
};

/// Rotates counter-clockwise (as displayed) by `degrees` and zooms by `zoom` about the
/// image centre, bilinear resampling with zero fill. Output keeps the input size.
Tensor rotate_scale(const Tensor& image, double degrees, double zoom);

/// Square crop of side `side` with top-left corner (top, left).
Tensor crop(const Tensor& image, std::size_t top, std::size_t left, std::size_t side);

/// Centred crop from crop_from to crop_to (evaluation-time transform).
Tensor center_crop(const Tensor& image, const AugmentConfig& cfg);

/**
 * Random rotation, random zoom, then a random crop_to x crop_to crop.
 * The image must be crop_from x crop_from; crop_to > crop_from throws
 * ContractViolation. Deterministic for a given generator state.
 */
Tensor augment(const Tensor& image, const AugmentConfig& cfg, Rng& rng);

}  // namespace cap
