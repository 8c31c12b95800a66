#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "cap/ops.hpp"

namespace cap {

struct BackboneStage {
  std::size_t out_channels = 16;
  bool downsample = true;
};

/// Small conv3x3+relu stack followed by a bilinear upsampling to `upsample_*`.
struct BackboneConfig {
  std::vector<BackboneStage> stages;
  std::size_t input_h = 64;
  std::size_t input_w = 64;
  std::size_t upsample_h = 12;
  std::size_t upsample_w = 12;

  /// Throws ConfigError on empty stages, zero channels or an undersized upsample target.
  void validate() const;
  /// Spatial size after the last stage, before upsampling: {h, w}.
  std::array<std::size_t, 2> stage_output_size() const;
  /// [upsample_h x upsample_w x last out_channels]
  Shape output_shape() const;
  std::size_t out_channels() const;

  /// 16/32/64 channels, each stage downsampling, 64x64 in, 12x12 out.
  static BackboneConfig desk();
  /// Same stages on 224x224 input, upsampled to 42x42.
  static BackboneConfig large_scale();
};

template <typename T>
struct BackboneParams {
  std::vector<T> weights;  // [3 x 3 x Cin x Cout]
  std::vector<T> biases;   // [Cout]

  BackboneParams() = default;
  explicit BackboneParams(std::size_t stages) : weights(stages), biases(stages) {}

  template <typename F>
  void visit(F&& f) {
    for (std::size_t s = 0; s < weights.size(); ++s) {
      f("conv" + std::to_string(s) + ".w", weights[s]);
      f("conv" + std::to_string(s) + ".b", biases[s]);
    }
  }
};

BackboneParams<Tensor> init_backbone(const BackboneConfig& cfg, std::size_t in_channels, Rng& rng);

/// image [input_h x input_w x Cin] -> [upsample_h x upsample_w x C].
Var backbone_forward(Var image, const BackboneConfig& cfg, const BackboneParams<Var>& params);

/// Align-corners bilinear enlargement; throws ContractViolation on a downscale request.
Var upsample_bilinear(Var x, std::size_t out_h, std::size_t out_w);

}  // namespace cap
