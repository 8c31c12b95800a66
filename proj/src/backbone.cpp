#include "cap/backbone.hpp"

#include "cap/bilinear_pool.hpp"

namespace cap {

void BackboneConfig::validate() const {
  if (stages.empty()) throw ConfigError("backbone needs at least one stage");
  for (const auto& s : stages)
    if (s.out_channels == 0) throw ConfigError("backbone stage with zero output channels");
  if (input_h == 0 || input_w == 0) throw ConfigError("backbone input size must be positive");
  std::size_t h = input_h, w = input_w;
  for (const auto& s : stages) {
    if (s.downsample) {
      if (h < 2 || w < 2) throw ConfigError("backbone downsamples below 1 pixel");
      h /= 2;
      w /= 2;
    }
  }
  if (upsample_h < h || upsample_w < w)
    throw ConfigError("backbone upsample target " + std::to_string(upsample_h) + "x" +
                      std::to_string(upsample_w) + " is smaller than the final stage output " +
                      std::to_string(h) + "x" + std::to_string(w));
}

std::array<std::size_t, 2> BackboneConfig::stage_output_size() const {
  std::size_t h = input_h, w = input_w;
  for (const auto& s : stages)
    if (s.downsample) {
      h /= 2;
      w /= 2;
    }
  return {h, w};
}

std::size_t BackboneConfig::out_channels() const {
  if (stages.empty()) throw ConfigError("backbone needs at least one stage");
  return stages.back().out_channels;
}

Shape BackboneConfig::output_shape() const { return {upsample_h, upsample_w, out_channels()}; }

BackboneConfig BackboneConfig::desk() {
  BackboneConfig c;
  c.stages = {{16, true}, {32, true}, {64, true}};
  c.input_h = c.input_w = 64;
  c.upsample_h = c.upsample_w = 12;
  return c;
}

BackboneConfig BackboneConfig::large_scale() {
  BackboneConfig c = desk();
  c.input_h = c.input_w = 224;
  c.upsample_h = c.upsample_w = 42;
  return c;
}

BackboneParams<Tensor> init_backbone(const BackboneConfig& cfg, std::size_t in_channels, Rng& rng) {
  cfg.validate();
  BackboneParams<Tensor> p(cfg.stages.size());
  std::size_t cin = in_channels;
  for (std::size_t s = 0; s < cfg.stages.size(); ++s) {
    const std::size_t cout = cfg.stages[s].out_channels;
    p.weights[s] = glorot_uniform({3, 3, cin, cout}, 9 * cin, 9 * cout, rng);
    p.biases[s] = Tensor({cout}, 0.0);
    cin = cout;
  }
  return p;
}

Var backbone_forward(Var image, const BackboneConfig& cfg, const BackboneParams<Var>& params) {
  const Shape& s = image.shape();
  if (s.size() != 3 || s[0] != cfg.input_h || s[1] != cfg.input_w)
    throw DimensionError("backbone: image " + to_string(s) + " does not match configured input " +
                         std::to_string(cfg.input_h) + "x" + std::to_string(cfg.input_w));
  if (params.weights.size() != cfg.stages.size())
    throw DimensionError("backbone: parameter stages do not match the config");
  Var x = image;
  for (std::size_t i = 0; i < cfg.stages.size(); ++i) {
    x = relu(conv3x3(x, params.weights[i], params.biases[i], 1, Padding::same));
    if (cfg.stages[i].downsample) x = max_pool2x2(x);
  }
  return upsample_bilinear(x, cfg.upsample_h, cfg.upsample_w);
}

Var upsample_bilinear(Var x, std::size_t out_h, std::size_t out_w) {
  const Shape& s = x.shape();
  if (s.size() != 3) throw DimensionError("upsample_bilinear: expected rank 3, got " + to_string(s));
  if (out_h < s[0] || out_w < s[1])
    throw ContractViolation("upsample_bilinear: target " + std::to_string(out_h) + "x" +
                            std::to_string(out_w) + " would downscale " + to_string(s));
  return crop_resize(x, Region{0, 0, s[1], s[0]}, out_h, out_w);
}

}  // namespace cap
