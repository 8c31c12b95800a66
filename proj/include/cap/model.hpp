#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cap/backbone.hpp"
#include "cap/bilinear_pool.hpp"
#include "cap/params.hpp"
#include "cap/regions.hpp"

namespace cap {

/// Ablation variants: base, +encoding, +CAP, +CAP+encoding.
enum class Mode { base, base_encoding, base_cap, full };

std::string to_string(Mode mode);
/// Accepts "B", "B+E", "B+C", "B+C+E". Throws ConfigError otherwise.
Mode parse_mode(const std::string& text);

struct ModelConfig {
  Mode mode = Mode::full;
  BackboneConfig backbone = BackboneConfig::desk();
  RegionPolicy regions = RegionPolicy::desk();
  PoolSpec pool{3, 3};
  std::size_t hidden = 32;
  std::size_t clusters = 8;
  std::size_t classes = 8;
  bool vlad_normalize = false;
  std::size_t in_channels = 3;
  /// Inputs enter the backbone as (x - input_shift) * input_scale.
  double input_shift = 0.5;
  double input_scale = 1.0;

  void validate() const;
};

/// Intermediate values of one forward pass; unused slots stay unbound.
struct ForwardTrace {
  Var probs;                  // [classes]
  Var pixel_attention;        // [(H*W) x (H*W)]        (C modes)
  Var region_alpha;           // [|R| x |R|]            (C modes)
  std::vector<Var> contexts;  // |R| x [h x w x C]      (C modes)
  std::vector<Var> hiddens;   // sequence x [n]         (E modes)
  Var encoding;               // [n x K]                (E modes)
  Var features;               // pooled [C] vector fed to the linear head (non-E modes)
};

/**
 * One assembled ablation variant together with its parameters.
 *
 *   B      backbone -> GAP -> linear softmax
 *   B+E    backbone rows (width-averaged) -> LSTM -> VLAD -> classify
 *   B+C    backbone -> pixel attention -> regions -> bilinear pool
 *          -> context attention -> GAP per region -> mean -> linear softmax
 *   B+C+E  ... context attention -> GAP per region -> LSTM -> VLAD -> classify
 */
class Model {
 public:
  Model(ModelConfig cfg, std::uint64_t seed);
  /// Adopt existing parameters; names and shapes must match a fresh model of `cfg`.
  Model(ModelConfig cfg, ParamSet params);

  ForwardTrace forward(const Bindings& params, Var image) const;
  /// Convenience: forward on a fresh no-grad tape, returning class probabilities.
  Tensor predict(const Tensor& image) const;

  const ModelConfig& config() const noexcept { return cfg_; }
  const ParamSet& params() const noexcept { return params_; }
  ParamSet& params() noexcept { return params_; }
  const RegionSet& regions() const noexcept { return regions_; }

 private:
  ModelConfig cfg_;
  ParamSet params_;
  RegionSet regions_;
};

/// Cross-entropy -log(yhat[label]) of a probability vector. Throws ContractViolation on a bad label.
Var cross_entropy(Var yhat, std::size_t label);

}  // namespace cap
