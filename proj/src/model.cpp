#include "cap/model.hpp"

#include "cap/cap_attention.hpp"
#include "cap/lstm.hpp"
#include "cap/pixel_attention.hpp"
#include "cap/vlad.hpp"

namespace cap {

std::string to_string(Mode mode) {
  switch (mode) {
    case Mode::base: return "B";
    case Mode::base_encoding: return "B+E";
    case Mode::base_cap: return "B+C";
    case Mode::full: return "B+C+E";
  }
  return "?";
}

Mode parse_mode(const std::string& text) {
  if (text == "B") return Mode::base;
  if (text == "B+E") return Mode::base_encoding;
  if (text == "B+C") return Mode::base_cap;
  if (text == "B+C+E") return Mode::full;
  throw ConfigError("unknown mode '" + text + "' (expected B, B+E, B+C or B+C+E)");
}

namespace {

bool uses_cap(Mode m) { return m == Mode::base_cap || m == Mode::full; }
bool uses_encoding(Mode m) { return m == Mode::base_encoding || m == Mode::full; }

ParamSet init_params(const ModelConfig& cfg, std::uint64_t seed) {
  Rng rng(seed);
  ParamSet set;
  const std::size_t c = cfg.backbone.out_channels();
  register_params(set, "backbone.", init_backbone(cfg.backbone, cfg.in_channels, rng));
  if (uses_cap(cfg.mode)) {
    register_params(set, "pixel_attn.", init_pixel_attention(c, rng));
    register_params(set, "cap.", init_cap_attention(cfg.pool.width * cfg.pool.height * c, rng));
  }
  if (uses_encoding(cfg.mode)) {
    register_params(set, "lstm.", init_lstm(c, cfg.hidden, rng));
    register_params(set, "vlad.", init_vlad(cfg.hidden, cfg.clusters, cfg.classes, rng));
  } else {
    set.add("head.w", glorot_uniform({c, cfg.classes}, c, cfg.classes, rng));
    set.add("head.b", Tensor({cfg.classes}, 0.0));
  }
  return set;
}

Var linear_head(const Bindings& b, Var features) {
  const std::size_t c = features.size();
  Var logits = add(matmul(reshape(features, {1, c}), b.at("head.w")), b.at("head.b"));
  return reshape(softmax(logits, 1), {logits.size()});
}

}  // namespace

void ModelConfig::validate() const {
  backbone.validate();
  if (classes < 2) throw ConfigError("need at least two classes");
  if (pool.width == 0 || pool.height == 0) throw ConfigError("pool size must be at least 1x1");
  if (hidden == 0) throw ConfigError("encoder hidden size must be positive");
  if (clusters == 0) throw ConfigError("VLAD needs at least one cluster");
  if (in_channels == 0) throw ConfigError("input channels must be positive");
}

Model::Model(ModelConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)) {
  cfg_.validate();
  params_ = init_params(cfg_, seed);
  if (uses_cap(cfg_.mode))
    regions_ = enumerate_regions(cfg_.backbone.upsample_w, cfg_.backbone.upsample_h, cfg_.regions);
}

Model::Model(ModelConfig cfg, ParamSet params) : Model(cfg, std::uint64_t{0}) {
  if (params.size() != params_.size())
    throw ConfigError("parameter set has " + std::to_string(params.size()) + " tensors, model expects " +
                      std::to_string(params_.size()));
  for (const auto& [name, expected] : params_.entries()) {
    if (!params.contains(name)) throw ConfigError("missing parameter tensor '" + name + "'");
    if (params.at(name).shape() != expected.shape())
      throw ConfigError("parameter '" + name + "' has shape " + to_string(params.at(name).shape()) +
                        ", expected " + to_string(expected.shape()));
  }
  ParamSet ordered;
  for (const auto& [name, _] : params_.entries()) ordered.add(name, params.at(name));
  params_ = std::move(ordered);
}

ForwardTrace Model::forward(const Bindings& b, Var image) const {
  BackboneParams<Var> bp(cfg_.backbone.stages.size());
  bind_params(b, "backbone.", bp);
  if (cfg_.input_shift != 0.0)
    image = add(image, image.tape().constant(Tensor({1}, -cfg_.input_shift)));
  if (cfg_.input_scale != 1.0) image = mul(image, image.tape().constant(Tensor({1}, cfg_.input_scale)));
  Var x = backbone_forward(image, cfg_.backbone, bp);
  const std::size_t c = cfg_.backbone.out_channels();

  ForwardTrace t;
  std::vector<Var> sequence;
  if (uses_cap(cfg_.mode)) {
    auto pp = pixel_attention_slots(c);
    bind_params(b, "pixel_attn.", pp);
    auto attn = self_attention(x, pp);
    t.pixel_attention = attn.attention;

    CapAttnParams<Var> cp;
    bind_params(b, "cap.", cp);
    auto pooled = pool_all(attn.output, regions_, cfg_.pool);
    auto ctx = context_attention(pooled, cp);
    t.region_alpha = ctx.alpha;
    t.contexts = ctx.contexts;
    sequence = contexts_to_features(ctx.contexts);
    if (!uses_encoding(cfg_.mode)) {
      t.features = mean_axis(stack(sequence), 0);
      t.probs = linear_head(b, t.features);
      return t;
    }
  } else if (cfg_.mode == Mode::base) {
    t.features = global_avg_pool(x);
    t.probs = linear_head(b, t.features);
    return t;
  } else {
    // Width-averaged feature-map rows, top to bottom.
    Var rows = mean_axis(x, 1);  // [H' x C]
    for (std::size_t r = 0; r < cfg_.backbone.upsample_h; ++r) sequence.push_back(row(rows, r));
  }

  LstmParams<Var> lp;
  bind_params(b, "lstm.", lp);
  VladParams<Var> vp;
  bind_params(b, "vlad.", vp);
  t.hiddens = encode_sequence(sequence, lp);
  t.encoding = vlad_encode(t.hiddens, vp, cfg_.vlad_normalize);
  t.probs = classify(t.encoding, vp);
  return t;
}

Tensor Model::predict(const Tensor& image) const {
  Tape tape;
  Bindings b(tape, params_, false);
  return forward(b, tape.constant(image)).probs.value();
}

Var cross_entropy(Var yhat, std::size_t label) {
  if (yhat.value().rank() != 1)
    throw ContractViolation("cross_entropy: expected a probability vector, got " +
                            to_string(yhat.shape()));
  if (label >= yhat.size())
    throw ContractViolation("cross_entropy: label " + std::to_string(label) + " out of range for " +
                            std::to_string(yhat.size()) + " classes");
  return scale(log(pick(yhat, label)), -1.0);
}

}  // namespace cap
