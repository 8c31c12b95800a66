#include <algorithm>
#include <cmath>
#include <set>
#include <utility>

#include "cap/bilinear_pool.hpp"
#include "cap/cap_attention.hpp"
#include "cap/metrics.hpp"
#include "cap/model.hpp"
#include "cap/params.hpp"
#include "cap/pixel_attention.hpp"
#include "cap/verify.hpp"
#include "cap/vlad.hpp"

namespace cap::verify {

namespace {

std::size_t pick_size(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

// Largest |row sum - 1| of a [rows x cols] matrix; also flags entries outside (0, 1).
double row_sum_error(const Tensor& m, std::size_t cols, bool& out_of_range) {
  double worst = 0.0;
  for (std::size_t r = 0; r < m.size() / cols; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      const double v = m[r * cols + c];
      if (!(v > 0.0 && v < 1.0) && cols > 1) out_of_range = true;
      s += v;
    }
    worst = std::max(worst, std::abs(s - 1.0));
  }
  return worst;
}

ModelConfig tiny_model(Mode mode) {
  ModelConfig m;
  m.mode = mode;
  m.backbone.stages = {{4, true}, {8, true}};
  m.backbone.input_h = m.backbone.input_w = 16;
  m.backbone.upsample_h = m.backbone.upsample_w = 6;
  m.regions.delta_x = m.regions.delta_y = 2;
  m.regions.levels = {{1, 3}, {2, 2}, {3, 1}};
  m.pool = {2, 2};
  m.hidden = 6;
  m.clusters = 3;
  m.classes = 5;
  return m;
}

// Source cells an align-corners sample can touch along one axis.
std::pair<std::size_t, std::size_t> neighbours(std::size_t origin, std::size_t extent, std::size_t target,
                                               std::size_t t) {
  const double pos = target == 1 ? (extent - 1) / 2.0 : double(t) * double(extent - 1) / double(target - 1);
  return {origin + static_cast<std::size_t>(std::floor(pos)), origin + static_cast<std::size_t>(std::ceil(pos))};
}

CheckResult within(std::string name, double measured, double limit, std::string detail = {}) {
  return {std::move(name), measured <= limit, measured, limit, std::move(detail)};
}

}  // namespace

SuiteReport invariant_suite(const SuiteOptions& opt) {
  SuiteReport report{"invariants", {}};
  const std::string n_inst = std::to_string(opt.instances) + " instances";

  {  // softmax families
    double pix = 0.0, ctx = 0.0, gam = 0.0, yhat = 0.0, plain = 0.0;
    bool range = false;
    for (std::size_t k = 0; k < opt.instances; ++k) {
      Rng rng(mix_seed(opt.seed, 0x50F7 + k));
      Tape tape;
      const std::size_t h = pick_size(rng, 1, 5), w = pick_size(rng, 1, 5), c = pick_size(rng, 1, 12);
      auto pp = init_pixel_attention(c, rng);
      pp.gamma = uniform({1}, -1, 1, rng);
      const auto att = self_attention(tape.constant(uniform({h, w, c}, -3, 3, rng)),
                                      leaves(tape, pp, pixel_attention_slots(c)));
      pix = std::max(pix, row_sum_error(att.attention.value(), h * w, range));

      const std::size_t regions = pick_size(rng, 1, 9), d = pick_size(rng, 1, 8);
      std::vector<Var> fb;
      for (std::size_t r = 0; r < regions; ++r) fb.push_back(tape.constant(uniform({1, 1, d}, -2, 2, rng)));
      const auto ca = context_attention(fb, leaves(tape, init_cap_attention(d, rng), CapAttnParams<Var>{}));
      ctx = std::max(ctx, row_sum_error(ca.alpha.value(), regions, range));

      const std::size_t n = pick_size(rng, 1, 8), kc = pick_size(rng, 1, 8);
      auto vp = init_vlad(n, kc, 3, rng);
      vp.b_cluster = uniform({kc}, -2, 2, rng);
      const Tensor g = soft_assign(tape.constant(uniform({n}, -3, 3, rng)), leaves(tape, vp, VladParams<Var>{})).value();
      gam = std::max(gam, row_sum_error(g, kc, range));

      const std::size_t rows = pick_size(rng, 1, 4), cols = pick_size(rng, 1, 6);
      const Tensor sm = softmax(tape.constant(uniform({rows, cols}, -20, 20, rng)), 1).value();
      plain = std::max(plain, row_sum_error(sm, cols, range));

      const Mode mode = static_cast<Mode>(k % 4);
      const Model model(tiny_model(mode), mix_seed(opt.seed, k));
      const Tensor probs = model.predict(uniform({16, 16, 3}, 0, 1, rng));
      yhat = std::max(yhat, row_sum_error(probs, probs.size(), range));
    }
    report.checks.push_back(within("pixel-attention rows sum to 1", pix, 1e-6, n_inst));
    report.checks.push_back(within("context-attention alpha rows sum to 1", ctx, 1e-6, n_inst));
    report.checks.push_back(within("soft assignment sums to 1", gam, 1e-6, n_inst));
    report.checks.push_back(within("class probabilities sum to 1 (all modes)", yhat, 1e-6, n_inst));
    report.checks.push_back(within("softmax rows sum to 1", plain, 1e-6, n_inst));
    report.checks.push_back(within("softmax entries inside (0, 1)", range ? 1.0 : 0.0, 0.0));
  }

  {  // bilinear kernel
    double identity = 0.0, unity = 0.0, bound = 0.0, support = 0.0;
    for (std::size_t k = 0; k < opt.instances; ++k) {
      Rng rng(mix_seed(opt.seed, 0xB111 + k));
      const std::size_t h = pick_size(rng, 1, 9), w = pick_size(rng, 1, 9), c = pick_size(rng, 1, 3);
      const Tensor map = uniform({h, w, c}, -5, 5, rng);
      Region r;
      r.width = pick_size(rng, 1, w);
      r.height = pick_size(rng, 1, h);
      r.col = pick_size(rng, 0, w - r.width);
      r.row = pick_size(rng, 0, h - r.height);

      Tape tape;
      Var src = tape.constant(map);
      // Identity: target size equal to the region size reproduces the crop.
      const Tensor same = pool_region(src, r, {r.width, r.height}).value();
      for (std::size_t y = 0; y < r.height; ++y)
        for (std::size_t x = 0; x < r.width; ++x)
          for (std::size_t ch = 0; ch < c; ++ch)
            identity = std::max(identity, std::abs(same[(y * r.width + x) * c + ch] -
                                                   map[((r.row + y) * w + r.col + x) * c + ch]));

      const std::size_t target = pick_size(rng, 1, 12);
      for (const auto& tap : bilinear_taps(0, pick_size(rng, 1, 12), target)) {
        if (tap.w_lo < 0.0 || tap.w_hi < 0.0) unity = 1.0;
        unity = std::max(unity, std::abs(tap.w_lo + tap.w_hi - 1.0));
      }

      const PoolSpec spec{pick_size(rng, 1, 6), pick_size(rng, 1, 6)};
      const Tensor pooled = pool_region(src, r, spec).value();
      for (std::size_t ch = 0; ch < c; ++ch) {
        double lo = 1e300, hi = -1e300;
        for (std::size_t y = r.row; y < r.row + r.height; ++y)
          for (std::size_t x = r.col; x < r.col + r.width; ++x) {
            lo = std::min(lo, map[(y * w + x) * c + ch]);
            hi = std::max(hi, map[(y * w + x) * c + ch]);
          }
        for (std::size_t i = ch; i < pooled.size(); i += c)
          bound = std::max({bound, lo - pooled[i], pooled[i] - hi});
      }

      // Gradient of one pooled value lands only on its direct neighbours.
      const std::size_t ty = pick_size(rng, 0, spec.height - 1), tx = pick_size(rng, 0, spec.width - 1);
      const std::size_t ch = pick_size(rng, 0, c - 1);
      Tape gt;
      Var leaf = gt.leaf(map);
      Var out = pool_region(leaf, r, spec);
      gt.backward(pick(out, (ty * spec.width + tx) * c + ch));
      const Tensor grad = gt.grad(leaf);
      const auto ny = neighbours(r.row, r.height, spec.height, ty);
      const auto nx = neighbours(r.col, r.width, spec.width, tx);
      const std::set<std::size_t> allowed{(ny.first * w + nx.first) * c + ch, (ny.first * w + nx.second) * c + ch,
                                          (ny.second * w + nx.first) * c + ch,
                                          (ny.second * w + nx.second) * c + ch};
      for (std::size_t i = 0; i < grad.size(); ++i)
        if (grad[i] != 0.0 && !allowed.count(i)) support = std::max(support, std::abs(grad[i]));
    }
    report.checks.push_back(within("bilinear identity case", identity, 1e-12, n_inst));
    report.checks.push_back(within("bilinear weights non-negative, sum to 1", unity, 1e-12, n_inst));
    report.checks.push_back(within("pooled values inside region min/max", std::max(bound, 0.0), 0.0, n_inst));
    report.checks.push_back(within("pool gradient only at direct neighbours", support, 0.0, n_inst));
  }

  {  // top-N ordering
    double violations = 0.0;
    for (std::size_t k = 0; k < opt.instances; ++k) {
      Rng rng(mix_seed(opt.seed, 0x7077 + k));
      const std::size_t classes = pick_size(rng, 5, 10), count = pick_size(rng, 1, 50);
      std::vector<Tensor> probs;
      std::vector<std::size_t> labels;
      Tape tape;
      for (std::size_t i = 0; i < count; ++i) {
        probs.push_back(softmax(tape.constant(uniform({classes}, -2, 2, rng)), 0).value());
        labels.push_back(pick_size(rng, 0, classes - 1));
      }
      const std::size_t ns[] = {1, 2, 5};
      const EvalMetrics m = score_predictions(probs, labels, classes, ns);
      if (m.top(1) > m.top(2) || m.top(2) > m.top(5)) violations += 1.0;
    }
    report.checks.push_back(within("top-1 <= top-2 <= top-5", violations, 0.0, n_inst));
  }
  return report;
}

}  // namespace cap::verify
