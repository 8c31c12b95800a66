#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>

#include "cap/backbone.hpp"
#include "cap/bilinear_pool.hpp"
#include "cap/cap_attention.hpp"
#include "cap/lstm.hpp"
#include "cap/model.hpp"
#include "cap/pixel_attention.hpp"
#include "cap/verify.hpp"
#include "cap/vlad.hpp"

namespace cap::verify {

namespace {

double loss_value(const GraphFn& f, const std::vector<Tensor>& inputs, const Tensor& proj) {
  Tape tape;
  std::vector<Var> vars;
  for (const auto& t : inputs) vars.push_back(tape.constant(t));
  const Tensor& out = f(tape, vars).value();
  double s = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) s += out[i] * proj[i];
  return s;
}

// Values in +-[lo, hi]: keeps relu inputs away from the kink.
Tensor away_from_zero(Shape shape, double lo, double hi, Rng& rng) {
  Tensor t = uniform(std::move(shape), lo, hi, rng);
  std::bernoulli_distribution sign(0.5);
  for (auto& v : t.data())
    if (sign(rng)) v = -v;
  return t;
}

std::size_t pick_size(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

template <typename P>
void append(std::vector<Tensor>& out, P params) {
  params.visit([&](const std::string&, Tensor& t) { out.push_back(std::move(t)); });
}

template <typename P>
P take(const std::vector<Var>& vars, std::size_t& i, P slots) {
  slots.visit([&](const std::string&, Var& v) { v = vars.at(i++); });
  return slots;
}

std::vector<Var> tail(const std::vector<Var>& vars, std::size_t from, std::size_t count) {
  return {vars.begin() + static_cast<long>(from), vars.begin() + static_cast<long>(from + count)};
}

// Random parameters drawn wider than the Glorot init so that no path is trivially flat.
template <typename P>
P widen(P params, Rng& rng, double spread) {
  params.visit([&](const std::string&, Tensor& t) { t = uniform(t.shape(), -spread, spread, rng); });
  return params;
}

}  // namespace

double gradcheck(const GraphFn& f, const std::vector<Tensor>& inputs, const GradCheckOptions& opt) {
  Tape tape;
  std::vector<Var> vars;
  for (const auto& t : inputs) vars.push_back(tape.leaf(t));
  Var out = f(tape, vars);
  Rng rng(opt.projection_seed);
  const Tensor proj = uniform(out.shape(), -1.0, 1.0, rng);
  Var loss = sum(mul(out, tape.constant(proj)));
  tape.backward(loss);

  double worst = 0.0;
  std::vector<Tensor> probe = inputs;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const Tensor analytic = tape.grad(vars[i]);
    for (std::size_t j = 0; j < inputs[i].size(); ++j) {
      const double x0 = inputs[i][j];
      probe[i][j] = x0 + opt.step;
      const double up = loss_value(f, probe, proj);
      probe[i][j] = x0 - opt.step;
      const double down = loss_value(f, probe, proj);
      probe[i][j] = x0;
      const double numeric = (up - down) / (2.0 * opt.step);
      const double err = std::abs(analytic[j] - numeric) / std::max(1.0, std::abs(numeric));
      worst = std::max(worst, err);
    }
  }
  return worst;
}

std::vector<GradCase> gradient_cases() {
  std::vector<GradCase> cases;

  cases.push_back({"matmul", [](std::uint64_t seed) {
    Rng rng(seed);
    const std::size_t m = pick_size(rng, 1, 4), k = pick_size(rng, 1, 5), n = pick_size(rng, 1, 4);
    return gradcheck([](Tape&, const std::vector<Var>& v) { return matmul(v[0], v[1]); },
                     {uniform({m, k}, -1, 1, rng), uniform({k, n}, -1, 1, rng)});
  }});

  cases.push_back({"conv1x1", [](std::uint64_t seed) {
    Rng rng(seed);
    const std::size_t h = pick_size(rng, 1, 4), w = pick_size(rng, 1, 4);
    const std::size_t ci = pick_size(rng, 1, 4), co = pick_size(rng, 1, 4);
    return gradcheck([](Tape&, const std::vector<Var>& v) { return conv1x1(v[0], v[1], v[2]); },
                     {uniform({h, w, ci}, -1, 1, rng), uniform({ci, co}, -1, 1, rng),
                      uniform({co}, -1, 1, rng)});
  }});

  cases.push_back({"conv3x3", [](std::uint64_t seed) {
    Rng rng(seed);
    const std::size_t h = pick_size(rng, 3, 6), w = pick_size(rng, 3, 6);
    const std::size_t ci = pick_size(rng, 1, 3), co = pick_size(rng, 1, 3);
    const std::size_t stride = pick_size(rng, 1, 2);
    const Padding pad = pick_size(rng, 0, 1) ? Padding::same : Padding::valid;
    return gradcheck(
        [=](Tape&, const std::vector<Var>& v) { return conv3x3(v[0], v[1], v[2], stride, pad); },
        {uniform({h, w, ci}, -1, 1, rng), uniform({3, 3, ci, co}, -1, 1, rng), uniform({co}, -1, 1, rng)});
  }});

  cases.push_back({"tanh/sigmoid/relu", [](std::uint64_t seed) {
    Rng rng(seed);
    const std::size_t n = pick_size(rng, 1, 12);
    return gradcheck(
        [](Tape&, const std::vector<Var>& v) {
          return add(add(tanh(v[0]), sigmoid(v[0])), relu(v[0]));
        },
        {away_from_zero({n}, 0.05, 2.0, rng)});
  }});

  cases.push_back({"add/mul broadcast", [](std::uint64_t seed) {
    Rng rng(seed);
    const std::size_t a = pick_size(rng, 1, 4), b = pick_size(rng, 1, 4);
    return gradcheck(
        [](Tape&, const std::vector<Var>& v) { return mul(add(v[0], v[1]), v[2]); },
        {uniform({a, b}, -1, 1, rng), uniform({b}, -1, 1, rng), uniform({1}, -1, 1, rng)});
  }});

  cases.push_back({"softmax", [](std::uint64_t seed) {
    Rng rng(seed);
    const std::size_t a = pick_size(rng, 1, 4), b = pick_size(rng, 1, 5);
    const std::size_t axis = pick_size(rng, 0, 1);
    return gradcheck([=](Tape&, const std::vector<Var>& v) { return softmax(v[0], axis); },
                     {uniform({a, b}, -3, 3, rng)});
  }});

  cases.push_back({"global_avg_pool/max_pool2x2", [](std::uint64_t seed) {
    Rng rng(seed);
    const std::size_t h = 2 * pick_size(rng, 1, 3), w = 2 * pick_size(rng, 1, 3), c = pick_size(rng, 1, 3);
    return gradcheck(
        [](Tape&, const std::vector<Var>& v) {
          return add(global_avg_pool(v[0]), global_avg_pool(max_pool2x2(v[0])));
        },
        {uniform({h, w, c}, -1, 1, rng)});
  }});

  cases.push_back({"upsample_bilinear", [](std::uint64_t seed) {
    Rng rng(seed);
    const std::size_t h = pick_size(rng, 1, 4), w = pick_size(rng, 1, 4), c = pick_size(rng, 1, 3);
    const std::size_t oh = h + pick_size(rng, 0, 4), ow = w + pick_size(rng, 0, 4);
    return gradcheck([=](Tape&, const std::vector<Var>& v) { return upsample_bilinear(v[0], oh, ow); },
                     {uniform({h, w, c}, -1, 1, rng)});
  }});

  cases.push_back({"pool_region", [](std::uint64_t seed) {
    Rng rng(seed);
    const std::size_t h = pick_size(rng, 2, 7), w = pick_size(rng, 2, 7), c = pick_size(rng, 1, 3);
    Region r;
    r.width = pick_size(rng, 1, w);
    r.height = pick_size(rng, 1, h);
    r.col = pick_size(rng, 0, w - r.width);
    r.row = pick_size(rng, 0, h - r.height);
    const PoolSpec spec{pick_size(rng, 1, 4), pick_size(rng, 1, 4)};
    return gradcheck([=](Tape&, const std::vector<Var>& v) { return pool_region(v[0], r, spec); },
                     {uniform({h, w, c}, -1, 1, rng)});
  }});

  cases.push_back({"self_attention", [](std::uint64_t seed) {
    Rng rng(seed);
    const std::size_t h = pick_size(rng, 1, 3), w = pick_size(rng, 1, 3), c = pick_size(rng, 1, 10);
    std::vector<Tensor> in{uniform({h, w, c}, -1, 1, rng)};
    auto p = widen(init_pixel_attention(c, rng), rng, 1.0);
    append(in, p);
    return gradcheck(
        [c](Tape&, const std::vector<Var>& v) {
          std::size_t i = 1;
          return self_attention(v[0], take(v, i, pixel_attention_slots(c))).output;
        },
        in);
  }});

  cases.push_back({"context_attention", [](std::uint64_t seed) {
    Rng rng(seed);
    const std::size_t regions = pick_size(rng, 1, 4);
    const std::size_t ph = pick_size(rng, 1, 2), pw = pick_size(rng, 1, 2), c = pick_size(rng, 1, 2);
    std::vector<Tensor> in;
    for (std::size_t r = 0; r < regions; ++r) in.push_back(uniform({ph, pw, c}, -1, 1, rng));
    append(in, widen(init_cap_attention(ph * pw * c, rng), rng, 1.0));
    // Odd seeds check the GAP features instead of the raw contexts.
    const bool gap = seed & 1u;
    return gradcheck(
        [regions, gap](Tape&, const std::vector<Var>& v) {
          std::size_t i = regions;
          const auto res = context_attention(tail(v, 0, regions), take(v, i, CapAttnParams<Var>{}));
          return gap ? stack(contexts_to_features(res.contexts)) : stack(res.contexts);
        },
        in);
  }});

  cases.push_back({"lstm length-4", [](std::uint64_t seed) {
    Rng rng(seed);
    const std::size_t c = pick_size(rng, 1, 4), n = pick_size(rng, 1, 4);
    std::vector<Tensor> in;
    for (int t = 0; t < 4; ++t) in.push_back(uniform({c}, -1, 1, rng));
    append(in, widen(init_lstm(c, n, rng), rng, 1.0));
    return gradcheck(
        [](Tape&, const std::vector<Var>& v) {
          std::size_t i = 4;
          return stack(encode_sequence(tail(v, 0, 4), take(v, i, LstmParams<Var>{})));
        },
        in);
  }});

  cases.push_back({"soft_assign/vlad_encode/classify", [](std::uint64_t seed) {
    Rng rng(seed);
    const std::size_t len = pick_size(rng, 1, 4), n = pick_size(rng, 1, 4);
    const std::size_t k = pick_size(rng, 1, 4), classes = pick_size(rng, 2, 4);
    const bool normalize = pick_size(rng, 0, 1) == 1;
    std::vector<Tensor> in;
    for (std::size_t t = 0; t < len; ++t) in.push_back(uniform({n}, -1, 1, rng));
    append(in, widen(init_vlad(n, k, classes, rng), rng, 1.0));
    return gradcheck(
        [len, normalize](Tape&, const std::vector<Var>& v) {
          std::size_t i = len;
          const auto p = take(v, i, VladParams<Var>{});
          const auto hs = tail(v, 0, len);
          Var enc = vlad_encode(hs, p, normalize);
          Var probs = classify(enc, p);
          return add(reshape(enc, {enc.size()}), scale(sum(mul(probs, probs)), 1.0));
        },
        in);
  }});

  cases.push_back({"soft_assign", [](std::uint64_t seed) {
    Rng rng(seed);
    const std::size_t n = pick_size(rng, 1, 5), k = pick_size(rng, 1, 5);
    std::vector<Tensor> in{uniform({n}, -1, 1, rng)};
    append(in, widen(init_vlad(n, k, 2, rng), rng, 1.0));
    return gradcheck(
        [](Tape&, const std::vector<Var>& v) {
          std::size_t i = 1;
          return soft_assign(v[0], take(v, i, VladParams<Var>{}));
        },
        in);
  }});

  cases.push_back({"cross_entropy", [](std::uint64_t seed) {
    Rng rng(seed);
    const std::size_t classes = pick_size(rng, 2, 6);
    const std::size_t label = pick_size(rng, 0, classes - 1);
    return gradcheck(
        [label](Tape&, const std::vector<Var>& v) { return cross_entropy(softmax(v[0], 0), label); },
        {uniform({classes}, -2, 2, rng)});
  }});

  return cases;
}

SuiteReport gradcheck_suite(const SuiteOptions& opt) {
  SuiteReport report{"gradcheck", {}};
  for (const auto& gc : gradient_cases()) {
    double worst = 0.0;
    for (std::size_t k = 0; k < opt.instances; ++k) worst = std::max(worst, gc.run(mix_seed(opt.seed, k)));
    CheckResult r{gc.name, worst < 1e-3, worst, 1e-3, std::to_string(opt.instances) + " instances"};
    report.checks.push_back(r);
  }
  return report;
}

}  // namespace cap::verify
