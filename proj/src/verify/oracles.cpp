#include <algorithm>
#include <cmath>

#include "cap/backbone.hpp"
#include "cap/bilinear_pool.hpp"
#include "cap/cap_attention.hpp"
#include "cap/lstm.hpp"
#include "cap/params.hpp"
#include "cap/pixel_attention.hpp"
#include "cap/regions.hpp"
#include "cap/verify.hpp"
#include "cap/vlad.hpp"

namespace cap::verify {

namespace {

std::size_t pick_size(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

// Every anchor on the stride lattice, rows outer, then every extent that fits.
RegionSet brute_force_regions(std::size_t w, std::size_t h, std::size_t dx, std::size_t dy,
                              std::size_t stride) {
  RegionSet out;
  for (std::size_t j = 0; j + dy <= h; j += stride)
    for (std::size_t i = 0; i + dx <= w; i += stride)
      for (std::size_t n = 1; j + n * dy <= h; ++n)
        for (std::size_t m = 1; i + m * dx <= w; ++m) out.push_back({i, j, m * dx, n * dy});
  return out;
}

RegionPolicy full_policy(std::size_t dx, std::size_t dy, std::size_t stride) {
  RegionPolicy p;
  p.delta_x = dx;
  p.delta_y = dy;
  p.anchor_stride = stride;
  p.mode = RegionMode::full;
  return p;
}

double sigmoid_d(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Gate-by-gate scalar LSTM on plain arrays; weights use the row-vector layout [in x n].
std::vector<std::vector<double>> scalar_lstm(const std::vector<Tensor>& xs, const LstmParams<Tensor>& p) {
  const std::size_t n = p.b_i.size(), c = p.w_i.dim(0);
  std::vector<double> h(n, 0.0), cell(n, 0.0);
  std::vector<std::vector<double>> out;
  auto pre = [&](const Tensor& w, const Tensor& u, const Tensor& b, const Tensor& x, std::size_t k) {
    double s = b[k];
    for (std::size_t q = 0; q < c; ++q) s += x[q] * w[q * n + k];
    for (std::size_t q = 0; q < n; ++q) s += h[q] * u[q * n + k];
    return s;
  };
  for (const auto& x : xs) {
    std::vector<double> nh(n), nc(n);
    for (std::size_t k = 0; k < n; ++k) {
      const double ig = sigmoid_d(pre(p.w_i, p.u_i, p.b_i, x, k));
      const double fg = sigmoid_d(pre(p.w_f, p.u_f, p.b_f, x, k));
      const double og = sigmoid_d(pre(p.w_o, p.u_o, p.b_o, x, k));
      const double gg = std::tanh(pre(p.w_g, p.u_g, p.b_g, x, k));
      nc[k] = fg * cell[k] + ig * gg;
      nh[k] = og * std::tanh(nc[k]);
    }
    h = nh;
    cell = nc;
    out.push_back(h);
  }
  return out;
}

Tensor conv3x3_loops(const Tensor& x, const Tensor& w, const Tensor& b, std::size_t stride, Padding pad) {
  const std::size_t h = x.dim(0), wd = x.dim(1), ci = x.dim(2), co = w.dim(3);
  const Shape os = conv3x3_output_shape(x.shape(), co, stride, pad);
  const long off = pad == Padding::same ? 1 : 0;
  Tensor out(os);
  for (std::size_t oy = 0; oy < os[0]; ++oy)
    for (std::size_t ox = 0; ox < os[1]; ++ox)
      for (std::size_t o = 0; o < co; ++o) {
        double s = b[o];
        for (long ky = 0; ky < 3; ++ky)
          for (long kx = 0; kx < 3; ++kx)
            for (std::size_t i = 0; i < ci; ++i) {
              const long iy = static_cast<long>(oy * stride) + ky - off;
              const long ix = static_cast<long>(ox * stride) + kx - off;
              if (iy < 0 || ix < 0 || iy >= static_cast<long>(h) || ix >= static_cast<long>(wd)) continue;
              s += x[(static_cast<std::size_t>(iy) * wd + static_cast<std::size_t>(ix)) * ci + i] *
                   w[((static_cast<std::size_t>(ky) * 3 + static_cast<std::size_t>(kx)) * ci + i) * co + o];
            }
        out[(oy * os[1] + ox) * co + o] = s;
      }
  return out;
}

CheckResult within(std::string name, double measured, double limit, std::string detail = {}) {
  return {std::move(name), measured <= limit, measured, limit, std::move(detail)};
}

}  // namespace

SuiteReport oracle_suite(const SuiteOptions& opt) {
  SuiteReport report{"oracles", {}};

  {  // regions, full mode
    std::size_t mismatches = 0;
    auto check = [&](std::size_t w, std::size_t h, std::size_t dx, std::size_t dy, std::size_t s) {
      if (enumerate_regions(w, h, full_policy(dx, dy, s)) != brute_force_regions(w, h, dx, dy, s))
        ++mismatches;
    };
    check(14, 14, 7, 7, 7);
    check(7, 7, 7, 7, 7);
    for (std::size_t k = 0; k < opt.instances; ++k) {
      Rng rng(mix_seed(opt.seed, 0x5100 + k));
      const std::size_t dx = pick_size(rng, 1, 6), dy = pick_size(rng, 1, 6);
      check(pick_size(rng, dx, 24), pick_size(rng, dy, 24), dx, dy, pick_size(rng, 1, 6));
    }
    report.checks.push_back(within("regions full mode vs quadruple loop", static_cast<double>(mismatches), 0,
                                   std::to_string(opt.instances + 2) + " configs"));
    const std::size_t n14 = enumerate_regions(14, 14, full_policy(7, 7, 7)).size();
    report.checks.push_back(within("regions 14x14, delta 7 -> 9", std::abs(double(n14) - 9.0), 0));
    const std::size_t n42 = enumerate_regions(42, 42, RegionPolicy::large_scale()).size();
    report.checks.push_back(within("regions 42x42 pyramid -> 27", std::abs(double(n42) - 27.0), 0));
  }

  {  // LSTM vs scalar gates
    double worst = 0.0;
    for (std::size_t k = 0; k < opt.instances; ++k) {
      Rng rng(mix_seed(opt.seed, 0x1500 + k));
      const std::size_t c = pick_size(rng, 1, 6), n = pick_size(rng, 1, 6), len = pick_size(rng, 1, 8);
      LstmParams<Tensor> p = init_lstm(c, n, rng);
      p.visit([&](const std::string&, Tensor& t) { t = uniform(t.shape(), -1, 1, rng); });
      std::vector<Tensor> xs;
      for (std::size_t t = 0; t < len; ++t) xs.push_back(uniform({c}, -2, 2, rng));
      const auto expected = scalar_lstm(xs, p);
      Tape tape;
      std::vector<Var> in;
      for (const auto& x : xs) in.push_back(tape.constant(x));
      const auto hs = encode_sequence(in, leaves(tape, p, LstmParams<Var>{}));
      for (std::size_t t = 0; t < len; ++t)
        for (std::size_t q = 0; q < n; ++q) worst = std::max(worst, std::abs(hs[t].value()[q] - expected[t][q]));
    }
    report.checks.push_back(within("encode_sequence vs scalar gates", worst, 1e-10));
  }

  {  // VLAD column-sum identity
    double worst = 0.0;
    for (std::size_t k = 0; k < opt.instances; ++k) {
      Rng rng(mix_seed(opt.seed, 0x7100 + k));
      const std::size_t n = pick_size(rng, 1, 8), kc = pick_size(rng, 1, 8), len = pick_size(rng, 1, 30);
      auto p = init_vlad(n, kc, 3, rng);
      p.b_cluster = uniform(p.b_cluster.shape(), -1, 1, rng);
      Tape tape;
      std::vector<Var> hs;
      std::vector<double> total(n, 0.0);
      for (std::size_t t = 0; t < len; ++t) {
        Tensor h = uniform({n}, -1, 1, rng);
        for (std::size_t q = 0; q < n; ++q) total[q] += h[q];
        hs.push_back(tape.constant(std::move(h)));
      }
      const Tensor nv = vlad_encode(hs, leaves(tape, p, VladParams<Var>{})).value();
      for (std::size_t q = 0; q < n; ++q) {
        double row = 0.0;
        for (std::size_t c = 0; c < kc; ++c) row += nv[q * kc + c];
        worst = std::max(worst, std::abs(row - total[q]));
      }
    }
    report.checks.push_back(within("vlad_encode sum over clusters == sum of hiddens", worst, 1e-10));
  }

  {  // conv3x3 vs loops, conv1x1 vs matmul
    double worst3 = 0.0, worst1 = 0.0;
    for (std::size_t k = 0; k < opt.instances; ++k) {
      Rng rng(mix_seed(opt.seed, 0xC300 + k));
      const std::size_t h = pick_size(rng, 3, 7), w = pick_size(rng, 3, 7);
      const std::size_t ci = pick_size(rng, 1, 4), co = pick_size(rng, 1, 4), s = pick_size(rng, 1, 2);
      const Padding pad = k % 2 ? Padding::valid : Padding::same;
      const Tensor x = uniform({h, w, ci}, -1, 1, rng), wt = uniform({3, 3, ci, co}, -1, 1, rng),
                   b = uniform({co}, -1, 1, rng);
      Tape tape;
      const Tensor got = conv3x3(tape.constant(x), tape.constant(wt), tape.constant(b), s, pad).value();
      worst3 = std::max(worst3, max_abs_diff(got, conv3x3_loops(x, wt, b, s, pad)));

      const Tensor w1 = uniform({ci, co}, -1, 1, rng);
      const Tensor c1 = conv1x1(tape.constant(x), tape.constant(w1), tape.constant(b)).value();
      const Tensor mm =
          add(matmul(tape.constant(x.reshaped({h * w, ci})), tape.constant(w1)), tape.constant(b)).value();
      worst1 = std::max(worst1, max_abs_diff(c1.reshaped({h * w, co}), mm));
    }
    report.checks.push_back(within("conv3x3 vs loop oracle", worst3, 1e-12));
    report.checks.push_back(within("conv1x1 vs matmul on flattened view (bit-exact)", worst1, 0.0));
  }

  {  // hand-computed cases
    Tape tape;
    const Tensor mm = matmul(tape.constant(Tensor::matrix({{1, 2}, {3, 4}})),
                             tape.constant(Tensor::matrix({{5}, {6}})))
                          .value();
    report.checks.push_back(
        within("matmul [[1,2],[3,4]] x [[5],[6]]", max_abs_diff(mm, Tensor::matrix({{17}, {39}})), 0.0));

    // Pixel attention on a 1x2x1 map.
    const double a = 0.7, b = -0.4, wk = 0.9, wq = -1.3, wv = 0.5, gamma = 0.8;
    PixelAttnParams<Var> pp;
    pp.w_key = tape.constant(Tensor::matrix({{wk}}));
    pp.w_query = tape.constant(Tensor::matrix({{wq}}));
    pp.w_value = tape.constant(Tensor::matrix({{wv}}));
    pp.gamma = tape.constant(Tensor::from({gamma}));
    const Tensor pa = self_attention(tape.constant(Tensor({1, 2, 1}, {a, b})), pp).output.value();
    const double xs[2] = {a, b};
    double worst_pa = 0.0;
    for (int i = 0; i < 2; ++i) {
      const double l0 = xs[i] * wq * xs[0] * wk, l1 = xs[i] * wq * xs[1] * wk;
      const double m = std::max(l0, l1);
      const double e0 = std::exp(l0 - m), e1 = std::exp(l1 - m);
      const double att = (e0 * xs[0] * wv + e1 * xs[1] * wv) / (e0 + e1);
      worst_pa = std::max(worst_pa, std::abs(pa[i] - (xs[i] + gamma * att)));
    }
    report.checks.push_back(within("self_attention 1x2x1 hand oracle", worst_pa, 1e-12));

    // Context attention, two scalar regions.
    CapAttnParams<Var> cp;
    cp.w_query = tape.constant(Tensor::matrix({{1}}));
    cp.w_key = tape.constant(Tensor::matrix({{1}}));
    cp.b_beta = tape.constant(Tensor::from({0}));
    cp.w_alpha = tape.constant(Tensor::from({1}));
    cp.b_alpha = tape.constant(Tensor::from({0}));
    const Var f[2] = {tape.constant(Tensor({1, 1, 1}, 0.0)), tape.constant(Tensor({1, 1, 1}, 1.0))};
    const auto ca = context_attention(f, cp);
    const double z = std::exp(0.0) + std::exp(std::tanh(1.0));
    const double a01 = std::exp(std::tanh(1.0)) / z;
    double worst_ca = std::abs(ca.alpha.value()[1] - a01);
    worst_ca = std::max(worst_ca, std::abs(ca.contexts[0].value()[0] - a01));
    report.checks.push_back(within("context_attention two-region scalar oracle", worst_ca, 1e-12));

    // Soft assignment and a four-term VLAD sum.
    VladParams<Var> vp;
    vp.w_cluster = tape.constant(Tensor::matrix({{0.0, std::log(2.0)}}));
    vp.b_cluster = tape.constant(Tensor({2}, 0.0));
    vp.w_out = tape.constant(Tensor({2, 2}, 0.0));
    const Tensor g = soft_assign(tape.constant(Tensor::from({1.0})), vp).value();
    double worst_v = std::max(std::abs(g[0] - 1.0 / 3.0), std::abs(g[1] - 2.0 / 3.0));
    const Var hs[2] = {tape.constant(Tensor::from({1.0})), tape.constant(Tensor::from({-1.0}))};
    const Tensor nv = vlad_encode(hs, vp).value();
    // h = -1: logits [0, -ln 2] -> gamma = [2/3, 1/3].
    const double e0 = 1.0 / 3.0 * 1.0 + 2.0 / 3.0 * -1.0, e1 = 2.0 / 3.0 * 1.0 + 1.0 / 3.0 * -1.0;
    worst_v = std::max({worst_v, std::abs(nv[0] - e0), std::abs(nv[1] - e1)});
    report.checks.push_back(within("soft_assign / vlad_encode closed forms", worst_v, 1e-12));

    // Upsample and pool closed forms.
    const Var sq = tape.constant(Tensor({2, 2, 1}, {1, 2, 3, 4}));
    const Tensor up = upsample_bilinear(sq, 3, 3).value();
    const Tensor pooled = pool_region(sq, {0, 0, 2, 2}, {3, 3}).value();
    const Tensor expect({3, 3, 1}, {1, 1.5, 2, 2, 2.5, 3, 3, 3.5, 4});
    report.checks.push_back(within("2x2 -> 3x3 bilinear closed form",
                                   std::max(max_abs_diff(up, expect), max_abs_diff(pooled, expect)), 1e-12));
  }
  return report;
}

}  // namespace cap::verify
