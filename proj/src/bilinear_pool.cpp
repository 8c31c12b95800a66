#include "cap/bilinear_pool.hpp"

#include <cmath>
#include <string>

namespace cap {

std::vector<BilinearTap> bilinear_taps(std::size_t origin, std::size_t extent, std::size_t target) {
  if (extent == 0 || target == 0) throw ContractViolation("bilinear_taps: empty extent");
  std::vector<BilinearTap> taps(target);
  for (std::size_t t = 0; t < target; ++t) {
    const double pos = target == 1
                           ? static_cast<double>(extent - 1) / 2.0
                           : static_cast<double>(t * (extent - 1)) / static_cast<double>(target - 1);
    auto lo = static_cast<std::size_t>(std::floor(pos));
    if (lo > extent - 1) lo = extent - 1;
    const std::size_t hi = lo + 1 < extent ? lo + 1 : lo;
    const double frac = pos - static_cast<double>(lo);
    taps[t] = {origin + lo, origin + hi, 1.0 - frac, frac};
  }
  return taps;
}

Var crop_resize(Var map, const Region& window, std::size_t out_h, std::size_t out_w) {
  const Tensor& mv = map.value();
  if (mv.rank() != 3) throw DimensionError("crop_resize: expected [H x W x C], got " + to_string(mv.shape()));
  const std::size_t h = mv.dim(0), w = mv.dim(1), c = mv.dim(2);
  if (window.width == 0 || window.height == 0 || window.col + window.width > w ||
      window.row + window.height > h)
    throw ContractViolation("crop_resize: region (" + std::to_string(window.col) + "," +
                            std::to_string(window.row) + "," + std::to_string(window.width) +
                            "x" + std::to_string(window.height) + ") outside map " +
                            to_string(mv.shape()));
  if (out_h == 0 || out_w == 0) throw ContractViolation("crop_resize: empty target size");

  auto ty = bilinear_taps(window.row, window.height, out_h);
  auto tx = bilinear_taps(window.col, window.width, out_w);
  Tensor out({out_h, out_w, c});
  const double* src = mv.data().data();
  for (std::size_t oy = 0; oy < out_h; ++oy) {
    const auto& a = ty[oy];
    for (std::size_t ox = 0; ox < out_w; ++ox) {
      const auto& b = tx[ox];
      const double w00 = a.w_lo * b.w_lo, w01 = a.w_lo * b.w_hi;
      const double w10 = a.w_hi * b.w_lo, w11 = a.w_hi * b.w_hi;
      const double* p00 = src + (a.lo * w + b.lo) * c;
      const double* p01 = src + (a.lo * w + b.hi) * c;
      const double* p10 = src + (a.hi * w + b.lo) * c;
      const double* p11 = src + (a.hi * w + b.hi) * c;
      double* dst = out.data().data() + (oy * out_w + ox) * c;
      for (std::size_t k = 0; k < c; ++k)
        dst[k] = w00 * p00[k] + w01 * p01[k] + w10 * p10[k] + w11 * p11[k];
    }
  }
  return map.tape().record(
      std::move(out), {map},
      [ty = std::move(ty), tx = std::move(tx), w, c](const GradContext& ctx) {
        double* gsrc = ctx.grads[0]->data().data();
        const double* g = ctx.grad_output.data().data();
        const std::size_t out_w = tx.size();
        // Each target point feeds back only into its (up to) four direct neighbours.
        for (std::size_t oy = 0; oy < ty.size(); ++oy) {
          const auto& a = ty[oy];
          for (std::size_t ox = 0; ox < out_w; ++ox) {
            const auto& b = tx[ox];
            const double* gp = g + (oy * out_w + ox) * c;
            const std::pair<std::size_t, double> corners[4] = {
                {(a.lo * w + b.lo) * c, a.w_lo * b.w_lo},
                {(a.lo * w + b.hi) * c, a.w_lo * b.w_hi},
                {(a.hi * w + b.lo) * c, a.w_hi * b.w_lo},
                {(a.hi * w + b.hi) * c, a.w_hi * b.w_hi}};
            for (const auto& [off, wt] : corners) {
              if (wt == 0.0) continue;
              for (std::size_t k = 0; k < c; ++k) gsrc[off + k] += wt * gp[k];
            }
          }
        }
      });
}

Var pool_region(Var map, const Region& region, const PoolSpec& spec) {
  if (spec.width == 0 || spec.height == 0) throw ContractViolation("PoolSpec needs w, h >= 1");
  return crop_resize(map, region, spec.height, spec.width);
}

std::vector<Var> pool_all(Var map, const RegionSet& regions, const PoolSpec& spec) {
  std::vector<Var> out;
  out.reserve(regions.size());
  for (const auto& r : regions) out.push_back(pool_region(map, r, spec));
  return out;
}

}  // namespace cap
