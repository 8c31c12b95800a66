#include "cap/augment.hpp"

#include <cmath>
#include <numbers>

namespace cap {

namespace {

void check_image(const Tensor& image, const AugmentConfig& cfg) {
  if (image.rank() != 3) throw DimensionError("augment: expected [H x W x C], got " + to_string(image.shape()));
  if (image.dim(0) != cfg.crop_from || image.dim(1) != cfg.crop_from)
    throw ContractViolation("augment: image " + to_string(image.shape()) + " is not " +
                            std::to_string(cfg.crop_from) + "x" + std::to_string(cfg.crop_from));
  if (cfg.crop_to == 0 || cfg.crop_to > cfg.crop_from)
    throw ContractViolation("augment: crop size " + std::to_string(cfg.crop_to) +
                            " exceeds the image size " + std::to_string(cfg.crop_from));
}

}  // namespace

Tensor rotate_scale(const Tensor& image, double degrees, double zoom) {
  if (zoom <= 0.0) throw ContractViolation("rotate_scale: zoom must be positive");
  const std::size_t h = image.dim(0), w = image.dim(1), c = image.dim(2);
  const double theta = degrees * std::numbers::pi / 180.0;
  const double cs = std::cos(theta), sn = std::sin(theta);
  const double cy = (static_cast<double>(h) - 1) / 2, cx = (static_cast<double>(w) - 1) / 2;
  Tensor out(image.shape(), 0.0);
  auto sample = [&](long y, long x, std::size_t ch) {
    if (y < 0 || x < 0 || y >= static_cast<long>(h) || x >= static_cast<long>(w)) return 0.0;
    return image[(static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x)) * c + ch];
  };
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      const double dx = (static_cast<double>(x) - cx) / zoom;
      const double dy = (static_cast<double>(y) - cy) / zoom;
      const double sx = cx + dx * cs - dy * sn;
      const double sy = cy + dx * sn + dy * cs;
      const double fx = std::floor(sx), fy = std::floor(sy);
      const double ax = sx - fx, ay = sy - fy;
      const long x0 = static_cast<long>(fx), y0 = static_cast<long>(fy);
      for (std::size_t ch = 0; ch < c; ++ch)
        out[(y * w + x) * c + ch] =
            (1 - ay) * ((1 - ax) * sample(y0, x0, ch) + ax * sample(y0, x0 + 1, ch)) +
            ay * ((1 - ax) * sample(y0 + 1, x0, ch) + ax * sample(y0 + 1, x0 + 1, ch));
    }
  return out;
}

Tensor crop(const Tensor& image, std::size_t top, std::size_t left, std::size_t side) {
  const std::size_t h = image.dim(0), w = image.dim(1), c = image.dim(2);
  if (top + side > h || left + side > w) throw ContractViolation("crop: window outside the image");
  Tensor out({side, side, c});
  for (std::size_t y = 0; y < side; ++y)
    for (std::size_t x = 0; x < side; ++x)
      for (std::size_t ch = 0; ch < c; ++ch)
        out[(y * side + x) * c + ch] = image[((top + y) * w + left + x) * c + ch];
  return out;
}

Tensor center_crop(const Tensor& image, const AugmentConfig& cfg) {
  check_image(image, cfg);
  if (cfg.crop_to == cfg.crop_from) return image;
  const std::size_t off = (cfg.crop_from - cfg.crop_to) / 2;
  return crop(image, off, off, cfg.crop_to);
}

Tensor augment(const Tensor& image, const AugmentConfig& cfg, Rng& rng) {
  check_image(image, cfg);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double degrees = cfg.rot_deg * u(rng);
  const double zoom = 1.0 + cfg.scale_jitter * u(rng);
  const std::size_t slack = cfg.crop_from - cfg.crop_to;
  std::uniform_int_distribution<std::size_t> offset(0, slack);
  const std::size_t top = offset(rng), left = offset(rng);
  Tensor t = (cfg.rot_deg == 0.0 && cfg.scale_jitter == 0.0) ? image : rotate_scale(image, degrees, zoom);
  if (slack == 0) return t;
  return crop(t, top, left, cfg.crop_to);
}

}  // namespace cap
