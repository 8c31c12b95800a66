#include "cap/regions.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>
#include <tuple>

#include "cap/tensor.hpp"

namespace cap {

RegionPolicy RegionPolicy::large_scale() {
  RegionPolicy p;
  p.delta_x = p.delta_y = 7;
  p.anchor_stride = 7;
  p.mode = RegionMode::pyramid;
  p.levels = {{1, 3}, {2, 3}, {4, 3}};
  return p;
}

RegionPolicy RegionPolicy::desk() {
  RegionPolicy p;
  p.delta_x = p.delta_y = 4;
  p.anchor_stride = 4;
  p.mode = RegionMode::pyramid;
  p.levels = {{1, 3}, {2, 3}, {3, 3}};
  return p;
}

namespace {

std::vector<std::size_t> linspace_anchors(std::size_t last, std::size_t count) {
  std::vector<std::size_t> out;
  if (count == 1) return {0};
  for (std::size_t k = 0; k < count; ++k) {
    const double t = static_cast<double>(k) * static_cast<double>(last) /
                     static_cast<double>(count - 1);
    out.push_back(static_cast<std::size_t>(std::round(t)));
  }
  return out;
}

}  // namespace

RegionSet enumerate_regions(std::size_t width, std::size_t height, const RegionPolicy& policy) {
  if (policy.delta_x == 0 || policy.delta_y == 0)
    throw ContractViolation("region base cell must be at least 1x1");
  if (width < policy.delta_x || height < policy.delta_y)
    throw ContractViolation("feature map " + std::to_string(width) + "x" +
                            std::to_string(height) + " smaller than the " +
                            std::to_string(policy.delta_x) + "x" +
                            std::to_string(policy.delta_y) + " base cell");
  RegionSet out;
  if (policy.mode == RegionMode::full) {
    if (policy.anchor_stride == 0) throw ContractViolation("anchor stride must be >= 1");
    for (std::size_t j = 0; j + policy.delta_y <= height; j += policy.anchor_stride)
      for (std::size_t i = 0; i + policy.delta_x <= width; i += policy.anchor_stride)
        for (std::size_t h = policy.delta_y; j + h <= height; h += policy.delta_y)
          for (std::size_t w = policy.delta_x; i + w <= width; w += policy.delta_x)
            out.push_back({i, j, w, h});
    return out;
  }

  if (policy.levels.empty()) throw ContractViolation("pyramid mode needs at least one level");
  for (const auto& level : policy.levels) {
    if (level.multiplier == 0 || level.grid == 0)
      throw ContractViolation("pyramid level needs multiplier >= 1 and grid >= 1");
    const std::size_t w = level.multiplier * policy.delta_x;
    const std::size_t h = level.multiplier * policy.delta_y;
    if (w > width || h > height)
      throw ContractViolation("pyramid level of side " + std::to_string(w) + "x" +
                              std::to_string(h) + " does not fit the map");
    for (auto j : linspace_anchors(height - h, level.grid))
      for (auto i : linspace_anchors(width - w, level.grid)) out.push_back({i, j, w, h});
  }
  std::stable_sort(out.begin(), out.end(), [](const Region& a, const Region& b) {
    return std::tie(a.row, a.col, a.height, a.width) < std::tie(b.row, b.col, b.height, b.width);
  });
  return out;
}

void write_regions_csv(std::ostream& out, const RegionSet& regions) {
  out << "i,j,w_px,h_px\n";
  for (const auto& r : regions)
    out << r.col << ',' << r.row << ',' << r.width << ',' << r.height << '\n';
}

}  // namespace cap
