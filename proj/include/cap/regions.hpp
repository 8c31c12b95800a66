#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

namespace cap {

/// Axis-aligned rectangle on a feature map; (col, row) is the top-left anchor.
struct Region {
  std::size_t col = 0;
  std::size_t row = 0;
  std::size_t width = 0;
  std::size_t height = 0;

  friend bool operator==(const Region&, const Region&) = default;
};

using RegionSet = std::vector<Region>;

enum class RegionMode { full, pyramid };

/// One pyramid level: square regions of side multiplier*delta on a grid x grid anchor lattice.
struct PyramidLevel {
  std::size_t multiplier = 1;
  std::size_t grid = 1;
};

struct RegionPolicy {
  std::size_t delta_x = 7;
  std::size_t delta_y = 7;
  /// Pixels between consecutive anchors (full mode only).
  std::size_t anchor_stride = 7;
  RegionMode mode = RegionMode::pyramid;
  std::vector<PyramidLevel> levels;

  /// 7-pixel base cells; sides 7, 14, 28 on 3x3 anchor grids (27 regions).
  static RegionPolicy large_scale();
  /// 4-pixel base cells; sides 4, 8, 12 on 3x3 anchor grids (27 regions).
  static RegionPolicy desk();
};

/**
 * Integral regions over a width x height map.
 *
 * Full mode enumerates every anchor on the stride lattice and every extent
 * (m*delta_x, n*delta_y) that fits. Pyramid mode places each level's anchors
 * at round(linspace(0, extent_max, grid)) along both axes. Either way the
 * result is sorted by (row, col, height, width).
 *
 * Throws ContractViolation if the map is smaller than one base cell.
 */
RegionSet enumerate_regions(std::size_t width, std::size_t height, const RegionPolicy& policy);

/// CSV with header "i,j,w_px,h_px".
void write_regions_csv(std::ostream& out, const RegionSet& regions);

}  // namespace cap
