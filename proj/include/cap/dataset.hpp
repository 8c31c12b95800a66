#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cap/tensor.hpp"

namespace cap {

enum class Split { train, test };
std::string to_string(Split split);

struct Sample {
  Tensor image;  // [H x W x 3], values in [0, 1]
  std::size_t label = 0;
  std::string source;  // file path or synthetic descriptor
};

struct LabeledDataset {
  std::vector<Sample> items;
  std::vector<std::string> class_names;
  Split split = Split::train;

  std::size_t num_classes() const noexcept { return class_names.size(); }
  /// Throws ContractViolation unless labels are dense in [0, num_classes).
  void validate() const;
};

/**
 * Desk-scale fine-grained stand-in.
 *
 * Every image shows a randomly shaped and coloured body on a textured
 * background. The class is encoded only by a small 3x3 cell pattern placed
 * near a fixed landmark of the body (with positional jitter); all classes
 * share most cells of the pattern and differ in a few. Lower `subtlety`
 * shrinks the cells and their contrast. Same arguments give identical bytes.
 */
struct SyntheticSpec {
  std::size_t num_classes = 8;
  std::size_t per_class = 200;
  std::size_t image_size = 64;
  double subtlety = 0.3;
  std::uint64_t seed = 7;
};

LabeledDataset make_synthetic_dataset(const SyntheticSpec& spec, Split split);

/// Reads `root/<split>/<class_name>/*.png`; classes are sorted by name.
LabeledDataset load_image_folder(const std::filesystem::path& root, Split split);
/// Writes the layout read by load_image_folder, one PNG per sample.
void write_image_folder(const std::filesystem::path& root, const LabeledDataset& data);

/// 8-bit RGB PNG <-> [H x W x 3] tensor in [0, 1].
Tensor read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Tensor& image);

}  // namespace cap
