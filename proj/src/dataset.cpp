#include "cap/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <map>

namespace cap {

std::string to_string(Split split) { return split == Split::train ? "train" : "test"; }

void LabeledDataset::validate() const {
  if (items.empty()) throw ContractViolation("dataset split '" + to_string(split) + "' is empty");
  std::vector<bool> seen(num_classes(), false);
  for (const auto& s : items) {
    if (s.label >= num_classes())
      throw ContractViolation("label " + std::to_string(s.label) + " outside [0, " +
                              std::to_string(num_classes()) + ")");
    seen[s.label] = true;
  }
  if (!std::all_of(seen.begin(), seen.end(), [](bool b) { return b; }))
    throw ContractViolation("class indices are not dense: some class has no samples");
}

namespace {

constexpr std::size_t kCodeSide = 3;
constexpr std::size_t kCodeCells = kCodeSide * kCodeSide;

using Code = std::array<bool, kCodeCells>;

// A shared random base pattern; class k overwrites the first log2(K) cells of
// a fixed random cell order with the bits of k.
std::vector<Code> class_codes(std::size_t num_classes, std::uint64_t seed) {
  Rng rng(mix_seed(seed, 0xC0DE));
  Code base{};
  std::bernoulli_distribution coin(0.5);
  for (auto& c : base) c = coin(rng);
  std::array<std::size_t, kCodeCells> order{};
  for (std::size_t i = 0; i < kCodeCells; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t bits = 0;
  while ((std::size_t{1} << bits) < num_classes) ++bits;
  if (bits > kCodeCells) throw ContractViolation("too many classes for the synthetic code space");
  std::vector<Code> codes(num_classes, base);
  for (std::size_t k = 0; k < num_classes; ++k)
    for (std::size_t b = 0; b < bits; ++b) codes[k][order[b]] = (k >> b) & 1u;
  return codes;
}

struct Canvas {
  std::size_t size;
  Tensor img;
  explicit Canvas(std::size_t s) : size(s), img({s, s, 3}, 0.0) {}
  double& at(std::size_t y, std::size_t x, std::size_t c) { return img[(y * size + x) * 3 + c]; }
};

Tensor render(const SyntheticSpec& spec, const Code& code, const Code& decoy, Rng& rng) {
  const std::size_t s = spec.image_size;
  const double sd = static_cast<double>(s);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  auto uni = [&](double lo, double hi) { return lo + (hi - lo) * u01(rng); };
  std::normal_distribution<double> noise(0.0, 0.04);

  Canvas cv(s);
  // Background: flat colour plus a few smooth blobs.
  std::array<double, 3> bg{uni(0.2, 0.7), uni(0.2, 0.7), uni(0.2, 0.7)};
  struct Blob { double x, y, sigma, amp; };
  std::vector<Blob> blobs(6);
  for (auto& b : blobs) b = {uni(0, sd), uni(0, sd), uni(0.06, 0.16) * sd, uni(-0.12, 0.12)};

  // Body: axis-aligned ellipse, jittered position, random colour.
  const double cx = sd / 2 + uni(-0.06, 0.06) * sd, cy = sd / 2 + uni(-0.06, 0.06) * sd;
  const double rx = uni(0.28, 0.34) * sd, ry = uni(0.22, 0.28) * sd;
  std::array<double, 3> body{uni(0.2, 0.7), uni(0.2, 0.7), uni(0.2, 0.7)};

  for (std::size_t y = 0; y < s; ++y)
    for (std::size_t x = 0; x < s; ++x) {
      double tex = 0.0;
      for (const auto& b : blobs) {
        const double dx = x - b.x, dy = y - b.y;
        tex += b.amp * std::exp(-(dx * dx + dy * dy) / (2 * b.sigma * b.sigma));
      }
      const double ex = (x - cx) / rx, ey = (y - cy) / ry;
      const double inside = std::clamp((1.0 - std::sqrt(ex * ex + ey * ey)) * 6.0 + 0.5, 0.0, 1.0);
      for (std::size_t c = 0; c < 3; ++c)
        cv.at(y, x, c) = (1 - inside) * bg[c] + inside * body[c] + tex;
    }

  // Code patches sit on identical plates, so the class patch and the decoy
  // differ only in where they are.
  const std::size_t margin = 3;
  // Cells shrink on small canvases so a plate never exceeds half the image.
  const std::size_t max_cell = std::max<std::size_t>(1, (s / 2 - std::min(s / 2, 2 * margin)) / kCodeSide);
  const std::size_t cell =
      std::min(max_cell, static_cast<std::size_t>(std::max(1.0, std::round(1.0 + 5.0 * spec.subtlety))));
  const double amp = 0.2 + 0.8 * spec.subtlety;
  const std::size_t plate = kCodeSide * cell + 2 * margin;
  std::array<double, 3> plate_rgb{uni(0.35, 0.65), uni(0.35, 0.65), uni(0.35, 0.65)};
  auto stamp = [&](const Code& c, double centre_x, double centre_y) {
    const long hi = static_cast<long>(s - plate);
    const auto x0 = static_cast<std::size_t>(std::clamp(std::lround(centre_x - plate / 2.0), 0L, hi));
    const auto y0 = static_cast<std::size_t>(std::clamp(std::lround(centre_y - plate / 2.0), 0L, hi));
    for (std::size_t y = 0; y < plate; ++y)
      for (std::size_t x = 0; x < plate; ++x)
        for (std::size_t ch = 0; ch < 3; ++ch) cv.at(y0 + y, x0 + x, ch) = plate_rgb[ch];
    for (std::size_t r = 0; r < kCodeSide; ++r)
      for (std::size_t q = 0; q < kCodeSide; ++q) {
        const double delta = c[r * kCodeSide + q] ? amp : -amp;
        for (std::size_t dy = 0; dy < cell; ++dy)
          for (std::size_t dx = 0; dx < cell; ++dx)
            for (std::size_t ch = 0; ch < 3; ++ch)
              cv.at(y0 + margin + r * cell + dy, x0 + margin + q * cell + dx, ch) += delta;
      }
  };
  stamp(code, cx + uni(-3.0, 3.0), cy + uni(-3.0, 3.0));
  // Decoy: another class's pattern on the background, near a random corner.
  const double inset = uni(0.22, 0.27) * sd;
  const int corner = std::uniform_int_distribution<int>(0, 3)(rng);
  stamp(decoy, corner & 1 ? sd - inset : inset, corner & 2 ? sd - inset : inset);

  for (auto& v : cv.img.data()) v = std::clamp(v + noise(rng), 0.0, 1.0);
  return std::move(cv.img);
}

}  // namespace

LabeledDataset make_synthetic_dataset(const SyntheticSpec& spec, Split split) {
  if (spec.num_classes < 2) throw ContractViolation("synthetic dataset needs at least two classes");
  if (spec.per_class == 0) throw ContractViolation("synthetic dataset needs per_class >= 1");
  if (!(spec.subtlety > 0.0 && spec.subtlety <= 1.0))
    throw ContractViolation("subtlety must lie in (0, 1]");
  if (spec.image_size < 16) throw ContractViolation("synthetic images must be at least 16x16");

  const auto codes = class_codes(spec.num_classes, spec.seed);
  LabeledDataset data;
  data.split = split;
  for (std::size_t k = 0; k < spec.num_classes; ++k) {
    char name[32];
    std::snprintf(name, sizeof name, "class_%02zu", k);
    data.class_names.emplace_back(name);
  }
  const std::uint64_t split_seed = mix_seed(spec.seed, split == Split::train ? 1 : 2);
  // Interleave classes so any prefix of the list is roughly balanced.
  for (std::size_t i = 0; i < spec.per_class; ++i)
    for (std::size_t k = 0; k < spec.num_classes; ++k) {
      const std::uint64_t idx = i * spec.num_classes + k;
      Rng rng(mix_seed(split_seed, idx));
      std::size_t other = std::uniform_int_distribution<std::size_t>(0, spec.num_classes - 2)(rng);
      if (other >= k) ++other;
      data.items.push_back({render(spec, codes[k], codes[other], rng), k,
                            "synthetic:" + to_string(split) + ":" + std::to_string(idx)});
    }
  return data;
}

LabeledDataset load_image_folder(const std::filesystem::path& root, Split split) {
  namespace fs = std::filesystem;
  const fs::path dir = root / to_string(split);
  if (!fs::is_directory(dir)) throw ConfigError("dataset directory " + dir.string() + " not found");
  LabeledDataset data;
  data.split = split;
  std::vector<fs::path> class_dirs;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_directory()) class_dirs.push_back(e.path());
  std::sort(class_dirs.begin(), class_dirs.end());
  for (std::size_t k = 0; k < class_dirs.size(); ++k) {
    data.class_names.push_back(class_dirs[k].filename().string());
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(class_dirs[k]))
      if (e.is_regular_file() && e.path().extension() == ".png") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) data.items.push_back({read_png(f), k, f.string()});
  }
  data.validate();
  return data;
}

void write_image_folder(const std::filesystem::path& root, const LabeledDataset& data) {
  namespace fs = std::filesystem;
  std::vector<std::size_t> counters(data.num_classes(), 0);
  for (const auto& name : data.class_names) fs::create_directories(root / to_string(data.split) / name);
  for (const auto& s : data.items) {
    char file[32];
    std::snprintf(file, sizeof file, "%05zu.png", counters[s.label]++);
    write_png(root / to_string(data.split) / data.class_names[s.label] / file, s.image);
  }
}

}  // namespace cap
