#include "cap/config.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <sstream>
#include <vector>

namespace cap {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  return out;
}

std::size_t to_size(const std::string& key, const std::string& v) {
  std::size_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size() || v.empty())
    throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw ConfigError(key + ": expected a number, got '" + v + "'");
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

// "12" or "12x10" (height x width); a single number means square.
std::array<std::size_t, 2> to_extent(const std::string& key, const std::string& v) {
  const auto x = v.find('x');
  if (x == std::string::npos) {
    const std::size_t n = to_size(key, v);
    return {n, n};
  }
  return {to_size(key, trim(v.substr(0, x))), to_size(key, trim(v.substr(x + 1)))};
}

std::vector<std::size_t> to_sizes(const std::string& key, const std::string& v) {
  std::vector<std::size_t> out;
  for (const auto& part : split(v, ',')) out.push_back(to_size(key, part));
  return out;
}

const std::map<std::string, std::string> kDefaults = {
    {"train.mode", "B+C+E"},
    {"train.lr0", "0.02"},
    {"train.momentum", "0.9"},
    {"train.lr_decay_factor", "0.1"},
    {"train.lr_decay_every", "20"},
    {"train.epochs", "30"},
    {"train.batch_size", "16"},
    {"train.seed", "1"},
    {"train.grad_clip", "1"},
    {"augment.rot_deg", "0"},
    {"augment.scale_jitter", "0"},
    {"augment.crop_from", "64"},
    {"augment.crop_to", "64"},
    {"backbone.channels", "16,32,64"},
    {"backbone.downsample", "true,true,true"},
    {"backbone.input", "64"},
    {"backbone.upsample_to", "12"},
    {"backbone.input_shift", "0.5"},
    {"backbone.input_scale", "4"},
    {"regions.delta", "4"},
    {"regions.stride", "4"},
    {"regions.mode", "pyramid"},
    {"regions.levels", "1:3,2:3,3:3"},
    {"pool.size", "2"},
    {"encoder.hidden", "32"},
    {"vlad.clusters", "8"},
    {"vlad.normalize", "false"},
    {"data.root", "synthetic"},
    {"data.num_classes", "8"},
    {"data.train_per_class", "200"},
    {"data.test_per_class", "50"},
    {"data.image_size", "64"},
    {"data.subtlety", "0.3"},
    {"data.seed", "7"},
    {"run.out_dir", ""},
    {"run.checkpoint_every", "10"},
};

const std::map<std::string, std::string> kLarge = {
    {"train.lr0", "1e-4"},
    {"train.momentum", "0.99"},
    {"train.lr_decay_factor", "0.1"},
    {"train.lr_decay_every", "50"},
    {"train.grad_clip", "0"},
    {"train.epochs", "150"},
    {"augment.rot_deg", "15"},
    {"augment.scale_jitter", "0.15"},
    {"augment.crop_from", "256"},
    {"augment.crop_to", "224"},
    {"backbone.input", "224"},
    {"backbone.upsample_to", "42"},
    {"regions.delta", "7"},
    {"regions.stride", "7"},
    {"regions.levels", "1:3,2:3,4:3"},
    {"pool.size", "7"},
    {"encoder.hidden", "128"},
    {"vlad.clusters", "32"},
    {"data.image_size", "256"},
};

}  // namespace

const std::map<std::string, std::string>& known_keys() { return kDefaults; }

KeyValues preset(const std::string& name) {
  KeyValues kv;
  for (const auto& [k, v] : kDefaults) kv.set(k, v);
  if (name == "desk") return kv;
  if (name == "large") {
    for (const auto& [k, v] : kLarge) kv.set(k, v);
    return kv;
  }
  throw ConfigError("unknown preset '" + name + "' (expected desk or large)");
}

KeyValues KeyValues::parse(std::string_view text, const std::string& origin) {
  KeyValues kv;
  std::istringstream in{std::string(text)};
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    std::string value = trim(t.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
      value = value.substr(1, value.size() - 2);
    try {
      kv.set(trim(t.substr(0, eq)), value);
    } catch (const ConfigError& e) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return kv;
}

KeyValues KeyValues::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

void KeyValues::set(const std::string& key, const std::string& value) {
  if (!kDefaults.count(key)) throw ConfigError("unknown config key '" + key + "'");
  values_[key] = value;
}

void KeyValues::merge(const KeyValues& other) {
  for (const auto& [k, v] : other.values_) values_[k] = v;
}

const std::string& KeyValues::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("missing config key '" + key + "'");
  return it->second;
}

std::string KeyValues::render() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
  return out;
}

LabeledDataset DataConfig::load(Split split) const {
  LabeledDataset d;
  if (is_synthetic()) {
    SyntheticSpec spec = synthetic;
    if (split == Split::test) spec.per_class = test_per_class;
    d = make_synthetic_dataset(spec, split);
  } else {
    d = load_image_folder(root, split);
  }
  if (d.num_classes() != synthetic.num_classes)
    throw ConfigError("dataset has " + std::to_string(d.num_classes()) +
                      " classes but data.num_classes = " + std::to_string(synthetic.num_classes));
  return d;
}

RunConfig build_run_config(const KeyValues& kv) {
  for (const auto& [k, _] : kDefaults)
    if (!kv.contains(k)) throw ConfigError("missing config key '" + k + "'");
  auto str = [&](const char* k) { return kv.get(k); };
  auto size = [&](const char* k) { return to_size(k, kv.get(k)); };
  auto num = [&](const char* k) { return to_double(k, kv.get(k)); };

  RunConfig rc;
  rc.source = kv;

  TrainConfig& t = rc.train;
  t.lr0 = num("train.lr0");
  t.momentum = num("train.momentum");
  t.lr_decay_factor = num("train.lr_decay_factor");
  t.lr_decay_every = size("train.lr_decay_every");
  t.epochs = size("train.epochs");
  t.batch_size = size("train.batch_size");
  t.seed = size("train.seed");
  t.grad_clip = num("train.grad_clip");
  t.augment.rot_deg = num("augment.rot_deg");
  t.augment.scale_jitter = num("augment.scale_jitter");
  t.augment.crop_from = size("augment.crop_from");
  t.augment.crop_to = size("augment.crop_to");
  t.validate();

  ModelConfig& m = rc.model;
  m.mode = parse_mode(str("train.mode"));
  const auto channels = to_sizes("backbone.channels", str("backbone.channels"));
  const auto down = split(str("backbone.downsample"), ',');
  if (channels.size() != down.size())
    throw ConfigError("backbone.channels and backbone.downsample list different stage counts");
  m.backbone.stages.clear();
  for (std::size_t s = 0; s < channels.size(); ++s)
    m.backbone.stages.push_back({channels[s], to_bool("backbone.downsample", down[s])});
  const auto in = to_extent("backbone.input", str("backbone.input"));
  const auto up = to_extent("backbone.upsample_to", str("backbone.upsample_to"));
  m.backbone.input_h = in[0];
  m.backbone.input_w = in[1];
  m.backbone.upsample_h = up[0];
  m.backbone.upsample_w = up[1];
  m.input_shift = num("backbone.input_shift");
  m.input_scale = num("backbone.input_scale");

  const auto delta = to_extent("regions.delta", str("regions.delta"));
  m.regions.delta_y = delta[0];
  m.regions.delta_x = delta[1];
  m.regions.anchor_stride = size("regions.stride");
  if (m.regions.anchor_stride == 0) throw ConfigError("regions.stride must be >= 1");
  const std::string mode = str("regions.mode");
  if (mode == "full")
    m.regions.mode = RegionMode::full;
  else if (mode == "pyramid")
    m.regions.mode = RegionMode::pyramid;
  else
    throw ConfigError("regions.mode: expected full or pyramid, got '" + mode + "'");
  m.regions.levels.clear();
  for (const auto& level : split(str("regions.levels"), ',')) {
    const auto colon = level.find(':');
    if (colon == std::string::npos)
      throw ConfigError("regions.levels: expected multiplier:grid pairs, got '" + level + "'");
    const PyramidLevel pl{to_size("regions.levels", trim(level.substr(0, colon))),
                          to_size("regions.levels", trim(level.substr(colon + 1)))};
    if (pl.multiplier == 0 || pl.grid == 0) throw ConfigError("regions.levels entries must be >= 1");
    m.regions.levels.push_back(pl);
  }
  const auto pool = to_extent("pool.size", str("pool.size"));
  m.pool = {pool[1], pool[0]};
  m.hidden = size("encoder.hidden");
  m.clusters = size("vlad.clusters");
  m.vlad_normalize = to_bool("vlad.normalize", str("vlad.normalize"));
  m.classes = size("data.num_classes");

  DataConfig& d = rc.data;
  d.root = str("data.root");
  d.synthetic.num_classes = m.classes;
  d.synthetic.per_class = size("data.train_per_class");
  d.test_per_class = size("data.test_per_class");
  d.synthetic.image_size = size("data.image_size");
  d.synthetic.subtlety = num("data.subtlety");
  d.synthetic.seed = size("data.seed");
  if (d.synthetic.per_class == 0 || d.test_per_class == 0)
    throw ConfigError("data.train_per_class and data.test_per_class must be >= 1");

  if (d.is_synthetic() && d.synthetic.image_size != t.augment.crop_from)
    throw ConfigError("data.image_size must equal augment.crop_from");
  if (in[0] != t.augment.crop_to || in[1] != t.augment.crop_to)
    throw ConfigError("backbone.input must equal augment.crop_to");

  rc.out_dir = str("run.out_dir");
  rc.checkpoint_every = size("run.checkpoint_every");
  m.validate();
  if (m.mode == Mode::base_cap || m.mode == Mode::full)
    try {
      enumerate_regions(m.backbone.upsample_w, m.backbone.upsample_h, m.regions);
    } catch (const ContractViolation& e) {
      throw ConfigError(std::string("regions: ") + e.what());
    }
  return rc;
}

}  // namespace cap
