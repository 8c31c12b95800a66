#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "cap/dataset.hpp"
#include "cap/model.hpp"
#include "cap/trainer.hpp"

namespace cap {

/**
 * Flat `section.key = value` settings. Lines starting with '#' and blank
 * lines are ignored; trailing "# ..." comments are stripped; values may be
 * double-quoted. Every key must be one of the known keys (see known_keys()).
 */
class KeyValues {
 public:
  /// Parses text; `origin` prefixes error messages. Throws ConfigError.
  static KeyValues parse(std::string_view text, const std::string& origin = "<config>");
  static KeyValues load(const std::filesystem::path& path);

  /// Throws ConfigError for an unknown key.
  void set(const std::string& key, const std::string& value);
  /// Values of `other` win.
  void merge(const KeyValues& other);

  bool contains(const std::string& key) const { return values_.count(key) != 0; }
  const std::string& get(const std::string& key) const;
  const std::map<std::string, std::string>& values() const noexcept { return values_; }

  /// One `key = value` line per entry, sorted by key.
  std::string render() const;

 private:
  std::map<std::string, std::string> values_;
};

/// Every accepted key with its desk default.
const std::map<std::string, std::string>& known_keys();

/// "desk" or "large"; throws ConfigError otherwise.
KeyValues preset(const std::string& name);

struct DataConfig {
  std::string root = "synthetic";  // "synthetic" or an image-folder root
  SyntheticSpec synthetic;         // per_class is the train count
  std::size_t test_per_class = 50;

  bool is_synthetic() const { return root == "synthetic"; }
  LabeledDataset load(Split split) const;
};

struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  DataConfig data;
  std::string out_dir;
  std::size_t checkpoint_every = 10;
  KeyValues source;  // the merged key/value view this was built from
};

/// Interprets and validates a complete key set. Throws ConfigError.
RunConfig build_run_config(const KeyValues& kv);

}  // namespace cap
