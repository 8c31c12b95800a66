#pragma once

#include <filesystem>
#include <string>

#include "cap/params.hpp"

namespace cap {

/**
 * A checkpoint is a directory holding one CTF file per parameter, a
 * `manifest.txt` with one "name file" line per tensor (parameter order), and
 * the effective run configuration in `config.resolved`.
 */
void save_checkpoint(const std::filesystem::path& dir, const ParamSet& params,
                     const std::string& resolved_config);

/// Throws FormatError naming the tensor when a manifest entry or its file is bad.
ParamSet load_checkpoint(const std::filesystem::path& dir);

/// Contents of `config.resolved`; throws FormatError when absent.
std::string load_checkpoint_config(const std::filesystem::path& dir);

}  // namespace cap
