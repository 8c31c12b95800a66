#include "cap/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "cap/ctf.hpp"

namespace cap {

namespace fs = std::filesystem;

void save_checkpoint(const fs::path& dir, const ParamSet& params, const std::string& resolved_config) {
  fs::create_directories(dir);
  std::ofstream manifest(dir / "manifest.txt");
  for (const auto& [name, value] : params.entries()) {
    const std::string file = name + ".ctf";
    ctf::save(dir / file, value);
    manifest << name << ' ' << file << '\n';
  }
  std::ofstream(dir / "config.resolved") << resolved_config;
  if (!manifest) throw FormatError("could not write checkpoint manifest in " + dir.string());
}

ParamSet load_checkpoint(const fs::path& dir) {
  std::ifstream manifest(dir / "manifest.txt");
  if (!manifest) throw FormatError("checkpoint " + dir.string() + " has no manifest.txt");
  ParamSet params;
  std::string line;
  while (std::getline(manifest, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string name, file;
    if (!(ls >> name >> file)) throw FormatError("malformed manifest line: '" + line + "'");
    if (!fs::exists(dir / file))
      throw FormatError("checkpoint tensor '" + name + "' is missing (" + (dir / file).string() + ")");
    try {
      params.add(name, ctf::load(dir / file));
    } catch (const FormatError& e) {
      throw FormatError("checkpoint tensor '" + name + "': " + e.what());
    }
  }
  return params;
}

std::string load_checkpoint_config(const fs::path& dir) {
  std::ifstream in(dir / "config.resolved");
  if (!in) throw FormatError("checkpoint " + dir.string() + " has no config.resolved");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace cap
