#pragma once

#include <filesystem>
#include <iosfwd>

#include "cap/tensor.hpp"

// CTF tensor files: "CTF1", u32 rank, rank x u64 dims, then the row-major
// values as little-endian IEEE-754 doubles.

namespace cap::ctf {

void write(std::ostream& out, const Tensor& t);
Tensor read(std::istream& in);

void save(const std::filesystem::path& path, const Tensor& t);
Tensor load(const std::filesystem::path& path);

}  // namespace cap::ctf
