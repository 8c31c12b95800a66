#include "cap/ctf.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace cap::ctf {

namespace {

constexpr std::array<char, 4> kMagic = {'C', 'T', 'F', '1'};
constexpr std::uint32_t kMaxRank = 16;

template <typename T>
void put_le(std::ostream& out, T value) {
  static_assert(std::is_unsigned_v<T>);
  std::array<char, sizeof(T)> bytes;
  for (std::size_t i = 0; i < sizeof(T); ++i)
    bytes[i] = static_cast<char>((value >> (8 * i)) & 0xff);
  out.write(bytes.data(), bytes.size());
}

template <typename T>
T get_le(std::istream& in, const char* what) {
  std::array<unsigned char, sizeof(T)> bytes;
  if (!in.read(reinterpret_cast<char*>(bytes.data()), bytes.size()))
    throw FormatError(std::string("CTF: truncated ") + what);
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) value |= static_cast<T>(bytes[i]) << (8 * i);
  return value;
}

}  // namespace

void write(std::ostream& out, const Tensor& t) {
  if (t.empty()) throw ContractViolation("CTF: cannot write an empty tensor");
  out.write(kMagic.data(), kMagic.size());
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
  for (auto d : t.shape()) put_le<std::uint64_t>(out, d);
  for (double v : t.data()) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  if (!out) throw FormatError("CTF: write failed");
}

Tensor read(std::istream& in) {
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic)
    throw FormatError("CTF: bad magic (expected \"CTF1\")");
  const auto rank = get_le<std::uint32_t>(in, "rank");
  if (rank == 0 || rank > kMaxRank) throw FormatError("CTF: invalid rank " + std::to_string(rank));
  Shape shape(rank);
  for (auto& d : shape) {
    d = get_le<std::uint64_t>(in, "dims");
    if (d == 0) throw FormatError("CTF: zero dimension");
  }
  std::vector<double> data(num_elements(shape));
  for (auto& v : data) v = std::bit_cast<double>(get_le<std::uint64_t>(in, "payload"));
  return Tensor(std::move(shape), std::move(data));
}

void save(const std::filesystem::path& path, const Tensor& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("CTF: cannot open " + path.string() + " for writing");
  write(out, t);
}

Tensor load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("CTF: cannot open " + path.string());
  try {
    return read(in);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace cap::ctf
