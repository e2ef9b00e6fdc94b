#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

#include "medsel/errors.hpp"
#include "medsel/selector_params.hpp"

namespace medsel {
namespace {

constexpr char kMagic[5] = {'S', 'E', 'L', 'W', '1'};
constexpr std::uint32_t kFormatVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint64_t get_le(const std::string& in, std::size_t pos, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  return v;
}

}  // namespace

void save_checkpoint(const SelectorParams& params, const std::filesystem::path& path) {
  std::string out(kMagic, sizeof kMagic);
  put_u32(out, static_cast<std::uint32_t>(params.input_dim()));
  put_u32(out, static_cast<std::uint32_t>(params.hidden()));
  put_u32(out, kFormatVersion);
  for (double v : params.values()) put_u64(out, std::bit_cast<std::uint64_t>(v));
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot open " + path.string() + " for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw DataError("write to " + path.string() + " failed");
}

SelectorParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open checkpoint " + path.string());
  const std::string in(std::istreambuf_iterator<char>(f), {});
  const std::string where = path.string() + ": ";
  if (in.size() < 17 || in.compare(0, 5, kMagic, 5) != 0) throw DataError(where + "not a SELW1 checkpoint");
  const auto input_dim = static_cast<std::uint32_t>(get_le(in, 5, 4));
  const auto hidden = static_cast<std::uint32_t>(get_le(in, 9, 4));
  const auto version = static_cast<std::uint32_t>(get_le(in, 13, 4));
  if (version != kFormatVersion) throw DataError(where + "unsupported checkpoint version " + std::to_string(version));
  if (input_dim == 0 || hidden == 0) throw DataError(where + "zero dimension in header");
  SelectorParams params(input_dim, hidden);
  const std::size_t expected = 17 + 8 * params.size();
  if (in.size() != expected)
    throw DataError(where + "size " + std::to_string(in.size()) + " bytes, header implies " + std::to_string(expected));
  auto values = params.mutable_values();
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] = std::bit_cast<double>(get_le(in, 17 + 8 * i, 8));
    if (!std::isfinite(values[i])) throw DataError(where + "non-finite weight at index " + std::to_string(i));
  }
  return params;
}

}  // namespace medsel
