#include "medsel/provenance.hpp"

#include <fstream>
#include <iterator>
#include <memory>

#include <openssl/evp.h>

#include "medsel/errors.hpp"

namespace medsel {

std::string_view tool_version() { return MEDSEL_VERSION; }

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

std::string file_sha256(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open " + path.string());
  const std::string bytes(std::istreambuf_iterator<char>(f), {});
  return sha256_hex(bytes);
}

std::string config_hash(const nlohmann::json& config) { return sha256_hex(config.dump()); }

nlohmann::ordered_json provenance(std::string_view command, const nlohmann::json& config, std::uint64_t seed,
                                  const std::optional<std::string>& dataset_hash) {
  nlohmann::ordered_json p;
  p["tool"] = kToolName;
  p["version"] = tool_version();
  p["command"] = command;
  p["config_hash"] = config_hash(config);
  p["seed"] = seed;
  if (dataset_hash) p["dataset_hash"] = *dataset_hash;
  return p;
}

}  // namespace medsel
