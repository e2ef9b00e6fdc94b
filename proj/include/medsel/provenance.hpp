#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

namespace medsel {

inline constexpr std::string_view kToolName = "selctl";
std::string_view tool_version();

std::string sha256_hex(std::string_view bytes);
std::string file_sha256(const std::filesystem::path& path);

// Hash of the canonical (key-sorted, compact) JSON text.
std::string config_hash(const nlohmann::json& config);

// {tool, version, command, config_hash, seed[, dataset_hash]}
nlohmann::ordered_json provenance(std::string_view command, const nlohmann::json& config, std::uint64_t seed,
                                  const std::optional<std::string>& dataset_hash = std::nullopt);

}  // namespace medsel
