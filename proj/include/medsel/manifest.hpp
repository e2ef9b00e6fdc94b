#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include <json.hpp>

#include "medsel/tasks.hpp"

namespace medsel {

// Task manifests are JSON lines. The first line is {"header": {...}} with
// provenance; every following line is one task.
nlohmann::ordered_json task_to_json(const TaskSpec& spec);
TaskSpec task_from_json(const nlohmann::json& j);

void write_manifest(const std::filesystem::path& path, std::span<const TaskSpec> tasks,
                    const nlohmann::json& header);

struct ManifestFile {
  nlohmann::json header;
  std::vector<TaskSpec> tasks;
};

ManifestFile read_manifest(const std::filesystem::path& path);

}  // namespace medsel
