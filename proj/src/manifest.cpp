#include "medsel/manifest.hpp"

#include <fstream>
#include <string>

#include "medsel/errors.hpp"

namespace medsel {

nlohmann::ordered_json task_to_json(const TaskSpec& spec) {
  nlohmann::ordered_json j;
  j["task_id"] = spec.task_id;
  j["split"] = split_name(spec.split);
  j["condition"] = spec.condition;
  j["holdout"] = spec.holdout;
  j["pool"] = spec.pool_ids;
  j["query"] = spec.query_ids;
  return j;
}

TaskSpec task_from_json(const nlohmann::json& j) {
  TaskSpec spec;
  spec.task_id = j.at("task_id").get<std::uint64_t>();
  const std::string split = j.at("split").get<std::string>();
  if (split == "train")
    spec.split = SplitName::train;
  else if (split == "val")
    spec.split = SplitName::val;
  else if (split == "test")
    spec.split = SplitName::test;
  else
    throw DataError("unknown split '" + split + "'");
  spec.condition = j.at("condition").get<std::uint32_t>();
  spec.holdout = j.at("holdout").get<bool>();
  spec.pool_ids = j.at("pool").get<std::vector<std::uint64_t>>();
  spec.query_ids = j.at("query").get<std::vector<std::uint64_t>>();
  return spec;
}

void write_manifest(const std::filesystem::path& path, std::span<const TaskSpec> tasks,
                    const nlohmann::json& header) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << nlohmann::json{{"header", header}}.dump() << '\n';
  for (const TaskSpec& t : tasks) out << task_to_json(t).dump() << '\n';
  if (!out) throw DataError("write to " + path.string() + " failed");
}

ManifestFile read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest " + path.string());
  ManifestFile file;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      if (line_no == 1 && j.contains("header")) {
        file.header = j.at("header");
        continue;
      }
      file.tasks.push_back(task_from_json(j));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return file;
}

}  // namespace medsel
