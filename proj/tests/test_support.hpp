#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "medsel/linalg.hpp"
#include "medsel/rng.hpp"
#include "medsel/tasks.hpp"

namespace testing {

inline std::filesystem::path golden(const std::string& name) { return std::filesystem::path(MEDSEL_GOLDEN_DIR) / name; }

// Golden files: '#'-prefixed section titles followed by one value per line.
inline std::map<std::string, std::vector<std::string>> read_sections(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("missing golden file " + path.string());
  std::map<std::string, std::vector<std::string>> out;
  std::string line, section;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      section = line.substr(2);
      out[section];
    } else {
      out[section].push_back(line);
    }
  }
  return out;
}

inline medsel::Mat64 random_matrix(std::size_t rows, std::size_t cols, medsel::SeededRng& rng, double scale = 1.0) {
  medsel::Mat64 m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = scale * rng.normal();
  return m;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("medsel_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// A store and one task built from explicit pool/query rows. Item ids are
// 1.. in pool-then-query order; pool items carry the given clinical features
// (or a default frontal male aged 50).
struct HandTask {
  medsel::ItemStore store;
  medsel::Task task;
};

inline HandTask make_task(const medsel::Mat64& pool, const std::vector<std::uint8_t>& pool_labels,
                          const medsel::Mat64& query, const std::vector<std::uint8_t>& query_labels,
                          std::vector<medsel::ClinicalFeatures> clinical = {}, std::uint64_t task_id = 0) {
  if (clinical.empty()) clinical.assign(pool.rows(), medsel::ClinicalFeatures{50.0, 0, 1});
  std::vector<medsel::LabeledEmbedding> items;
  medsel::TaskSpec spec;
  spec.task_id = task_id;
  std::uint64_t id = 1;
  for (std::size_t i = 0; i < pool.rows(); ++i, ++id) {
    auto row = pool.row(i);
    items.push_back({id, pool_labels[i], clinical[i], pool_labels[i] ? 0u : medsel::kNoFinding, {row.begin(), row.end()}});
    spec.pool_ids.push_back(id);
  }
  for (std::size_t i = 0; i < query.rows(); ++i, ++id) {
    auto row = query.row(i);
    items.push_back({id, query_labels[i], {50.0, 0, 1}, query_labels[i] ? 0u : medsel::kNoFinding, {row.begin(), row.end()}});
    spec.query_ids.push_back(id);
  }
  medsel::ItemStore store(pool.cols(), 1, std::move(items));
  medsel::Task task(store, spec);
  return {std::move(store), std::move(task)};
}

// A small synthetic benchmark: few conditions, short pools, quick to train on.
inline medsel::EpisodeSplit small_benchmark(std::uint64_t seed, std::size_t train = 40, std::size_t val = 10,
                                            std::size_t test = 20, std::size_t pool = 30) {
  medsel::SynthConfig synth;
  synth.dim = 8;
  synth.n_conditions = 3;
  synth.positives_per_condition = 400;
  synth.no_finding_items = 1500;
  medsel::SplitConfig split;
  split.train_tasks = train;
  split.val_tasks = val;
  split.test_tasks = test;
  split.pool_size = pool;
  split.query_size = 30;
  split.holdout_conditions = {2};
  medsel::SeededRng data_rng(medsel::derive_seed(seed, {1}));
  const medsel::ItemStore store = medsel::generate_synthetic_dataset(synth, data_rng);
  medsel::SeededRng split_rng(medsel::derive_seed(seed, {2}));
  return medsel::materialize(store, medsel::build_split(store, split, split_rng));
}

}  // namespace testing
