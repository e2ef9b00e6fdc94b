#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "medsel/linalg.hpp"
#include "medsel/rng.hpp"

namespace medsel {

struct ClinicalFeatures {
  double age = 0.0;              // years, [0, 120]
  std::uint8_t sex = 0;          // 1 = female, 0 = male
  std::uint8_t laterality = 1;   // 1 = frontal, 0 = lateral
  friend bool operator==(const ClinicalFeatures&, const ClinicalFeatures&) = default;
};

// Negatives are "No Finding" items shared by every condition.
inline constexpr std::uint32_t kNoFinding = 0xFFFFFFFFu;

struct LabeledEmbedding {
  std::uint64_t item_id = 0;
  std::uint8_t label = 0;
  ClinicalFeatures clinical;
  std::uint32_t condition_id = kNoFinding;
  Vec64 embedding;
};

// Read-only collection of items with a uniform embedding dimension.
class ItemStore {
 public:
  ItemStore(std::size_t dim, std::uint32_t n_conditions, std::vector<LabeledEmbedding> items);

  std::size_t dim() const { return dim_; }
  std::uint32_t n_conditions() const { return n_conditions_; }
  std::span<const LabeledEmbedding> items() const { return items_; }
  std::size_t size() const { return items_.size(); }

  // Throws DataError for an unknown id.
  const LabeledEmbedding& find(std::uint64_t item_id) const;
  bool contains(std::uint64_t item_id) const { return index_.count(item_id) != 0; }

 private:
  std::size_t dim_;
  std::uint32_t n_conditions_;
  std::vector<LabeledEmbedding> items_;
  std::unordered_map<std::uint64_t, std::size_t> index_;
};

// Synthetic stand-in for pretrained image embeddings. Clean positives of
// condition c are drawn around shared + offset_c, clean negatives around
// shared + offset_nf. A fraction of items is "corrupted": the embedding is
// replaced with isotropic noise around the origin. Corrupted items are more
// often lateral views and skew older, which gives the clinical features
// something to correlate with.
struct SynthConfig {
  std::size_t dim = 16;
  std::uint32_t n_conditions = 6;
  std::size_t positives_per_condition = 1000;
  std::size_t no_finding_items = 5000;
  double shared_offset_norm = 20.0;
  double condition_offset_norm = 10.0;
  double cluster_sigma = 5.0;
  double corruption_fraction = 0.5;
  double corruption_sigma = 5.0;
  double age_mean = 55.0;
  double age_sd = 18.0;
  double corrupted_age_shift = 10.0;
  double female_prob = 0.45;
  double frontal_prob_clean = 0.9;
  double frontal_prob_corrupted = 0.3;

  // Throws ConfigError.
  void validate() const;
};

ItemStore generate_synthetic_dataset(const SynthConfig& config, SeededRng& rng);

// Little-endian "SELX1" embedding file.
void save_embedding_file(const ItemStore& store, const std::filesystem::path& path);
ItemStore load_embedding_file(const std::filesystem::path& path);

enum class SplitName { train, val, test };
std::string_view split_name(SplitName split);

// One task as stored in a manifest: pool ids are in presentation order.
struct TaskSpec {
  std::uint64_t task_id = 0;
  SplitName split = SplitName::train;
  std::uint32_t condition = 0;
  bool holdout = false;
  std::vector<std::uint64_t> pool_ids;
  std::vector<std::uint64_t> query_ids;
  friend bool operator==(const TaskSpec&, const TaskSpec&) = default;
};

struct SplitConfig {
  std::size_t train_tasks = 600;
  std::size_t val_tasks = 100;
  std::size_t test_tasks = 200;
  std::size_t pool_size = 100;
  std::size_t query_size = 100;
  double balance = 0.5;
  std::set<std::uint32_t> holdout_conditions{4, 5};
  // Share of each non-holdout item group assigned to train / val / test.
  // Holdout-condition positives always go to test.
  double train_fraction = 0.6;
  double val_fraction = 0.15;

  void validate() const;
};

struct SplitManifest {
  std::vector<TaskSpec> train, val, test;
  std::set<std::uint32_t> holdout_conditions;
  friend bool operator==(const SplitManifest&, const SplitManifest&) = default;
};

// Positive count for a set of n items at the given balance.
std::size_t positives_for(std::size_t n, double balance);

SplitManifest build_split(const ItemStore& store, const SplitConfig& config, SeededRng& rng);

// What a selector may see: embeddings and clinical features, no labels.
struct PoolView {
  const Mat64& embeddings;
  std::span<const ClinicalFeatures> clinical;
  std::size_t size() const { return embeddings.rows(); }
};

// A materialised episode. Pool labels are private; they can only be read
// through a LabelingOracle.
class Task {
 public:
  Task(const ItemStore& store, const TaskSpec& spec);

  std::uint64_t id() const { return spec_.task_id; }
  std::uint32_t condition() const { return spec_.condition; }
  bool holdout() const { return spec_.holdout; }
  const TaskSpec& spec() const { return spec_; }

  std::size_t pool_size() const { return pool_embeddings_.rows(); }
  PoolView pool() const { return {pool_embeddings_, pool_clinical_}; }
  std::uint64_t pool_item_id(std::size_t index) const { return spec_.pool_ids.at(index); }

  const Mat64& query_embeddings() const { return query_embeddings_; }
  std::span<const std::uint8_t> query_labels() const { return query_labels_; }

 private:
  friend class LabelingOracle;
  TaskSpec spec_;
  Mat64 pool_embeddings_;
  std::vector<ClinicalFeatures> pool_clinical_;
  std::vector<std::uint8_t> pool_labels_;
  Mat64 query_embeddings_;
  std::vector<std::uint8_t> query_labels_;
};

// Reveals pool labels for chosen indices and counts every reveal.
class LabelingOracle {
 public:
  explicit LabelingOracle(const Task& task) : task_(task) {}
  std::vector<std::uint8_t> reveal(std::span<const std::size_t> indices);
  std::size_t reveals() const { return reveals_; }

 private:
  const Task& task_;
  std::size_t reveals_ = 0;
};

struct EpisodeSplit {
  std::vector<Task> meta_train, meta_val, meta_test;
  std::set<std::uint32_t> holdout_conditions;
};

std::vector<Task> materialize(const ItemStore& store, std::span<const TaskSpec> specs);
EpisodeSplit materialize(const ItemStore& store, const SplitManifest& manifest);

}  // namespace medsel
