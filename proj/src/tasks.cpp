#include "medsel/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <unordered_set>

#include "medsel/errors.hpp"

namespace medsel {
namespace {

Vec64 random_direction(std::size_t dim, double norm, SeededRng& rng) {
  Vec64 v(dim);
  double sq = 0.0;
  for (double& x : v) {
    x = rng.normal();
    sq += x * x;
  }
  const double scale = sq > 0.0 ? norm / std::sqrt(sq) : 0.0;
  for (double& x : v) x *= scale;
  return v;
}

// Values are rounded through f32 so an in-memory store and its file copy match.
double as_stored(double v) { return static_cast<double>(static_cast<float>(v)); }

template <typename T>
void shuffle_in_place(std::vector<T>& v, SeededRng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.uniform_index(i)]);
}

// First `count` entries of a seeded partial Fisher-Yates over `ids`.
std::vector<std::uint64_t> draw_ids(const std::vector<std::uint64_t>& ids, std::size_t count,
                                    SeededRng& rng) {
  std::vector<std::uint64_t> pool(ids);
  for (std::size_t i = 0; i < count; ++i) std::swap(pool[i], pool[i + rng.uniform_index(pool.size() - i)]);
  pool.resize(count);
  return pool;
}

struct Partition {
  std::map<std::uint32_t, std::vector<std::uint64_t>> positives;  // by condition
  std::vector<std::uint64_t> negatives;
};

}  // namespace

ItemStore::ItemStore(std::size_t dim, std::uint32_t n_conditions, std::vector<LabeledEmbedding> items)
    : dim_(dim), n_conditions_(n_conditions), items_(std::move(items)) {
  index_.reserve(items_.size());
  for (std::size_t i = 0; i < items_.size(); ++i) {
    const LabeledEmbedding& it = items_[i];
    if (it.embedding.size() != dim_)
      throw DataError("item " + std::to_string(i) + " (id " + std::to_string(it.item_id) + ") has dimension " +
                      std::to_string(it.embedding.size()) + ", dataset declares " + std::to_string(dim_));
    if (it.label > 1) throw DataError("item " + std::to_string(i) + " has label " + std::to_string(it.label));
    if (it.label == 1 && it.condition_id >= n_conditions_)
      throw DataError("positive item " + std::to_string(i) + " has condition " + std::to_string(it.condition_id) +
                      " outside [0, " + std::to_string(n_conditions_) + ")");
    if (!all_finite(it.embedding)) throw DataError("item " + std::to_string(i) + " has a non-finite embedding");
    if (!(it.clinical.age >= 0.0 && it.clinical.age <= 120.0) || it.clinical.sex > 1 || it.clinical.laterality > 1)
      throw DataError("item " + std::to_string(i) + " has invalid clinical features");
    if (!index_.emplace(it.item_id, i).second)
      throw DataError("duplicate item id " + std::to_string(it.item_id));
  }
}

const LabeledEmbedding& ItemStore::find(std::uint64_t item_id) const {
  const auto it = index_.find(item_id);
  if (it == index_.end()) throw DataError("unknown item id " + std::to_string(item_id));
  return items_[it->second];
}

void SynthConfig::validate() const {
  if (dim < 2) throw ConfigError("synthetic.dim must be at least 2");
  if (n_conditions < 1) throw ConfigError("synthetic.n_conditions must be positive");
  if (!(cluster_sigma > 0.0)) throw ConfigError("synthetic.cluster_sigma must be positive (covariance scale)");
  if (!(corruption_fraction >= 0.0 && corruption_fraction <= 1.0))
    throw ConfigError("synthetic.corruption_fraction must lie in [0, 1]");
  if (corruption_fraction > 0.0 && !(corruption_sigma > 0.0))
    throw ConfigError("synthetic.corruption_sigma must be positive (covariance scale)");
  if (shared_offset_norm < 0.0 || condition_offset_norm < 0.0)
    throw ConfigError("synthetic offset norms must be non-negative");
  if (age_sd < 0.0) throw ConfigError("synthetic.age_sd must be non-negative");
  for (double p : {female_prob, frontal_prob_clean, frontal_prob_corrupted})
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("synthetic clinical probabilities must lie in [0, 1]");
}

ItemStore generate_synthetic_dataset(const SynthConfig& config, SeededRng& rng) {
  config.validate();
  const std::size_t d = config.dim;
  const Vec64 shared = random_direction(d, config.shared_offset_norm, rng);
  std::vector<Vec64> means;
  for (std::uint32_t c = 0; c <= config.n_conditions; ++c) {  // last entry: No Finding
    Vec64 m = random_direction(d, config.condition_offset_norm, rng);
    for (std::size_t j = 0; j < d; ++j) m[j] += shared[j];
    means.push_back(std::move(m));
  }

  std::vector<LabeledEmbedding> items;
  items.reserve(config.n_conditions * config.positives_per_condition + config.no_finding_items);
  std::uint64_t next_id = 1;
  auto emit = [&](std::uint32_t condition, std::uint8_t label, const Vec64& mean) {
    LabeledEmbedding it;
    it.item_id = next_id++;
    it.label = label;
    it.condition_id = condition;
    const bool corrupted = rng.bernoulli(config.corruption_fraction);
    it.embedding.resize(d);
    for (std::size_t j = 0; j < d; ++j) {
      const double z = rng.normal();
      it.embedding[j] = as_stored(corrupted ? config.corruption_sigma * z : mean[j] + config.cluster_sigma * z);
    }
    const double age = config.age_mean + (corrupted ? config.corrupted_age_shift : 0.0) + config.age_sd * rng.normal();
    it.clinical.age = as_stored(std::clamp(age, 0.0, 120.0));
    it.clinical.sex = rng.bernoulli(config.female_prob) ? 1 : 0;
    it.clinical.laterality =
        rng.bernoulli(corrupted ? config.frontal_prob_corrupted : config.frontal_prob_clean) ? 1 : 0;
    items.push_back(std::move(it));
  };
  for (std::uint32_t c = 0; c < config.n_conditions; ++c)
    for (std::size_t i = 0; i < config.positives_per_condition; ++i) emit(c, 1, means[c]);
  for (std::size_t i = 0; i < config.no_finding_items; ++i) emit(kNoFinding, 0, means[config.n_conditions]);
  return ItemStore(d, config.n_conditions, std::move(items));
}

std::string_view split_name(SplitName split) {
  switch (split) {
    case SplitName::train:
      return "train";
    case SplitName::val:
      return "val";
    case SplitName::test:
      return "test";
  }
  return "?";
}

void SplitConfig::validate() const {
  if (pool_size == 0 || query_size == 0) throw ConfigError("split.pool_size and split.query_size must be positive");
  if (!(balance > 0.0 && balance < 1.0)) throw ConfigError("split.balance must lie in (0, 1)");
  if (!(train_fraction >= 0.0 && val_fraction >= 0.0 && train_fraction + val_fraction <= 1.0))
    throw ConfigError("split fractions must be non-negative and sum to at most 1");
}

std::size_t positives_for(std::size_t n, double balance) {
  return static_cast<std::size_t>(std::ceil(balance * static_cast<double>(n) - 1e-9));
}

SplitManifest build_split(const ItemStore& store, const SplitConfig& config, SeededRng& rng) {
  config.validate();
  for (std::uint32_t h : config.holdout_conditions)
    if (h >= store.n_conditions())
      throw ConfigError("holdout condition " + std::to_string(h) + " is outside [0, " +
                        std::to_string(store.n_conditions()) + ")");
  std::vector<std::uint32_t> seen_conditions;
  for (std::uint32_t c = 0; c < store.n_conditions(); ++c)
    if (!config.holdout_conditions.count(c)) seen_conditions.push_back(c);
  const std::vector<std::uint32_t> holdouts(config.holdout_conditions.begin(), config.holdout_conditions.end());
  if (seen_conditions.empty() && (config.train_tasks + config.val_tasks > 0 || config.test_tasks > 1))
    throw ConfigError("every condition is held out; no conditions left for meta-training");

  // Stratified item partition: each group is shuffled and cut by fraction.
  std::map<std::uint32_t, std::vector<std::uint64_t>> positives;
  std::vector<std::uint64_t> negatives;
  for (const LabeledEmbedding& it : store.items()) {
    if (it.label == 1)
      positives[it.condition_id].push_back(it.item_id);
    else
      negatives.push_back(it.item_id);
  }
  Partition parts[3];
  auto cut = [&](std::vector<std::uint64_t> ids, auto&& sink) {
    shuffle_in_place(ids, rng);
    const auto n = static_cast<double>(ids.size());
    const auto n_train = static_cast<std::size_t>(std::floor(n * config.train_fraction));
    const auto n_val = static_cast<std::size_t>(std::floor(n * config.val_fraction));
    sink(0, std::vector<std::uint64_t>(ids.begin(), ids.begin() + n_train));
    sink(1, std::vector<std::uint64_t>(ids.begin() + n_train, ids.begin() + n_train + n_val));
    sink(2, std::vector<std::uint64_t>(ids.begin() + n_train + n_val, ids.end()));
  };
  for (auto& [condition, ids] : positives) {
    if (config.holdout_conditions.count(condition)) {
      parts[2].positives[condition] = ids;
      continue;
    }
    const std::uint32_t c = condition;
    cut(ids, [&](int s, std::vector<std::uint64_t> v) { parts[s].positives[c] = std::move(v); });
  }
  cut(negatives, [&](int s, std::vector<std::uint64_t> v) { parts[s].negatives = std::move(v); });

  const std::size_t pool_pos = positives_for(config.pool_size, config.balance);
  const std::size_t query_pos = positives_for(config.query_size, config.balance);
  const std::size_t need_pos = pool_pos + query_pos;
  const std::size_t need_neg = (config.pool_size - pool_pos) + (config.query_size - query_pos);

  const std::uint64_t base_seed = rng.next_u64();
  SplitManifest manifest;
  manifest.holdout_conditions = config.holdout_conditions;
  std::uint64_t next_task_id = 0;

  auto build = [&](SplitName split, std::size_t count, std::vector<TaskSpec>& out) {
    const Partition& part = parts[static_cast<int>(split)];
    const std::size_t n_holdout = (split == SplitName::test && !holdouts.empty()) ? count / 2 : 0;
    auto check = [&](std::uint32_t c) {
      const auto it = part.positives.find(c);
      const std::size_t have = it == part.positives.end() ? 0 : it->second.size();
      if (have < need_pos)
        throw DataError("condition " + std::to_string(c) + " has " + std::to_string(have) + " positives in the " +
                        std::string(split_name(split)) + " split; each task needs " + std::to_string(need_pos));
    };
    if (count > n_holdout)
      for (std::uint32_t c : seen_conditions) check(c);
    if (n_holdout > 0)
      for (std::uint32_t c : holdouts) check(c);
    if (count > 0 && part.negatives.size() < need_neg)
      throw DataError("No Finding has " + std::to_string(part.negatives.size()) + " items in the " +
                      std::string(split_name(split)) + " split; each task needs " + std::to_string(need_neg));

    for (std::size_t i = 0; i < count; ++i) {
      SeededRng trng(derive_seed(base_seed, {static_cast<std::uint64_t>(split), i}));
      TaskSpec spec;
      spec.task_id = next_task_id++;
      spec.split = split;
      spec.holdout = i >= count - n_holdout;
      const auto& choices = spec.holdout ? holdouts : seen_conditions;
      spec.condition = choices[trng.uniform_index(choices.size())];
      const std::vector<std::uint64_t> pos = draw_ids(part.positives.at(spec.condition), need_pos, trng);
      const std::vector<std::uint64_t> neg = draw_ids(part.negatives, need_neg, trng);
      spec.pool_ids.assign(pos.begin(), pos.begin() + pool_pos);
      spec.pool_ids.insert(spec.pool_ids.end(), neg.begin(), neg.begin() + (config.pool_size - pool_pos));
      spec.query_ids.assign(pos.begin() + pool_pos, pos.end());
      spec.query_ids.insert(spec.query_ids.end(), neg.begin() + (config.pool_size - pool_pos), neg.end());
      // Presentation order is part of the episode and recorded in the manifest.
      shuffle_in_place(spec.pool_ids, trng);
      shuffle_in_place(spec.query_ids, trng);
      out.push_back(std::move(spec));
    }
  };
  build(SplitName::train, config.train_tasks, manifest.train);
  build(SplitName::val, config.val_tasks, manifest.val);
  build(SplitName::test, config.test_tasks, manifest.test);
  return manifest;
}

Task::Task(const ItemStore& store, const TaskSpec& spec) : spec_(spec) {
  std::unordered_set<std::uint64_t> seen;
  for (std::uint64_t id : spec.pool_ids) {
    if (!seen.insert(id).second) throw DataError("task " + std::to_string(spec.task_id) + " repeats item " + std::to_string(id));
    const LabeledEmbedding& it = store.find(id);
    pool_embeddings_.append_row(it.embedding);
    pool_clinical_.push_back(it.clinical);
    pool_labels_.push_back(it.label);
  }
  for (std::uint64_t id : spec.query_ids) {
    if (!seen.insert(id).second)
      throw DataError("task " + std::to_string(spec.task_id) + " shares item " + std::to_string(id) +
                      " between pool and query");
    const LabeledEmbedding& it = store.find(id);
    query_embeddings_.append_row(it.embedding);
    query_labels_.push_back(it.label);
  }
  if (pool_embeddings_.rows() == 0 || query_embeddings_.rows() == 0)
    throw DataError("task " + std::to_string(spec.task_id) + " has an empty pool or query set");
}

std::vector<std::uint8_t> LabelingOracle::reveal(std::span<const std::size_t> indices) {
  std::vector<std::uint8_t> labels;
  labels.reserve(indices.size());
  for (std::size_t i : indices) labels.push_back(task_.pool_labels_.at(i));
  reveals_ += indices.size();
  return labels;
}

std::vector<Task> materialize(const ItemStore& store, std::span<const TaskSpec> specs) {
  std::vector<Task> tasks;
  tasks.reserve(specs.size());
  for (const TaskSpec& s : specs) tasks.emplace_back(store, s);
  return tasks;
}

EpisodeSplit materialize(const ItemStore& store, const SplitManifest& manifest) {
  EpisodeSplit split;
  split.meta_train = materialize(store, manifest.train);
  split.meta_val = materialize(store, manifest.val);
  split.meta_test = materialize(store, manifest.test);
  split.holdout_conditions = manifest.holdout_conditions;
  return split;
}

}  // namespace medsel
