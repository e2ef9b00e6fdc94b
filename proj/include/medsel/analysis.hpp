#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "medsel/selectors.hpp"
#include "medsel/tasks.hpp"

namespace medsel {

// What one strategy picked on one task, and what it earned.
struct SelectionRecord {
  std::uint64_t task_id = 0;
  std::uint32_t condition = 0;
  bool holdout = false;
  std::vector<std::uint64_t> item_ids;
  double frontal_fraction = 0.0;
  double female_fraction = 0.0;
  double mean_age = 0.0;
  double pairwise_mean = 0.0;  // 0 when fewer than two items are selected
  double pairwise_max = 0.0;
  std::vector<double> pairwise;  // all pairwise L2 distances of the selection
  std::vector<double> ages;
  double reward = 0.0;
};

struct SelectionProfile {
  Strategy strategy = Strategy::random;
  std::size_t k = 0;
  std::vector<SelectionRecord> records;  // in task order
};

// Per-task rng for evaluation: the same (seed, k, task id) always draws the
// same selection, whatever the worker count.
SeededRng evaluation_rng(std::uint64_t seed, std::size_t k, std::uint64_t task_id);

SelectionProfile profile_selections(Strategy strategy, const SelectorParams* params, std::span<const Task> tasks,
                                    std::size_t k, std::uint64_t seed, SelectionMode mode = SelectionMode::sample,
                                    std::size_t workers = 1);

struct BootstrapCI {
  double estimate = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

// Percentile bootstrap of the mean, resampling tasks with replacement.
BootstrapCI bootstrap_mean_ci(std::span<const double> values, std::size_t resamples, std::uint64_t seed,
                              double level = 0.95);
// Same for the mean of the paired differences a[i] - b[i].
BootstrapCI paired_bootstrap_ci(std::span<const double> a, std::span<const double> b, std::size_t resamples,
                                std::uint64_t seed, double level = 0.95);

enum class TaskGroup { nonholdout, holdout };
std::string_view group_name(TaskGroup g);

struct KSummary {
  std::size_t k = 0;
  Strategy strategy = Strategy::random;
  TaskGroup group = TaskGroup::nonholdout;
  std::size_t n_tasks = 0;
  BootstrapCI auroc;
};

struct Improvement {
  std::size_t k = 0;
  TaskGroup group = TaskGroup::nonholdout;
  Strategy subject = Strategy::medselect;
  Strategy reference = Strategy::kmedoids;
  std::size_t n_tasks = 0;
  BootstrapCI difference;  // mean of subject - reference over paired tasks
};

struct TTestRow {
  std::size_t k = 0;
  TaskGroup group = TaskGroup::nonholdout;
  std::string feature;  // frontal, female, age, pairwise_l2, pairwise_l2_max
  Strategy subject = Strategy::medselect;
  Strategy reference = Strategy::random;
  double subject_mean = 0.0;
  double reference_mean = 0.0;
  // Empty when both samples are constant and the statistic is undefined.
  std::optional<double> t, p, dof;
};

// Per-task W1 distances of one strategy's pairwise-distance and age samples
// to the random strategy's samples on the same task.
struct WassersteinRow {
  std::size_t k = 0;
  std::uint64_t task_id = 0;
  bool holdout = false;
  std::string comparison;  // "<strategy>_vs_random" or "random_vs_random_control"
  std::optional<double> pairwise_l2;  // empty when k < 2
  double age = 0.0;
};

struct WassersteinSummary {
  std::size_t k = 0;
  TaskGroup group = TaskGroup::nonholdout;
  std::string comparison;
  std::size_t n_tasks = 0;
  std::optional<double> mean_pairwise_l2;
  double mean_age = 0.0;
};

struct ComparisonReport {
  std::vector<KSummary> summaries;
  std::vector<Improvement> improvements;
  std::vector<TTestRow> ttests;
  std::vector<WassersteinRow> wasserstein;
  std::vector<WassersteinSummary> wasserstein_summaries;
};

struct CompareOptions {
  Strategy subject = Strategy::medselect;
  // Strategies the subject is compared with; empty means every other
  // strategy present at that k.
  std::vector<Strategy> references;
  std::size_t bootstrap_resamples = 10000;
  std::uint64_t bootstrap_seed = 0;
  double level = 0.95;
};

// `profiles` holds one profile per (strategy, k); all profiles for a k must
// cover the same tasks in the same order. Paired improvements and t-tests
// compare the subject with every other strategy at that k. W1 rows need a
// random profile at that k; `random_control` supplies a second random
// profile per k, drawn with a different seed, for the control comparison.
ComparisonReport compare(std::span<const SelectionProfile> profiles, std::span<const SelectionProfile> random_control,
                         const CompareOptions& options);

}  // namespace medsel
