#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "medsel/selectors.hpp"
#include "medsel/tasks.hpp"

namespace medsel {

struct TrainConfig {
  double learning_rate = 1e-4;
  std::size_t batch_size = 64;
  std::size_t epochs = 5;
  std::size_t k = 10;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::size_t val_every = 10;  // updates between validations
  std::uint64_t seed = 0;
  std::size_t hidden = 256;
  std::size_t baseline_draws = 1;  // random selections averaged into b
  double clip_norm = 0.0;          // 0 disables gradient-norm clipping
  SelectionMode validation_mode = SelectionMode::sample;
  std::size_t workers = 1;

  void validate() const;  // throws ConfigError
};

struct EpisodeResult {
  std::uint64_t task_id = 0;
  double reward = 0.0;
  std::optional<double> baseline;  // only for trainable strategies
  double advantage = 0.0;
  SelectionOutcome outcome;
  std::size_t reveals = 0;  // labels read through the oracle
};

struct AdamState {
  Vec64 m, v;
  std::uint64_t step = 0;
  static AdamState for_params(const SelectorParams& params);
};

// Reveal labels of the selection, fit prototypes, score the query set, AUROC.
double selection_reward(const Task& task, std::span<const std::size_t> indices, LabelingOracle& oracle);

// One episode. Trainable strategies also get a baseline from independent
// random selections on the same task; the policy and baseline use separate
// child streams of `rng`.
EpisodeResult run_episode(const SelectorParams* params, const Task& task, std::size_t k, const SeededRng& rng,
                          Strategy strategy, ForwardTape* tape = nullptr, std::size_t baseline_draws = 1,
                          SelectionMode mode = SelectionMode::sample);

// Mean over the batch of advantage * d(log P(selection))/d(params).
// Recomputes forward passes; `tasks[i]` must be the task of `batch[i]`.
Vec64 policy_gradient(const SelectorParams& params, Strategy strategy, std::span<const EpisodeResult> batch,
                      std::span<const Task* const> tasks, std::size_t workers = 1);

// Gradient-ascent Adam update.
void adam_ascent(SelectorParams& params, AdamState& adam, std::span<const double> grad, const TrainConfig& config);

// policy_gradient + finite check + optional clipping + adam_ascent.
void policy_gradient_step(SelectorParams& params, AdamState& adam, std::span<const EpisodeResult> batch,
                          std::span<const Task* const> tasks, const TrainConfig& config, Strategy strategy);

// Mean reward over `tasks`; every call with the same seed sees the same draws.
double meta_validate(const SelectorParams& params, Strategy strategy, std::span<const Task> tasks, std::size_t k,
                     std::uint64_t seed, SelectionMode mode = SelectionMode::sample, std::size_t workers = 1);

struct TrainLogEntry {
  std::uint64_t step = 0;
  std::size_t epoch = 0;
  double mean_reward = 0.0;
  double mean_baseline = 0.0;
  double mean_advantage = 0.0;
  std::optional<double> val_reward;
  std::optional<double> wall_ms;
};

struct TrainResult {
  SelectorParams best;
  SelectorParams final_params;
  AdamState adam;
  std::vector<TrainLogEntry> log;
  std::optional<double> initial_val;
  std::optional<double> best_val;
  std::uint64_t best_step = 0;
};

struct TrainHooks {
  std::function<void(const TrainLogEntry&)> on_log;
  bool record_wall_time = false;
  // Where to write weights and batch ids if a non-finite gradient aborts training.
  std::optional<std::filesystem::path> dump_dir;
};

TrainResult train(const TrainConfig& config, std::span<const Task> meta_train, std::span<const Task> meta_val,
                  Strategy strategy, std::size_t embedding_dim, const TrainHooks& hooks = {});

void save_adam_state(const AdamState& adam, const std::filesystem::path& path);
AdamState load_adam_state(const std::filesystem::path& path);

}  // namespace medsel
