#include "medsel/trainer.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>
#include <string>

#include "medsel/errors.hpp"
#include "medsel/linalg.hpp"
#include "medsel/metrics.hpp"
#include "medsel/parallel.hpp"
#include "medsel/predictor.hpp"

namespace medsel {
namespace {

// Stream ids under the run seed.
constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kOrderStream = 2;
constexpr std::uint64_t kEpisodeStream = 3;
constexpr std::uint64_t kValidationStream = 4;

// Episodes per gradient partial sum. The batch gradient is the ordered sum of
// chunk partials, so the result does not depend on the worker count.
constexpr std::size_t kChunk = 8;

std::string batch_ids(std::span<const EpisodeResult> batch) {
  std::string s;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(batch[i].task_id);
  }
  return s;
}

double l2_norm(std::span<const double> g) {
  KahanSum s;
  for (double v : g) s.add(v * v);
  return std::sqrt(s.value());
}

void finish_gradient(Vec64& grad, const TrainConfig& config, std::span<const EpisodeResult> batch) {
  if (!all_finite(grad))
    throw NumericalError("non-finite policy gradient for batch of tasks [" + batch_ids(batch) + "]");
  if (config.clip_norm > 0.0) {
    const double norm = l2_norm(grad);
    if (norm > config.clip_norm)
      for (double& v : grad) v *= config.clip_norm / norm;
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
    throw ConfigError("learning_rate must be finite and non-negative");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (k == 0) throw ConfigError("k must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    throw ConfigError("adam betas must lie in [0, 1)");
  if (!(adam_eps > 0.0)) throw ConfigError("adam_eps must be positive");
  if (val_every == 0) throw ConfigError("val_every must be positive");
  if (hidden == 0) throw ConfigError("hidden must be positive");
  if (baseline_draws == 0) throw ConfigError("baseline_draws must be positive");
  if (!(clip_norm >= 0.0)) throw ConfigError("clip_norm must be non-negative");
  if (workers == 0) throw ConfigError("workers must be positive");
}

AdamState AdamState::for_params(const SelectorParams& params) {
  AdamState s;
  s.m.assign(params.size(), 0.0);
  s.v.assign(params.size(), 0.0);
  return s;
}

double selection_reward(const Task& task, std::span<const std::size_t> indices, LabelingOracle& oracle) {
  const auto labels = oracle.reveal(indices);
  const Prototypes protos = fit(make_support(task.pool().embeddings, indices, labels));
  return auroc(score_query(protos, task.query_embeddings(), task.query_labels()));
}

EpisodeResult run_episode(const SelectorParams* params, const Task& task, std::size_t k, const SeededRng& rng,
                          Strategy strategy, ForwardTape* tape, std::size_t baseline_draws, SelectionMode mode) {
  EpisodeResult r;
  r.task_id = task.id();
  LabelingOracle oracle(task);
  SeededRng policy_rng = rng.child(1);
  r.outcome = select(strategy, params, task.pool(), k, policy_rng, tape, mode);
  r.reward = selection_reward(task, r.outcome.indices, oracle);
  if (is_trainable(strategy)) {
    SeededRng baseline_rng = rng.child(2);
    double b = 0.0;
    for (std::size_t d = 0; d < baseline_draws; ++d) {
      SeededRng draw_rng = baseline_rng.child(d);
      const SelectionOutcome base = random_select(task.pool(), k, draw_rng);
      b += selection_reward(task, base.indices, oracle);
    }
    r.baseline = b / static_cast<double>(baseline_draws);
    r.advantage = r.reward - *r.baseline;
  }
  r.reveals = oracle.reveals();
  return r;
}

Vec64 policy_gradient(const SelectorParams& params, Strategy strategy, std::span<const EpisodeResult> batch,
                      std::span<const Task* const> tasks, std::size_t workers) {
  if (batch.size() != tasks.size()) throw std::invalid_argument("policy_gradient: batch and task counts differ");
  Vec64 grad(params.size(), 0.0);
  if (batch.empty()) return grad;
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  const std::size_t n_chunks = (batch.size() + kChunk - 1) / kChunk;
  std::vector<Vec64> partial(n_chunks);
  parallel_for(n_chunks, workers, [&](std::size_t c) {
    partial[c].assign(params.size(), 0.0);
    const std::size_t end = std::min(batch.size(), (c + 1) * kChunk);
    for (std::size_t i = c * kChunk; i < end; ++i)
      selector_backward(strategy, params, tasks[i]->pool(), batch[i].outcome, batch[i].advantage * inv_b, partial[c]);
  });
  for (const Vec64& p : partial)
    for (std::size_t j = 0; j < grad.size(); ++j) grad[j] += p[j];
  return grad;
}

void adam_ascent(SelectorParams& params, AdamState& adam, std::span<const double> grad, const TrainConfig& config) {
  if (grad.size() != params.size() || adam.m.size() != params.size() || adam.v.size() != params.size())
    throw std::invalid_argument("adam_ascent: size mismatch");
  adam.step += 1;
  const double t = static_cast<double>(adam.step);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  auto theta = params.mutable_values();
  for (std::size_t j = 0; j < theta.size(); ++j) {
    adam.m[j] = config.beta1 * adam.m[j] + (1.0 - config.beta1) * grad[j];
    adam.v[j] = config.beta2 * adam.v[j] + (1.0 - config.beta2) * grad[j] * grad[j];
    const double mhat = adam.m[j] / c1;
    const double vhat = adam.v[j] / c2;
    theta[j] += config.learning_rate * mhat / (std::sqrt(vhat) + config.adam_eps);
  }
}

void policy_gradient_step(SelectorParams& params, AdamState& adam, std::span<const EpisodeResult> batch,
                          std::span<const Task* const> tasks, const TrainConfig& config, Strategy strategy) {
  Vec64 grad = policy_gradient(params, strategy, batch, tasks, config.workers);
  finish_gradient(grad, config, batch);
  adam_ascent(params, adam, grad, config);
}

double meta_validate(const SelectorParams& params, Strategy strategy, std::span<const Task> tasks, std::size_t k,
                     std::uint64_t seed, SelectionMode mode, std::size_t workers) {
  if (tasks.empty()) throw std::invalid_argument("meta_validate: no tasks");
  Vec64 rewards(tasks.size());
  parallel_for(tasks.size(), workers, [&](std::size_t i) {
    const SeededRng rng(derive_seed(seed, {i}));
    LabelingOracle oracle(tasks[i]);
    SeededRng policy_rng = rng.child(1);
    const SelectionOutcome out = select(strategy, &params, tasks[i].pool(), k, policy_rng, nullptr, mode);
    rewards[i] = selection_reward(tasks[i], out.indices, oracle);
  });
  return mean(rewards);
}

TrainResult train(const TrainConfig& config, std::span<const Task> meta_train, std::span<const Task> meta_val,
                  Strategy strategy, std::size_t embedding_dim, const TrainHooks& hooks) {
  config.validate();
  if (!is_trainable(strategy))
    throw ConfigError("strategy " + std::string(strategy_name(strategy)) + " has no trainable weights");
  for (const auto* split : {&meta_train, &meta_val})
    for (const Task& t : *split)
      if (t.pool_size() < config.k)
        throw ConfigError("k=" + std::to_string(config.k) + " exceeds pool size " + std::to_string(t.pool_size()) +
                          " of task " + std::to_string(t.id()));

  SeededRng init_rng(derive_seed(config.seed, {kInitStream}));
  SelectorParams params =
      SelectorParams::initialized(selector_input_dim(strategy, embedding_dim), config.hidden, init_rng);
  AdamState adam = AdamState::for_params(params);
  const std::uint64_t val_seed = derive_seed(config.seed, {kValidationStream});
  auto validate = [&] {
    return meta_validate(params, strategy, meta_val, config.k, val_seed, config.validation_mode, config.workers);
  };

  TrainResult result{params, params, {}, {}, {}, {}, 0};
  if (!meta_val.empty()) {
    result.initial_val = validate();
    result.best_val = result.initial_val;
  }

  const std::size_t n = meta_train.size();
  const std::size_t batches_per_epoch = (n + config.batch_size - 1) / config.batch_size;
  const std::uint64_t total_updates = static_cast<std::uint64_t>(batches_per_epoch) * config.epochs;
  std::uint64_t step = 0;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    SeededRng order_rng(derive_seed(config.seed, {kOrderStream, epoch}));
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[order_rng.uniform_index(i)]);

    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const auto t0 = std::chrono::steady_clock::now();
      const std::size_t bsz = std::min(config.batch_size, n - start);
      const double inv_b = 1.0 / static_cast<double>(bsz);
      std::vector<EpisodeResult> episodes(bsz);
      std::vector<const Task*> tasks(bsz);
      for (std::size_t i = 0; i < bsz; ++i) tasks[i] = &meta_train[order[start + i]];

      // Episodes and their backward passes run together so each tape is used
      // while it is alive.
      const std::size_t n_chunks = (bsz + kChunk - 1) / kChunk;
      std::vector<Vec64> partial(n_chunks);
      parallel_for(n_chunks, config.workers, [&](std::size_t c) {
        partial[c].assign(params.size(), 0.0);
        const std::size_t end = std::min(bsz, (c + 1) * kChunk);
        for (std::size_t i = c * kChunk; i < end; ++i) {
          const SeededRng rng(derive_seed(config.seed, {kEpisodeStream, step, i}));
          ForwardTape tape;
          episodes[i] = run_episode(&params, *tasks[i], config.k, rng, strategy, &tape, config.baseline_draws);
          selector_backward(strategy, params, tasks[i]->pool(), episodes[i].outcome, episodes[i].advantage * inv_b,
                            partial[c], &tape);
        }
      });
      Vec64 grad(params.size(), 0.0);
      for (const Vec64& p : partial)
        for (std::size_t j = 0; j < grad.size(); ++j) grad[j] += p[j];
      partial.clear();

      try {
        finish_gradient(grad, config, episodes);
      } catch (const NumericalError&) {
        if (hooks.dump_dir) {
          std::filesystem::create_directories(*hooks.dump_dir);
          save_checkpoint(params, *hooks.dump_dir / "nonfinite_weights.selw");
          std::ofstream(*hooks.dump_dir / "nonfinite_batch.txt") << batch_ids(episodes) << '\n';
        }
        throw;
      }
      adam_ascent(params, adam, grad, config);
      ++step;

      TrainLogEntry entry;
      entry.step = step;
      entry.epoch = epoch;
      KahanSum sr, sb, sa;
      for (const auto& e : episodes) {
        sr.add(e.reward);
        sb.add(*e.baseline);
        sa.add(e.advantage);
      }
      entry.mean_reward = sr.value() * inv_b;
      entry.mean_baseline = sb.value() * inv_b;
      entry.mean_advantage = sa.value() * inv_b;
      if (!meta_val.empty() && (step % config.val_every == 0 || step == total_updates)) {
        entry.val_reward = validate();
        if (*entry.val_reward > *result.best_val) {
          result.best_val = entry.val_reward;
          result.best_step = step;
          result.best = params;
        }
      }
      if (hooks.record_wall_time)
        entry.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      result.log.push_back(entry);
      if (hooks.on_log) hooks.on_log(entry);
    }
  }
  result.final_params = params;
  if (meta_val.empty()) result.best = params;
  result.adam = std::move(adam);
  return result;
}

namespace {

constexpr char kAdamMagic[5] = {'S', 'E', 'L', 'A', '1'};

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint64_t get_u64(const std::string& in, std::size_t pos) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  return v;
}

}  // namespace

void save_adam_state(const AdamState& adam, const std::filesystem::path& path) {
  std::string out(kAdamMagic, sizeof kAdamMagic);
  put_u64(out, adam.step);
  put_u64(out, adam.m.size());
  for (double v : adam.m) put_u64(out, std::bit_cast<std::uint64_t>(v));
  for (double v : adam.v) put_u64(out, std::bit_cast<std::uint64_t>(v));
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot open " + path.string() + " for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw DataError("write to " + path.string() + " failed");
}

AdamState load_adam_state(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open optimizer state " + path.string());
  const std::string in(std::istreambuf_iterator<char>(f), {});
  const std::string where = path.string() + ": ";
  if (in.size() < 21 || in.compare(0, 5, kAdamMagic, 5) != 0) throw DataError(where + "not a SELA1 file");
  AdamState s;
  s.step = get_u64(in, 5);
  const std::uint64_t n = get_u64(in, 13);
  if (in.size() != 21 + 16 * n) throw DataError(where + "size does not match header");
  s.m.resize(n);
  s.v.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    s.m[i] = std::bit_cast<double>(get_u64(in, 21 + 8 * i));
    s.v[i] = std::bit_cast<double>(get_u64(in, 21 + 8 * (n + i)));
  }
  return s;
}

}  // namespace medsel
