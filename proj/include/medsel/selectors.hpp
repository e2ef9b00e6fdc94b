#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "medsel/bilstm.hpp"
#include "medsel/numerics.hpp"
#include "medsel/selector_params.hpp"
#include "medsel/tasks.hpp"

namespace medsel {

enum class Strategy { medselect, clinical, random, kmedoids };

std::string_view strategy_name(Strategy s);
Strategy parse_strategy(std::string_view name);  // throws ConfigError
bool is_trainable(Strategy s);
// Width of a selector's per-item input for this pool.
std::size_t selector_input_dim(Strategy s, std::size_t embedding_dim);

// How the learned selectors turn logits into K picks.
enum class SelectionMode { sample, greedy };

// (age / 100, sex, laterality) per item.
Mat64 clinical_inputs(std::span<const ClinicalFeatures> clinical);

SelectionOutcome random_select(const PoolView& pool, std::size_t k, SeededRng& rng);

struct KMedoidsResult {
  std::vector<std::size_t> medoids;  // ascending pool indices
  double cost = 0.0;                 // sum of distances to the nearest medoid
  std::vector<double> cost_history;  // after BUILD, then after every SWAP pass
};

// PAM on Euclidean distances: greedy BUILD, then best-improvement SWAP passes
// until no swap lowers the cost or `max_iters` passes have run. Ties go to the
// lowest index, so the result is deterministic.
KMedoidsResult pam(const Mat64& points, std::size_t k, std::size_t max_iters = 100);

// The rng is accepted for interface uniformity; PAM itself is deterministic.
SelectionOutcome kmedoids_select(const PoolView& pool, std::size_t k, SeededRng& rng, std::size_t max_iters = 100);

Vec64 medselect_forward(const SelectorParams& params, const PoolView& pool, ForwardTape* tape = nullptr);

// Picks k positions from logits. `sample` draws sequentially without
// replacement from the softmax; `greedy` takes the top-k logits. Per-draw
// log-probabilities are the sequential log-softmax terms of the picks. When
// k equals the pool size the set is certain: every index is returned with
// log-probability 0 and no randomness is consumed.
SelectionOutcome select_from_logits(std::span<const double> logits, std::size_t k, SeededRng& rng,
                                    SelectionMode mode = SelectionMode::sample);

// Sum over draws of the sequential log-softmax terms for an ordered pick.
double sequence_logp(std::span<const double> logits, std::span<const std::size_t> indices);

// d(total_logp)/d(logits) for a pick made by select_from_logits.
Vec64 logp_grad_wrt_logits(std::span<const double> logits, const SelectionOutcome& outcome);

SelectionOutcome medselect_select(const SelectorParams& params, const PoolView& pool, std::size_t k, SeededRng& rng,
                                  ForwardTape* tape = nullptr, SelectionMode mode = SelectionMode::sample);
SelectionOutcome clinical_select(const SelectorParams& params, const PoolView& pool, std::size_t k, SeededRng& rng,
                                 ForwardTape* tape = nullptr, SelectionMode mode = SelectionMode::sample);

// Accumulates scale * d(total_logp)/d(params) into `grad`. `tape`, when
// given, must come from the forward pass that produced `outcome`; otherwise
// the forward pass is recomputed. Throws std::logic_error if the outcome was
// drawn under different weights.
void medselect_backward(const SelectorParams& params, const PoolView& pool, const SelectionOutcome& outcome,
                        double scale, std::span<double> grad, const ForwardTape* tape = nullptr);
void clinical_backward(const SelectorParams& params, const PoolView& pool, const SelectionOutcome& outcome,
                       double scale, std::span<double> grad, const ForwardTape* tape = nullptr);
Vec64 medselect_backward(const SelectorParams& params, const PoolView& pool, const SelectionOutcome& outcome,
                         double scale);

// Strategy-generic entry points used by the trainer and evaluation.
Mat64 selector_inputs(Strategy s, const PoolView& pool);
SelectionOutcome select(Strategy s, const SelectorParams* params, const PoolView& pool, std::size_t k, SeededRng& rng,
                        ForwardTape* tape = nullptr, SelectionMode mode = SelectionMode::sample);
void selector_backward(Strategy s, const SelectorParams& params, const PoolView& pool,
                       const SelectionOutcome& outcome, double scale, std::span<double> grad,
                       const ForwardTape* tape = nullptr);

}  // namespace medsel
