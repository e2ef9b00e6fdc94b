#include "medsel/selectors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "medsel/errors.hpp"

namespace medsel {
namespace {

void check_k(std::size_t k, std::size_t n, const char* who) {
  if (k == 0) throw std::invalid_argument(std::string(who) + ": k must be positive");
  if (k > n)
    throw std::invalid_argument(std::string(who) + ": k=" + std::to_string(k) + " exceeds pool size " +
                                std::to_string(n));
}

SelectionOutcome take_all(std::size_t n) {
  SelectionOutcome out;
  out.indices.resize(n);
  std::iota(out.indices.begin(), out.indices.end(), std::size_t{0});
  out.per_draw_logp.assign(n, 0.0);
  return out;
}

void check_outcome(const SelectorParams& params, const SelectionOutcome& outcome) {
  if (outcome.params_version != params.version())
    throw std::logic_error("selector backward: outcome was drawn under different selector weights");
}

}  // namespace

std::string_view strategy_name(Strategy s) {
  switch (s) {
    case Strategy::medselect:
      return "medselect";
    case Strategy::clinical:
      return "clinical";
    case Strategy::random:
      return "random";
    case Strategy::kmedoids:
      return "kmedoids";
  }
  return "?";
}

Strategy parse_strategy(std::string_view name) {
  for (Strategy s : {Strategy::medselect, Strategy::clinical, Strategy::random, Strategy::kmedoids})
    if (strategy_name(s) == name) return s;
  throw ConfigError("unknown strategy '" + std::string(name) + "' (expected medselect, clinical, random or kmedoids)");
}

bool is_trainable(Strategy s) { return s == Strategy::medselect || s == Strategy::clinical; }

std::size_t selector_input_dim(Strategy s, std::size_t embedding_dim) {
  return s == Strategy::clinical ? 3 : embedding_dim;
}

Mat64 clinical_inputs(std::span<const ClinicalFeatures> clinical) {
  Mat64 m(clinical.size(), 3);
  for (std::size_t i = 0; i < clinical.size(); ++i) {
    m(i, 0) = clinical[i].age / 100.0;
    m(i, 1) = clinical[i].sex;
    m(i, 2) = clinical[i].laterality;
  }
  return m;
}

SelectionOutcome random_select(const PoolView& pool, std::size_t k, SeededRng& rng) {
  const std::size_t n = pool.size();
  check_k(k, n, "random_select");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  SelectionOutcome out;
  for (std::size_t j = 0; j < k; ++j) {
    std::swap(order[j], order[j + rng.uniform_index(n - j)]);
    out.indices.push_back(order[j]);
    // Sequential factors of 1 / C(n, k): the j-th pick lands in the chosen set
    // with probability (k - j) / (n - j).
    const double logp = std::log(static_cast<double>(k - j) / static_cast<double>(n - j));
    out.per_draw_logp.push_back(logp);
    out.total_logp += logp;
  }
  return out;
}

SelectionOutcome kmedoids_select(const PoolView& pool, std::size_t k, SeededRng& /*rng*/, std::size_t max_iters) {
  check_k(k, pool.size(), "kmedoids_select");
  SelectionOutcome out;
  out.indices = pam(pool.embeddings, k, max_iters).medoids;
  out.per_draw_logp.assign(k, 0.0);
  return out;
}

Vec64 medselect_forward(const SelectorParams& params, const PoolView& pool, ForwardTape* tape) {
  return bilstm_forward(params, pool.embeddings, tape);
}

double sequence_logp(std::span<const double> logits, std::span<const std::size_t> indices) {
  std::vector<double> remaining(logits.begin(), logits.end());
  double total = 0.0;
  for (std::size_t a : indices) {
    total += logits[a] - log_sum_exp(remaining);
    remaining[a] = -std::numeric_limits<double>::infinity();
  }
  return total;
}

SelectionOutcome select_from_logits(std::span<const double> logits, std::size_t k, SeededRng& rng,
                                    SelectionMode mode) {
  const std::size_t n = logits.size();
  check_k(k, n, "select_from_logits");
  if (!all_finite(logits)) throw NumericalError("selector produced non-finite logits");
  if (k == n) return take_all(n);

  SelectionOutcome out;
  if (mode == SelectionMode::sample) {
    out.indices = sample_without_replacement(softmax(logits), k, rng).indices;
  } else {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return logits[a] > logits[b]; });
    out.indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
  }
  // Log-probabilities are taken in log space from the logits so they are the
  // exact function of the weights that the backward pass differentiates.
  std::vector<double> remaining(logits.begin(), logits.end());
  for (std::size_t a : out.indices) {
    const double lp = logits[a] - log_sum_exp(remaining);
    remaining[a] = -std::numeric_limits<double>::infinity();
    out.per_draw_logp.push_back(lp);
    out.total_logp += lp;
  }
  return out;
}

Vec64 logp_grad_wrt_logits(std::span<const double> logits, const SelectionOutcome& outcome) {
  const std::size_t n = logits.size();
  Vec64 g(n, 0.0);
  if (outcome.indices.size() == n) return g;  // certain set, log-probability 0
  std::vector<bool> removed(n, false);
  for (std::size_t a : outcome.indices) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i)
      if (!removed[i]) mx = std::max(mx, logits[i]);
    double z = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (!removed[i]) z += std::exp(logits[i] - mx);
    for (std::size_t i = 0; i < n; ++i)
      if (!removed[i]) g[i] -= std::exp(logits[i] - mx) / z;
    g[a] += 1.0;
    removed[a] = true;
  }
  return g;
}

SelectionOutcome medselect_select(const SelectorParams& params, const PoolView& pool, std::size_t k, SeededRng& rng,
                                  ForwardTape* tape, SelectionMode mode) {
  SelectionOutcome out = select_from_logits(medselect_forward(params, pool, tape), k, rng, mode);
  out.params_version = params.version();
  return out;
}

SelectionOutcome clinical_select(const SelectorParams& params, const PoolView& pool, std::size_t k, SeededRng& rng,
                                 ForwardTape* tape, SelectionMode mode) {
  SelectionOutcome out = select_from_logits(bilstm_forward(params, clinical_inputs(pool.clinical), tape), k, rng, mode);
  out.params_version = params.version();
  return out;
}

namespace {

void backward_impl(const SelectorParams& params, const Mat64& inputs, const SelectionOutcome& outcome, double scale,
                   std::span<double> grad, const ForwardTape* tape) {
  check_outcome(params, outcome);
  if (scale == 0.0 || outcome.indices.size() == inputs.rows()) return;
  ForwardTape local;
  if (tape == nullptr) {
    bilstm_forward(params, inputs, &local);
    tape = &local;
  }
  Vec64 dlogits = logp_grad_wrt_logits(tape->logits, outcome);
  for (double& v : dlogits) v *= scale;
  bilstm_backward(params, inputs, *tape, dlogits, grad);
}

}  // namespace

void medselect_backward(const SelectorParams& params, const PoolView& pool, const SelectionOutcome& outcome,
                        double scale, std::span<double> grad, const ForwardTape* tape) {
  backward_impl(params, pool.embeddings, outcome, scale, grad, tape);
}

void clinical_backward(const SelectorParams& params, const PoolView& pool, const SelectionOutcome& outcome,
                       double scale, std::span<double> grad, const ForwardTape* tape) {
  backward_impl(params, clinical_inputs(pool.clinical), outcome, scale, grad, tape);
}

Vec64 medselect_backward(const SelectorParams& params, const PoolView& pool, const SelectionOutcome& outcome,
                         double scale) {
  Vec64 grad(params.size(), 0.0);
  medselect_backward(params, pool, outcome, scale, grad);
  return grad;
}

Mat64 selector_inputs(Strategy s, const PoolView& pool) {
  return s == Strategy::clinical ? clinical_inputs(pool.clinical) : pool.embeddings;
}

SelectionOutcome select(Strategy s, const SelectorParams* params, const PoolView& pool, std::size_t k, SeededRng& rng,
                        ForwardTape* tape, SelectionMode mode) {
  switch (s) {
    case Strategy::random:
      return random_select(pool, k, rng);
    case Strategy::kmedoids:
      return kmedoids_select(pool, k, rng);
    case Strategy::medselect:
    case Strategy::clinical:
      if (params == nullptr)
        throw std::invalid_argument(std::string(strategy_name(s)) + " selection needs selector weights");
      return s == Strategy::medselect ? medselect_select(*params, pool, k, rng, tape, mode)
                                      : clinical_select(*params, pool, k, rng, tape, mode);
  }
  throw std::logic_error("select: unhandled strategy");
}

void selector_backward(Strategy s, const SelectorParams& params, const PoolView& pool,
                       const SelectionOutcome& outcome, double scale, std::span<double> grad,
                       const ForwardTape* tape) {
  if (s == Strategy::medselect)
    medselect_backward(params, pool, outcome, scale, grad, tape);
  else if (s == Strategy::clinical)
    clinical_backward(params, pool, outcome, scale, grad, tape);
  else
    throw std::invalid_argument("selector_backward: " + std::string(strategy_name(s)) + " is not trainable");
}

}  // namespace medsel
