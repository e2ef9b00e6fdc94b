#include "medsel/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "medsel/errors.hpp"
#include "medsel/kernels.hpp"

namespace medsel {

double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw std::invalid_argument("cosine: length mismatch (" + std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()) + ")");
  const double na = std::sqrt(kernels::dot(a, a));
  const double nb = std::sqrt(kernels::dot(b, b));
  const double c = kernels::dot(a, b) / (na * nb);
  if (std::isfinite(c) && std::isnormal(na) && std::isnormal(nb)) return std::clamp(c, -1.0, 1.0);

  // Squares overflowed or underflowed: rescale each vector by its largest entry.
  auto max_abs = [](std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
  };
  const double sa = max_abs(a), sb = max_abs(b);
  if (sa == 0.0 || sb == 0.0) return 0.0;
  Vec64 ua(a.begin(), a.end()), ub(b.begin(), b.end());
  for (double& x : ua) x /= sa;
  for (double& x : ub) x /= sb;
  const double r = kernels::dot(ua, ub) / (std::sqrt(kernels::dot(ua, ua)) * std::sqrt(kernels::dot(ub, ub)));
  return std::clamp(r, -1.0, 1.0);
}

Vec64 softmax(std::span<const double> logits) {
  Vec64 out(logits.size());
  if (logits.empty()) return out;
  const double mx = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    total += out[i];
  }
  for (double& v : out) v /= total;
  return out;
}

double log_sum_exp(std::span<const double> values) {
  if (values.empty()) return -std::numeric_limits<double>::infinity();
  const double mx = *std::max_element(values.begin(), values.end());
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (double v : values) s += std::exp(v - mx);
  return mx + std::log(s);
}

SelectionOutcome sample_without_replacement(std::span<const double> probs, std::size_t k,
                                            SeededRng& rng) {
  std::size_t support = 0;
  for (double p : probs) {
    if (!(p >= 0.0) || !std::isfinite(p))
      throw std::invalid_argument("sample_without_replacement: probabilities must be finite and >= 0");
    if (p > 0.0) ++support;
  }
  if (k > support)
    throw std::invalid_argument("sample_without_replacement: k=" + std::to_string(k) +
                                " exceeds support of " + std::to_string(support));

  std::vector<double> mass(probs.begin(), probs.end());
  SelectionOutcome out;
  out.indices.reserve(k);
  out.per_draw_logp.reserve(k);
  for (std::size_t draw = 0; draw < k; ++draw) {
    // Summing the remaining mass directly (rather than subtracting removed
    // mass) keeps late draws accurate when early picks held most of it.
    double remaining = 0.0;
    for (double m : mass) remaining += m;
    const double target = rng.uniform() * remaining;
    std::size_t pick = mass.size();
    std::size_t last_positive = mass.size();
    double cum = 0.0;
    for (std::size_t i = 0; i < mass.size(); ++i) {
      if (mass[i] <= 0.0) continue;
      last_positive = i;
      cum += mass[i];
      if (target < cum) {
        pick = i;
        break;
      }
    }
    if (pick == mass.size()) pick = last_positive;  // rounding at the top end
    const double logp = std::log(mass[pick] / remaining);
    out.indices.push_back(pick);
    out.per_draw_logp.push_back(logp);
    out.total_logp += logp;
    mass[pick] = 0.0;
  }
  return out;
}

namespace {

template <typename Real, typename Fn>
Vec64 finite_diff_impl(const Fn& f, std::span<const double> at, double eps, FiniteDiffScheme scheme) {
  if (!(eps > 0.0)) throw std::invalid_argument("finite_diff_grad: eps must be positive");
  std::vector<Real> x(at.begin(), at.end());
  Vec64 grad(x.size(), 0.0);
  auto eval = [&](std::size_t i, Real offset) {
    const Real saved = x[i];
    x[i] = saved + offset;
    const Real v = f(std::span<const Real>(x));
    x[i] = saved;
    if (!std::isfinite(v))
      throw NumericalError("finite_diff_grad: non-finite function value at coordinate " +
                           std::to_string(i));
    return v;
  };
  const Real h = eps;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (scheme == FiniteDiffScheme::central) {
      grad[i] = static_cast<double>((eval(i, h) - eval(i, -h)) / (2 * h));
    } else {
      const Real fp2 = eval(i, 2 * h), fp1 = eval(i, h);
      const Real fm1 = eval(i, -h), fm2 = eval(i, -2 * h);
      grad[i] = static_cast<double>((-fp2 + 8 * fp1 - 8 * fm1 + fm2) / (12 * h));
    }
  }
  return grad;
}

}  // namespace

Vec64 finite_diff_grad(const ScalarFunction& f, std::span<const double> at, double eps,
                       FiniteDiffScheme scheme) {
  return finite_diff_impl<double>(f, at, eps, scheme);
}

Vec64 finite_diff_grad(const ExtendedScalarFunction& f, std::span<const double> at, double eps,
                       FiniteDiffScheme scheme) {
  return finite_diff_impl<long double>(f, at, eps, scheme);
}

}  // namespace medsel
