#include "medsel/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include <boost/math/special_functions/beta.hpp>

#include "medsel/kernels.hpp"

namespace medsel {

double auroc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) throw std::invalid_argument("auroc: scores and labels differ in length");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Twice the Mann-Whitney U, kept in integers: tie groups get the average
  // of their 1-based ranks, doubled so it stays integral.
  std::uint64_t n_pos = 0;
  std::uint64_t twice_rank_sum = 0;
  for (std::size_t lo = 0; lo < n;) {
    std::size_t hi = lo + 1;
    while (hi < n && scores[order[hi]] == scores[order[lo]]) ++hi;
    const std::uint64_t twice_avg_rank = (lo + 1) + hi;  // (lo+1 + hi) / 2, doubled
    for (std::size_t r = lo; r < hi; ++r)
      if (labels[order[r]]) {
        ++n_pos;
        twice_rank_sum += twice_avg_rank;
      }
    lo = hi;
  }
  const std::uint64_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) throw std::invalid_argument("auroc: needs at least one positive and one negative");
  const std::uint64_t twice_u = twice_rank_sum - n_pos * (n_pos + 1);
  return static_cast<double>(twice_u) / static_cast<double>(2 * n_pos * n_neg);
}

double wasserstein1(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("wasserstein1: empty sample");
  std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  const std::size_t n = sa.size(), m = sb.size();
  if (n == m) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += std::abs(sa[i] - sb[i]);
    return s / static_cast<double>(n);
  }
  // Step points of the two quantile functions are i/n and j/m; in units of
  // 1/(n*m) they are i*m and j*n, so interval lengths are exact integers.
  std::size_t i = 0, j = 0;
  std::uint64_t pos = 0;
  double s = 0.0;
  while (i < n && j < m) {
    const std::uint64_t next_a = static_cast<std::uint64_t>(i + 1) * m;
    const std::uint64_t next_b = static_cast<std::uint64_t>(j + 1) * n;
    const std::uint64_t next = std::min(next_a, next_b);
    s += static_cast<double>(next - pos) * std::abs(sa[i] - sb[j]);
    pos = next;
    if (next == next_a) ++i;
    if (next == next_b) ++j;
  }
  return s / (static_cast<double>(n) * static_cast<double>(m));
}

double mean(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("mean: empty sample");
  KahanSum s;
  for (double v : values) s.add(v);
  return s.value() / static_cast<double>(values.size());
}

double sample_variance(std::span<const double> values) {
  if (values.size() < 2) throw std::invalid_argument("sample_variance: needs at least two values");
  const double mu = mean(values);
  KahanSum s;
  for (double v : values) s.add((v - mu) * (v - mu));
  return s.value() / static_cast<double>(values.size() - 1);
}

double sorted_quantile(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw std::invalid_argument("sorted_quantile: empty sample");
  const double h = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

WelchResult welch_ttest(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw std::invalid_argument("welch_ttest: each sample needs at least two values");
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double va = sample_variance(a) / na, vb = sample_variance(b) / nb;
  const double se2 = va + vb;
  if (!(se2 > 0.0)) throw std::invalid_argument("welch_ttest: both samples have zero variance");
  WelchResult r;
  r.t = (mean(a) - mean(b)) / std::sqrt(se2);
  r.dof = se2 * se2 / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
  // Two-sided Student-t tail: P(|T| > t) = I_{dof/(dof+t^2)}(dof/2, 1/2).
  const double x = r.dof / (r.dof + r.t * r.t);
  r.p = x >= 1.0 ? 1.0 : boost::math::ibeta(r.dof / 2.0, 0.5, x);
  return r;
}

PairwiseL2 pairwise_l2_stats(const Mat64& points) {
  const std::size_t n = points.rows();
  if (n < 2) throw std::invalid_argument("pairwise_l2_stats: needs at least two points");
  PairwiseL2 out;
  out.distances.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) out.distances.push_back(std::sqrt(kernels::sqdist(points.row(i), points.row(j))));
  out.mean = mean(out.distances);
  out.max = *std::max_element(out.distances.begin(), out.distances.end());
  return out;
}

}  // namespace medsel
