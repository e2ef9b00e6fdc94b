#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "medsel/kernels.hpp"
#include "medsel/selectors.hpp"

namespace medsel {

KMedoidsResult pam(const Mat64& points, std::size_t k, std::size_t max_iters) {
  const std::size_t n = points.rows();
  if (k == 0 || k > n)
    throw std::invalid_argument("pam: k=" + std::to_string(k) + " must lie in [1, " + std::to_string(n) + "]");
  KMedoidsResult res;
  if (k == n) {
    for (std::size_t i = 0; i < n; ++i) res.medoids.push_back(i);
    res.cost_history.push_back(0.0);
    return res;
  }

  Mat64 dist(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) dist(i, j) = dist(j, i) = std::sqrt(kernels::sqdist(points.row(i), points.row(j)));

  std::vector<std::size_t> medoids;
  std::vector<bool> is_medoid(n, false);
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());

  // BUILD: start from the most central point, then repeatedly add the point
  // that lowers the total cost the most.
  for (std::size_t added = 0; added < k; ++added) {
    std::size_t best = n;
    double best_gain = -1.0;
    for (std::size_t c = 0; c < n; ++c) {
      if (is_medoid[c]) continue;
      double gain = 0.0;
      if (added == 0) {
        for (std::size_t i = 0; i < n; ++i) gain -= dist(i, c);
      } else {
        for (std::size_t i = 0; i < n; ++i) gain += std::max(nearest[i] - dist(i, c), 0.0);
      }
      if (best == n || gain > best_gain) {
        best = c;
        best_gain = gain;
      }
    }
    medoids.push_back(best);
    is_medoid[best] = true;
    for (std::size_t i = 0; i < n; ++i) nearest[i] = std::min(nearest[i], dist(i, best));
  }

  auto total_cost = [&](std::vector<double>& d1, std::vector<double>& d2, std::vector<std::size_t>& owner) {
    double cost = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d1[i] = d2[i] = std::numeric_limits<double>::infinity();
      for (std::size_t m = 0; m < medoids.size(); ++m) {
        const double d = dist(i, medoids[m]);
        if (d < d1[i]) {
          d2[i] = d1[i];
          d1[i] = d;
          owner[i] = m;
        } else if (d < d2[i]) {
          d2[i] = d;
        }
      }
      cost += d1[i];
    }
    return cost;
  };

  std::vector<double> d1(n), d2(n);
  std::vector<std::size_t> owner(n);
  double cost = total_cost(d1, d2, owner);
  res.cost_history.push_back(cost);

  // SWAP: apply the single best (medoid, non-medoid) exchange per pass.
  for (std::size_t pass = 0; pass < max_iters; ++pass) {
    double best_delta = 0.0;
    std::size_t best_m = k, best_h = n;
    for (std::size_t m = 0; m < k; ++m) {
      for (std::size_t h = 0; h < n; ++h) {
        if (is_medoid[h]) continue;
        double delta = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double base = owner[i] == m ? d2[i] : d1[i];
          delta += std::min(base, dist(i, h)) - d1[i];
        }
        if (delta < best_delta) {
          best_delta = delta;
          best_m = m;
          best_h = h;
        }
      }
    }
    if (best_m == k || best_delta > -1e-12 * (1.0 + cost)) break;
    is_medoid[medoids[best_m]] = false;
    medoids[best_m] = best_h;
    is_medoid[best_h] = true;
    cost = total_cost(d1, d2, owner);
    res.cost_history.push_back(cost);
  }

  std::sort(medoids.begin(), medoids.end());
  res.medoids = std::move(medoids);
  res.cost = cost;
  return res;
}

}  // namespace medsel
