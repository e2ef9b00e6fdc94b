#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "medsel/selectors.hpp"
#include "test_support.hpp"

using namespace medsel;

namespace {

double assignment_cost(const Mat64& x, const std::vector<std::size_t>& medoids) {
  double cost = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t m : medoids) {
      double s = 0.0;
      for (std::size_t j = 0; j < x.cols(); ++j) s += (x(i, j) - x(m, j)) * (x(i, j) - x(m, j));
      best = std::min(best, std::sqrt(s));
    }
    cost += best;
  }
  return cost;
}

struct Exhaustive {
  std::vector<std::vector<std::size_t>> optimal;  // every set within 1e-12 of the best cost
  double cost = std::numeric_limits<double>::infinity();
  bool contains(const std::vector<std::size_t>& set) const {
    return std::find(optimal.begin(), optimal.end(), set) != optimal.end();
  }
};

Exhaustive exhaustive(const Mat64& x, std::size_t k) {
  std::vector<std::pair<double, std::vector<std::size_t>>> all;
  const std::size_t n = x.rows();
  std::vector<bool> mask(n, false);
  std::fill(mask.begin(), mask.begin() + static_cast<std::ptrdiff_t>(k), true);
  do {
    std::vector<std::size_t> set;
    for (std::size_t i = 0; i < n; ++i)
      if (mask[i]) set.push_back(i);
    all.emplace_back(assignment_cost(x, set), set);
  } while (std::prev_permutation(mask.begin(), mask.end()));
  Exhaustive best;
  for (const auto& [c, set] : all) best.cost = std::min(best.cost, c);
  for (const auto& [c, set] : all)
    if (c <= best.cost * (1 + 1e-12)) best.optimal.push_back(set);
  return best;
}

bool swap_local_optimum(const Mat64& x, const std::vector<std::size_t>& medoids) {
  const double c0 = assignment_cost(x, medoids);
  for (std::size_t m = 0; m < medoids.size(); ++m)
    for (std::size_t h = 0; h < x.rows(); ++h) {
      if (std::find(medoids.begin(), medoids.end(), h) != medoids.end()) continue;
      auto s = medoids;
      s[m] = h;
      if (assignment_cost(x, s) < c0 * (1 - 1e-12)) return false;
    }
  return true;
}

}  // namespace

TEST_CASE("pam ends at a swap-local optimum and usually at the global one") {
  // BUILD + SWAP is a local search: on unstructured data it can stop at a
  // set no single swap improves that is still worse than the best set.
  SeededRng rng(31);
  int global = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 4 + rng.uniform_index(9);
    const std::size_t k = 1 + rng.uniform_index(3);
    const Mat64 x = testing::random_matrix(n, 2 + rng.uniform_index(3), rng);
    const auto r = pam(x, k);
    const auto oracle = exhaustive(x, k);
    CAPTURE(trial);
    CHECK(r.cost >= oracle.cost * (1 - 1e-12));
    CHECK(swap_local_optimum(x, r.medoids));
    if (oracle.contains(r.medoids)) ++global;
    if (k == 1) CHECK(oracle.contains(r.medoids));
  }
  MESSAGE(global << "/200 random instances reach the exhaustive optimum");
  CHECK(global >= 170);
}

TEST_CASE("pam matches exhaustive search on clustered instances") {
  SeededRng rng(37);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t k = 1 + rng.uniform_index(3);
    const std::size_t n = 3 * k + rng.uniform_index(13 - 3 * k);
    Mat64 centers = testing::random_matrix(k, 2, rng, 20.0);
    Mat64 x(n, 2);
    for (std::size_t i = 0; i < n; ++i) {
      x(i, 0) = centers(i % k, 0) + rng.normal();
      x(i, 1) = centers(i % k, 1) + rng.normal();
    }
    const auto r = pam(x, k);
    CAPTURE(trial);
    CHECK(exhaustive(x, k).contains(r.medoids));
  }
}

TEST_CASE("pam cost history is non-increasing and medoids are distinct pool indices") {
  SeededRng rng(32);
  for (int trial = 0; trial < 30; ++trial) {
    const Mat64 x = testing::random_matrix(60, 5, rng);
    const auto r = pam(x, 7);
    REQUIRE_FALSE(r.cost_history.empty());
    for (std::size_t i = 1; i < r.cost_history.size(); ++i) CHECK(r.cost_history[i] <= r.cost_history[i - 1]);
    CHECK(r.cost == r.cost_history.back());
    CHECK(r.medoids.size() == 7);
    CHECK(std::is_sorted(r.medoids.begin(), r.medoids.end()));
    CHECK(std::adjacent_find(r.medoids.begin(), r.medoids.end()) == r.medoids.end());
    CHECK(r.medoids.back() < 60);
    CHECK(std::abs(r.cost - assignment_cost(x, r.medoids)) <= 1e-9);
  }
}

TEST_CASE("pam puts one medoid in each separated blob") {
  SeededRng rng(33);
  Mat64 x(12, 2);
  for (std::size_t i = 0; i < 12; ++i) {
    const double cx = i < 6 ? 0.0 : 50.0;
    x(i, 0) = cx + 0.5 * rng.normal();
    x(i, 1) = 0.5 * rng.normal();
  }
  const auto r = pam(x, 2);
  REQUIRE(r.medoids.size() == 2);
  CHECK(r.medoids[0] < 6);
  CHECK(r.medoids[1] >= 6);
  CHECK(exhaustive(x, 2).contains(r.medoids));
}

TEST_CASE("pam on a duplicated dataset doubles the optimal cost") {
  SeededRng rng(34);
  for (int trial = 0; trial < 10; ++trial) {
    const Mat64 base = testing::random_matrix(5, 2, rng);
    Mat64 doubled;
    for (int rep = 0; rep < 2; ++rep)
      for (std::size_t i = 0; i < 5; ++i) doubled.append_row(base.row(i));
    const auto single = exhaustive(base, 2);
    const auto r = pam(doubled, 2);
    CHECK(std::abs(r.cost - 2.0 * single.cost) <= 1e-12);
    CHECK(std::abs(r.cost - exhaustive(doubled, 2).cost) <= 1e-12);
  }
}

TEST_CASE("pam edge cases") {
  SeededRng rng(35);
  const Mat64 x = testing::random_matrix(6, 3, rng);
  const auto all = pam(x, 6);
  CHECK(all.medoids == std::vector<std::size_t>{0, 1, 2, 3, 4, 5});
  CHECK(all.cost == 0.0);
  CHECK_THROWS_AS(pam(x, 7), std::invalid_argument);
  CHECK_THROWS_AS(pam(x, 0), std::invalid_argument);

  PoolView pool{x, {}};
  SeededRng r1(1), r2(2);
  CHECK(kmedoids_select(pool, 3, r1).indices == kmedoids_select(pool, 3, r2).indices);
}

TEST_CASE("kmedoids selection is equivariant to pool permutation") {
  SeededRng rng(36);
  const Mat64 x = testing::random_matrix(30, 4, rng);
  std::vector<std::size_t> perm(30);
  for (std::size_t i = 0; i < 30; ++i) perm[i] = (i * 7 + 3) % 30;
  Mat64 px;
  for (auto i : perm) px.append_row(x.row(i));
  auto a = pam(x, 4).medoids;
  auto b = pam(px, 4).medoids;
  for (auto& v : b) v = perm[v];
  std::sort(b.begin(), b.end());
  CHECK(a == b);
}
