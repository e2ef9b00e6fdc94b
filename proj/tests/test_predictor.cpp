#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "medsel/numerics.hpp"
#include "medsel/predictor.hpp"
#include "test_support.hpp"

using namespace medsel;

namespace {

SupportSet support(std::initializer_list<std::pair<Vec64, std::uint8_t>> items) {
  SupportSet s;
  for (const auto& [x, y] : items) {
    s.embeddings.append_row(x);
    s.labels.push_back(y);
  }
  return s;
}

}  // namespace

TEST_CASE("fit takes class means and flags missing classes") {
  const auto p = fit(support({{{1, 2}, 1}, {{3, 6}, 1}}));
  CHECK(p.has_positive);
  CHECK_FALSE(p.has_negative);
  CHECK(p.positive == Vec64{2, 4});
  CHECK(p.negative == Vec64{0, 0});

  const auto q = fit(support({{{1, 0}, 1}, {{0, 5}, 0}}));
  CHECK(q.positive == Vec64{1, 0});
  CHECK(q.negative == Vec64{0, 5});
}

TEST_CASE("fit matches a direct mean on random supports") {
  SeededRng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    SupportSet s;
    s.embeddings = testing::random_matrix(10, 6, rng, 3.0);
    for (int i = 0; i < 10; ++i) s.labels.push_back(static_cast<std::uint8_t>(i % 3 == 0));
    const auto p = fit(s);
    for (std::size_t j = 0; j < 6; ++j) {
      long double pos = 0, neg = 0;
      for (std::size_t i = 0; i < 10; ++i) (s.labels[i] ? pos : neg) += s.embeddings(i, j);
      CHECK(std::abs(p.positive[j] - static_cast<double>(pos / 4)) <= 1e-12);
      CHECK(std::abs(p.negative[j] - static_cast<double>(neg / 6)) <= 1e-12);
    }
  }
}

TEST_CASE("fit is permutation invariant") {
  SeededRng rng(5);
  SupportSet s;
  s.embeddings = testing::random_matrix(25, 4, rng, 1e3);
  for (int i = 0; i < 25; ++i) s.labels.push_back(static_cast<std::uint8_t>(i % 2));
  const auto base = fit(s);
  std::vector<std::size_t> perm(25);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (int trial = 0; trial < 20; ++trial) {
    for (std::size_t i = 25; i > 1; --i) std::swap(perm[i - 1], perm[rng.uniform_index(i)]);
    SupportSet t;
    for (auto i : perm) {
      t.embeddings.append_row(s.embeddings.row(i));
      t.labels.push_back(s.labels[i]);
    }
    const auto other = fit(t);
    for (std::size_t j = 0; j < 4; ++j) {
      CHECK(std::abs(other.positive[j] - base.positive[j]) <= 1e-12 * std::abs(base.positive[j]) + 1e-12);
      CHECK(std::abs(other.negative[j] - base.negative[j]) <= 1e-12 * std::abs(base.negative[j]) + 1e-12);
    }
  }
}

TEST_CASE("score examples") {
  Prototypes p;
  p.positive = {1, 0};
  p.negative = {0, 1};
  p.has_positive = p.has_negative = true;
  CHECK(score(p, Vec64{1, 0}) == 1.0);
  CHECK(score(p, Vec64{1 / std::sqrt(2.0), 1 / std::sqrt(2.0)}) == doctest::Approx(0.0).epsilon(1e-15));

  Prototypes same = p;
  same.negative = same.positive;
  SeededRng rng(1);
  for (int i = 0; i < 20; ++i) CHECK(score(same, Vec64{rng.normal(), rng.normal()}) == 0.0);

  Prototypes only_pos;
  only_pos.positive = {1, 1};
  only_pos.negative = {0, 0};
  only_pos.has_positive = true;
  CHECK(score(only_pos, Vec64{2, 2}) == doctest::Approx(1.0));
  CHECK_THROWS_AS(score(p, Vec64{1, 2, 3}), std::invalid_argument);
}

TEST_CASE("score is scale invariant and antisymmetric under label flip") {
  SeededRng rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    Prototypes p;
    p.positive.resize(5);
    p.negative.resize(5);
    for (auto& v : p.positive) v = rng.normal();
    for (auto& v : p.negative) v = rng.normal();
    p.has_positive = p.has_negative = true;
    Prototypes flipped = p;
    std::swap(flipped.positive, flipped.negative);
    Vec64 x(5);
    for (auto& v : x) v = rng.normal();
    const double c = 0.01 + 50.0 * rng.uniform();
    Vec64 cx = x;
    for (auto& v : cx) v *= c;
    CHECK(std::abs(score(p, cx) - score(p, x)) <= 1e-12);
    CHECK(score(flipped, x) == -score(p, x));
  }
}

TEST_CASE("score_query is elementwise and order preserving") {
  SeededRng rng(7);
  Prototypes p;
  p.positive = {1, 2, 3};
  p.negative = {-1, 0, 2};
  p.has_positive = p.has_negative = true;
  const Mat64 q = testing::random_matrix(100, 3, rng);
  std::vector<std::uint8_t> labels(100);
  for (int i = 0; i < 100; ++i) labels[i] = static_cast<std::uint8_t>(i % 2);
  const auto sq = score_query(p, q, labels);
  REQUIRE(sq.scores.size() == 100);
  for (std::size_t i = 0; i < 100; ++i) CHECK(sq.scores[i] == score(p, q.row(i)));
  CHECK(sq.labels == labels);

  Mat64 one(1, 3);
  one(0, 0) = 1;
  CHECK(score_query(p, one, std::vector<std::uint8_t>{1}).scores.size() == 1);

  Mat64 reversed;
  for (std::size_t i = 100; i-- > 0;) reversed.append_row(q.row(i));
  std::vector<std::uint8_t> rl(labels.rbegin(), labels.rend());
  const auto rs = score_query(p, reversed, rl);
  for (std::size_t i = 0; i < 100; ++i) CHECK(rs.scores[i] == sq.scores[99 - i]);
}
