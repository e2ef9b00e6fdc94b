#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "medsel/kernels.hpp"
#include "test_support.hpp"

using namespace medsel;
using kernels::Backend;

namespace {

std::vector<double> randv(std::size_t n, SeededRng& rng) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.normal();
  return v;
}

// Reordered summation may differ from the reference by a few ulps of the sum
// of absolute terms.
double bound(std::size_t n, double abs_sum) {
  return 4.0 * static_cast<double>(n + 1) * std::numeric_limits<double>::epsilon() * abs_sum + 1e-300;
}

double abs_dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::abs(a[i] * b[i]);
  return s;
}

void check_backend(Backend backend) {
  const kernels::Table& ref = kernels::scalar_table();
  const kernels::Table& vec = kernels::table(backend);
  SeededRng rng(2024);

  for (std::size_t n = 0; n <= 37; ++n) {
    const auto a = randv(n, rng), b = randv(n, rng);
    CHECK(std::abs(vec.dot(a.data(), b.data(), n) - ref.dot(a.data(), b.data(), n)) <=
          bound(n, abs_dot(a.data(), b.data(), n)));
    double sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) sq += (a[i] - b[i]) * (a[i] - b[i]);
    CHECK(std::abs(vec.sqdist(a.data(), b.data(), n) - ref.sqdist(a.data(), b.data(), n)) <= bound(n, sq));
    auto y1 = randv(n, rng);
    auto y2 = y1;
    ref.axpy(0.7, a.data(), y1.data(), n);
    vec.axpy(0.7, a.data(), y2.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(y1[i] - y2[i]) <= bound(1, std::abs(y1[i]) + std::abs(0.7 * a[i])));
  }

  const std::size_t shapes[][3] = {{1, 1, 1}, {3, 5, 7}, {4, 4, 4}, {8, 12, 16}, {9, 13, 17}, {12, 48, 12}, {17, 3, 33}};
  for (const auto& s : shapes) {
    const std::size_t m = s[0], n = s[1], k = s[2];
    CAPTURE(m);
    CAPTURE(n);
    CAPTURE(k);
    const auto A = randv(m * k, rng);
    const auto Bt = randv(n * k, rng);
    const auto B = randv(k * n, rng);
    const auto At = randv(k * m, rng);
    const auto C0 = randv(m * n, rng);
    auto check_mats = [&](const std::vector<double>& c1, const std::vector<double>& c2, std::size_t terms) {
      for (std::size_t i = 0; i < c1.size(); ++i) CHECK(std::abs(c1[i] - c2[i]) <= bound(terms, 10.0 * terms));
    };
    auto c1 = C0, c2 = C0;
    ref.gemm_nt_acc(A.data(), Bt.data(), c1.data(), m, n, k);
    vec.gemm_nt_acc(A.data(), Bt.data(), c2.data(), m, n, k);
    check_mats(c1, c2, k);
    c1 = C0, c2 = C0;
    ref.gemm_nn_acc(A.data(), B.data(), c1.data(), m, n, k);
    vec.gemm_nn_acc(A.data(), B.data(), c2.data(), m, n, k);
    check_mats(c1, c2, k);
    c1 = C0, c2 = C0;
    ref.gemm_tn_acc(At.data(), B.data(), c1.data(), m, n, k);
    vec.gemm_tn_acc(At.data(), B.data(), c2.data(), m, n, k);
    check_mats(c1, c2, k);

    const auto x = randv(k, rng);
    auto y1 = randv(m, rng);
    auto y2 = y1;
    ref.gemv_acc(A.data(), m, k, x.data(), y1.data());
    vec.gemv_acc(A.data(), m, k, x.data(), y2.data());
    check_mats(y1, y2, k);
    const auto xm = randv(m, rng);
    auto z1 = randv(k, rng);
    auto z2 = z1;
    ref.gemv_t_acc(A.data(), m, k, xm.data(), z1.data());
    vec.gemv_t_acc(A.data(), m, k, xm.data(), z2.data());
    check_mats(z1, z2, m);
  }
}

}  // namespace

TEST_CASE("scalar kernels match naive loops") {
  const kernels::Table& t = kernels::scalar_table();
  const std::vector<double> a{1, 2, 3, 4, 5, 6};  // 2x3
  const std::vector<double> b{7, 8, 9, 10, 11, 12};
  CHECK(t.dot(a.data(), b.data(), 6) == 217.0);
  CHECK(t.sqdist(a.data(), b.data(), 6) == 216.0);
  std::vector<double> c(4, 1.0);
  t.gemm_nt_acc(a.data(), b.data(), c.data(), 2, 2, 3);  // A[2x3] * B[2x3]^T
  CHECK(c == std::vector<double>{51, 69, 123, 168});
  std::vector<double> e(9, 0.0);
  t.gemm_tn_acc(a.data(), b.data(), e.data(), 3, 3, 2);  // A[2x3]^T * B[2x3] -> 3x3
  CHECK(e == std::vector<double>{1 * 7 + 4 * 10, 1 * 8 + 4 * 11, 1 * 9 + 4 * 12, 2 * 7 + 5 * 10, 2 * 8 + 5 * 11,
                                 2 * 9 + 5 * 12, 3 * 7 + 6 * 10, 3 * 8 + 6 * 11, 3 * 9 + 6 * 12});
  std::vector<double> f(4, 0.0);
  t.gemm_nn_acc(a.data(), b.data(), f.data(), 2, 2, 3);  // A[2x3] * B[3x2]
  CHECK(f == std::vector<double>{1 * 7 + 2 * 9 + 3 * 11, 1 * 8 + 2 * 10 + 3 * 12, 4 * 7 + 5 * 9 + 6 * 11,
                                 4 * 8 + 5 * 10 + 6 * 12});
  std::vector<double> y{1, 1};
  const std::vector<double> x{1, 0, -1};
  t.gemv_acc(a.data(), 2, 3, x.data(), y.data());
  CHECK(y == std::vector<double>{-1, -1});
  std::vector<double> z(3, 0.0);
  const std::vector<double> w{1, -1};
  t.gemv_t_acc(a.data(), 2, 3, w.data(), z.data());
  CHECK(z == std::vector<double>{-3, -3, -3});
}

TEST_CASE("every supported vector backend agrees with the scalar reference") {
  for (Backend b : kernels::supported_backends()) {
    if (b == Backend::scalar) continue;
    CAPTURE(kernels::backend_name(b));
    check_backend(b);
  }
}

TEST_CASE("backend names parse and scoped overrides restore the previous backend") {
  CHECK(kernels::parse_backend("scalar") == Backend::scalar);
  CHECK(kernels::parse_backend("avx2") == Backend::avx2);
  CHECK_THROWS_AS(kernels::parse_backend("sse9"), std::invalid_argument);
  const Backend before = kernels::active_backend();
  {
    kernels::ScopedBackend scalar(Backend::scalar);
    CHECK(kernels::active_backend() == Backend::scalar);
  }
  CHECK(kernels::active_backend() == before);
  CHECK(kernels::backend_supported(Backend::scalar));
}
