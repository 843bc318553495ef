#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "consensus_rhc/matrix.hpp"
#include "consensus_rhc/simd.hpp"

using namespace crhc;

namespace {

std::vector<double> random_vec(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

// Naive triple loop in long double.
std::vector<double> gemm_oracle(const std::vector<double>& a, const std::vector<double>& b,
                                std::size_t m, std::size_t k, std::size_t n) {
  std::vector<double> c(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      long double s = 0.0L;
      for (std::size_t p = 0; p < k; ++p) s += static_cast<long double>(a[i * k + p]) * b[p * n + j];
      c[i * n + j] = static_cast<double>(s);
    }
  return c;
}

struct LevelGuard {
  simd::Level saved = simd::active_level();
  ~LevelGuard() { simd::force_level(saved); }
};

}  // namespace

TEST_CASE("scalar dot and axpy match long-double references") {
  std::mt19937_64 rng(1);
  for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 17u, 64u, 1001u}) {
    const auto x = random_vec(rng, n), y = random_vec(rng, n);
    long double ref = 0.0L;
    for (std::size_t i = 0; i < n; ++i) ref += static_cast<long double>(x[i]) * y[i];
    CHECK(simd::scalar::dot(x.data(), y.data(), n) == doctest::Approx(static_cast<double>(ref)).epsilon(1e-12));
    auto z = y;
    simd::scalar::axpy(0.75, x.data(), z.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(z[i] == 0.75 * x[i] + y[i]);
  }
}

TEST_CASE("avx2 kernels agree with the scalar reference") {
  if (!simd::avx2_available()) {
    MESSAGE("AVX2 not available on this CPU; equivalence test skipped");
    return;
  }
  std::mt19937_64 rng(2);
  for (std::size_t n : {1u, 2u, 3u, 4u, 5u, 7u, 8u, 9u, 15u, 16u, 33u, 257u}) {
    const auto x = random_vec(rng, n), y = random_vec(rng, n);
    const double s = simd::scalar::dot(x.data(), y.data(), n);
    const double v = simd::avx2::dot(x.data(), y.data(), n);
    CHECK(std::abs(s - v) <= 1e-13 * (1.0 + std::abs(s)) * std::sqrt(static_cast<double>(n)));
    auto zs = y, zv = y;
    simd::scalar::axpy(-1.25, x.data(), zs.data(), n);
    simd::avx2::axpy(-1.25, x.data(), zv.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(zs[i] - zv[i]) <= 1e-15 * (1.0 + std::abs(zs[i])));
  }
  const std::size_t shapes[][3] = {{1, 1, 1}, {3, 5, 7}, {4, 4, 4}, {5, 9, 3}, {17, 13, 11},
                                   {30, 30, 30}, {2, 45, 45}, {45, 9, 90}};
  for (const auto& s : shapes) {
    const std::size_t m = s[0], k = s[1], n = s[2];
    const auto a = random_vec(rng, m * k), b = random_vec(rng, k * n);
    std::vector<double> cs(m * n), cv(m * n);
    simd::scalar::gemm(a.data(), b.data(), cs.data(), m, k, n);
    simd::avx2::gemm(a.data(), b.data(), cv.data(), m, k, n);
    const auto ref = gemm_oracle(a, b, m, k, n);
    for (std::size_t i = 0; i < m * n; ++i) {
      CHECK(std::abs(cs[i] - ref[i]) <= 1e-13 * k);
      CHECK(std::abs(cv[i] - ref[i]) <= 1e-13 * k);
    }
  }
}

TEST_CASE("dispatch can be forced and matrix products follow it") {
  LevelGuard guard;
  REQUIRE(simd::force_level(simd::Level::Scalar));
  CHECK(simd::active_level() == simd::Level::Scalar);
  CHECK(simd::level_name(simd::Level::Scalar) == "scalar");
  std::mt19937_64 rng(3);
  RealMatrix a(6, 7), b(7, 5);
  std::uniform_real_distribution<double> u(-1, 1);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 7; ++j) a(i, j) = u(rng);
  for (std::size_t i = 0; i < 7; ++i)
    for (std::size_t j = 0; j < 5; ++j) b(i, j) = u(rng);
  const RealMatrix cs = a * b;
  if (simd::force_level(simd::Level::Avx2)) {
    CHECK(simd::active_level() == simd::Level::Avx2);
    const RealMatrix cv = a * b;
    CHECK(max_abs(cs - cv) <= 1e-14);
  } else {
    CHECK_FALSE(simd::avx2_available());
  }
}

TEST_CASE("dispatched kernels handle empty sizes") {
  std::vector<double> x, y;
  CHECK(simd::dot(x.data(), y.data(), 0) == 0.0);
  simd::axpy(2.0, x.data(), y.data(), 0);
  simd::gemm(nullptr, nullptr, nullptr, 0, 0, 0);
}
