#pragma once

#include <cstddef>
#include <string_view>

// Dense double kernels with a scalar reference and an AVX2/FMA variant.
// The variant is picked once per process from CPU features; set
// CONSENSUS_RHC_SIMD=scalar to force the reference path.
namespace crhc::simd {

enum class Level { Scalar, Avx2 };

Level active_level();
std::string_view level_name(Level level);
bool avx2_available();

// Test hook. Returns false when the requested level is unsupported here.
bool force_level(Level level);

double dot(const double* x, const double* y, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
// C (m x n) = A (m x k) * B (k x n), all row-major and non-aliasing.
void gemm(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
          std::size_t n);

namespace scalar {
double dot(const double* x, const double* y, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void gemm(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
          std::size_t n);
}  // namespace scalar

namespace avx2 {
double dot(const double* x, const double* y, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void gemm(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
          std::size_t n);
}  // namespace avx2

}  // namespace crhc::simd
