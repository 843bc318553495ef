#include <atomic>
#include <cstdlib>
#include <string>

#include "consensus_rhc/simd.hpp"

namespace crhc::simd {

namespace {

bool cpu_has_avx2() {
#if defined(CRHC_HAVE_AVX2_TU) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Level detect() {
  if (const char* env = std::getenv("CONSENSUS_RHC_SIMD")) {
    if (std::string(env) == "scalar") return Level::Scalar;
  }
  return cpu_has_avx2() ? Level::Avx2 : Level::Scalar;
}

std::atomic<Level>& current() {
  static std::atomic<Level> level{detect()};
  return level;
}

}  // namespace

#if !defined(CRHC_HAVE_AVX2_TU)
namespace avx2 {
double dot(const double* x, const double* y, std::size_t n) { return scalar::dot(x, y, n); }
void axpy(double alpha, const double* x, double* y, std::size_t n) {
  scalar::axpy(alpha, x, y, n);
}
void gemm(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
          std::size_t n) {
  scalar::gemm(a, b, c, m, k, n);
}
}  // namespace avx2
#endif

bool avx2_available() {
  static const bool ok = cpu_has_avx2();
  return ok;
}

Level active_level() { return current().load(std::memory_order_relaxed); }

std::string_view level_name(Level level) {
  return level == Level::Avx2 ? "avx2" : "scalar";
}

bool force_level(Level level) {
  if (level == Level::Avx2 && !avx2_available()) return false;
  current().store(level, std::memory_order_relaxed);
  return true;
}

double dot(const double* x, const double* y, std::size_t n) {
  return active_level() == Level::Avx2 ? avx2::dot(x, y, n) : scalar::dot(x, y, n);
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  if (active_level() == Level::Avx2)
    avx2::axpy(alpha, x, y, n);
  else
    scalar::axpy(alpha, x, y, n);
}

void gemm(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
          std::size_t n) {
  if (active_level() == Level::Avx2)
    avx2::gemm(a, b, c, m, k, n);
  else
    scalar::gemm(a, b, c, m, k, n);
}

}  // namespace crhc::simd
