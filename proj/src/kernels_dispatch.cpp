#include "vgan/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace vgan::kernels {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(_M_X64)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

namespace {

// VGAN_FORCE_SCALAR=1 pins the scalar reference path.
bool use_simd() {
  static const bool enabled = [] {
    const char* env = std::getenv("VGAN_FORCE_SCALAR");
    if (env != nullptr && std::strcmp(env, "0") != 0) return false;
    return cpu_has_avx2();
  }();
  return enabled;
}

}  // namespace

void axpy(float a, const float* x, float* y, std::size_t n) {
#if defined(__x86_64__) || defined(_M_X64)
  if (use_simd()) return axpy_avx2(a, x, y, n);
#endif
  axpy_scalar(a, x, y, n);
}

float dot(const float* x, const float* y, std::size_t n) {
#if defined(__x86_64__) || defined(_M_X64)
  if (use_simd()) return dot_avx2(x, y, n);
#endif
  return dot_scalar(x, y, n);
}

void leaky_relu(const float* x, float* y, float slope, std::size_t n) {
#if defined(__x86_64__) || defined(_M_X64)
  if (use_simd()) return leaky_relu_avx2(x, y, slope, n);
#endif
  leaky_relu_scalar(x, y, slope, n);
}

void adam_update(float* p, const float* g, float* m, float* v, std::size_t n,
                 float lr, float beta1, float beta2, float eps, long step) {
#if defined(__x86_64__) || defined(_M_X64)
  if (use_simd()) return adam_avx2(p, g, m, v, n, lr, beta1, beta2, eps, step);
#endif
  adam_scalar(p, g, m, v, n, lr, beta1, beta2, eps, step);
}

}  // namespace vgan::kernels
