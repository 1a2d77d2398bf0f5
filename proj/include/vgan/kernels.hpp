#pragma once

#include <cstddef>

// Data-parallel inner loops used by the tensor engine and optimizer.
// Scalar reference kernels always exist; AVX2 variants are selected at
// runtime when the CPU supports them. Double-precision paths (gradient
// checking) always use the scalar reference.

namespace vgan::kernels {

// y[i] += a * x[i]
using axpy_f32_fn = void (*)(float a, const float* x, float* y, std::size_t n);
// sum_i x[i] * y[i]
using dot_f32_fn = float (*)(const float* x, const float* y, std::size_t n);
// y[i] = x[i] > 0 ? x[i] : slope * x[i]
using leaky_relu_f32_fn = void (*)(const float* x, float* y, float slope,
                                   std::size_t n);
// Adam update with bias correction; m, v, p updated in place.
// step is the post-increment step counter (>= 1).
using adam_f32_fn = void (*)(float* p, const float* g, float* m, float* v,
                             std::size_t n, float lr, float beta1, float beta2,
                             float eps, long step);

void axpy_scalar(float a, const float* x, float* y, std::size_t n);
float dot_scalar(const float* x, const float* y, std::size_t n);
void leaky_relu_scalar(const float* x, float* y, float slope, std::size_t n);
void adam_scalar(float* p, const float* g, float* m, float* v, std::size_t n,
                 float lr, float beta1, float beta2, float eps, long step);

#if defined(__x86_64__) || defined(_M_X64)
void axpy_avx2(float a, const float* x, float* y, std::size_t n);
float dot_avx2(const float* x, const float* y, std::size_t n);
void leaky_relu_avx2(const float* x, float* y, float slope, std::size_t n);
void adam_avx2(float* p, const float* g, float* m, float* v, std::size_t n,
               float lr, float beta1, float beta2, float eps, long step);
#endif

bool cpu_has_avx2();

// Runtime-selected entry points (resolved once, on first use).
void axpy(float a, const float* x, float* y, std::size_t n);
float dot(const float* x, const float* y, std::size_t n);
void leaky_relu(const float* x, float* y, float slope, std::size_t n);
void adam_update(float* p, const float* g, float* m, float* v, std::size_t n,
                 float lr, float beta1, float beta2, float eps, long step);

// Double-precision reference versions (scalar only).
void axpy(double a, const double* x, double* y, std::size_t n);
double dot(const double* x, const double* y, std::size_t n);
void leaky_relu(const double* x, double* y, double slope, std::size_t n);
void adam_update(double* p, const double* g, double* m, double* v,
                 std::size_t n, double lr, double beta1, double beta2,
                 double eps, long step);

}  // namespace vgan::kernels
