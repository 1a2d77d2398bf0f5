#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "vgan/kernels.hpp"

using namespace vgan;

namespace {

std::vector<float> random_vec(std::size_t n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<float> dist(-2.0f, 2.0f);
  std::vector<float> v(n);
  for (auto& x : v) x = dist(rng);
  return v;
}

}  // namespace

TEST_CASE("scalar and avx2 kernels agree") {
  if (!kernels::cpu_has_avx2()) return;
  // Odd lengths exercise the vector tail.
  for (std::size_t n : {1u, 7u, 8u, 9u, 64u, 1000u, 1003u}) {
    auto x = random_vec(n, 1);
    auto y0 = random_vec(n, 2);
    auto y1 = y0;

    kernels::axpy_scalar(0.37f, x.data(), y0.data(), n);
    kernels::axpy_avx2(0.37f, x.data(), y1.data(), n);
    for (std::size_t i = 0; i < n; ++i)
      CHECK(y0[i] == doctest::Approx(y1[i]).epsilon(1e-5));

    const float d0 = kernels::dot_scalar(x.data(), y0.data(), n);
    const float d1 = kernels::dot_avx2(x.data(), y1.data(), n);
    CHECK(d0 == doctest::Approx(d1).epsilon(1e-4));

    std::vector<float> r0(n), r1(n);
    kernels::leaky_relu_scalar(x.data(), r0.data(), 0.2f, n);
    kernels::leaky_relu_avx2(x.data(), r1.data(), 0.2f, n);
    for (std::size_t i = 0; i < n; ++i) CHECK(r0[i] == r1[i]);

    auto p0 = random_vec(n, 3), p1 = p0;
    auto g = random_vec(n, 4);
    std::vector<float> m0(n, 0.0f), v0(n, 0.0f), m1(n, 0.0f), v1(n, 0.0f);
    for (long step = 1; step <= 3; ++step) {
      kernels::adam_scalar(p0.data(), g.data(), m0.data(), v0.data(), n,
                           0.01f, 0.9f, 0.999f, 1e-8f, step);
      kernels::adam_avx2(p1.data(), g.data(), m1.data(), v1.data(), n,
                         0.01f, 0.9f, 0.999f, 1e-8f, step);
    }
    for (std::size_t i = 0; i < n; ++i)
      CHECK(p0[i] == doctest::Approx(p1[i]).epsilon(1e-5));
  }
}

TEST_CASE("dot matches double-precision reference") {
  auto x = random_vec(257, 10);
  auto y = random_vec(257, 11);
  double ref = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    ref += static_cast<double>(x[i]) * static_cast<double>(y[i]);
  CHECK(kernels::dot(x.data(), y.data(), x.size()) ==
        doctest::Approx(ref).epsilon(1e-4));
}

TEST_CASE("leaky_relu definition") {
  const float x[3] = {-1.0f, 0.0f, 2.5f};
  float y[3];
  kernels::leaky_relu(x, y, 0.2f, 3);
  CHECK(y[0] == doctest::Approx(-0.2f));
  CHECK(y[1] == 0.0f);
  CHECK(y[2] == 2.5f);
}
