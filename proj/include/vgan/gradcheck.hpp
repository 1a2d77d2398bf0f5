#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "vgan/tensor.hpp"

namespace vgan {

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::string worst_param;

  bool pass(double tol) const { return max_rel_err < tol; }
};

// Central finite differences against analytic gradients, 64-bit only.
// `run` evaluates the closure at the given parameter values and returns
// {loss, gradients in parameter order}; it must build a fresh graph each
// call. Elements where both analytic and numeric gradients are ~0 are
// skipped (denominator floor 1e-8).
template <typename RunFn>
GradCheckReport grad_check(std::vector<TensorD> params, RunFn&& run,
                           double eps = 1e-5) {
  GradCheckReport report;
  const auto [base_loss, analytic] = run(params);
  (void)base_loss;
  for (std::size_t p = 0; p < params.size(); ++p) {
    for (std::size_t i = 0; i < params[p].size(); ++i) {
      const double saved = params[p].data[i];
      params[p].data[i] = saved + eps;
      const double up = run(params).first;
      params[p].data[i] = saved - eps;
      const double down = run(params).first;
      params[p].data[i] = saved;
      const double fd = (up - down) / (2.0 * eps);
      const double an = analytic[p].data[i];
      const double denom = std::max(1e-8, std::abs(fd) + std::abs(an));
      const double rel = std::abs(fd - an) / denom;
      if (rel > report.max_rel_err) {
        report.max_rel_err = rel;
        report.worst_param = "param" + std::to_string(p) + "[" +
                             std::to_string(i) + "]";
      }
    }
  }
  return report;
}

}  // namespace vgan
