#pragma once

#include <string>
#include <vector>

#include "vgan/kernels.hpp"
#include "vgan/tensor.hpp"

namespace vgan {

// Moments are stored in the enumeration order of the parameter group they
// were initialized from; updates must replay the same order.
template <typename T>
struct AdamState {
  long step = 0;
  T learning_rate = T(1e-4);
  T beta1 = T(0.9);
  T beta2 = T(0.999);
  T epsilon = T(1e-8);
  std::vector<Tensor<T>> m, v;

  template <typename Group>
  static AdamState init(Group& group, T lr) {
    AdamState s;
    s.learning_rate = lr;
    group([&](const std::string&, Tensor<T>& t) {
      s.m.push_back(Tensor<T>::zeros(t.shape));
      s.v.push_back(Tensor<T>::zeros(t.shape));
    });
    return s;
  }
};

// One Adam step over a parameter group. `group` enumerates (name, tensor)
// pairs; `grad_of` maps a tensor to its gradient.
template <typename T, typename Group, typename GradOf>
void adam_step(Group& group, GradOf&& grad_of, AdamState<T>& state) {
  ++state.step;
  std::size_t i = 0;
  group([&](const std::string& name, Tensor<T>& t) {
    const Tensor<T> g = grad_of(t);
    if (g.shape != t.shape)
      throw DimensionError("adam_step: grad shape mismatch for " + name);
    if (!g.finite()) throw ValidityError("adam_step: non-finite grad in " + name);
    kernels::adam_update(t.data.data(), g.data.data(), state.m[i].data.data(),
                         state.v[i].data.data(), t.size(),
                         state.learning_rate, state.beta1, state.beta2,
                         state.epsilon, state.step);
    ++i;
  });
}

}  // namespace vgan
