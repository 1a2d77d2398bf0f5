#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "vgan/networks.hpp"
#include "vgan/tape.hpp"

namespace vgan {

template <typename T>
struct LossReport {
  long iteration = 0;
  T d_loss_c = 0, d_loss_b = 0;
  T g_adv_ac = 0, g_adv_cb = 0;
  T cycle_loss = 0;
  T total_g = 0, total_d = 0;
  T d_real_confidence = 0, d_fake_confidence = 0;

  bool finite() const {
    for (T v : {d_loss_c, d_loss_b, g_adv_ac, g_adv_cb, cycle_loss, total_g,
                total_d})
      if (!std::isfinite(v)) return false;
    return true;
  }
};

template <typename T>
T mean_sigmoid(const Tensor<T>& logits) {
  T acc = 0;
  for (T v : logits.data) acc += T(1) / (T(1) + std::exp(-v));
  return acc / static_cast<T>(logits.size());
}

// Discriminator loss for one domain: real against label 1 plus fake
// against label 0.
template <typename T>
typename Tape<T>::Id loss_d(Tape<T>& tape, typename Tape<T>::Id real_logits,
                            typename Tape<T>::Id fake_logits) {
  return tape.add(tape.bce_logits(real_logits, true),
                  tape.bce_logits(fake_logits, false));
}

// Non-saturating generator loss: fake logits against label 1.
template <typename T>
typename Tape<T>::Id loss_g_adv(Tape<T>& tape, typename Tape<T>::Id fake_logits) {
  return tape.bce_logits(fake_logits, true);
}

// Generator objective on one (spectral, RGB) pair. Discriminator
// parameters enter the graph as constants, so backward() populates
// gradients for the compressor and both mappers only. The compressor
// output used as the cycle target is detached.
template <typename T>
class GeneratorObjective {
 public:
  GeneratorObjective(ModelParams<T>& params, const Tensor<T>& x,
                     const Tensor<T>& y, T lambda)
      : bind_g_(tape_, true), bind_d_(tape_, false) {
    using Id = typename Tape<T>::Id;
    const Id xid = tape_.leaf(x);
    const Id yid = tape_.leaf(y);
    const Id z = compressor_forward(bind_g_, xid, params.cpr);
    const Id fake_c = mapper_forward(bind_g_, z, params.m1);
    const Id fake_b = mapper_forward(bind_g_, yid, params.m2);

    fake_c_logits_ = discriminator_forward(bind_d_, fake_c, params.d_c);
    fake_b_logits_ = discriminator_forward(bind_d_, fake_b, params.d_b);
    adv_ac_ = loss_g_adv(tape_, fake_c_logits_);
    adv_cb_ = loss_g_adv(tape_, fake_b_logits_);

    const Id cyc_b = tape_.l1_loss(mapper_forward(bind_g_, fake_c, params.m2),
                                   tape_.detach(z));
    const Id cyc_c = tape_.l1_loss(mapper_forward(bind_g_, fake_b, params.m1),
                                   yid);
    cycle_ = tape_.add(cyc_b, cyc_c);
    total_ = tape_.add(tape_.add(adv_ac_, adv_cb_), tape_.scale(cycle_, lambda));
    if (!std::isfinite(total())) throw ValidityError("generator loss diverged");
  }

  T adv_ac() const { return tape_.value(adv_ac_).data[0]; }
  T adv_cb() const { return tape_.value(adv_cb_).data[0]; }
  T cycle() const { return tape_.value(cycle_).data[0]; }
  T total() const { return tape_.value(total_).data[0]; }
  T fake_confidence() const {
    return (mean_sigmoid(tape_.value(fake_c_logits_)) +
            mean_sigmoid(tape_.value(fake_b_logits_))) / T(2);
  }

  void backward() { tape_.backward(total_); }
  Tensor<T> grad_of(const Tensor<T>& t) const { return bind_g_.grad_of(t); }
  Tensor<T> disc_grad_of(const Tensor<T>& t) const { return bind_d_.grad_of(t); }

  void fill(LossReport<T>& r) const {
    r.g_adv_ac = adv_ac();
    r.g_adv_cb = adv_cb();
    r.cycle_loss = cycle();
    r.total_g = total();
  }

 private:
  Tape<T> tape_;
  Binder<T> bind_g_, bind_d_;
  typename Tape<T>::Id adv_ac_, adv_cb_, cycle_, total_;
  typename Tape<T>::Id fake_c_logits_, fake_b_logits_;
};

// Discriminator objective on already-detached sample images. Generator
// parameters never enter the graph.
template <typename T>
class DiscriminatorObjective {
 public:
  DiscriminatorObjective(ModelParams<T>& params, const Tensor<T>& real_c,
                         const Tensor<T>& fake_c, const Tensor<T>& real_b,
                         const Tensor<T>& fake_b)
      : bind_d_(tape_, true) {
    real_c_logits_ = discriminator_forward(bind_d_, tape_.leaf(real_c), params.d_c);
    fake_c_logits_ = discriminator_forward(bind_d_, tape_.leaf(fake_c), params.d_c);
    real_b_logits_ = discriminator_forward(bind_d_, tape_.leaf(real_b), params.d_b);
    fake_b_logits_ = discriminator_forward(bind_d_, tape_.leaf(fake_b), params.d_b);
    loss_c_ = loss_d(tape_, real_c_logits_, fake_c_logits_);
    loss_b_ = loss_d(tape_, real_b_logits_, fake_b_logits_);
    total_ = tape_.add(loss_c_, loss_b_);
    if (!std::isfinite(total())) throw ValidityError("discriminator loss diverged");
  }

  T loss_c() const { return tape_.value(loss_c_).data[0]; }
  T loss_b() const { return tape_.value(loss_b_).data[0]; }
  T total() const { return tape_.value(total_).data[0]; }
  T real_confidence() const {
    return (mean_sigmoid(tape_.value(real_c_logits_)) +
            mean_sigmoid(tape_.value(real_b_logits_))) / T(2);
  }
  T fake_confidence() const {
    return (mean_sigmoid(tape_.value(fake_c_logits_)) +
            mean_sigmoid(tape_.value(fake_b_logits_))) / T(2);
  }

  void backward() { tape_.backward(total_); }
  Tensor<T> grad_of(const Tensor<T>& t) const { return bind_d_.grad_of(t); }

  void fill(LossReport<T>& r) const {
    r.d_loss_c = loss_c();
    r.d_loss_b = loss_b();
    r.total_d = total();
    r.d_real_confidence = real_confidence();
    r.d_fake_confidence = fake_confidence();
  }

 private:
  Tape<T> tape_;
  Binder<T> bind_d_;
  typename Tape<T>::Id real_c_logits_, fake_c_logits_, real_b_logits_, fake_b_logits_;
  typename Tape<T>::Id loss_c_, loss_b_, total_;
};

// Spec-shaped convenience: derives the four discriminator samples from
// one (x, y) pair with all generator outputs detached.
template <typename T>
DiscriminatorObjective<T> make_discriminator_objective(ModelParams<T>& params,
                                                       const Tensor<T>& x,
                                                       const Tensor<T>& y) {
  Tape<T> tape;
  Binder<T> bind(tape, false);
  const auto z = compressor_forward(bind, tape.leaf(x), params.cpr);
  const auto fake_c = mapper_forward(bind, z, params.m1);
  const auto fake_b = mapper_forward(bind, tape.leaf(y), params.m2);
  return DiscriminatorObjective<T>(params, y, tape.value(fake_c),
                                   tape.value(z), tape.value(fake_b));
}

// Cycle-consistency term alone (both round trips), for tests and reports.
template <typename T>
T loss_cycle(ModelParams<T>& params, const Tensor<T>& x, const Tensor<T>& y) {
  Tape<T> tape;
  Binder<T> bind(tape, false);
  const auto xid = tape.leaf(x);
  const auto yid = tape.leaf(y);
  const auto z = compressor_forward(bind, xid, params.cpr);
  const auto c1 = tape.l1_loss(
      mapper_forward(bind, mapper_forward(bind, z, params.m1), params.m2), z);
  const auto c2 = tape.l1_loss(
      mapper_forward(bind, mapper_forward(bind, yid, params.m2), params.m1), yid);
  return tape.value(tape.add(c1, c2)).data[0];
}

enum class EquilibriumFlag { kConverged, kDDominant, kGDominant, kUndecided };

struct EquilibriumSummary {
  double real_confidence_avg = 0.0;
  double fake_confidence_avg = 0.0;
  EquilibriumFlag flag = EquilibriumFlag::kUndecided;
};

// Moving average of discriminator confidences over the last `window`
// reports; at equilibrium both sit near 0.5.
template <typename T>
EquilibriumSummary equilibrium_diagnostic(const std::vector<LossReport<T>>& reports,
                                          std::size_t window = 50,
                                          double band = 0.1) {
  EquilibriumSummary s;
  if (reports.size() < 2) return s;
  const std::size_t n = std::min(window, reports.size());
  for (std::size_t i = reports.size() - n; i < reports.size(); ++i) {
    s.real_confidence_avg += reports[i].d_real_confidence;
    s.fake_confidence_avg += reports[i].d_fake_confidence;
  }
  s.real_confidence_avg /= static_cast<double>(n);
  s.fake_confidence_avg /= static_cast<double>(n);
  const bool real_ok = std::abs(s.real_confidence_avg - 0.5) <= band;
  const bool fake_ok = std::abs(s.fake_confidence_avg - 0.5) <= band;
  if (real_ok && fake_ok)
    s.flag = EquilibriumFlag::kConverged;
  else if (s.real_confidence_avg > 0.5 + band && s.fake_confidence_avg < 0.5 - band)
    s.flag = EquilibriumFlag::kDDominant;
  else if (s.real_confidence_avg < 0.5 - band && s.fake_confidence_avg > 0.5 + band)
    s.flag = EquilibriumFlag::kGDominant;
  return s;
}

}  // namespace vgan
