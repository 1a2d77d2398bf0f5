#pragma once

#include <array>
#include <map>
#include <string>

#include "vgan/tape.hpp"

namespace vgan {

struct NetConfig {
  int bands = 191;
  int gen_width = 64;
  std::array<int, 4> disc_widths = {64, 128, 256, 512};

  static NetConfig tiny(int bands) {
    NetConfig c;
    c.bands = bands;
    c.gen_width = 16;
    c.disc_widths = {8, 8, 8, 8};
    return c;
  }
};

inline constexpr float kNormEps = 1e-5f;
inline constexpr float kLeakySlope = 0.2f;
inline constexpr float kInitStd = 0.02f;

// Two stride-1 1x1 convolutions; instance norm after the first only, tanh
// on the output.
template <typename T>
struct CompressorParams {
  Tensor<T> w1, b1, gain1, shift1, w2, b2;

  template <typename F>
  void visit(const std::string& p, F&& f) {
    f(p + "conv1.w", w1);
    f(p + "conv1.b", b1);
    f(p + "norm1.gain", gain1);
    f(p + "norm1.shift", shift1);
    f(p + "conv2.w", w2);
    f(p + "conv2.b", b2);
  }
};

template <typename T>
struct ResBlockParams {
  Tensor<T> w1, b1, gain1, shift1, w2, b2, gain2, shift2;

  template <typename F>
  void visit(const std::string& p, F&& f) {
    f(p + "conv1.w", w1);
    f(p + "conv1.b", b1);
    f(p + "norm1.gain", gain1);
    f(p + "norm1.shift", shift1);
    f(p + "conv2.w", w2);
    f(p + "conv2.b", b2);
    f(p + "norm2.gain", gain2);
    f(p + "norm2.shift", shift2);
  }
};

// Stem conv + instance norm, 5 residual blocks, head conv with tanh.
template <typename T>
struct MapperParams {
  Tensor<T> stem_w, stem_b, stem_gain, stem_shift;
  std::array<ResBlockParams<T>, 5> blocks;
  Tensor<T> head_w, head_b;

  template <typename F>
  void visit(const std::string& p, F&& f) {
    f(p + "stem.w", stem_w);
    f(p + "stem.b", stem_b);
    f(p + "stem_norm.gain", stem_gain);
    f(p + "stem_norm.shift", stem_shift);
    for (std::size_t i = 0; i < blocks.size(); ++i)
      blocks[i].visit(p + "res" + std::to_string(i) + ".", f);
    f(p + "head.w", head_w);
    f(p + "head.b", head_b);
  }
};

// Four 4x4/stride-2 convolutions; batch norm on layers 2-4, LeakyReLU after
// each, no output activation.
template <typename T>
struct DiscriminatorParams {
  std::array<Tensor<T>, 4> w, b;
  std::array<Tensor<T>, 3> gain, shift;

  template <typename F>
  void visit(const std::string& p, F&& f) {
    for (int i = 0; i < 4; ++i) {
      f(p + "conv" + std::to_string(i) + ".w", w[i]);
      f(p + "conv" + std::to_string(i) + ".b", b[i]);
      // The last convolution emits raw logits, so only the first three
      // layers carry normalization parameters.
      if (i < 3) {
        f(p + "bn" + std::to_string(i) + ".gain", gain[i]);
        f(p + "bn" + std::to_string(i) + ".shift", shift[i]);
      }
    }
  }
};

template <typename T>
struct ModelParams {
  NetConfig config;
  CompressorParams<T> cpr;
  MapperParams<T> m1, m2;
  DiscriminatorParams<T> d_c, d_b;

  template <typename F>
  void visit_generators(F&& f) {
    cpr.visit("cpr.", f);
    m1.visit("m1.", f);
    m2.visit("m2.", f);
  }
  template <typename F>
  void visit_discriminators(F&& f) {
    d_c.visit("d_c.", f);
    d_b.visit("d_b.", f);
  }
  template <typename F>
  void visit_all(F&& f) {
    visit_generators(f);
    visit_discriminators(f);
  }
};

// Weights ~ Normal(0, 0.02), norm gains 1, shifts 0, biases 0.
template <typename T>
ModelParams<T> init_params(const NetConfig& config, unsigned seed) {
  std::mt19937 rng(seed);
  ModelParams<T> p;
  p.config = config;
  const int w = config.gen_width;
  const T std_ = T(kInitStd);

  auto conv1x1 = [&](int cin, int cout, Tensor<T>& wt, Tensor<T>& bt) {
    wt = Tensor<T>::normal({cin, cout}, std_, rng);
    bt = Tensor<T>::zeros({cout});
  };
  auto norm = [&](int c, Tensor<T>& g, Tensor<T>& s) {
    g = Tensor<T>::full({c}, T(1));
    s = Tensor<T>::zeros({c});
  };

  conv1x1(config.bands, w, p.cpr.w1, p.cpr.b1);
  norm(w, p.cpr.gain1, p.cpr.shift1);
  conv1x1(w, 3, p.cpr.w2, p.cpr.b2);

  for (MapperParams<T>* m : {&p.m1, &p.m2}) {
    conv1x1(3, w, m->stem_w, m->stem_b);
    norm(w, m->stem_gain, m->stem_shift);
    for (auto& blk : m->blocks) {
      conv1x1(w, w, blk.w1, blk.b1);
      norm(w, blk.gain1, blk.shift1);
      conv1x1(w, w, blk.w2, blk.b2);
      norm(w, blk.gain2, blk.shift2);
    }
    conv1x1(w, 3, m->head_w, m->head_b);
  }

  for (DiscriminatorParams<T>* d : {&p.d_c, &p.d_b}) {
    int cin = 3;
    for (int i = 0; i < 4; ++i) {
      const int cout = config.disc_widths[static_cast<std::size_t>(i)];
      d->w[static_cast<std::size_t>(i)] =
          Tensor<T>::normal({4, 4, cin, cout}, std_, rng);
      d->b[static_cast<std::size_t>(i)] = Tensor<T>::zeros({cout});
      if (i < 3) norm(cout, d->gain[i], d->shift[i]);
      cin = cout;
    }
  }
  return p;
}

// Inserts parameter tensors into a tape as (optionally differentiable)
// leaves, deduplicating by address so a tensor used on several paths maps
// to one leaf and its gradients accumulate.
template <typename T>
class Binder {
 public:
  using Id = typename Tape<T>::Id;

  Binder(Tape<T>& tape, bool with_grad) : tape_(tape), with_grad_(with_grad) {}

  Id operator()(Tensor<T>& t) {
    auto it = ids_.find(&t);
    if (it != ids_.end()) return it->second;
    Id id = tape_.leaf(t, with_grad_);
    ids_.emplace(&t, id);
    return id;
  }

  Tape<T>& tape() { return tape_; }

  // Gradient of a bound tensor after backward; zeros if never bound.
  Tensor<T> grad_of(const Tensor<T>& t) const {
    auto it = ids_.find(const_cast<Tensor<T>*>(&t));
    if (it == ids_.end()) return Tensor<T>::zeros(t.shape);
    return tape_.grad(it->second);
  }

 private:
  Tape<T>& tape_;
  bool with_grad_;
  std::map<Tensor<T>*, Id> ids_;
};

template <typename T>
typename Tape<T>::Id compressor_forward(Binder<T>& bind, typename Tape<T>::Id x,
                                        CompressorParams<T>& p) {
  Tape<T>& tp = bind.tape();
  if (tp.value(x).shape.size() != 3 ||
      tp.value(x).shape[2] != p.w1.shape[0])
    throw DimensionError("compressor: band count mismatch, input " +
                         shape_str(tp.value(x).shape));
  auto h = tp.conv1x1(x, bind(p.w1), bind(p.b1));
  h = tp.instance_norm(h, bind(p.gain1), bind(p.shift1), T(kNormEps));
  h = tp.relu(h);
  return tp.tanh_op(tp.conv1x1(h, bind(p.w2), bind(p.b2)));
}

template <typename T>
typename Tape<T>::Id mapper_forward(Binder<T>& bind, typename Tape<T>::Id img,
                                    MapperParams<T>& p) {
  Tape<T>& tp = bind.tape();
  if (tp.value(img).shape.size() != 3 || tp.value(img).shape[2] != 3)
    throw DimensionError("mapper: expected 3-channel input, got " +
                         shape_str(tp.value(img).shape));
  auto h = tp.conv1x1(img, bind(p.stem_w), bind(p.stem_b));
  h = tp.instance_norm(h, bind(p.stem_gain), bind(p.stem_shift), T(kNormEps));
  h = tp.relu(h);
  for (auto& blk : p.blocks) {
    auto t = tp.conv1x1(h, bind(blk.w1), bind(blk.b1));
    t = tp.instance_norm(t, bind(blk.gain1), bind(blk.shift1), T(kNormEps));
    t = tp.relu(t);
    t = tp.conv1x1(t, bind(blk.w2), bind(blk.b2));
    t = tp.instance_norm(t, bind(blk.gain2), bind(blk.shift2), T(kNormEps));
    h = tp.add(h, t);
  }
  return tp.tanh_op(tp.conv1x1(h, bind(p.head_w), bind(p.head_b)));
}

template <typename T>
typename Tape<T>::Id discriminator_forward(Binder<T>& bind,
                                           typename Tape<T>::Id img,
                                           DiscriminatorParams<T>& p) {
  Tape<T>& tp = bind.tape();
  const Shape& s = tp.value(img).shape;
  if (s.size() != 3 || s[2] != 3)
    throw DimensionError("discriminator: expected [H,W,3] input");
  if (s[0] % 16 != 0 || s[1] % 16 != 0)
    throw DimensionError("discriminator: spatial extents must be divisible "
                         "by 16, got " + shape_str(s));
  auto h = img;
  for (int i = 0; i < 3; ++i) {
    h = tp.conv_down(h, bind(p.w[static_cast<std::size_t>(i)]),
                     bind(p.b[static_cast<std::size_t>(i)]));
    h = tp.batch_norm(h, bind(p.gain[static_cast<std::size_t>(i)]),
                      bind(p.shift[static_cast<std::size_t>(i)]),
                      T(kNormEps));
    h = tp.leaky_relu(h, T(kLeakySlope));
  }
  // Raw logits from the final convolution; no normalization or activation.
  h = tp.conv_down(h, bind(p.w[3]), bind(p.b[3]));
  return tp.flatten(h);
}

// Convenience no-grad forward on a scratch tape (inference path).
template <typename T>
Tensor<T> eval_compressor(ModelParams<T>& params, const Tensor<T>& x) {
  Tape<T> tape;
  Binder<T> bind(tape, false);
  return tape.value(compressor_forward(bind, tape.leaf(x), params.cpr));
}

template <typename T>
Tensor<T> eval_visualize(ModelParams<T>& params, const Tensor<T>& x) {
  Tape<T> tape;
  Binder<T> bind(tape, false);
  auto z = compressor_forward(bind, tape.leaf(x), params.cpr);
  return tape.value(mapper_forward(bind, z, params.m1));
}

}  // namespace vgan
