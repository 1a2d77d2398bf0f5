#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "vgan/kernels.hpp"
#include "vgan/tensor.hpp"

namespace vgan {

// Reverse-mode tape. Nodes are appended in construction order, which is a
// valid topological order by definition; backward() walks it once in
// reverse and then consumes the graph.
template <typename T>
class Tape {
 public:
  using Id = int;

  Id leaf(Tensor<T> value, bool requires_grad = false) {
    if (!value.finite()) throw ValidityError("non-finite values in tensor");
    return push(std::move(value), requires_grad, nullptr);
  }

  const Tensor<T>& value(Id id) const { return nodes_[id].value; }
  const Tensor<T>& grad(Id id) const { return nodes_[id].grad; }
  bool requires_grad(Id id) const { return nodes_[id].requires_grad; }

  // New constant leaf holding a copy of the value; gradients stop here.
  Id detach(Id x) { return push(nodes_[x].value, false, nullptr); }

  // input [H,W,Cin] * weight [Cin,Cout] + bias [Cout] -> [H,W,Cout]
  Id conv1x1(Id x, Id w, Id b) {
    const Tensor<T>& xv = nodes_[x].value;
    const Tensor<T>& wv = nodes_[w].value;
    const Tensor<T>& bv = nodes_[b].value;
    if (xv.shape.size() != 3 || wv.shape.size() != 2 || bv.shape.size() != 1)
      throw DimensionError("conv1x1: expected ranks 3/2/1");
    const int h = xv.shape[0], wd = xv.shape[1];
    const int cin = xv.shape[2], cout = wv.shape[1];
    if (wv.shape[0] != cin || bv.shape[0] != cout)
      throw DimensionError("conv1x1: channel mismatch " + shape_str(xv.shape) +
                           " vs " + shape_str(wv.shape));
    Tensor<T> out({h, wd, cout});
    const std::size_t npix = static_cast<std::size_t>(h) * wd;
    for (std::size_t p = 0; p < npix; ++p) {
      T* o = out.data.data() + p * cout;
      for (int c = 0; c < cout; ++c) o[c] = bv.data[c];
      const T* xi = xv.data.data() + p * cin;
      for (int ci = 0; ci < cin; ++ci)
        kernels::axpy(xi[ci], wv.data.data() + static_cast<std::size_t>(ci) * cout, o, cout);
    }
    Id y = push(std::move(out), any_grad({x, w, b}), nullptr);
    nodes_[y].backprop = [this, x, w, b, y, h, wd, cin, cout] {
      const Tensor<T>& g = nodes_[y].grad;
      const Tensor<T>& xv2 = nodes_[x].value;
      const Tensor<T>& wv2 = nodes_[w].value;
      const std::size_t npix2 = static_cast<std::size_t>(h) * wd;
      for (std::size_t p = 0; p < npix2; ++p) {
        const T* go = g.data.data() + p * cout;
        const T* xi = xv2.data.data() + p * cin;
        if (nodes_[x].requires_grad) {
          T* gx = nodes_[x].grad.data.data() + p * cin;
          for (int ci = 0; ci < cin; ++ci)
            gx[ci] += kernels::dot(go, wv2.data.data() + static_cast<std::size_t>(ci) * cout, cout);
        }
        if (nodes_[w].requires_grad) {
          T* gw = nodes_[w].grad.data.data();
          for (int ci = 0; ci < cin; ++ci)
            kernels::axpy(xi[ci], go, gw + static_cast<std::size_t>(ci) * cout, cout);
        }
        if (nodes_[b].requires_grad)
          kernels::axpy(T(1), go, nodes_[b].grad.data.data(), cout);
      }
    };
    return y;
  }

  // 4x4 kernel, stride 2, zero pad 1; halves both spatial extents.
  // input [H,W,Cin], weight [4,4,Cin,Cout], bias [Cout] -> [H/2,W/2,Cout]
  Id conv_down(Id x, Id w, Id b) {
    const Tensor<T>& xv = nodes_[x].value;
    const Tensor<T>& wv = nodes_[w].value;
    const Tensor<T>& bv = nodes_[b].value;
    if (xv.shape.size() != 3 || wv.shape.size() != 4 || bv.shape.size() != 1)
      throw DimensionError("conv_down: expected ranks 3/4/1");
    const int h = xv.shape[0], wd = xv.shape[1], cin = xv.shape[2];
    if (h % 2 != 0 || wd % 2 != 0)
      throw DimensionError("conv_down: spatial extents must be even, got " +
                           shape_str(xv.shape));
    if (wv.shape[0] != 4 || wv.shape[1] != 4 || wv.shape[2] != cin)
      throw DimensionError("conv_down: weight shape " + shape_str(wv.shape));
    const int cout = wv.shape[3];
    if (bv.shape[0] != cout) throw DimensionError("conv_down: bias mismatch");
    const int oh = h / 2, ow = wd / 2;
    Tensor<T> out({oh, ow, cout});
    for (int r = 0; r < oh; ++r)
      for (int c = 0; c < ow; ++c) {
        T* o = out.data.data() + (static_cast<std::size_t>(r) * ow + c) * cout;
        for (int k = 0; k < cout; ++k) o[k] = bv.data[k];
        for (int kh = 0; kh < 4; ++kh) {
          const int ir = r * 2 + kh - 1;
          if (ir < 0 || ir >= h) continue;
          for (int kw = 0; kw < 4; ++kw) {
            const int ic = c * 2 + kw - 1;
            if (ic < 0 || ic >= wd) continue;
            const T* xi = xv.data.data() + (static_cast<std::size_t>(ir) * wd + ic) * cin;
            const T* wk = wv.data.data() + ((static_cast<std::size_t>(kh) * 4 + kw) * cin) * cout;
            for (int ci = 0; ci < cin; ++ci)
              kernels::axpy(xi[ci], wk + static_cast<std::size_t>(ci) * cout, o, cout);
          }
        }
      }
    Id y = push(std::move(out), any_grad({x, w, b}), nullptr);
    nodes_[y].backprop = [this, x, w, b, y, h, wd, cin, cout, oh, ow] {
      const Tensor<T>& g = nodes_[y].grad;
      const Tensor<T>& xv2 = nodes_[x].value;
      const Tensor<T>& wv2 = nodes_[w].value;
      for (int r = 0; r < oh; ++r)
        for (int c = 0; c < ow; ++c) {
          const T* go = g.data.data() + (static_cast<std::size_t>(r) * ow + c) * cout;
          if (nodes_[b].requires_grad)
            kernels::axpy(T(1), go, nodes_[b].grad.data.data(), cout);
          for (int kh = 0; kh < 4; ++kh) {
            const int ir = r * 2 + kh - 1;
            if (ir < 0 || ir >= h) continue;
            for (int kw = 0; kw < 4; ++kw) {
              const int ic = c * 2 + kw - 1;
              if (ic < 0 || ic >= wd) continue;
              const std::size_t xoff = (static_cast<std::size_t>(ir) * wd + ic) * cin;
              const std::size_t woff = (static_cast<std::size_t>(kh) * 4 + kw) * cin * cout;
              const T* xi = xv2.data.data() + xoff;
              for (int ci = 0; ci < cin; ++ci) {
                const T* wk = wv2.data.data() + woff + static_cast<std::size_t>(ci) * cout;
                if (nodes_[x].requires_grad)
                  nodes_[x].grad.data[xoff + ci] += kernels::dot(go, wk, cout);
                if (nodes_[w].requires_grad)
                  kernels::axpy(xi[ci], go,
                                nodes_[w].grad.data.data() + woff + static_cast<std::size_t>(ci) * cout,
                                cout);
              }
            }
          }
        }
    };
    return y;
  }

  // Per-channel spatial standardization with affine gain/shift.
  Id instance_norm(Id x, Id gain, Id shift, T eps) {
    return norm_impl(x, gain, shift, eps, 2);
  }

  // At batch size 1 the statistics coincide with instance_norm; kept as a
  // separate name so discriminator parameters are labeled per their role.
  Id batch_norm(Id x, Id gain, Id shift, T eps) {
    return norm_impl(x, gain, shift, eps, 2);
  }

 private:
  Id norm_impl(Id x, Id gain, Id shift, T eps, std::size_t min_pixels) {
    const Tensor<T>& xv = nodes_[x].value;
    if (xv.shape.size() != 3) throw DimensionError("instance_norm: rank 3 input");
    const int h = xv.shape[0], wd = xv.shape[1], ch = xv.shape[2];
    const std::size_t npix = static_cast<std::size_t>(h) * wd;
    if (npix < min_pixels)
      throw DegenerateError("instance_norm: needs >= 2 pixels");
    const Tensor<T>& gv = nodes_[gain].value;
    const Tensor<T>& sv = nodes_[shift].value;
    if (gv.shape != Shape{ch} || sv.shape != Shape{ch})
      throw DimensionError("instance_norm: gain/shift must have C extents");

    auto stats = std::make_shared<Tensor<T>>(Shape{3, ch});  // mean, inv_std, (unused)
    T* mean = stats->data.data();
    T* istd = stats->data.data() + ch;
    for (std::size_t p = 0; p < npix; ++p)
      kernels::axpy(T(1), xv.data.data() + p * ch, mean, ch);
    for (int c = 0; c < ch; ++c) mean[c] /= static_cast<T>(npix);
    std::vector<T> var(ch, T(0));
    for (std::size_t p = 0; p < npix; ++p) {
      const T* xi = xv.data.data() + p * ch;
      for (int c = 0; c < ch; ++c) {
        const T d = xi[c] - mean[c];
        var[c] += d * d;
      }
    }
    for (int c = 0; c < ch; ++c)
      istd[c] = T(1) / std::sqrt(var[c] / static_cast<T>(npix) + eps);

    Tensor<T> out(xv.shape);
    for (std::size_t p = 0; p < npix; ++p) {
      const T* xi = xv.data.data() + p * ch;
      T* o = out.data.data() + p * ch;
      for (int c = 0; c < ch; ++c)
        o[c] = (xi[c] - mean[c]) * istd[c] * gv.data[c] + sv.data[c];
    }
    Id y = push(std::move(out), any_grad({x, gain, shift}), nullptr);
    nodes_[y].backprop = [this, x, gain, shift, y, npix, ch, stats] {
      const Tensor<T>& g = nodes_[y].grad;
      const Tensor<T>& xv2 = nodes_[x].value;
      const Tensor<T>& gv2 = nodes_[gain].value;
      const T* mean2 = stats->data.data();
      const T* istd2 = stats->data.data() + ch;
      // Per channel: xhat = (x-mu)*istd; dgain = sum(dy*xhat); dshift = sum(dy);
      // dx = gain*istd*(dy - mean(dy) - xhat*mean(dy*xhat)).
      std::vector<T> sum_dy(ch, T(0)), sum_dyx(ch, T(0));
      for (std::size_t p = 0; p < npix; ++p) {
        const T* go = g.data.data() + p * ch;
        const T* xi = xv2.data.data() + p * ch;
        for (int c = 0; c < ch; ++c) {
          sum_dy[c] += go[c];
          sum_dyx[c] += go[c] * (xi[c] - mean2[c]) * istd2[c];
        }
      }
      if (nodes_[gain].requires_grad)
        for (int c = 0; c < ch; ++c) nodes_[gain].grad.data[c] += sum_dyx[c];
      if (nodes_[shift].requires_grad)
        for (int c = 0; c < ch; ++c) nodes_[shift].grad.data[c] += sum_dy[c];
      if (nodes_[x].requires_grad) {
        const T inv_n = T(1) / static_cast<T>(npix);
        for (std::size_t p = 0; p < npix; ++p) {
          const T* go = g.data.data() + p * ch;
          const T* xi = xv2.data.data() + p * ch;
          T* gx = nodes_[x].grad.data.data() + p * ch;
          for (int c = 0; c < ch; ++c) {
            const T xhat = (xi[c] - mean2[c]) * istd2[c];
            gx[c] += gv2.data[c] * istd2[c] *
                     (go[c] - sum_dy[c] * inv_n - xhat * sum_dyx[c] * inv_n);
          }
        }
      }
    };
    return y;
  }

 public:
  Id tanh_op(Id x) {
    const Tensor<T>& xv = nodes_[x].value;
    Tensor<T> out(xv.shape);
    for (std::size_t i = 0; i < xv.size(); ++i) out.data[i] = std::tanh(xv.data[i]);
    Id y = push(std::move(out), nodes_[x].requires_grad, nullptr);
    nodes_[y].backprop = [this, x, y] {
      if (!nodes_[x].requires_grad) return;
      const Tensor<T>& g = nodes_[y].grad;
      const Tensor<T>& yv = nodes_[y].value;
      for (std::size_t i = 0; i < g.size(); ++i)
        nodes_[x].grad.data[i] += g.data[i] * (T(1) - yv.data[i] * yv.data[i]);
    };
    return y;
  }

  // slope 0 gives plain ReLU; subgradient at 0 follows the right derivative.
  Id leaky_relu(Id x, T slope) {
    const Tensor<T>& xv = nodes_[x].value;
    Tensor<T> out(xv.shape);
    kernels::leaky_relu(xv.data.data(), out.data.data(), slope, xv.size());
    Id y = push(std::move(out), nodes_[x].requires_grad, nullptr);
    nodes_[y].backprop = [this, x, y, slope] {
      if (!nodes_[x].requires_grad) return;
      const Tensor<T>& g = nodes_[y].grad;
      const Tensor<T>& xv2 = nodes_[x].value;
      for (std::size_t i = 0; i < g.size(); ++i)
        nodes_[x].grad.data[i] += g.data[i] * (xv2.data[i] >= T(0) ? T(1) : slope);
    };
    return y;
  }

  Id relu(Id x) { return leaky_relu(x, T(0)); }

  // Mean two-class softmax cross-entropy against an all-ones or all-zeros
  // target, in log-sum-exp form: softplus(-l) for label 1, softplus(l) for 0.
  Id bce_logits(Id logits, bool target_ones) {
    const Tensor<T>& lv = nodes_[logits].value;
    if (lv.size() == 0) throw DimensionError("bce_logits: empty logits");
    const T sign = target_ones ? T(-1) : T(1);
    T acc = 0;
    for (std::size_t i = 0; i < lv.size(); ++i) {
      const T t = sign * lv.data[i];
      acc += std::max(t, T(0)) + std::log1p(std::exp(-std::abs(t)));
    }
    Tensor<T> out({1});
    out.data[0] = acc / static_cast<T>(lv.size());
    Id y = push(std::move(out), nodes_[logits].requires_grad, nullptr);
    nodes_[y].backprop = [this, logits, y, target_ones] {
      if (!nodes_[logits].requires_grad) return;
      const T g = nodes_[y].grad.data[0];
      const Tensor<T>& lv2 = nodes_[logits].value;
      const T target = target_ones ? T(1) : T(0);
      const T inv_n = T(1) / static_cast<T>(lv2.size());
      for (std::size_t i = 0; i < lv2.size(); ++i) {
        const T s = T(1) / (T(1) + std::exp(-lv2.data[i]));
        nodes_[logits].grad.data[i] += g * (s - target) * inv_n;
      }
    };
    return y;
  }

  // Mean absolute difference; subgradient 0 at ties.
  Id l1_loss(Id a, Id b) {
    const Tensor<T>& av = nodes_[a].value;
    const Tensor<T>& bv = nodes_[b].value;
    if (av.shape != bv.shape)
      throw DimensionError("l1_loss: shape mismatch " + shape_str(av.shape) +
                           " vs " + shape_str(bv.shape));
    T acc = 0;
    for (std::size_t i = 0; i < av.size(); ++i) acc += std::abs(av.data[i] - bv.data[i]);
    Tensor<T> out({1});
    out.data[0] = acc / static_cast<T>(av.size());
    Id y = push(std::move(out), any_grad({a, b}), nullptr);
    nodes_[y].backprop = [this, a, b, y] {
      const T g = nodes_[y].grad.data[0];
      const Tensor<T>& av2 = nodes_[a].value;
      const Tensor<T>& bv2 = nodes_[b].value;
      const T inv_n = T(1) / static_cast<T>(av2.size());
      for (std::size_t i = 0; i < av2.size(); ++i) {
        const T d = av2.data[i] - bv2.data[i];
        const T s = (d > T(0)) ? T(1) : (d < T(0) ? T(-1) : T(0));
        if (nodes_[a].requires_grad) nodes_[a].grad.data[i] += g * s * inv_n;
        if (nodes_[b].requires_grad) nodes_[b].grad.data[i] -= g * s * inv_n;
      }
    };
    return y;
  }

  Id add(Id a, Id b) {
    const Tensor<T>& av = nodes_[a].value;
    const Tensor<T>& bv = nodes_[b].value;
    if (av.shape != bv.shape) throw DimensionError("add: shape mismatch");
    Tensor<T> out(av.shape);
    for (std::size_t i = 0; i < av.size(); ++i) out.data[i] = av.data[i] + bv.data[i];
    Id y = push(std::move(out), any_grad({a, b}), nullptr);
    nodes_[y].backprop = [this, a, b, y] {
      const Tensor<T>& g = nodes_[y].grad;
      if (nodes_[a].requires_grad)
        for (std::size_t i = 0; i < g.size(); ++i) nodes_[a].grad.data[i] += g.data[i];
      if (nodes_[b].requires_grad)
        for (std::size_t i = 0; i < g.size(); ++i) nodes_[b].grad.data[i] += g.data[i];
    };
    return y;
  }

  Id scale(Id x, T factor) {
    const Tensor<T>& xv = nodes_[x].value;
    Tensor<T> out(xv.shape);
    for (std::size_t i = 0; i < xv.size(); ++i) out.data[i] = factor * xv.data[i];
    Id y = push(std::move(out), nodes_[x].requires_grad, nullptr);
    nodes_[y].backprop = [this, x, y, factor] {
      if (!nodes_[x].requires_grad) return;
      const Tensor<T>& g = nodes_[y].grad;
      for (std::size_t i = 0; i < g.size(); ++i)
        nodes_[x].grad.data[i] += factor * g.data[i];
    };
    return y;
  }

  Id sum(Id x) {
    const Tensor<T>& xv = nodes_[x].value;
    Tensor<T> out({1});
    T acc = 0;
    for (T v : xv.data) acc += v;
    out.data[0] = acc;
    Id y = push(std::move(out), nodes_[x].requires_grad, nullptr);
    nodes_[y].backprop = [this, x, y] {
      if (!nodes_[x].requires_grad) return;
      const T g = nodes_[y].grad.data[0];
      for (std::size_t i = 0; i < nodes_[x].grad.size(); ++i)
        nodes_[x].grad.data[i] += g;
    };
    return y;
  }

  Id mul(Id a, Id b) {
    const Tensor<T>& av = nodes_[a].value;
    const Tensor<T>& bv = nodes_[b].value;
    if (av.shape != bv.shape) throw DimensionError("mul: shape mismatch");
    Tensor<T> out(av.shape);
    for (std::size_t i = 0; i < av.size(); ++i) out.data[i] = av.data[i] * bv.data[i];
    Id y = push(std::move(out), any_grad({a, b}), nullptr);
    nodes_[y].backprop = [this, a, b, y] {
      const Tensor<T>& g = nodes_[y].grad;
      if (nodes_[a].requires_grad)
        for (std::size_t i = 0; i < g.size(); ++i)
          nodes_[a].grad.data[i] += g.data[i] * nodes_[b].value.data[i];
      if (nodes_[b].requires_grad)
        for (std::size_t i = 0; i < g.size(); ++i)
          nodes_[b].grad.data[i] += g.data[i] * nodes_[a].value.data[i];
    };
    return y;
  }

  // Flatten to a vector; shares no storage but forwards gradients 1:1.
  Id flatten(Id x) {
    const Tensor<T>& xv = nodes_[x].value;
    Tensor<T> out({static_cast<int>(xv.size())});
    out.data = xv.data;
    Id y = push(std::move(out), nodes_[x].requires_grad, nullptr);
    nodes_[y].backprop = [this, x, y] {
      if (!nodes_[x].requires_grad) return;
      const Tensor<T>& g = nodes_[y].grad;
      for (std::size_t i = 0; i < g.size(); ++i) nodes_[x].grad.data[i] += g.data[i];
    };
    return y;
  }

  void backward(Id loss) {
    if (consumed_) throw ValidityError("backward: graph already consumed");
    if (!nodes_[loss].value.scalar())
      throw DimensionError("backward: loss must be scalar");
    consumed_ = true;
    for (auto& n : nodes_)
      n.grad = Tensor<T>::zeros(n.value.shape);
    nodes_[loss].grad.data[0] = T(1);
    for (Id id = static_cast<Id>(nodes_.size()) - 1; id >= 0; --id)
      if (nodes_[id].backprop && nodes_[id].requires_grad) nodes_[id].backprop();
  }

  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor<T> value;
    Tensor<T> grad;
    bool requires_grad = false;
    std::function<void()> backprop;
  };

  bool any_grad(std::initializer_list<Id> ids) const {
    for (Id id : ids)
      if (nodes_[id].requires_grad) return true;
    return false;
  }

  Id push(Tensor<T> value, bool requires_grad, std::function<void()> backprop) {
    nodes_.push_back(Node{std::move(value), Tensor<T>(), requires_grad,
                          std::move(backprop)});
    return static_cast<Id>(nodes_.size()) - 1;
  }

  std::vector<Node> nodes_;
  bool consumed_ = false;
};

using TapeF = Tape<float>;
using TapeD = Tape<double>;

}  // namespace vgan
