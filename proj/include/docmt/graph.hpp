// Copyright 2026 the docmt authors
// SPDX-License-Identifier: Apache-2.0
//
// Reverse-mode autodiff over an eagerly evaluated tape. Nodes are appended in
// topological order (an op can only reference ids that already exist), values
// are computed at build time, and backward() walks the tape once in reverse.
// A graph is confined to one thread; disjoint graphs are independent.

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "docmt/tensor.hpp"

namespace docmt {

template <typename T>
class GraphT {
 public:
  using NodeId = std::size_t;
  using Tensor = TensorT<T>;

  // ---- leaves ----

  NodeId leaf(Tensor v, bool requires_grad = false) {
    return push("leaf", std::make_shared<const Tensor>(std::move(v)), {}, requires_grad, nullptr);
  }

  // Aliases external storage; the caller keeps *v alive for the graph's life.
  NodeId leaf_ref(const Tensor* v, bool requires_grad = false) {
    return push("leaf", std::shared_ptr<const Tensor>(std::shared_ptr<void>(), v), {}, requires_grad, nullptr);
  }

  // ---- elementwise / linear ----

  NodeId add(NodeId a, NodeId b) {
    const Tensor &x = value(a), &y = value(b);
    if (!x.same_shape(y)) throw ShapeError("add: " + shape_str(x.shape) + " vs " + shape_str(y.shape));
    Tensor out = x;
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] += y.data[i];
    return push("add", wrap(std::move(out)), {a, b}, needs(a, b), [a, b](GraphT& g, NodeId self) {
      const Tensor& go = g.grad_at(self);
      g.accumulate(a, go);
      g.accumulate(b, go);
    });
  }

  NodeId mul(NodeId a, NodeId b) {
    const Tensor &x = value(a), &y = value(b);
    if (!x.same_shape(y)) throw ShapeError("mul: shape mismatch");
    Tensor out = x;
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] *= y.data[i];
    return push("mul", wrap(std::move(out)), {a, b}, needs(a, b), [a, b](GraphT& g, NodeId self) {
      const Tensor& go = g.grad_at(self);
      if (g.wants(a)) {
        Tensor ga = go;
        const Tensor& y2 = g.value(b);
        for (std::size_t i = 0; i < ga.size(); ++i) ga.data[i] *= y2.data[i];
        g.accumulate(a, ga);
      }
      if (g.wants(b)) {
        Tensor gb = go;
        const Tensor& x2 = g.value(a);
        for (std::size_t i = 0; i < gb.size(); ++i) gb.data[i] *= x2.data[i];
        g.accumulate(b, gb);
      }
    });
  }

  NodeId scale(NodeId a, T c) {
    Tensor out = value(a);
    for (T& v : out.data) v *= c;
    return push("scale", wrap(std::move(out)), {a}, needs(a), [a, c](GraphT& g, NodeId self) {
      Tensor ga = g.grad_at(self);
      for (T& v : ga.data) v *= c;
      g.accumulate(a, ga);
    });
  }

  // x [N,D] + b [D], broadcast over rows.
  NodeId add_bias(NodeId x, NodeId b) {
    const Tensor &xv = value(x), &bv = value(b);
    detail::check_2d(xv, "add_bias");
    if (bv.size() != xv.cols()) throw ShapeError("add_bias: bias size mismatch");
    Tensor out = xv;
    const std::size_t n = xv.rows(), d = xv.cols();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < d; ++j) out.data[i * d + j] += bv.data[j];
    return push("add_bias", wrap(std::move(out)), {x, b}, needs(x, b), [x, b, n, d](GraphT& g, NodeId self) {
      const Tensor& go = g.grad_at(self);
      g.accumulate(x, go);
      if (g.wants(b)) {
        Tensor gb(g.value(b).shape);
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < d; ++j) gb.data[j] += go.data[i * d + j];
        g.accumulate(b, gb);
      }
    });
  }

  NodeId matmul(NodeId a, NodeId b) {
    Tensor out = docmt::matmul(value(a), value(b));
    return push("matmul", wrap(std::move(out)), {a, b}, needs(a, b), [a, b](GraphT& g, NodeId self) {
      const Tensor& go = g.grad_at(self);
      if (g.wants(a)) g.accumulate(a, docmt::matmul_nt(go, g.value(b)));
      if (g.wants(b)) g.accumulate(b, docmt::matmul_tn(g.value(a), go));
    });
  }

  // a [M,K] x b[N,K]^T
  NodeId matmul_nt(NodeId a, NodeId b) {
    Tensor out = docmt::matmul_nt(value(a), value(b));
    return push("matmul_nt", wrap(std::move(out)), {a, b}, needs(a, b), [a, b](GraphT& g, NodeId self) {
      const Tensor& go = g.grad_at(self);
      if (g.wants(a)) g.accumulate(a, docmt::matmul(go, g.value(b)));
      if (g.wants(b)) g.accumulate(b, docmt::matmul_tn(go, g.value(a)));
    });
  }

  // Gathers rows of a [V,D] table; doubles as the embedding lookup and the
  // masked-position selection over encoder states. Backward scatter-adds.
  // Tensors cannot be empty, so callers guard the empty-id case themselves.
  NodeId rows(NodeId table, std::vector<std::int32_t> ids) {
    const Tensor& tv = value(table);
    detail::check_2d(tv, "rows");
    if (ids.empty()) throw ShapeError("rows: empty id list");
    const std::size_t d = tv.cols();
    for (std::int32_t id : ids)
      if (id < 0 || static_cast<std::size_t>(id) >= tv.rows())
        throw IdOutOfRange("rows: id " + std::to_string(id) + " out of range [0," + std::to_string(tv.rows()) + ")");
    Tensor out({ids.size(), d});
    for (std::size_t r = 0; r < ids.size(); ++r)
      std::copy_n(tv.data.data() + static_cast<std::size_t>(ids[r]) * d, d, out.data.data() + r * d);
    return push("rows", wrap(std::move(out)), {table}, needs(table),
                [table, ids = std::move(ids), d](GraphT& g, NodeId self) {
                  const Tensor& go = g.grad_at(self);
                  Tensor& gt = g.grad_buffer(table);
                  for (std::size_t r = 0; r < ids.size(); ++r) {
                    T* dst = gt.data.data() + static_cast<std::size_t>(ids[r]) * d;
                    const T* src = go.data.data() + r * d;
                    for (std::size_t j = 0; j < d; ++j) dst[j] += src[j];
                  }
                });
  }

  NodeId slice_cols(NodeId x, std::size_t c0, std::size_t c1) {
    const Tensor& xv = value(x);
    detail::check_2d(xv, "slice_cols");
    if (c0 >= c1 || c1 > xv.cols()) throw ShapeError("slice_cols: bad range");
    const std::size_t n = xv.rows(), d = xv.cols(), w = c1 - c0;
    Tensor out({n, w});
    for (std::size_t i = 0; i < n; ++i)
      std::copy_n(xv.data.data() + i * d + c0, w, out.data.data() + i * w);
    return push("slice_cols", wrap(std::move(out)), {x}, needs(x),
                [x, c0, n, d, w](GraphT& g, NodeId self) {
                  const Tensor& go = g.grad_at(self);
                  Tensor& gx = g.grad_buffer(x);
                  for (std::size_t i = 0; i < n; ++i) {
                    T* dst = gx.data.data() + i * d + c0;
                    const T* src = go.data.data() + i * w;
                    for (std::size_t j = 0; j < w; ++j) dst[j] += src[j];
                  }
                });
  }

  NodeId concat_cols(const std::vector<NodeId>& parts) {
    if (parts.empty()) throw ShapeError("concat_cols: no parts");
    const std::size_t n = value(parts[0]).rows();
    std::size_t total = 0;
    bool rg = false;
    for (NodeId p : parts) {
      detail::check_2d(value(p), "concat_cols");
      if (value(p).rows() != n) throw ShapeError("concat_cols: row mismatch");
      total += value(p).cols();
      rg = rg || requires_grad(p);
    }
    Tensor out({n, total});
    std::size_t off = 0;
    for (NodeId p : parts) {
      const Tensor& pv = value(p);
      for (std::size_t i = 0; i < n; ++i)
        std::copy_n(pv.data.data() + i * pv.cols(), pv.cols(), out.data.data() + i * total + off);
      off += pv.cols();
    }
    std::vector<std::size_t> widths;
    for (NodeId p : parts) widths.push_back(value(p).cols());
    return push("concat_cols", wrap(std::move(out)), parts, rg,
                [parts, widths, n, total](GraphT& g, NodeId self) {
                  const Tensor& go = g.grad_at(self);
                  std::size_t off = 0;
                  for (std::size_t k = 0; k < parts.size(); ++k) {
                    if (g.wants(parts[k])) {
                      Tensor gp({n, widths[k]});
                      for (std::size_t i = 0; i < n; ++i)
                        std::copy_n(go.data.data() + i * total + off, widths[k], gp.data.data() + i * widths[k]);
                      g.accumulate(parts[k], gp);
                    }
                    off += widths[k];
                  }
                });
  }

  // ---- nonlinearities ----

  NodeId masked_softmax(NodeId x, Mask mask) {
    Tensor out = docmt::masked_softmax(value(x), mask);
    return push("masked_softmax", wrap(std::move(out)), {x}, needs(x), [x](GraphT& g, NodeId self) {
      const Tensor& p = g.value(self);
      const Tensor& go = g.grad_at(self);
      const std::size_t r = p.rows(), c = p.cols();
      Tensor gx({r, c});
      for (std::size_t i = 0; i < r; ++i) {
        const T* pi = p.data.data() + i * c;
        const T* gi = go.data.data() + i * c;
        T dot = T(0);
        for (std::size_t j = 0; j < c; ++j) dot += pi[j] * gi[j];
        T* out_i = gx.data.data() + i * c;
        for (std::size_t j = 0; j < c; ++j) out_i[j] = pi[j] * (gi[j] - dot);
      }
      g.accumulate(x, gx);
    });
  }

  NodeId layer_norm(NodeId x, NodeId gain, NodeId bias, T eps) {
    const Tensor& xv = value(x);
    Tensor out = docmt::layer_norm(xv, value(gain), value(bias), eps);
    const std::size_t d = xv.shape.back();
    const std::size_t n = xv.size() / d;
    std::vector<T> mean(n), inv(n);
    for (std::size_t i = 0; i < n; ++i) {
      const T* xi = xv.data.data() + i * d;
      T m = T(0);
      for (std::size_t j = 0; j < d; ++j) m += xi[j];
      m /= T(d);
      T var = T(0);
      for (std::size_t j = 0; j < d; ++j) var += (xi[j] - m) * (xi[j] - m);
      var /= T(d);
      mean[i] = m;
      inv[i] = T(1) / std::sqrt(var + eps);
    }
    return push("layer_norm", wrap(std::move(out)), {x, gain, bias}, needs(x, gain) || requires_grad(bias),
                [x, gain, bias, mean = std::move(mean), inv = std::move(inv), n, d](GraphT& g, NodeId self) {
                  const Tensor& go = g.grad_at(self);
                  const Tensor& xv2 = g.value(x);
                  const Tensor& gv = g.value(gain);
                  Tensor gx(xv2.shape), ggain(gv.shape), gbias(gv.shape);
                  for (std::size_t i = 0; i < n; ++i) {
                    const T* xi = xv2.data.data() + i * d;
                    const T* gi = go.data.data() + i * d;
                    T* gxi = gx.data.data() + i * d;
                    T sum_dxh = T(0), sum_dxh_xh = T(0);
                    for (std::size_t j = 0; j < d; ++j) {
                      const T xh = (xi[j] - mean[i]) * inv[i];
                      const T dxh = gi[j] * gv.data[j];
                      ggain.data[j] += gi[j] * xh;
                      gbias.data[j] += gi[j];
                      sum_dxh += dxh;
                      sum_dxh_xh += dxh * xh;
                    }
                    for (std::size_t j = 0; j < d; ++j) {
                      const T xh = (xi[j] - mean[i]) * inv[i];
                      const T dxh = gi[j] * gv.data[j];
                      gxi[j] = inv[i] * (dxh - sum_dxh / T(d) - xh * sum_dxh_xh / T(d));
                    }
                  }
                  g.accumulate(x, gx);
                  g.accumulate(gain, ggain);
                  g.accumulate(bias, gbias);
                });
  }

  NodeId gelu(NodeId x) {
    Tensor out = value(x);
    for (T& v : out.data) v = gelu_scalar(v);
    return push("gelu", wrap(std::move(out)), {x}, needs(x), [x](GraphT& g, NodeId self) {
      const Tensor& go = g.grad_at(self);
      const Tensor& xv = g.value(x);
      Tensor gx(xv.shape);
      for (std::size_t i = 0; i < gx.size(); ++i) gx.data[i] = go.data[i] * gelu_grad_scalar(xv.data[i]);
      g.accumulate(x, gx);
    });
  }

  NodeId relu(NodeId x) {
    Tensor out = value(x);
    for (T& v : out.data) v = std::max(v, T(0));
    return push("relu", wrap(std::move(out)), {x}, needs(x), [x](GraphT& g, NodeId self) {
      const Tensor& go = g.grad_at(self);
      const Tensor& xv = g.value(x);
      Tensor gx(xv.shape);
      for (std::size_t i = 0; i < gx.size(); ++i) gx.data[i] = xv.data[i] > T(0) ? go.data[i] : T(0);
      g.accumulate(x, gx);
    });
  }

  // Inverted dropout; sampling happens at build time so backward reuses the
  // same mask. Identity when disabled or p == 0.
  NodeId dropout(NodeId x, T p, Rng& rng, bool enabled) {
    if (!enabled || p <= T(0)) return x;
    if (p >= T(1)) throw ShapeError("dropout: p must be < 1");
    const Tensor& xv = value(x);
    std::vector<T> keep(xv.size());
    const T scale_v = T(1) / (T(1) - p);
    for (std::size_t i = 0; i < keep.size(); ++i)
      keep[i] = (uniform_real(rng) >= static_cast<double>(p)) ? scale_v : T(0);
    Tensor out = xv;
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] *= keep[i];
    return push("dropout", wrap(std::move(out)), {x}, needs(x),
                [x, keep = std::move(keep)](GraphT& g, NodeId self) {
                  const Tensor& go = g.grad_at(self);
                  Tensor gx = go;
                  for (std::size_t i = 0; i < gx.size(); ++i) gx.data[i] *= keep[i];
                  g.accumulate(x, gx);
                });
  }

  // ---- losses / reductions ----

  // Sum over rows of the cross entropy against integer targets, with optional
  // label smoothing mass eps spread uniformly over the vocabulary.
  NodeId cross_entropy_sum(NodeId logits, std::vector<std::int32_t> targets, T eps = T(0)) {
    const Tensor& xv = value(logits);
    detail::check_2d(xv, "cross_entropy_sum");
    const std::size_t n = xv.rows(), v = xv.cols();
    if (targets.size() != n) throw ShapeError("cross_entropy_sum: target count mismatch");
    for (std::int32_t t : targets)
      if (t < 0 || static_cast<std::size_t>(t) >= v) throw IdOutOfRange("cross_entropy_sum: target out of range");
    Tensor probs({n, v});
    T loss = T(0);
    for (std::size_t i = 0; i < n; ++i) {
      const T* xi = xv.data.data() + i * v;
      T* pi = probs.data.data() + i * v;
      const T mx = *std::max_element(xi, xi + v);
      T denom = T(0);
      for (std::size_t j = 0; j < v; ++j) {
        pi[j] = std::exp(xi[j] - mx);
        denom += pi[j];
      }
      const T lse = mx + std::log(denom);
      for (std::size_t j = 0; j < v; ++j) pi[j] /= denom;
      T row = lse - xi[targets[i]];
      if (eps > T(0)) {
        T mean_x = T(0);
        for (std::size_t j = 0; j < v; ++j) mean_x += xi[j];
        mean_x /= T(v);
        row = (T(1) - eps) * row + eps * (lse - mean_x);
      }
      loss += row;
    }
    return push("cross_entropy_sum", wrap(Tensor::scalar(loss)), {logits}, needs(logits),
                [logits, targets = std::move(targets), probs = std::move(probs), eps, n, v](GraphT& g, NodeId self) {
                  const T go = g.grad_at(self).item();
                  Tensor gx({n, v});
                  for (std::size_t i = 0; i < n; ++i) {
                    const T* pi = probs.data.data() + i * v;
                    T* gi = gx.data.data() + i * v;
                    for (std::size_t j = 0; j < v; ++j) {
                      T q = eps / T(v);
                      if (static_cast<std::size_t>(targets[i]) == j) q += T(1) - eps;
                      gi[j] = go * (pi[j] - q);
                    }
                  }
                  g.accumulate(logits, gx);
                });
  }

  NodeId sum_all(NodeId x) {
    const Tensor& xv = value(x);
    T acc = T(0);
    for (T v : xv.data) acc += v;
    return push("sum_all", wrap(Tensor::scalar(acc)), {x}, needs(x), [x](GraphT& g, NodeId self) {
      const T go = g.grad_at(self).item();
      Tensor gx(g.value(x).shape);
      std::fill(gx.data.begin(), gx.data.end(), go);
      g.accumulate(x, gx);
    });
  }

  NodeId mean_all(NodeId x) {
    const std::size_t n = value(x).size();
    return scale(sum_all(x), T(1) / T(n));
  }

  // ---- execution ----

  void backward(NodeId loss) {
    if (loss >= nodes_.size()) throw ShapeError("backward: bad node id");
    if (value(loss).size() != 1) throw NonScalarLoss("backward: loss node is not a scalar");
    grads_.clear();
    grads_.resize(nodes_.size());
    grads_[loss] = std::make_unique<Tensor>(Tensor::scalar(T(1)));
    for (std::size_t i = loss + 1; i-- > 0;) {
      if (grads_[i] && nodes_[i].backward) nodes_[i].backward(*this, i);
    }
  }

  const Tensor& value(NodeId id) const { return *nodes_[id].value; }
  bool requires_grad(NodeId id) const { return nodes_[id].requires_grad; }
  std::size_t size() const { return nodes_.size(); }

  // Gradient of a node, or nullptr when none flowed to it.
  const Tensor* grad(NodeId id) const {
    return id < grads_.size() && grads_[id] ? grads_[id].get() : nullptr;
  }

  // ---- used by backward closures ----

  bool wants(NodeId id) const { return nodes_[id].requires_grad; }

  Tensor& grad_buffer(NodeId id) {
    if (!grads_[id]) grads_[id] = std::make_unique<Tensor>(value(id).shape);
    return *grads_[id];
  }

  void accumulate(NodeId id, const Tensor& g) {
    if (!wants(id)) return;
    Tensor& buf = grad_buffer(id);
    if (!buf.same_shape(g)) throw ShapeError("accumulate: gradient shape mismatch");
    for (std::size_t i = 0; i < buf.size(); ++i) buf.data[i] += g.data[i];
  }

  const Tensor& grad_at(NodeId id) const { return *grads_[id]; }

 private:
  struct Node {
    const char* op;
    std::shared_ptr<const Tensor> value;
    std::vector<NodeId> inputs;
    bool requires_grad;
    std::function<void(GraphT&, NodeId)> backward;
  };

  static std::shared_ptr<const Tensor> wrap(Tensor t) {
    return std::make_shared<const Tensor>(std::move(t));
  }

  bool needs(NodeId a) const { return requires_grad(a); }
  bool needs(NodeId a, NodeId b) const { return requires_grad(a) || requires_grad(b); }

  NodeId push(const char* op, std::shared_ptr<const Tensor> v, std::vector<NodeId> inputs, bool rg,
              std::function<void(GraphT&, NodeId)> bwd) {
    for (NodeId i : inputs)
      if (i >= nodes_.size()) throw ShapeError("graph: input id out of order");
    nodes_.push_back(Node{op, std::move(v), std::move(inputs), rg, rg ? std::move(bwd) : nullptr});
    if (!grads_.empty()) grads_.resize(nodes_.size());
    return nodes_.size() - 1;
  }

  std::vector<Node> nodes_;
  std::vector<std::unique_ptr<Tensor>> grads_;
};

using GraphF = GraphT<float>;
using GraphD = GraphT<double>;

}  // namespace docmt
