// Copyright 2026 the docmt authors
// SPDX-License-Identifier: Apache-2.0
//
// Dense row-major tensors and the forward kernels the model is built from.
// Precision is a template parameter: float for training, double for
// finite-difference gradient checks. No views, no strides, no broadcasting
// beyond the row-wise bias add; every kernel allocates its result.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "docmt/error.hpp"
#include "docmt/rng.hpp"

namespace docmt {

using Shape = std::vector<std::size_t>;

inline std::size_t numel(const Shape& s) {
  std::size_t n = 1;
  for (std::size_t d : s) n *= d;
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "x" : "") << s[i];
  os << "]";
  return os.str();
}

template <typename T>
struct TensorT {
  static_assert(std::is_floating_point_v<T>);
  using value_type = T;

  Shape shape;
  std::vector<T> data;

  TensorT() = default;
  explicit TensorT(Shape s) : shape(std::move(s)), data(numel(shape), T(0)) {}
  TensorT(Shape s, std::vector<T> values) : shape(std::move(s)), data(std::move(values)) {
    if (numel(shape) != data.size())
      throw ShapeError("data length " + std::to_string(data.size()) + " does not match " + shape_str(shape));
  }

  static TensorT zeros(Shape s) { return TensorT(std::move(s)); }
  static TensorT full(Shape s, T v) {
    TensorT t(std::move(s));
    std::fill(t.data.begin(), t.data.end(), v);
    return t;
  }
  static TensorT scalar(T v) { return TensorT({1}, {v}); }
  static TensorT randn(Shape s, Rng& rng, T stddev = T(1)) {
    TensorT t(std::move(s));
    for (T& x : t.data) x = static_cast<T>(normal(rng)) * stddev;
    return t;
  }

  std::size_t size() const { return data.size(); }
  std::size_t rank() const { return shape.size(); }
  std::size_t rows() const {
    if (rank() != 2) throw ShapeError("rows() on rank-" + std::to_string(rank()) + " tensor");
    return shape[0];
  }
  std::size_t cols() const {
    if (rank() != 2) throw ShapeError("cols() on rank-" + std::to_string(rank()) + " tensor");
    return shape[1];
  }

  T& at(std::size_t i) { return data[i]; }
  T at(std::size_t i) const { return data[i]; }
  T& at(std::size_t r, std::size_t c) { return data[r * shape[1] + c]; }
  T at(std::size_t r, std::size_t c) const { return data[r * shape[1] + c]; }

  T item() const {
    if (size() != 1) throw ShapeError("item() on tensor of size " + std::to_string(size()));
    return data[0];
  }

  bool finite() const {
    for (T x : data)
      if (!std::isfinite(x)) return false;
    return true;
  }

  bool same_shape(const TensorT& o) const { return shape == o.shape; }

  template <typename U>
  TensorT<U> cast() const {
    TensorT<U> out;
    out.shape = shape;
    out.data.resize(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
    return out;
  }
};

using TensorF = TensorT<float>;
using TensorD = TensorT<double>;

// Row-major boolean matrix; a set bit hides the position from attention.
struct Mask {
  std::size_t rows = 0, cols = 0;
  std::vector<std::uint8_t> hidden;

  Mask() = default;
  Mask(std::size_t r, std::size_t c) : rows(r), cols(c), hidden(r * c, 0) {}
  std::uint8_t at(std::size_t r, std::size_t c) const { return hidden[r * cols + c]; }
  void set(std::size_t r, std::size_t c, bool v) { hidden[r * cols + c] = v ? 1 : 0; }
  bool empty() const { return hidden.empty(); }

  // [T_q, T_k] mask hiding keys j > i.
  static Mask causal(std::size_t n) {
    Mask m(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) m.set(i, j, true);
    return m;
  }
  // Every query row hides the same key set.
  static Mask rows_from(std::size_t n_rows, const std::vector<std::uint8_t>& hidden_keys) {
    Mask m(n_rows, hidden_keys.size());
    for (std::size_t i = 0; i < n_rows; ++i)
      for (std::size_t j = 0; j < hidden_keys.size(); ++j) m.set(i, j, hidden_keys[j] != 0);
    return m;
  }
};

namespace detail {

template <typename T>
void check_2d(const TensorT<T>& t, const char* who) {
  if (t.rank() != 2) throw ShapeError(std::string(who) + ": expected rank-2, got " + shape_str(t.shape));
}

}  // namespace detail

// ---- matmul family -------------------------------------------------------

// c[m,n] = a[m,k] * b[k,n]
template <typename T>
void matmul_into(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n) {
  std::fill(c, c + m * n, T(0));
  for (std::size_t i = 0; i < m; ++i) {
    T* crow = c + i * n;
    const T* arow = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const T aip = arow[p];
      const T* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
    }
  }
}

template <typename T>
TensorT<T> matmul(const TensorT<T>& a, const TensorT<T>& b) {
  detail::check_2d(a, "matmul");
  detail::check_2d(b, "matmul");
  if (a.cols() != b.rows())
    throw ShapeError("matmul: " + shape_str(a.shape) + " x " + shape_str(b.shape));
  TensorT<T> c({a.rows(), b.cols()});
  matmul_into(a.data.data(), b.data.data(), c.data.data(), a.rows(), a.cols(), b.cols());
  return c;
}

// c[m,n] = a[m,k] * b[n,k]^T  (rows of b are the columns of the product)
template <typename T>
TensorT<T> matmul_nt(const TensorT<T>& a, const TensorT<T>& b) {
  detail::check_2d(a, "matmul_nt");
  detail::check_2d(b, "matmul_nt");
  if (a.cols() != b.cols())
    throw ShapeError("matmul_nt: " + shape_str(a.shape) + " x " + shape_str(b.shape) + "^T");
  const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
  TensorT<T> c({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    const T* arow = a.data.data() + i * k;
    T* crow = c.data.data() + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      const T* brow = b.data.data() + j * k;
      T acc = T(0);
      for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
      crow[j] = acc;
    }
  }
  return c;
}

// c[k,n] = a[m,k]^T * b[m,n]
template <typename T>
TensorT<T> matmul_tn(const TensorT<T>& a, const TensorT<T>& b) {
  detail::check_2d(a, "matmul_tn");
  detail::check_2d(b, "matmul_tn");
  if (a.rows() != b.rows())
    throw ShapeError("matmul_tn: " + shape_str(a.shape) + "^T x " + shape_str(b.shape));
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  TensorT<T> c({k, n});
  for (std::size_t i = 0; i < m; ++i) {
    const T* arow = a.data.data() + i * k;
    const T* brow = b.data.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      T* crow = c.data.data() + p * n;
      const T aip = arow[p];
      for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
    }
  }
  return c;
}

// ---- softmax / normalization --------------------------------------------

// Row-wise softmax over the unmasked entries. Hidden positions receive an
// additive -1e9 (which underflows to an exact zero contribution), the max is
// taken over live entries only, and hidden outputs are forced to exact 0.0.
template <typename T>
TensorT<T> masked_softmax(const TensorT<T>& logits, const Mask& mask) {
  detail::check_2d(logits, "masked_softmax");
  const std::size_t r = logits.rows(), c = logits.cols();
  if (!mask.empty() && (mask.rows != r || mask.cols != c))
    throw ShapeError("masked_softmax: mask shape mismatch");
  TensorT<T> out({r, c});
  constexpr T kNegBig = T(-1e9);
  for (std::size_t i = 0; i < r; ++i) {
    const T* x = logits.data.data() + i * c;
    T* y = out.data.data() + i * c;
    T mx = -std::numeric_limits<T>::infinity();
    for (std::size_t j = 0; j < c; ++j)
      if (mask.empty() || !mask.at(i, j)) mx = std::max(mx, x[j]);
    if (mx == -std::numeric_limits<T>::infinity())
      throw FullyMaskedRow("masked_softmax: row " + std::to_string(i) + " has no unmasked position");
    T denom = T(0);
    for (std::size_t j = 0; j < c; ++j) {
      const T shifted = (!mask.empty() && mask.at(i, j)) ? x[j] + kNegBig - mx : x[j] - mx;
      y[j] = std::exp(shifted);
      denom += y[j];
    }
    for (std::size_t j = 0; j < c; ++j) {
      y[j] /= denom;
      if (!mask.empty() && mask.at(i, j)) y[j] = T(0);
    }
  }
  return out;
}

template <typename T>
TensorT<T> softmax_rows(const TensorT<T>& logits) {
  return masked_softmax(logits, Mask());
}

template <typename T>
TensorT<T> log_softmax_rows(const TensorT<T>& logits) {
  detail::check_2d(logits, "log_softmax_rows");
  const std::size_t r = logits.rows(), c = logits.cols();
  TensorT<T> out({r, c});
  for (std::size_t i = 0; i < r; ++i) {
    const T* x = logits.data.data() + i * c;
    T* y = out.data.data() + i * c;
    const T mx = *std::max_element(x, x + c);
    T denom = T(0);
    for (std::size_t j = 0; j < c; ++j) denom += std::exp(x[j] - mx);
    const T lse = mx + std::log(denom);
    for (std::size_t j = 0; j < c; ++j) y[j] = x[j] - lse;
  }
  return out;
}

// Normalizes the last dimension: y = gain * (x - mean) / sqrt(var + eps) + bias.
template <typename T>
TensorT<T> layer_norm(const TensorT<T>& x, const TensorT<T>& gain, const TensorT<T>& bias, T eps) {
  if (x.rank() == 0) throw ShapeError("layer_norm: rank-0 input");
  const std::size_t d = x.shape.back();
  if (gain.size() != d || bias.size() != d) throw ShapeError("layer_norm: gain/bias size mismatch");
  const std::size_t n = x.size() / d;
  TensorT<T> out(x.shape);
  for (std::size_t i = 0; i < n; ++i) {
    const T* xi = x.data.data() + i * d;
    T* yi = out.data.data() + i * d;
    T mean = T(0);
    for (std::size_t j = 0; j < d; ++j) mean += xi[j];
    mean /= T(d);
    T var = T(0);
    for (std::size_t j = 0; j < d; ++j) var += (xi[j] - mean) * (xi[j] - mean);
    var /= T(d);
    const T inv = T(1) / std::sqrt(var + eps);
    for (std::size_t j = 0; j < d; ++j) yi[j] = gain.data[j] * (xi[j] - mean) * inv + bias.data[j];
  }
  return out;
}

// ---- misc ----------------------------------------------------------------

template <typename T>
T gelu_scalar(T x) {
  return T(0.5) * x * (T(1) + std::erf(x * T(0.7071067811865476)));
}

template <typename T>
T gelu_grad_scalar(T x) {
  const T cdf = T(0.5) * (T(1) + std::erf(x * T(0.7071067811865476)));
  const T pdf = std::exp(T(-0.5) * x * x) * T(0.3989422804014327);
  return cdf + x * pdf;
}

template <typename T>
T l2_norm(const std::vector<T>& v) {
  T acc = T(0);
  for (T x : v) acc += x * x;
  return std::sqrt(acc);
}

}  // namespace docmt
