// Copyright 2026 The Resonance Authors
// SPDX-License-Identifier: Apache-2.0

#include "resonance/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace resonance {

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMat<T>>;

template <typename T>
MatMap<T> as_mat(std::vector<T>& v, std::size_t r, std::size_t c) {
  return MatMap<T>(v.data(), static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
}
template <typename T>
ConstMatMap<T> as_cmat(const std::vector<T>& v, std::size_t r, std::size_t c) {
  return ConstMatMap<T>(v.data(), static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
}

template <typename T>
using NodePtr = std::shared_ptr<Node<T>>;

template <typename T>
Tensor<T> make_result(Shape shape, std::vector<T> value, std::vector<NodePtr<T>> parents,
                      std::function<void(Node<T>&)> backward) {
  auto n = std::make_shared<Node<T>>();
  n->shape = std::move(shape);
  n->value = std::move(value);
  n->leaf = false;
  bool needs = false;
  if (grad_enabled()) {
    for (const auto& p : parents) needs = needs || p->requires_grad;
  }
  if (needs) {
    n->requires_grad = true;
    n->parents = std::move(parents);
    n->backward_fn = std::move(backward);
  }
  return Tensor<T>(std::move(n));
}

void require_rank2(const Shape& s, const char* op) {
  if (s.size() != 2) throw ShapeError(std::string(op) + ": expected rank-2 tensor, got " + shape_str(s));
}

std::pair<std::size_t, std::size_t> dims2(const Shape& s) {
  if (s.size() == 2) return {s[0], s[1]};
  if (s.size() == 1) return {1, s[0]};
  if (s.empty()) return {1, 1};
  throw ShapeError("expected rank <= 2, got " + shape_str(s));
}

}  // namespace

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  require_rank2(a.shape(), "matmul");
  require_rank2(b.shape(), "matmul");
  const auto m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  if (b.shape()[0] != k) {
    throw ShapeError("matmul: inner extents differ for " + shape_str(a.shape()) + " and " +
                     shape_str(b.shape()));
  }
  std::vector<T> out(m * n);
  as_mat(out, m, n).noalias() =
      (as_cmat(a.node()->value, m, k).template cast<double>() * as_cmat(b.node()->value, k, n).template cast<double>())
          .template cast<T>();
  auto pa = a.node(), pb = b.node();
  return make_result<T>({m, n}, std::move(out), {pa, pb}, [pa, pb, m, k, n](Node<T>& self) {
    auto g = as_cmat(self.grad, m, n);
    if (pa->requires_grad) as_mat(pa->grad, m, k).noalias() += g * as_cmat(pb->value, k, n).transpose();
    if (pb->requires_grad) as_mat(pb->grad, k, n).noalias() += as_cmat(pa->value, m, k).transpose() * g;
  });
}

template <typename T>
Tensor<T> matmul_nt(const Tensor<T>& a, const Tensor<T>& b) {
  require_rank2(a.shape(), "matmul_nt");
  require_rank2(b.shape(), "matmul_nt");
  const auto m = a.shape()[0], k = a.shape()[1], n = b.shape()[0];
  if (b.shape()[1] != k) {
    throw ShapeError("matmul_nt: inner extents differ for " + shape_str(a.shape()) + " and " +
                     shape_str(b.shape()) + "^T");
  }
  std::vector<T> out(m * n);
  as_mat(out, m, n).noalias() = (as_cmat(a.node()->value, m, k).template cast<double>() *
                                 as_cmat(b.node()->value, n, k).template cast<double>().transpose())
                                    .template cast<T>();
  auto pa = a.node(), pb = b.node();
  return make_result<T>({m, n}, std::move(out), {pa, pb}, [pa, pb, m, k, n](Node<T>& self) {
    auto g = as_cmat(self.grad, m, n);
    if (pa->requires_grad) as_mat(pa->grad, m, k).noalias() += g * as_cmat(pb->value, n, k);
    if (pb->requires_grad) as_mat(pb->grad, n, k).noalias() += g.transpose() * as_cmat(pa->value, m, k);
  });
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError("add: shapes differ " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
  std::vector<T> out(a.numel());
  const auto& av = a.node()->value;
  const auto& bv = b.node()->value;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  auto pa = a.node(), pb = b.node();
  return make_result<T>(a.shape(), std::move(out), {pa, pb}, [pa, pb](Node<T>& self) {
    for (auto* p : {pa.get(), pb.get()}) {
      if (!p->requires_grad) continue;
      for (std::size_t i = 0; i < self.grad.size(); ++i) p->grad[i] += self.grad[i];
    }
  });
}

template <typename T>
Tensor<T> add_bias(const Tensor<T>& x, const Tensor<T>& bias) {
  const auto [m, n] = dims2(x.shape());
  if (bias.rank() != 1 || bias.shape()[0] != n) {
    throw ShapeError("add_bias: bias " + shape_str(bias.shape()) + " does not match trailing extent of " +
                     shape_str(x.shape()));
  }
  std::vector<T> out(x.node()->value);
  const auto& bv = bias.node()->value;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] += bv[j];
  auto px = x.node(), pb = bias.node();
  return make_result<T>(x.shape(), std::move(out), {px, pb}, [px, pb, m, n](Node<T>& self) {
    if (px->requires_grad)
      for (std::size_t i = 0; i < self.grad.size(); ++i) px->grad[i] += self.grad[i];
    if (pb->requires_grad)
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) pb->grad[j] += self.grad[i * n + j];
  });
}

template <typename T>
Tensor<T> multiply(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError("multiply: shapes differ " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
  std::vector<T> out(a.numel());
  const auto& av = a.node()->value;
  const auto& bv = b.node()->value;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  auto pa = a.node(), pb = b.node();
  return make_result<T>(a.shape(), std::move(out), {pa, pb}, [pa, pb](Node<T>& self) {
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      if (pa->requires_grad) pa->grad[i] += self.grad[i] * pb->value[i];
      if (pb->requires_grad) pb->grad[i] += self.grad[i] * pa->value[i];
    }
  });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& x, T factor) {
  std::vector<T> out(x.node()->value);
  for (auto& v : out) v *= factor;
  auto px = x.node();
  return make_result<T>(x.shape(), std::move(out), {px}, [px, factor](Node<T>& self) {
    for (std::size_t i = 0; i < self.grad.size(); ++i) px->grad[i] += self.grad[i] * factor;
  });
}

namespace {

// Softmax over `len` strided entries; entries at index >= valid are zeroed.
template <typename T>
void softmax_line(const T* in, T* out, std::size_t len, std::size_t stride, std::size_t valid) {
  T mx = -std::numeric_limits<T>::infinity();
  for (std::size_t j = 0; j < valid; ++j) mx = std::max(mx, in[j * stride]);
  T total = 0;
  for (std::size_t j = 0; j < valid; ++j) {
    const T e = std::exp(in[j * stride] - mx);
    out[j * stride] = e;
    total += e;
  }
  for (std::size_t j = 0; j < valid; ++j) out[j * stride] /= total;
  for (std::size_t j = valid; j < len; ++j) out[j * stride] = T(0);
}

template <typename T>
void softmax_line_backward(const T* y, const T* gy, T* gx, std::size_t len, std::size_t stride) {
  T dot = 0;
  for (std::size_t j = 0; j < len; ++j) dot += y[j * stride] * gy[j * stride];
  for (std::size_t j = 0; j < len; ++j) gx[j * stride] += y[j * stride] * (gy[j * stride] - dot);
}

}  // namespace

template <typename T>
Tensor<T> softmax(const Tensor<T>& x, int axis) {
  auto [m, n] = dims2(x.shape());
  if (x.rank() == 1 && axis == 0) axis = 1;  // a vector is a single row
  if (axis == -1) axis = 1;
  if (axis != 0 && axis != 1) throw ShapeError("softmax: invalid axis " + std::to_string(axis));
  std::vector<T> out(x.numel());
  const T* in = x.node()->value.data();
  if (axis == 1) {
    for (std::size_t i = 0; i < m; ++i) softmax_line(in + i * n, out.data() + i * n, n, 1, n);
  } else {
    for (std::size_t j = 0; j < n; ++j) softmax_line(in + j, out.data() + j, m, n, m);
  }
  auto px = x.node();
  return make_result<T>(x.shape(), std::move(out), {px}, [px, m, n, axis](Node<T>& self) {
    if (axis == 1) {
      for (std::size_t i = 0; i < m; ++i)
        softmax_line_backward(self.value.data() + i * n, self.grad.data() + i * n,
                              px->grad.data() + i * n, n, 1);
    } else {
      for (std::size_t j = 0; j < n; ++j)
        softmax_line_backward(self.value.data() + j, self.grad.data() + j, px->grad.data() + j, m, n);
    }
  });
}

template <typename T>
Tensor<T> softmax_causal(const Tensor<T>& scores, std::size_t offset) {
  require_rank2(scores.shape(), "softmax_causal");
  const auto m = scores.shape()[0], n = scores.shape()[1];
  std::vector<T> out(m * n);
  const T* in = scores.node()->value.data();
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t valid = std::min(n, i + offset + 1);
    softmax_line(in + i * n, out.data() + i * n, n, 1, valid);
  }
  auto px = scores.node();
  return make_result<T>(scores.shape(), std::move(out), {px}, [px, m, n, offset](Node<T>& self) {
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t valid = std::min(n, i + offset + 1);
      softmax_line_backward(self.value.data() + i * n, self.grad.data() + i * n,
                            px->grad.data() + i * n, valid, 1);
    }
  });
}

template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta, T eps) {
  const auto [m, n] = dims2(x.shape());
  if (gamma.numel() != n || beta.numel() != n) {
    throw ShapeError("layer_norm: gamma/beta " + shape_str(gamma.shape()) + "/" + shape_str(beta.shape()) +
                     " do not match " + shape_str(x.shape()));
  }
  std::vector<T> out(m * n);
  std::vector<T> xhat(m * n), inv_std(m);
  const auto& xv = x.node()->value;
  const auto& g = gamma.node()->value;
  const auto& b = beta.node()->value;
  for (std::size_t i = 0; i < m; ++i) {
    const T* row = xv.data() + i * n;
    T mu = 0;
    for (std::size_t j = 0; j < n; ++j) mu += row[j];
    mu /= T(n);
    T var = 0;
    for (std::size_t j = 0; j < n; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= T(n);
    const T is = T(1) / std::sqrt(var + eps);
    inv_std[i] = is;
    for (std::size_t j = 0; j < n; ++j) {
      const T h = (row[j] - mu) * is;
      xhat[i * n + j] = h;
      out[i * n + j] = h * g[j] + b[j];
    }
  }
  auto px = x.node(), pg = gamma.node(), pb = beta.node();
  return make_result<T>(
      x.shape(), std::move(out), {px, pg, pb},
      [px, pg, pb, m, n, xhat = std::move(xhat), inv_std = std::move(inv_std)](Node<T>& self) {
        for (std::size_t i = 0; i < m; ++i) {
          const T* gy = self.grad.data() + i * n;
          const T* h = xhat.data() + i * n;
          if (pg->requires_grad || pb->requires_grad) {
            for (std::size_t j = 0; j < n; ++j) {
              if (pg->requires_grad) pg->grad[j] += gy[j] * h[j];
              if (pb->requires_grad) pb->grad[j] += gy[j];
            }
          }
          if (px->requires_grad) {
            T sum_g = 0, sum_gh = 0;
            for (std::size_t j = 0; j < n; ++j) {
              const T gh = gy[j] * pg->value[j];
              sum_g += gh;
              sum_gh += gh * h[j];
            }
            for (std::size_t j = 0; j < n; ++j) {
              const T gh = gy[j] * pg->value[j];
              px->grad[i * n + j] += inv_std[i] / T(n) * (T(n) * gh - sum_g - h[j] * sum_gh);
            }
          }
        }
      });
}

template <typename T>
Tensor<T> gelu(const Tensor<T>& x) {
  constexpr T k = T(0.7978845608028654);  // sqrt(2 / pi)
  constexpr T c = T(0.044715);
  std::vector<T> out(x.numel());
  const auto& xv = x.node()->value;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const T v = xv[i];
    out[i] = T(0.5) * v * (T(1) + std::tanh(k * (v + c * v * v * v)));
  }
  auto px = x.node();
  return make_result<T>(x.shape(), std::move(out), {px}, [px](Node<T>& self) {
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      const T v = px->value[i];
      const T t = std::tanh(k * (v + c * v * v * v));
      const T d = T(0.5) * (T(1) + t) + T(0.5) * v * (T(1) - t * t) * k * (T(1) + T(3) * c * v * v);
      px->grad[i] += self.grad[i] * d;
    }
  });
}

template <typename T>
Tensor<T> embedding_lookup(const Tensor<T>& table, std::span<const TokenId> ids) {
  require_rank2(table.shape(), "embedding_lookup");
  const auto vocab = table.shape()[0], d = table.shape()[1];
  std::vector<T> out(ids.size() * d);
  const auto& tv = table.node()->value;
  std::vector<TokenId> idv(ids.begin(), ids.end());
  for (std::size_t i = 0; i < idv.size(); ++i) {
    if (idv[i] < 0 || static_cast<std::size_t>(idv[i]) >= vocab) {
      throw ShapeError("embedding_lookup: id " + std::to_string(idv[i]) + " outside table " +
                       shape_str(table.shape()));
    }
    std::copy_n(tv.data() + static_cast<std::size_t>(idv[i]) * d, d, out.data() + i * d);
  }
  auto pt = table.node();
  const std::size_t n = idv.size();
  return make_result<T>({n, d}, std::move(out), {pt}, [pt, d, idv = std::move(idv)](Node<T>& self) {
    for (std::size_t i = 0; i < idv.size(); ++i) {
      T* dst = pt->grad.data() + static_cast<std::size_t>(idv[i]) * d;
      const T* src = self.grad.data() + i * d;
      for (std::size_t j = 0; j < d; ++j) dst[j] += src[j];
    }
  });
}

template <typename T>
Tensor<T> concat(const std::vector<Tensor<T>>& parts, int axis) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  if (axis != 0 && axis != 1) throw ShapeError("concat: invalid axis " + std::to_string(axis));
  std::vector<std::pair<std::size_t, std::size_t>> dims;
  for (const auto& p : parts) {
    require_rank2(p.shape(), "concat");
    dims.emplace_back(p.shape()[0], p.shape()[1]);
  }
  std::size_t rows = 0, cols = 0;
  if (axis == 0) {
    cols = dims[0].second;
    for (std::size_t i = 0; i < parts.size(); ++i) {
      if (dims[i].second != cols) {
        throw ShapeError("concat rows: column extents differ " + shape_str(parts[0].shape()) + " vs " +
                         shape_str(parts[i].shape()));
      }
      rows += dims[i].first;
    }
  } else {
    rows = dims[0].first;
    for (std::size_t i = 0; i < parts.size(); ++i) {
      if (dims[i].first != rows) {
        throw ShapeError("concat cols: row extents differ " + shape_str(parts[0].shape()) + " vs " +
                         shape_str(parts[i].shape()));
      }
      cols += dims[i].second;
    }
  }
  std::vector<T> out(rows * cols);
  std::vector<NodePtr<T>> nodes;
  if (axis == 0) {
    std::size_t off = 0;
    for (const auto& p : parts) {
      std::copy(p.node()->value.begin(), p.node()->value.end(), out.begin() + static_cast<std::ptrdiff_t>(off));
      off += p.numel();
      nodes.push_back(p.node());
    }
  } else {
    std::size_t col_off = 0;
    for (std::size_t k = 0; k < parts.size(); ++k) {
      const auto c = dims[k].second;
      const auto& v = parts[k].node()->value;
      for (std::size_t i = 0; i < rows; ++i) std::copy_n(v.data() + i * c, c, out.data() + i * cols + col_off);
      col_off += c;
      nodes.push_back(parts[k].node());
    }
  }
  auto parents = nodes;
  return make_result<T>({rows, cols}, std::move(out), std::move(parents),
                        [nodes, dims, axis, cols](Node<T>& self) {
                          std::size_t off = 0;
                          for (std::size_t k = 0; k < nodes.size(); ++k) {
                            const auto [r, c] = dims[k];
                            auto& p = *nodes[k];
                            if (axis == 0) {
                              if (p.requires_grad)
                                for (std::size_t i = 0; i < r * c; ++i) p.grad[i] += self.grad[off * c + i];
                              off += r;
                            } else {
                              if (p.requires_grad)
                                for (std::size_t i = 0; i < r; ++i)
                                  for (std::size_t j = 0; j < c; ++j)
                                    p.grad[i * c + j] += self.grad[i * cols + off + j];
                              off += c;
                            }
                          }
                        });
}

template <typename T>
Tensor<T> slice(const Tensor<T>& x, int axis, std::size_t begin, std::size_t end) {
  require_rank2(x.shape(), "slice");
  const auto m = x.shape()[0], n = x.shape()[1];
  const auto extent = axis == 0 ? m : n;
  if ((axis != 0 && axis != 1) || begin > end || end > extent) {
    throw ShapeError("slice: range [" + std::to_string(begin) + ", " + std::to_string(end) + ") on axis " +
                     std::to_string(axis) + " of " + shape_str(x.shape()));
  }
  const auto& xv = x.node()->value;
  auto px = x.node();
  if (axis == 0) {
    std::vector<T> out(xv.begin() + static_cast<std::ptrdiff_t>(begin * n),
                       xv.begin() + static_cast<std::ptrdiff_t>(end * n));
    return make_result<T>({end - begin, n}, std::move(out), {px}, [px, begin, n](Node<T>& self) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) px->grad[begin * n + i] += self.grad[i];
    });
  }
  const auto w = end - begin;
  std::vector<T> out(m * w);
  for (std::size_t i = 0; i < m; ++i) std::copy_n(xv.data() + i * n + begin, w, out.data() + i * w);
  return make_result<T>({m, w}, std::move(out), {px}, [px, begin, m, n, w](Node<T>& self) {
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < w; ++j) px->grad[i * n + begin + j] += self.grad[i * w + j];
  });
}

template <typename T>
Tensor<T> transpose(const Tensor<T>& x) {
  require_rank2(x.shape(), "transpose");
  const auto m = x.shape()[0], n = x.shape()[1];
  std::vector<T> out(m * n);
  as_mat(out, n, m) = as_cmat(x.node()->value, m, n).transpose();
  auto px = x.node();
  return make_result<T>({n, m}, std::move(out), {px}, [px, m, n](Node<T>& self) {
    as_mat(px->grad, m, n) += as_cmat(self.grad, n, m).transpose();
  });
}

template <typename T>
Tensor<T> sum(const Tensor<T>& x) {
  T total = 0;
  for (T v : x.node()->value) total += v;
  auto px = x.node();
  return make_result<T>({}, {total}, {px}, [px](Node<T>& self) {
    for (auto& g : px->grad) g += self.grad[0];
  });
}

template <typename T>
Tensor<T> mean(const Tensor<T>& x) {
  if (x.numel() == 0) throw ShapeError("mean of empty tensor");
  return scale(sum(x), T(1) / T(x.numel()));
}

template <typename T>
Tensor<T> dropout(const Tensor<T>& x, double p, std::mt19937_64& rng) {
  if (p <= 0.0 || !grad_enabled()) return x;
  if (p >= 1.0) throw std::invalid_argument("dropout probability must be < 1");
  std::bernoulli_distribution keep(1.0 - p);
  const T s = T(1.0 / (1.0 - p));
  std::vector<T> mask(x.numel());
  for (auto& m : mask) m = keep(rng) ? s : T(0);
  return multiply(x, Tensor<T>::from(x.shape(), std::move(mask)));
}

template <typename T>
Tensor<T> elementwise(const Tensor<T>& x, const std::function<T(T)>& f, const std::function<T(T)>& df) {
  std::vector<T> out(x.numel());
  const auto& xv = x.node()->value;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(xv[i]);
  auto px = x.node();
  return make_result<T>(x.shape(), std::move(out), {px}, [px, df](Node<T>& self) {
    for (std::size_t i = 0; i < self.grad.size(); ++i) px->grad[i] += self.grad[i] * df(px->value[i]);
  });
}

template <typename T>
Tensor<T> cross_entropy(const Tensor<T>& logits, std::span<const TokenId> targets, const std::vector<bool>& mask) {
  require_rank2(logits.shape(), "cross_entropy");
  const auto t_len = logits.shape()[0], vocab = logits.shape()[1];
  if (targets.size() != t_len || mask.size() != t_len) {
    throw ShapeError("cross_entropy: logits " + shape_str(logits.shape()) + " with " +
                     std::to_string(targets.size()) + " targets and " + std::to_string(mask.size()) +
                     " mask entries");
  }
  std::size_t count = 0;
  for (std::size_t t = 0; t < t_len; ++t) {
    if (!mask[t]) continue;
    ++count;
    if (targets[t] < 0 || static_cast<std::size_t>(targets[t]) >= vocab) {
      throw ShapeError("cross_entropy: target " + std::to_string(targets[t]) + " outside vocabulary of " +
                       std::to_string(vocab));
    }
  }
  if (count == 0) throw NumericError("cross_entropy: supervision mask selects no positions (empty loss)");

  const auto& lv = logits.node()->value;
  std::vector<T> probs(t_len * vocab, T(0));
  T loss = 0;
  for (std::size_t t = 0; t < t_len; ++t) {
    if (!mask[t]) continue;
    const T* row = lv.data() + t * vocab;
    T* p = probs.data() + t * vocab;
    softmax_line(row, p, vocab, 1, vocab);
    T mx = *std::max_element(row, row + vocab);
    T z = 0;
    for (std::size_t v = 0; v < vocab; ++v) z += std::exp(row[v] - mx);
    loss += (std::log(z) + mx) - row[targets[t]];
  }
  loss /= T(count);
  auto pl = logits.node();
  std::vector<TokenId> tg(targets.begin(), targets.end());
  return make_result<T>({}, {loss}, {pl},
                        [pl, probs = std::move(probs), tg = std::move(tg), mask, vocab, count](Node<T>& self) {
                          const T g = self.grad[0] / T(count);
                          for (std::size_t t = 0; t < tg.size(); ++t) {
                            if (!mask[t]) continue;
                            for (std::size_t v = 0; v < vocab; ++v) {
                              T d = probs[t * vocab + v];
                              if (static_cast<TokenId>(v) == tg[t]) d -= T(1);
                              pl->grad[t * vocab + v] += g * d;
                            }
                          }
                        });
}

#define RESONANCE_INSTANTIATE_OPS(T)                                                                      \
  template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&);                                          \
  template Tensor<T> matmul_nt(const Tensor<T>&, const Tensor<T>&);                                       \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                             \
  template Tensor<T> add_bias(const Tensor<T>&, const Tensor<T>&);                                        \
  template Tensor<T> multiply(const Tensor<T>&, const Tensor<T>&);                                        \
  template Tensor<T> scale(const Tensor<T>&, T);                                                          \
  template Tensor<T> softmax(const Tensor<T>&, int);                                                      \
  template Tensor<T> softmax_causal(const Tensor<T>&, std::size_t);                                       \
  template Tensor<T> layer_norm(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, T);                 \
  template Tensor<T> gelu(const Tensor<T>&);                                                              \
  template Tensor<T> embedding_lookup(const Tensor<T>&, std::span<const TokenId>);                        \
  template Tensor<T> concat(const std::vector<Tensor<T>>&, int);                                          \
  template Tensor<T> slice(const Tensor<T>&, int, std::size_t, std::size_t);                              \
  template Tensor<T> transpose(const Tensor<T>&);                                                         \
  template Tensor<T> mean(const Tensor<T>&);                                                              \
  template Tensor<T> sum(const Tensor<T>&);                                                               \
  template Tensor<T> dropout(const Tensor<T>&, double, std::mt19937_64&);                                 \
  template Tensor<T> elementwise(const Tensor<T>&, const std::function<T(T)>&, const std::function<T(T)>&); \
  template Tensor<T> cross_entropy(const Tensor<T>&, std::span<const TokenId>, const std::vector<bool>&);

RESONANCE_INSTANTIATE_OPS(float)
RESONANCE_INSTANTIATE_OPS(double)

}  // namespace resonance
