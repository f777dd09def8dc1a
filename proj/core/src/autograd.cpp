// Copyright 2026 The clusterar Authors
// SPDX-License-Identifier: Apache-2.0

#include "clusterar/autograd.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "clusterar/zoh.hpp"

namespace clusterar {

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename T>
Eigen::Map<RowMat<T>> as_eigen(Matrix<T>& m) {
  return {m.data.data(), static_cast<Eigen::Index>(m.rows), static_cast<Eigen::Index>(m.cols)};
}

template <typename T>
Eigen::Map<const RowMat<T>> as_eigen(const Matrix<T>& m) {
  return {m.data.data(), static_cast<Eigen::Index>(m.rows), static_cast<Eigen::Index>(m.cols)};
}

[[noreturn]] void shape_error(const char* op, const std::string& detail) {
  throw std::invalid_argument(std::string(op) + ": " + detail);
}

}  // namespace

// ---------------------------------------------------------------- Tape

template <typename T>
Var Tape<T>::constant(Matrix<T> value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size() - 1)};
}

template <typename T>
Var Tape<T>::param(Parameter<T>& p) {
  Node n;
  n.external = &p.value;
  n.grad_target = &p.grad;
  n.needs_grad = true;
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size() - 1)};
}

template <typename T>
Var Tape<T>::push(Matrix<T> value, bool needs_grad, Backward backward) {
  Node n;
  n.value = std::move(value);
  n.needs_grad = needs_grad;
  if (needs_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size() - 1)};
}

template <typename T>
const Matrix<T>& Tape<T>::value(Var v) const {
  const Node& n = nodes_.at(static_cast<std::size_t>(v.id));
  return n.external != nullptr ? *n.external : n.value;
}

template <typename T>
Matrix<T>& Tape<T>::grad(Var v) {
  Node& n = nodes_.at(static_cast<std::size_t>(v.id));
  n.touched = true;
  if (n.grad_target != nullptr) return *n.grad_target;
  if (n.own_grad.empty()) {
    const auto& val = n.external != nullptr ? *n.external : n.value;
    n.own_grad = Matrix<T>(val.rows, val.cols);
  }
  return n.own_grad;
}

template <typename T>
void Tape<T>::backward(Var root, T seed) {
  if (!needs_grad(root)) return;
  grad(root).fill(seed);
  for (int i = root.id; i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (!n.touched || !n.backward) continue;
    n.backward(*this, n.own_grad);
  }
}

// ---------------------------------------------------------------- ops

template <typename T>
Var linear(Tape<T>& t, Var x, Var w, Var b) {
  const auto& xv = t.value(x);
  const auto& wv = t.value(w);
  if (xv.cols != wv.cols) shape_error("linear", "input " + shape_string(xv) + " vs weight " + shape_string(wv));
  if (b.valid() && (t.value(b).rows != 1 || t.value(b).cols != wv.rows)) {
    shape_error("linear", "bias " + shape_string(t.value(b)) + " for weight " + shape_string(wv));
  }
  Matrix<T> out(xv.rows, wv.rows);
  auto y = as_eigen(out);
  y.noalias() = as_eigen(xv) * as_eigen(wv).transpose();
  if (b.valid()) y.rowwise() += as_eigen(t.value(b)).row(0);
  const bool ng = t.needs_grad(x) || t.needs_grad(w) || (b.valid() && t.needs_grad(b));
  return t.push(std::move(out), ng, [x, w, b](Tape<T>& tp, const Matrix<T>& g) {
    auto gy = as_eigen(g);
    if (tp.needs_grad(x)) as_eigen(tp.grad(x)).noalias() += gy * as_eigen(tp.value(w));
    if (tp.needs_grad(w)) as_eigen(tp.grad(w)).noalias() += gy.transpose() * as_eigen(tp.value(x));
    if (b.valid() && tp.needs_grad(b)) as_eigen(tp.grad(b)).row(0) += gy.colwise().sum();
  });
}

template <typename T>
Var add(Tape<T>& t, Var a, Var b) {
  const auto& av = t.value(a);
  const auto& bv = t.value(b);
  if (!av.same_shape(bv)) shape_error("add", shape_string(av) + " vs " + shape_string(bv));
  Matrix<T> out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] += bv.data[i];
  return t.push(std::move(out), t.needs_grad(a) || t.needs_grad(b), [a, b](Tape<T>& tp, const Matrix<T>& g) {
    for (Var v : {a, b}) {
      if (!tp.needs_grad(v)) continue;
      auto& gv = tp.grad(v);
      for (std::size_t i = 0; i < g.size(); ++i) gv.data[i] += g.data[i];
    }
  });
}

template <typename T>
Var scale(Tape<T>& t, Var a, T factor) {
  Matrix<T> out = t.value(a);
  for (auto& x : out.data) x *= factor;
  return t.push(std::move(out), t.needs_grad(a), [a, factor](Tape<T>& tp, const Matrix<T>& g) {
    auto& ga = tp.grad(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga.data[i] += factor * g.data[i];
  });
}

template <typename T>
Var layer_norm(Tape<T>& t, Var x, Var gamma, Var beta, T eps) {
  const auto& xv = t.value(x);
  const auto& gv = t.value(gamma);
  const auto& bv = t.value(beta);
  const std::size_t n = xv.rows;
  const std::size_t d = xv.cols;
  if (gv.rows != 1 || gv.cols != d || !gv.same_shape(bv)) {
    shape_error("layer_norm", "affine " + shape_string(gv) + " for input " + shape_string(xv));
  }
  auto xhat = std::make_shared<Matrix<T>>(n, d);
  auto rstd = std::make_shared<std::vector<T>>(n);
  Matrix<T> out(n, d);
  for (std::size_t r = 0; r < n; ++r) {
    T mean = 0;
    for (std::size_t c = 0; c < d; ++c) mean += xv(r, c);
    mean /= static_cast<T>(d);
    T var = 0;
    for (std::size_t c = 0; c < d; ++c) var += (xv(r, c) - mean) * (xv(r, c) - mean);
    var /= static_cast<T>(d);
    const T rs = T(1) / std::sqrt(var + eps);
    (*rstd)[r] = rs;
    for (std::size_t c = 0; c < d; ++c) {
      const T h = (xv(r, c) - mean) * rs;
      (*xhat)(r, c) = h;
      out(r, c) = h * gv(0, c) + bv(0, c);
    }
  }
  const bool ng = t.needs_grad(x) || t.needs_grad(gamma) || t.needs_grad(beta);
  return t.push(std::move(out), ng, [x, gamma, beta, xhat, rstd](Tape<T>& tp, const Matrix<T>& g) {
    const std::size_t n = g.rows;
    const std::size_t d = g.cols;
    const auto& gam = tp.value(gamma);
    if (tp.needs_grad(gamma) || tp.needs_grad(beta)) {
      auto& gg = tp.grad(gamma);
      auto& gb = tp.grad(beta);
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < d; ++c) {
          gg(0, c) += g(r, c) * (*xhat)(r, c);
          gb(0, c) += g(r, c);
        }
    }
    if (!tp.needs_grad(x)) return;
    auto& gx = tp.grad(x);
    std::vector<T> dxhat(d);
    for (std::size_t r = 0; r < n; ++r) {
      T mean_d = 0;
      T mean_dx = 0;
      for (std::size_t c = 0; c < d; ++c) {
        dxhat[c] = g(r, c) * gam(0, c);
        mean_d += dxhat[c];
        mean_dx += dxhat[c] * (*xhat)(r, c);
      }
      mean_d /= static_cast<T>(d);
      mean_dx /= static_cast<T>(d);
      for (std::size_t c = 0; c < d; ++c) {
        gx(r, c) += (*rstd)[r] * (dxhat[c] - mean_d - (*xhat)(r, c) * mean_dx);
      }
    }
  });
}

template <typename T>
Var gelu(Tape<T>& t, Var x) {
  Matrix<T> out = t.value(x);
  const T inv_sqrt2 = T(1) / std::numbers::sqrt2_v<T>;
  for (auto& v : out.data) v = T(0.5) * v * (T(1) + std::erf(v * inv_sqrt2));
  return t.push(std::move(out), t.needs_grad(x), [x, inv_sqrt2](Tape<T>& tp, const Matrix<T>& g) {
    const auto& xv = tp.value(x);
    auto& gx = tp.grad(x);
    const T inv_sqrt_2pi = inv_sqrt2 * std::numbers::inv_sqrtpi_v<T>;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const T v = xv.data[i];
      const T cdf = T(0.5) * (T(1) + std::erf(v * inv_sqrt2));
      const T pdf = inv_sqrt_2pi * std::exp(T(-0.5) * v * v);
      gx.data[i] += g.data[i] * (cdf + v * pdf);
    }
  });
}

template <typename T>
Var softplus(Tape<T>& t, Var x) {
  Matrix<T> out = t.value(x);
  for (auto& v : out.data) v = v > T(20) ? v : std::log1p(std::exp(v));
  return t.push(std::move(out), t.needs_grad(x), [x](Tape<T>& tp, const Matrix<T>& g) {
    const auto& xv = tp.value(x);
    auto& gx = tp.grad(x);
    for (std::size_t i = 0; i < g.size(); ++i) {
      gx.data[i] += g.data[i] / (T(1) + std::exp(-xv.data[i]));
    }
  });
}

template <typename T>
Var neg_exp(Tape<T>& t, Var x) {
  Matrix<T> out = t.value(x);
  for (auto& v : out.data) v = -std::exp(v);
  return t.push(std::move(out), t.needs_grad(x), [x](Tape<T>& tp, const Matrix<T>& g) {
    const auto& xv = tp.value(x);
    auto& gx = tp.grad(x);
    for (std::size_t i = 0; i < g.size(); ++i) gx.data[i] -= g.data[i] * std::exp(xv.data[i]);
  });
}

template <typename T>
Var gather_rows(Tape<T>& t, Var x, std::vector<std::uint32_t> rows) {
  const auto& xv = t.value(x);
  Matrix<T> out(rows.size(), xv.cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= xv.rows) {
      shape_error("gather_rows", "row " + std::to_string(rows[i]) + " out of " + std::to_string(xv.rows));
    }
    std::copy_n(xv.row(rows[i]).begin(), xv.cols, out.row(i).begin());
  }
  return t.push(std::move(out), t.needs_grad(x), [x, rows = std::move(rows)](Tape<T>& tp, const Matrix<T>& g) {
    auto& gx = tp.grad(x);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      auto dst = gx.row(rows[i]);
      auto src = g.row(i);
      for (std::size_t c = 0; c < g.cols; ++c) dst[c] += src[c];
    }
  });
}

template <typename T>
Var concat_rows(Tape<T>& t, const std::vector<Var>& parts) {
  if (parts.empty()) shape_error("concat_rows", "no inputs");
  const std::size_t cols = t.value(parts.front()).cols;
  std::size_t rows = 0;
  bool ng = false;
  for (Var p : parts) {
    if (t.value(p).cols != cols) shape_error("concat_rows", "column mismatch");
    rows += t.value(p).rows;
    ng = ng || t.needs_grad(p);
  }
  Matrix<T> out(rows, cols);
  std::size_t offset = 0;
  for (Var p : parts) {
    const auto& pv = t.value(p);
    std::copy(pv.data.begin(), pv.data.end(), out.data.begin() + static_cast<std::ptrdiff_t>(offset * cols));
    offset += pv.rows;
  }
  return t.push(std::move(out), ng, [parts](Tape<T>& tp, const Matrix<T>& g) {
    std::size_t offset = 0;
    for (Var p : parts) {
      const std::size_t n = tp.value(p).size();
      if (tp.needs_grad(p)) {
        auto& gp = tp.grad(p);
        for (std::size_t i = 0; i < n; ++i) gp.data[i] += g.data[offset + i];
      }
      offset += n;
    }
  });
}

template <typename T>
Var selective_scan(Tape<T>& t, Var u, Var delta, Var A, Var B, Var C) {
  const auto& uv = t.value(u);
  const auto& dv = t.value(delta);
  const auto& av = t.value(A);
  const auto& bv = t.value(B);
  const auto& cv = t.value(C);
  const std::size_t L = uv.rows;
  const std::size_t D = uv.cols;
  const std::size_t N = av.cols;
  if (!dv.same_shape(uv) || av.rows != D || bv.rows != L || bv.cols != N || !cv.same_shape(bv)) {
    shape_error("selective_scan", "u " + shape_string(uv) + ", delta " + shape_string(dv) + ", A " +
                                      shape_string(av) + ", B " + shape_string(bv) + ", C " + shape_string(cv));
  }
  // states[t] holds h_t (D×N); index 0 is the zero initial state. abar and
  // phi cache exp(z) and phi(z) per (step, channel, state) for backward.
  const std::size_t DN = D * N;
  auto states = std::make_shared<std::vector<T>>((L + 1) * DN, T(0));
  auto abar = std::make_shared<std::vector<T>>(L * DN);
  auto phi = std::make_shared<std::vector<T>>(L * DN);
  Matrix<T> out(L, D);
  for (std::size_t s = 0; s < L; ++s) {
    const T* prev = states->data() + s * DN;
    T* cur = states->data() + (s + 1) * DN;
    T* ab = abar->data() + s * DN;
    T* ph = phi->data() + s * DN;
    for (std::size_t c = 0; c < D; ++c) {
      const T dt = dv(s, c);
      const T x = uv(s, c);
      T y = 0;
      for (std::size_t i = 0; i < N; ++i) {
        const std::size_t k = c * N + i;
        const T z = dt * av(c, i);
        const T em1 = std::expm1(z);
        ab[k] = em1 + T(1);
        ph[k] = std::abs(z) < kZohSeriesCutoff<T> ? zoh_phi(z) : em1 / z;
        const T h = ab[k] * prev[k] + ph[k] * dt * bv(s, i) * x;
        cur[k] = h;
        y += cv(s, i) * h;
      }
      out(s, c) = y;
    }
  }
  const bool ng = t.needs_grad(u) || t.needs_grad(delta) || t.needs_grad(A) || t.needs_grad(B) || t.needs_grad(C);
  return t.push(std::move(out), ng, [u, delta, A, B, C, states, abar, phi](Tape<T>& tp, const Matrix<T>& g) {
    const auto& uv = tp.value(u);
    const auto& dv = tp.value(delta);
    const auto& av = tp.value(A);
    const auto& bv = tp.value(B);
    const auto& cv = tp.value(C);
    const std::size_t L = uv.rows;
    const std::size_t D = uv.cols;
    const std::size_t N = av.cols;
    Matrix<T> gu(L, D), gd(L, D), ga(D, N), gb(L, N), gc(L, N);
    const std::size_t DN = D * N;
    std::vector<T> carry(DN, T(0));  // dL/dh_t flowing back from t+1
    for (std::size_t s = L; s-- > 0;) {
      const T* prev = states->data() + s * DN;
      const T* cur = states->data() + (s + 1) * DN;
      const T* ab = abar->data() + s * DN;
      const T* ph = phi->data() + s * DN;
      for (std::size_t c = 0; c < D; ++c) {
        const T dt = dv(s, c);
        const T x = uv(s, c);
        const T gy = g(s, c);
        T gu_acc = 0;
        T gd_acc = 0;
        for (std::size_t i = 0; i < N; ++i) {
          const std::size_t k = c * N + i;
          gc(s, i) += gy * cur[k];
          const T gh = gy * cv(s, i) + carry[k];
          const T z = dt * av(c, i);
          const T bbar = ph[k] * dt * bv(s, i);
          const T g_abar = gh * prev[k];
          const T g_bbar = gh * x;
          gu_acc += gh * bbar;
          carry[k] = gh * ab[k];
          const T dphi = std::abs(z) < kZohDerivativeCutoff<T> ? zoh_phi_derivative(z) : (ab[k] - ph[k]) / z;
          const T gz = g_abar * ab[k] + g_bbar * dt * bv(s, i) * dphi;
          gd_acc += g_bbar * ph[k] * bv(s, i) + gz * av(c, i);
          gb(s, i) += g_bbar * ph[k] * dt;
          ga(c, i) += gz * dt;
        }
        gu(s, c) += gu_acc;
        gd(s, c) += gd_acc;
      }
    }
    auto accumulate = [&tp](Var v, const Matrix<T>& src) {
      if (!tp.needs_grad(v)) return;
      auto& dst = tp.grad(v);
      for (std::size_t i = 0; i < src.size(); ++i) dst.data[i] += src.data[i];
    };
    accumulate(u, gu);
    accumulate(delta, gd);
    accumulate(A, ga);
    accumulate(B, gb);
    accumulate(C, gc);
  });
}

template <typename T>
Var attention(Tape<T>& t, Var q, Var k, Var v, std::shared_ptr<const std::vector<std::uint8_t>> allow,
              std::size_t heads) {
  const auto& qv = t.value(q);
  const auto& kv = t.value(k);
  const auto& vv = t.value(v);
  const std::size_t nq = qv.rows;
  const std::size_t nk = kv.rows;
  const std::size_t w = qv.cols;
  if (heads == 0 || w % heads != 0) shape_error("attention", "width " + std::to_string(w) + " not divisible by heads");
  if (kv.cols != w || !vv.same_shape(kv)) shape_error("attention", "q/k/v width mismatch");
  if (!allow || allow->size() != nq * nk) shape_error("attention", "mask size does not match " + shape_string(nq, nk));
  const std::size_t hd = w / heads;
  const T sc = T(1) / std::sqrt(static_cast<T>(hd));
  auto probs = std::make_shared<std::vector<T>>(heads * nq * nk, T(0));
  Matrix<T> out(nq, w);
  std::vector<T> scores(nk);
  for (std::size_t h = 0; h < heads; ++h) {
    const std::size_t off = h * hd;
    for (std::size_t i = 0; i < nq; ++i) {
      T mx = -std::numeric_limits<T>::infinity();
      for (std::size_t j = 0; j < nk; ++j) {
        if (!(*allow)[i * nk + j]) continue;
        T s = 0;
        for (std::size_t c = 0; c < hd; ++c) s += qv(i, off + c) * kv(j, off + c);
        scores[j] = s * sc;
        mx = std::max(mx, scores[j]);
      }
      if (mx == -std::numeric_limits<T>::infinity()) continue;  // no visible key: zero output
      T denom = 0;
      T* p = probs->data() + (h * nq + i) * nk;
      for (std::size_t j = 0; j < nk; ++j) {
        if (!(*allow)[i * nk + j]) continue;
        p[j] = std::exp(scores[j] - mx);
        denom += p[j];
      }
      for (std::size_t j = 0; j < nk; ++j) {
        if (p[j] == T(0)) continue;
        p[j] /= denom;
        for (std::size_t c = 0; c < hd; ++c) out(i, off + c) += p[j] * vv(j, off + c);
      }
    }
  }
  const bool ng = t.needs_grad(q) || t.needs_grad(k) || t.needs_grad(v);
  return t.push(std::move(out), ng, [q, k, v, probs, heads](Tape<T>& tp, const Matrix<T>& g) {
    const auto& qv = tp.value(q);
    const auto& kv = tp.value(k);
    const auto& vv = tp.value(v);
    const std::size_t nq = qv.rows;
    const std::size_t nk = kv.rows;
    const std::size_t hd = qv.cols / heads;
    const T sc = T(1) / std::sqrt(static_cast<T>(hd));
    Matrix<T> gq(qv.rows, qv.cols), gk(kv.rows, kv.cols), gv(vv.rows, vv.cols);
    std::vector<T> dp(nk);
    for (std::size_t h = 0; h < heads; ++h) {
      const std::size_t off = h * hd;
      for (std::size_t i = 0; i < nq; ++i) {
        const T* p = probs->data() + (h * nq + i) * nk;
        T dot = 0;
        for (std::size_t j = 0; j < nk; ++j) {
          if (p[j] == T(0)) {
            dp[j] = 0;
            continue;
          }
          T s = 0;
          for (std::size_t c = 0; c < hd; ++c) {
            s += g(i, off + c) * vv(j, off + c);
            gv(j, off + c) += p[j] * g(i, off + c);
          }
          dp[j] = s;
          dot += p[j] * s;
        }
        for (std::size_t j = 0; j < nk; ++j) {
          if (p[j] == T(0)) continue;
          const T ds = p[j] * (dp[j] - dot) * sc;
          for (std::size_t c = 0; c < hd; ++c) {
            gq(i, off + c) += ds * kv(j, off + c);
            gk(j, off + c) += ds * qv(i, off + c);
          }
        }
      }
    }
    for (auto [var, src] : {std::pair{q, &gq}, std::pair{k, &gk}, std::pair{v, &gv}}) {
      if (!tp.needs_grad(var)) continue;
      auto& dst = tp.grad(var);
      for (std::size_t i = 0; i < src->size(); ++i) dst.data[i] += src->data[i];
    }
  });
}

template <typename T>
Var weighted_mse(Tape<T>& t, Var pred, Matrix<T> target, std::vector<T> row_weights) {
  const auto& pv = t.value(pred);
  if (!pv.same_shape(target) || row_weights.size() != pv.rows) {
    shape_error("weighted_mse", "prediction " + shape_string(pv) + " vs target " + shape_string(target));
  }
  T wsum = 0;
  for (T w : row_weights) wsum += w;
  const T norm = wsum > T(0) ? T(1) / (wsum * static_cast<T>(pv.cols)) : T(0);
  T loss = 0;
  for (std::size_t r = 0; r < pv.rows; ++r) {
    if (row_weights[r] == T(0)) continue;
    T acc = 0;
    for (std::size_t c = 0; c < pv.cols; ++c) {
      const T e = pv(r, c) - target(r, c);
      acc += e * e;
    }
    loss += row_weights[r] * acc;
  }
  Matrix<T> out(1, 1, loss * norm);
  return t.push(std::move(out), t.needs_grad(pred),
                [pred, target = std::move(target), w = std::move(row_weights), norm](Tape<T>& tp, const Matrix<T>& g) {
                  const auto& pv = tp.value(pred);
                  auto& gp = tp.grad(pred);
                  const T s = g(0, 0) * T(2) * norm;
                  for (std::size_t r = 0; r < pv.rows; ++r) {
                    if (w[r] == T(0)) continue;
                    for (std::size_t c = 0; c < pv.cols; ++c) gp(r, c) += s * w[r] * (pv(r, c) - target(r, c));
                  }
                });
}

template <typename T>
Var cross_entropy(Tape<T>& t, Var logits, std::vector<int> labels) {
  const auto& lv = t.value(logits);
  if (labels.size() != lv.rows) shape_error("cross_entropy", "label count mismatch");
  auto probs = std::make_shared<Matrix<T>>(lv.rows, lv.cols);
  T loss = 0;
  for (std::size_t r = 0; r < lv.rows; ++r) {
    if (labels[r] < 0 || static_cast<std::size_t>(labels[r]) >= lv.cols) {
      shape_error("cross_entropy", "label " + std::to_string(labels[r]) + " out of range");
    }
    T mx = lv(r, 0);
    for (std::size_t c = 1; c < lv.cols; ++c) mx = std::max(mx, lv(r, c));
    T denom = 0;
    for (std::size_t c = 0; c < lv.cols; ++c) {
      (*probs)(r, c) = std::exp(lv(r, c) - mx);
      denom += (*probs)(r, c);
    }
    for (std::size_t c = 0; c < lv.cols; ++c) (*probs)(r, c) /= denom;
    loss += -(lv(r, static_cast<std::size_t>(labels[r])) - mx - std::log(denom));
  }
  const T inv_n = T(1) / static_cast<T>(lv.rows);
  Matrix<T> out(1, 1, loss * inv_n);
  return t.push(std::move(out), t.needs_grad(logits),
                [logits, probs, labels = std::move(labels), inv_n](Tape<T>& tp, const Matrix<T>& g) {
                  auto& gl = tp.grad(logits);
                  for (std::size_t r = 0; r < probs->rows; ++r)
                    for (std::size_t c = 0; c < probs->cols; ++c) {
                      const T onehot = static_cast<int>(c) == labels[r] ? T(1) : T(0);
                      gl(r, c) += g(0, 0) * inv_n * ((*probs)(r, c) - onehot);
                    }
                });
}

#define CLUSTERAR_INSTANTIATE(T)                                                                       \
  template class Tape<T>;                                                                              \
  template Var linear<T>(Tape<T>&, Var, Var, Var);                                                     \
  template Var add<T>(Tape<T>&, Var, Var);                                                             \
  template Var scale<T>(Tape<T>&, Var, T);                                                             \
  template Var layer_norm<T>(Tape<T>&, Var, Var, Var, T);                                              \
  template Var gelu<T>(Tape<T>&, Var);                                                                 \
  template Var softplus<T>(Tape<T>&, Var);                                                             \
  template Var neg_exp<T>(Tape<T>&, Var);                                                              \
  template Var gather_rows<T>(Tape<T>&, Var, std::vector<std::uint32_t>);                              \
  template Var concat_rows<T>(Tape<T>&, const std::vector<Var>&);                                      \
  template Var selective_scan<T>(Tape<T>&, Var, Var, Var, Var, Var);                                   \
  template Var attention<T>(Tape<T>&, Var, Var, Var, std::shared_ptr<const std::vector<std::uint8_t>>, \
                            std::size_t);                                                              \
  template Var weighted_mse<T>(Tape<T>&, Var, Matrix<T>, std::vector<T>);                              \
  template Var cross_entropy<T>(Tape<T>&, Var, std::vector<int>);

CLUSTERAR_INSTANTIATE(float)
CLUSTERAR_INSTANTIATE(double)

#undef CLUSTERAR_INSTANTIATE

}  // namespace clusterar
