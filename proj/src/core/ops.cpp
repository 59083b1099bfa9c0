// Copyright 2026 The lfmdt Authors
// SPDX-License-Identifier: Apache-2.0

#include "lfmdt/ops.hpp"

#include <cmath>
#include <memory>
#include <numbers>
#include <string>

#include "lfmdt/kernels.hpp"

namespace lfmdt {
namespace {

template <typename T>
Graph<T>& same_graph(Var<T> a, Var<T> b) {
  if (!a.valid() || !b.valid() || &a.graph() != &b.graph()) {
    raise(ErrorKind::usage, "operands belong to different graphs");
  }
  return a.graph();
}

template <typename T>
void require_same_shape(const char* op, const Shape& a, const Shape& b) {
  if (a != b) {
    raise(ErrorKind::dimension,
          std::string(op) + ": shape mismatch " + to_string(a) + " vs " + to_string(b));
  }
}

template <typename T>
void accumulate(Tensor<T>& dst, const Tensor<T>& src) {
  kernels::axpy<T>(dst.size(), T(1), src.data(), dst.data());
}

std::size_t leading(const Shape& s) { return num_elements(s) / s.back(); }

}  // namespace

// ---------------------------------------------------------------------------
// matmul

template <typename T>
Var<T> matmul(Var<T> a, Var<T> b, Transpose transpose_b) {
  Graph<T>& g = same_graph(a, b);
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  const bool rank_ok = (sa.size() == 2 && sb.size() == 2) ||
                       (sa.size() == 3 && sb.size() == 3 && sa[0] == sb[0]);
  const bool tb = transpose_b == Transpose::yes;
  const std::size_t r = sa.size();
  if (!rank_ok || sa[r - 1] != (tb ? sb[r - 1] : sb[r - 2])) {
    raise(ErrorKind::dimension, "matmul: incompatible shapes " + to_string(sa) + " and " +
                                    to_string(sb) + (tb ? " (right transposed)" : ""));
  }
  const std::size_t batch = r == 3 ? sa[0] : 1;
  const std::size_t m = sa[r - 2];
  const std::size_t k = sa[r - 1];
  const std::size_t n = tb ? sb[r - 2] : sb[r - 1];

  Tensor<T> out(r == 3 ? Shape{batch, m, n} : Shape{m, n});
  std::vector<T> scratch(tb ? k * n : 0);
  for (std::size_t bi = 0; bi < batch; ++bi) {
    const T* bp = b.value().data() + bi * k * n;
    if (tb) {
      transpose_into(bp, n, k, scratch.data());
      bp = scratch.data();
    }
    kernels::gemm<T>(m, n, k, a.value().data() + bi * m * k, k, bp, n, out.data() + bi * m * n,
                     n, false);
  }
  g.macs().add(static_cast<std::uint64_t>(batch) * m * k * n);

  const std::size_t aid = a.id(), bid = b.id();
  return g.record(std::move(out), {aid, bid}, [=](Graph<T>& gr, std::size_t self) {
    const Tensor<T>& dc = gr.upstream(self);
    const Tensor<T>& av = gr.value(aid);
    const Tensor<T>& bv = gr.value(bid);
    if (gr.requires_grad(aid)) {
      Tensor<T>& da = gr.grad_buffer(aid);
      std::vector<T> bt(tb ? 0 : n * k);
      for (std::size_t bi = 0; bi < batch; ++bi) {
        const T* bnk = bv.data() + bi * k * n;
        if (!tb) {
          transpose_into(bnk, k, n, bt.data());
          bnk = bt.data();
        }
        kernels::gemm<T>(m, k, n, dc.data() + bi * m * n, n, bnk, k, da.data() + bi * m * k, k,
                         true);
      }
    }
    if (gr.requires_grad(bid)) {
      Tensor<T>& db = gr.grad_buffer(bid);
      std::vector<T> t(tb ? n * m : k * m);
      for (std::size_t bi = 0; bi < batch; ++bi) {
        const T* ap = av.data() + bi * m * k;
        const T* dcp = dc.data() + bi * m * n;
        T* dbp = db.data() + bi * k * n;
        if (!tb) {
          transpose_into(ap, m, k, t.data());
          kernels::gemm<T>(k, n, m, t.data(), m, dcp, n, dbp, n, true);
        } else {
          transpose_into(dcp, m, n, t.data());
          kernels::gemm<T>(n, k, m, t.data(), m, ap, k, dbp, k, true);
        }
      }
    }
  });
}

// ---------------------------------------------------------------------------
// elementwise

template <typename T>
Var<T> add(Var<T> a, Var<T> b) {
  Graph<T>& g = same_graph(a, b);
  require_same_shape<T>("add", a.shape(), b.shape());
  Tensor<T> out(a.shape());
  kernels::add<T>(out.size(), a.value().data(), b.value().data(), out.data());
  const std::size_t aid = a.id(), bid = b.id();
  return g.record(std::move(out), {aid, bid}, [=](Graph<T>& gr, std::size_t self) {
    const Tensor<T>& dc = gr.upstream(self);
    if (gr.requires_grad(aid)) accumulate(gr.grad_buffer(aid), dc);
    if (gr.requires_grad(bid)) accumulate(gr.grad_buffer(bid), dc);
  });
}

template <typename T>
Var<T> sub(Var<T> a, Var<T> b) {
  Graph<T>& g = same_graph(a, b);
  require_same_shape<T>("sub", a.shape(), b.shape());
  Tensor<T> out(a.shape());
  const T* av = a.value().data();
  const T* bv = b.value().data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
  const std::size_t aid = a.id(), bid = b.id();
  return g.record(std::move(out), {aid, bid}, [=](Graph<T>& gr, std::size_t self) {
    const Tensor<T>& dc = gr.upstream(self);
    if (gr.requires_grad(aid)) accumulate(gr.grad_buffer(aid), dc);
    if (gr.requires_grad(bid)) {
      Tensor<T>& db = gr.grad_buffer(bid);
      kernels::axpy<T>(db.size(), T(-1), dc.data(), db.data());
    }
  });
}

template <typename T>
Var<T> mul(Var<T> a, Var<T> b) {
  Graph<T>& g = same_graph(a, b);
  require_same_shape<T>("mul", a.shape(), b.shape());
  Tensor<T> out(a.shape());
  kernels::mul<T>(out.size(), a.value().data(), b.value().data(), out.data());
  const std::size_t aid = a.id(), bid = b.id();
  return g.record(std::move(out), {aid, bid}, [=](Graph<T>& gr, std::size_t self) {
    const Tensor<T>& dc = gr.upstream(self);
    const std::size_t n = dc.size();
    std::vector<T> tmp(n);
    if (gr.requires_grad(aid)) {
      kernels::mul<T>(n, dc.data(), gr.value(bid).data(), tmp.data());
      kernels::axpy<T>(n, T(1), tmp.data(), gr.grad_buffer(aid).data());
    }
    if (gr.requires_grad(bid)) {
      kernels::mul<T>(n, dc.data(), gr.value(aid).data(), tmp.data());
      kernels::axpy<T>(n, T(1), tmp.data(), gr.grad_buffer(bid).data());
    }
  });
}

template <typename T>
Var<T> scale(Var<T> x, T factor) {
  Graph<T>& g = x.graph();
  Tensor<T> out(x.shape());
  kernels::scale<T>(out.size(), factor, x.value().data(), out.data());
  const std::size_t xid = x.id();
  return g.record(std::move(out), {xid}, [=](Graph<T>& gr, std::size_t self) {
    const Tensor<T>& dc = gr.upstream(self);
    Tensor<T>& dx = gr.grad_buffer(xid);
    kernels::axpy<T>(dx.size(), factor, dc.data(), dx.data());
  });
}

template <typename T>
Var<T> add_bias(Var<T> x, Var<T> bias) {
  Graph<T>& g = same_graph(x, bias);
  const std::size_t c = x.shape().back();
  if (bias.shape() != Shape{c}) {
    raise(ErrorKind::dimension, "add_bias: bias " + to_string(bias.shape()) +
                                    " does not match channels of " + to_string(x.shape()));
  }
  Tensor<T> out(x.shape());
  const std::size_t rows = leading(x.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    kernels::add<T>(c, x.value().data() + r * c, bias.value().data(), out.data() + r * c);
  }
  const std::size_t xid = x.id(), bid = bias.id();
  return g.record(std::move(out), {xid, bid}, [=](Graph<T>& gr, std::size_t self) {
    const Tensor<T>& dc = gr.upstream(self);
    if (gr.requires_grad(xid)) accumulate(gr.grad_buffer(xid), dc);
    if (gr.requires_grad(bid)) {
      Tensor<T>& db = gr.grad_buffer(bid);
      for (std::size_t r = 0; r < rows; ++r) {
        kernels::axpy<T>(c, T(1), dc.data() + r * c, db.data());
      }
    }
  });
}

template <typename T>
Var<T> scale_channels(Var<T> x, Var<T> alpha) {
  Graph<T>& g = same_graph(x, alpha);
  const std::size_t c = x.shape().back();
  if (alpha.shape() != Shape{c}) {
    raise(ErrorKind::dimension, "scale_channels: alpha " + to_string(alpha.shape()) +
                                    " does not match channels of " + to_string(x.shape()));
  }
  Tensor<T> out(x.shape());
  const std::size_t rows = leading(x.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    kernels::mul<T>(c, x.value().data() + r * c, alpha.value().data(), out.data() + r * c);
  }
  const std::size_t xid = x.id(), aid = alpha.id();
  return g.record(std::move(out), {xid, aid}, [=](Graph<T>& gr, std::size_t self) {
    const Tensor<T>& dc = gr.upstream(self);
    const T* al = gr.value(aid).data();
    const T* xv = gr.value(xid).data();
    if (gr.requires_grad(xid)) {
      T* dx = gr.grad_buffer(xid).data();
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t j = 0; j < c; ++j) dx[r * c + j] += dc[r * c + j] * al[j];
      }
    }
    if (gr.requires_grad(aid)) {
      T* da = gr.grad_buffer(aid).data();
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t j = 0; j < c; ++j) da[j] += dc[r * c + j] * xv[r * c + j];
      }
    }
  });
}

template <typename T>
Var<T> leaky_relu(Var<T> x, T slope) {
  Graph<T>& g = x.graph();
  Tensor<T> out(x.shape());
  const T* xv = x.value().data();
  auto positive = std::make_shared<std::vector<std::int8_t>>(out.size());
  for (std::size_t i = 0; i < out.size(); ++i) (*positive)[i] = xv[i] > T(0);
  g.resolve_kinks(*positive);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (*positive)[i] ? xv[i] : slope * xv[i];
  const std::size_t xid = x.id();
  return g.record(std::move(out), {xid}, [=](Graph<T>& gr, std::size_t self) {
    const Tensor<T>& dc = gr.upstream(self);
    T* dx = gr.grad_buffer(xid).data();
    for (std::size_t i = 0; i < dc.size(); ++i) dx[i] += (*positive)[i] ? dc[i] : slope * dc[i];
  });
}

template <typename T>
Var<T> gelu(Var<T> x) {
  Graph<T>& g = x.graph();
  Tensor<T> out(x.shape());
  const T* xv = x.value().data();
  const T inv_sqrt2 = T(1) / std::numbers::sqrt2_v<T>;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = T(0.5) * xv[i] * (T(1) + std::erf(xv[i] * inv_sqrt2));
  }
  const std::size_t xid = x.id();
  return g.record(std::move(out), {xid}, [=](Graph<T>& gr, std::size_t self) {
    const Tensor<T>& dc = gr.upstream(self);
    const T* in = gr.value(xid).data();
    T* dx = gr.grad_buffer(xid).data();
    const T inv_sqrt_2pi = std::numbers::inv_sqrtpi_v<T> * inv_sqrt2;
    for (std::size_t i = 0; i < dc.size(); ++i) {
      const T cdf = T(0.5) * (T(1) + std::erf(in[i] * inv_sqrt2));
      const T pdf = inv_sqrt_2pi * std::exp(T(-0.5) * in[i] * in[i]);
      dx[i] += dc[i] * (cdf + in[i] * pdf);
    }
  });
}

// ---------------------------------------------------------------------------
// normalisation

template <typename T>
Var<T> layer_norm_lastdim(Var<T> x, Var<T> gamma, Var<T> beta, T eps) {
  Graph<T>& g = same_graph(x, gamma);
  same_graph(x, beta);
  if (!(eps > T(0))) raise(ErrorKind::usage, "layer_norm: eps must be positive");
  const std::size_t c = x.shape().back();
  if (gamma.shape() != Shape{c} || beta.shape() != Shape{c}) {
    raise(ErrorKind::dimension, "layer_norm: gamma/beta must have shape [" + std::to_string(c) +
                                    "] for input " + to_string(x.shape()));
  }
  const std::size_t rows = leading(x.shape());
  auto xhat = std::make_shared<std::vector<T>>(x.value().size());
  auto rstd = std::make_shared<std::vector<T>>(rows);
  Tensor<T> out(x.shape());
  const T* xv = x.value().data();
  const T* gv = gamma.value().data();
  const T* bv = beta.value().data();
  for (std::size_t r = 0; r < rows; ++r) {
    const T* row = xv + r * c;
    T mu = 0;
    for (std::size_t j = 0; j < c; ++j) mu += row[j];
    mu /= T(c);
    T var = 0;
    for (std::size_t j = 0; j < c; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= T(c);
    const T rs = T(1) / std::sqrt(var + eps);
    (*rstd)[r] = rs;
    for (std::size_t j = 0; j < c; ++j) {
      const T h = (row[j] - mu) * rs;
      (*xhat)[r * c + j] = h;
      out[r * c + j] = gv[j] * h + bv[j];
    }
  }
  const std::size_t xid = x.id(), gid = gamma.id(), bid = beta.id();
  return g.record(std::move(out), {xid, gid, bid}, [=](Graph<T>& gr, std::size_t self) {
    const Tensor<T>& dc = gr.upstream(self);
    const T* gam = gr.value(gid).data();
    if (gr.requires_grad(gid) || gr.requires_grad(bid)) {
      T* dg = gr.requires_grad(gid) ? gr.grad_buffer(gid).data() : nullptr;
      T* db = gr.requires_grad(bid) ? gr.grad_buffer(bid).data() : nullptr;
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t j = 0; j < c; ++j) {
          if (dg) dg[j] += dc[r * c + j] * (*xhat)[r * c + j];
          if (db) db[j] += dc[r * c + j];
        }
      }
    }
    if (gr.requires_grad(xid)) {
      T* dx = gr.grad_buffer(xid).data();
      std::vector<T> dh(c);
      for (std::size_t r = 0; r < rows; ++r) {
        T mean_dh = 0, mean_dh_h = 0;
        for (std::size_t j = 0; j < c; ++j) {
          dh[j] = dc[r * c + j] * gam[j];
          mean_dh += dh[j];
          mean_dh_h += dh[j] * (*xhat)[r * c + j];
        }
        mean_dh /= T(c);
        mean_dh_h /= T(c);
        for (std::size_t j = 0; j < c; ++j) {
          dx[r * c + j] += (*rstd)[r] * (dh[j] - mean_dh - (*xhat)[r * c + j] * mean_dh_h);
        }
      }
    }
  });
}

template <typename T>
Var<T> softmax_rows(Var<T> x) {
  Graph<T>& g = x.graph();
  const std::size_t c = x.shape().back();
  const std::size_t rows = leading(x.shape());
  Tensor<T> out(x.shape());
  const T* xv = x.value().data();
  std::vector<double> scratch;
  for (std::size_t r = 0; r < rows; ++r) {
    const T* row = xv + r * c;
    T* o = out.data() + r * c;
    T mx = row[0];
    for (std::size_t j = 0; j < c; ++j) {
      if (!std::isfinite(row[j])) {
        raise(ErrorKind::numeric, "softmax_rows: non-finite input in row " + std::to_string(r));
      }
      mx = std::max(mx, row[j]);
    }
    // Exponentials and their sum in double so f32 rows still sum to 1 within
    // a few ulp even for 1024-wide rows.
    std::vector<double>& e = scratch;
    e.resize(c);
    double total = 0;
    for (std::size_t j = 0; j < c; ++j) {
      e[j] = std::exp(static_cast<double>(row[j]) - static_cast<double>(mx));
      total += e[j];
    }
    for (std::size_t j = 0; j < c; ++j) o[j] = static_cast<T>(e[j] / total);
  }
  g.notify_softmax(out);
  const std::size_t xid = x.id();
  return g.record(std::move(out), {xid}, [=](Graph<T>& gr, std::size_t self) {
    const Tensor<T>& dc = gr.upstream(self);
    const T* y = gr.value(self).data();
    T* dx = gr.grad_buffer(xid).data();
    for (std::size_t r = 0; r < rows; ++r) {
      T dot = 0;
      for (std::size_t j = 0; j < c; ++j) dot += dc[r * c + j] * y[r * c + j];
      for (std::size_t j = 0; j < c; ++j) dx[r * c + j] += y[r * c + j] * (dc[r * c + j] - dot);
    }
  });
}

// ---------------------------------------------------------------------------
// layout

template <typename T>
Var<T> concat_lastdim(const std::vector<Var<T>>& parts) {
  if (parts.empty()) raise(ErrorKind::usage, "concat_lastdim: no inputs");
  Graph<T>& g = parts.front().graph();
  Shape lead = parts.front().shape();
  lead.pop_back();
  std::vector<std::size_t> widths, ids;
  std::size_t total = 0;
  for (const auto& p : parts) {
    same_graph(parts.front(), p);
    Shape l = p.shape();
    const std::size_t w = l.back();
    l.pop_back();
    if (l != lead) {
      raise(ErrorKind::dimension, "concat_lastdim: leading shapes differ " +
                                      to_string(parts.front().shape()) + " vs " +
                                      to_string(p.shape()));
    }
    widths.push_back(w);
    ids.push_back(p.id());
    total += w;
  }
  Shape shape = lead;
  shape.push_back(total);
  Tensor<T> out(shape);
  const std::size_t rows = num_elements(shape) / total;
  std::size_t off = 0;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const T* src = parts[i].value().data();
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy_n(src + r * widths[i], widths[i], out.data() + r * total + off);
    }
    off += widths[i];
  }
  return g.record(std::move(out), ids, [=](Graph<T>& gr, std::size_t self) {
    const Tensor<T>& dc = gr.upstream(self);
    std::size_t o = 0;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (gr.requires_grad(ids[i])) {
        T* dp = gr.grad_buffer(ids[i]).data();
        for (std::size_t r = 0; r < rows; ++r) {
          kernels::axpy<T>(widths[i], T(1), dc.data() + r * total + o, dp + r * widths[i]);
        }
      }
      o += widths[i];
    }
  });
}

template <typename T>
Var<T> slice_lastdim(Var<T> x, std::size_t begin, std::size_t end) {
  Graph<T>& g = x.graph();
  const std::size_t c = x.shape().back();
  if (begin >= end || end > c) {
    raise(ErrorKind::dimension, "slice_lastdim: range [" + std::to_string(begin) + "," +
                                    std::to_string(end) + ") invalid for " + to_string(x.shape()));
  }
  const std::size_t w = end - begin;
  Shape shape = x.shape();
  shape.back() = w;
  const std::size_t rows = leading(x.shape());
  Tensor<T> out(shape);
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(x.value().data() + r * c + begin, w, out.data() + r * w);
  }
  const std::size_t xid = x.id();
  return g.record(std::move(out), {xid}, [=](Graph<T>& gr, std::size_t self) {
    const Tensor<T>& dc = gr.upstream(self);
    T* dx = gr.grad_buffer(xid).data();
    for (std::size_t r = 0; r < rows; ++r) {
      kernels::axpy<T>(w, T(1), dc.data() + r * w, dx + r * c + begin);
    }
  });
}

template <typename T>
std::vector<Var<T>> split_lastdim(Var<T> x, std::size_t parts) {
  const std::size_t c = x.shape().back();
  if (parts == 0 || c % parts != 0) {
    raise(ErrorKind::dimension, "split_lastdim: " + std::to_string(c) +
                                    " channels cannot split into " + std::to_string(parts));
  }
  const std::size_t w = c / parts;
  std::vector<Var<T>> out;
  for (std::size_t i = 0; i < parts; ++i) out.push_back(slice_lastdim(x, i * w, (i + 1) * w));
  return out;
}

template <typename T>
Var<T> reshape(Var<T> x, Shape shape) {
  Graph<T>& g = x.graph();
  if (num_elements(shape) != x.value().size()) {
    raise(ErrorKind::dimension,
          "reshape: cannot view " + to_string(x.shape()) + " as " + to_string(shape));
  }
  Tensor<T> out = x.value().reshaped(std::move(shape));
  const std::size_t xid = x.id();
  return g.record(std::move(out), {xid}, [=](Graph<T>& gr, std::size_t self) {
    const Tensor<T>& dc = gr.upstream(self);
    Tensor<T>& dx = gr.grad_buffer(xid);
    kernels::axpy<T>(dx.size(), T(1), dc.data(), dx.data());
  });
}

template <typename T>
Var<T> permute(Var<T> x, const std::vector<std::size_t>& axes) {
  Graph<T>& g = x.graph();
  Tensor<T> out = permute(x.value(), axes);
  std::vector<std::size_t> inverse(axes.size());
  for (std::size_t i = 0; i < axes.size(); ++i) inverse[axes[i]] = i;
  const std::size_t xid = x.id();
  return g.record(std::move(out), {xid}, [=](Graph<T>& gr, std::size_t self) {
    Tensor<T> back = permute(gr.upstream(self), inverse);
    accumulate(gr.grad_buffer(xid), back);
  });
}

template <typename T>
Var<T> gather_rows(Var<T> x, const std::vector<std::size_t>& indices) {
  Graph<T>& g = x.graph();
  if (indices.empty()) raise(ErrorKind::usage, "gather_rows: empty index list");
  const std::size_t n = x.shape()[0];
  const std::size_t row = x.value().size() / n;
  for (std::size_t i : indices) {
    if (i >= n) {
      raise(ErrorKind::index, "gather_rows: index " + std::to_string(i) + " out of range for " +
                                  to_string(x.shape()));
    }
  }
  Shape shape = x.shape();
  shape[0] = indices.size();
  Tensor<T> out(shape);
  for (std::size_t k = 0; k < indices.size(); ++k) {
    std::copy_n(x.value().data() + indices[k] * row, row, out.data() + k * row);
  }
  const std::size_t xid = x.id();
  return g.record(std::move(out), {xid}, [=](Graph<T>& gr, std::size_t self) {
    const Tensor<T>& dc = gr.upstream(self);
    T* dx = gr.grad_buffer(xid).data();
    for (std::size_t k = 0; k < indices.size(); ++k) {
      kernels::axpy<T>(row, T(1), dc.data() + k * row, dx + indices[k] * row);
    }
  });
}

// ---------------------------------------------------------------------------
// convolution

namespace {

// col[p][ci*9 + ky*3 + kx] = x[y+ky-1][x+kx-1][ci] (zero outside the image).
template <typename T>
void im2col(const T* x, std::size_t h, std::size_t w, std::size_t cin, T* col) {
  const std::size_t kc = cin * 9;
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t xx = 0; xx < w; ++xx) {
      T* dst = col + (y * w + xx) * kc;
      for (std::size_t ci = 0; ci < cin; ++ci) {
        for (std::size_t ky = 0; ky < 3; ++ky) {
          const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y + ky) - 1;
          for (std::size_t kx = 0; kx < 3; ++kx) {
            const std::ptrdiff_t sx = static_cast<std::ptrdiff_t>(xx + kx) - 1;
            const bool inside = sy >= 0 && sx >= 0 && sy < static_cast<std::ptrdiff_t>(h) &&
                                sx < static_cast<std::ptrdiff_t>(w);
            dst[ci * 9 + ky * 3 + kx] = inside ? x[(sy * w + sx) * cin + ci] : T(0);
          }
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const T* col, std::size_t h, std::size_t w, std::size_t cin, T* dx) {
  const std::size_t kc = cin * 9;
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t xx = 0; xx < w; ++xx) {
      const T* src = col + (y * w + xx) * kc;
      for (std::size_t ci = 0; ci < cin; ++ci) {
        for (std::size_t ky = 0; ky < 3; ++ky) {
          const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y + ky) - 1;
          if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(h)) continue;
          for (std::size_t kx = 0; kx < 3; ++kx) {
            const std::ptrdiff_t sx = static_cast<std::ptrdiff_t>(xx + kx) - 1;
            if (sx < 0 || sx >= static_cast<std::ptrdiff_t>(w)) continue;
            dx[(sy * w + sx) * cin + ci] += src[ci * 9 + ky * 3 + kx];
          }
        }
      }
    }
  }
}

}  // namespace

template <typename T>
Var<T> conv2d_same(Var<T> x, Var<T> w, Var<T> bias) {
  Graph<T>& g = same_graph(x, w);
  same_graph(x, bias);
  const Shape& sx = x.shape();
  const Shape& sw = w.shape();
  if (sx.size() < 3) raise(ErrorKind::dimension, "conv2d_same: input needs [..., H, W, C]");
  if (sw.size() != 4 || sw[2] != 3 || sw[3] != 3) {
    raise(ErrorKind::dimension, "conv2d_same: kernel must be [C_out, C_in, 3, 3], got " +
                                    to_string(sw));
  }
  const std::size_t r = sx.size();
  const std::size_t h = sx[r - 3], wd = sx[r - 2], cin = sx[r - 1];
  const std::size_t cout = sw[0];
  if (sw[1] != cin) {
    raise(ErrorKind::dimension, "conv2d_same: kernel " + to_string(sw) +
                                    " expects " + std::to_string(sw[1]) +
                                    " input channels, input " + to_string(sx) + " has " +
                                    std::to_string(cin));
  }
  if (bias.shape() != Shape{cout}) {
    raise(ErrorKind::dimension, "conv2d_same: bias must be [" + std::to_string(cout) + "]");
  }
  const std::size_t batch = num_elements(sx) / (h * wd * cin);
  const std::size_t hw = h * wd, kc = cin * 9;

  Shape out_shape = sx;
  out_shape.back() = cout;
  Tensor<T> out(out_shape);
  std::vector<T> wm(kc * cout);
  transpose_into(w.value().data(), cout, kc, wm.data());
  std::vector<T> col(hw * kc);
  for (std::size_t b = 0; b < batch; ++b) {
    im2col(x.value().data() + b * hw * cin, h, wd, cin, col.data());
    T* o = out.data() + b * hw * cout;
    kernels::gemm<T>(hw, cout, kc, col.data(), kc, wm.data(), cout, o, cout, false);
    for (std::size_t p = 0; p < hw; ++p) {
      kernels::add<T>(cout, o + p * cout, bias.value().data(), o + p * cout);
    }
  }
  g.macs().add(static_cast<std::uint64_t>(batch) * cout * cin * 9 * h * wd);

  const std::size_t xid = x.id(), wid = w.id(), bid = bias.id();
  return g.record(std::move(out), {xid, wid, bid}, [=](Graph<T>& gr, std::size_t self) {
    const Tensor<T>& dc = gr.upstream(self);
    if (gr.requires_grad(bid)) {
      T* db = gr.grad_buffer(bid).data();
      for (std::size_t p = 0; p < batch * hw; ++p) {
        kernels::axpy<T>(cout, T(1), dc.data() + p * cout, db);
      }
    }
    const bool need_x = gr.requires_grad(xid);
    const bool need_w = gr.requires_grad(wid);
    if (!need_x && !need_w) return;
    std::vector<T> colb(hw * kc), dct(cout * hw);
    const T* xv = gr.value(xid).data();
    const T* wv = gr.value(wid).data();
    T* dw = need_w ? gr.grad_buffer(wid).data() : nullptr;
    T* dx = need_x ? gr.grad_buffer(xid).data() : nullptr;
    for (std::size_t b = 0; b < batch; ++b) {
      const T* dcb = dc.data() + b * hw * cout;
      if (need_w) {
        im2col(xv + b * hw * cin, h, wd, cin, colb.data());
        transpose_into(dcb, hw, cout, dct.data());
        kernels::gemm<T>(cout, kc, hw, dct.data(), hw, colb.data(), kc, dw, kc, true);
      }
      if (need_x) {
        kernels::gemm<T>(hw, kc, cout, dcb, cout, wv, kc, colb.data(), kc, false);
        col2im_add(colb.data(), h, wd, cin, dx + b * hw * cin);
      }
    }
  });
}

// ---------------------------------------------------------------------------
// pixel shuffle

template <typename T>
Tensor<T> pixel_shuffle(const Tensor<T>& x, std::size_t r) {
  const Shape& s = x.shape();
  if (r == 0 || s.size() < 3 || s.back() % (r * r) != 0) {
    raise(ErrorKind::dimension, "pixel_shuffle: channels of " + to_string(s) +
                                    " not divisible by r^2 = " + std::to_string(r * r));
  }
  const std::size_t n = s.size();
  const std::size_t h = s[n - 3], w = s[n - 2], cr = s[n - 1], c = cr / (r * r);
  const std::size_t batch = num_elements(s) / (h * w * cr);
  Shape os = s;
  os[n - 3] = h * r;
  os[n - 2] = w * r;
  os[n - 1] = c;
  Tensor<T> out(os);
  for (std::size_t b = 0; b < batch; ++b) {
    const T* in = x.data() + b * h * w * cr;
    T* o = out.data() + b * h * w * cr;
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t xx = 0; xx < w; ++xx)
        for (std::size_t ch = 0; ch < c; ++ch)
          for (std::size_t dy = 0; dy < r; ++dy)
            for (std::size_t dx = 0; dx < r; ++dx)
              o[((r * y + dy) * (r * w) + (r * xx + dx)) * c + ch] =
                  in[(y * w + xx) * cr + ch * r * r + dy * r + dx];
  }
  return out;
}

template <typename T>
Tensor<T> pixel_unshuffle(const Tensor<T>& x, std::size_t r) {
  const Shape& s = x.shape();
  const std::size_t n = s.size();
  if (r == 0 || n < 3 || s[n - 3] % r != 0 || s[n - 2] % r != 0) {
    raise(ErrorKind::dimension, "pixel_unshuffle: spatial extents of " + to_string(s) +
                                    " not divisible by " + std::to_string(r));
  }
  const std::size_t h = s[n - 3] / r, w = s[n - 2] / r, c = s[n - 1], cr = c * r * r;
  const std::size_t batch = num_elements(s) / (h * w * cr);
  Shape os = s;
  os[n - 3] = h;
  os[n - 2] = w;
  os[n - 1] = cr;
  Tensor<T> out(os);
  for (std::size_t b = 0; b < batch; ++b) {
    const T* in = x.data() + b * h * w * cr;
    T* o = out.data() + b * h * w * cr;
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t xx = 0; xx < w; ++xx)
        for (std::size_t ch = 0; ch < c; ++ch)
          for (std::size_t dy = 0; dy < r; ++dy)
            for (std::size_t dx = 0; dx < r; ++dx)
              o[(y * w + xx) * cr + ch * r * r + dy * r + dx] =
                  in[((r * y + dy) * (r * w) + (r * xx + dx)) * c + ch];
  }
  return out;
}

template <typename T>
Var<T> pixel_shuffle(Var<T> x, std::size_t r) {
  Graph<T>& g = x.graph();
  Tensor<T> out = pixel_shuffle(x.value(), r);
  const std::size_t xid = x.id();
  return g.record(std::move(out), {xid}, [=](Graph<T>& gr, std::size_t self) {
    accumulate(gr.grad_buffer(xid), pixel_unshuffle(gr.upstream(self), r));
  });
}

// ---------------------------------------------------------------------------
// reductions

template <typename T>
Var<T> sum(Var<T> x) {
  Graph<T>& g = x.graph();
  T total = 0;
  for (T v : x.value().values()) total += v;
  const std::size_t xid = x.id();
  return g.record(Tensor<T>::scalar(total), {xid}, [=](Graph<T>& gr, std::size_t self) {
    const T d = gr.upstream(self)[0];
    for (T& v : gr.grad_buffer(xid).values()) v += d;
  });
}

template <typename T>
Var<T> mean(Var<T> x) {
  return scale(sum(x), T(1) / T(x.value().size()));
}

template <typename T>
Var<T> l1_loss(Var<T> pred, Var<T> target) {
  Graph<T>& g = same_graph(pred, target);
  require_same_shape<T>("l1_loss", pred.shape(), target.shape());
  const std::size_t n = pred.value().size();
  const T* p = pred.value().data();
  const T* t = target.value().data();
  auto sign = std::make_shared<std::vector<std::int8_t>>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const T d = p[i] - t[i];
    (*sign)[i] = static_cast<std::int8_t>((d > T(0)) - (d < T(0)));
  }
  g.resolve_kinks(*sign);
  // Compensated (Neumaier) summation: keeps finite-difference probes of the
  // loss free of accumulation noise.
  T total = 0, carry = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const T term = T((*sign)[i]) * (p[i] - t[i]);
    const T next = total + term;
    carry += std::abs(total) >= std::abs(term) ? (total - next) + term : (term - next) + total;
    total = next;
  }
  total += carry;
  const std::size_t pid = pred.id(), tid = target.id();
  return g.record(Tensor<T>::scalar(total / T(n)), {pid, tid},
                  [=](Graph<T>& gr, std::size_t self) {
                    const T d = gr.upstream(self)[0] / T(n);
                    if (gr.requires_grad(pid)) {
                      T* dp = gr.grad_buffer(pid).data();
                      for (std::size_t i = 0; i < n; ++i) dp[i] += d * T((*sign)[i]);
                    }
                    if (gr.requires_grad(tid)) {
                      T* dt = gr.grad_buffer(tid).data();
                      for (std::size_t i = 0; i < n; ++i) dt[i] -= d * T((*sign)[i]);
                    }
                  });
}

#define LFMDT_INSTANTIATE(T)                                                          \
  template Var<T> matmul(Var<T>, Var<T>, Transpose);                                  \
  template Var<T> add(Var<T>, Var<T>);                                                \
  template Var<T> sub(Var<T>, Var<T>);                                                \
  template Var<T> mul(Var<T>, Var<T>);                                                \
  template Var<T> scale(Var<T>, T);                                                   \
  template Var<T> add_bias(Var<T>, Var<T>);                                           \
  template Var<T> scale_channels(Var<T>, Var<T>);                                     \
  template Var<T> leaky_relu(Var<T>, T);                                              \
  template Var<T> gelu(Var<T>);                                                       \
  template Var<T> layer_norm_lastdim(Var<T>, Var<T>, Var<T>, T);                      \
  template Var<T> softmax_rows(Var<T>);                                               \
  template Var<T> concat_lastdim(const std::vector<Var<T>>&);                         \
  template Var<T> slice_lastdim(Var<T>, std::size_t, std::size_t);                   \
  template std::vector<Var<T>> split_lastdim(Var<T>, std::size_t);                    \
  template Var<T> reshape(Var<T>, Shape);                                             \
  template Var<T> permute(Var<T>, const std::vector<std::size_t>&);                   \
  template Var<T> gather_rows(Var<T>, const std::vector<std::size_t>&);               \
  template Var<T> conv2d_same(Var<T>, Var<T>, Var<T>);                                \
  template Var<T> pixel_shuffle(Var<T>, std::size_t);                                 \
  template Var<T> sum(Var<T>);                                                        \
  template Var<T> mean(Var<T>);                                                       \
  template Var<T> l1_loss(Var<T>, Var<T>);                                            \
  template Tensor<T> pixel_shuffle(const Tensor<T>&, std::size_t);                    \
  template Tensor<T> pixel_unshuffle(const Tensor<T>&, std::size_t);

LFMDT_INSTANTIATE(float)
LFMDT_INSTANTIATE(double)
#undef LFMDT_INSTANTIATE

}  // namespace lfmdt
