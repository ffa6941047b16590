#include "courtformer/nn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>

#include "courtformer/errors.hpp"

namespace courtformer::nn {

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ']';
  return os.str();
}

namespace {

template <typename Real>
inline Real dot(const Real* a, const Real* b, std::size_t n) {
  Real s{0};
#pragma omp simd reduction(+ : s)
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

template <typename Real>
inline void axpy(Real alpha, const Real* x, Real* y, std::size_t n) {
#pragma omp simd
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

template <typename Real>
void require_same_shape(const char* op, const Tensor<Real>& a, const Tensor<Real>& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
  }
}

template <typename Real>
void require_matrix_rows(const char* op, const Tensor<Real>& t) {
  if (t.rank() < 1) throw DimensionError(std::string(op) + ": expected at least one axis");
}

// Softmax over the listed columns of one row; other entries untouched.
template <typename Real>
void softmax_over(const Real* logits, std::span<const std::uint32_t> cols, Real* out) {
  Real peak = -std::numeric_limits<Real>::infinity();
  for (auto c : cols) peak = std::max(peak, logits[c]);
  // Accumulate in double so long float rows still sum to one within 1e-6.
  double total = 0.0;
  for (auto c : cols) {
    out[c] = std::exp(logits[c] - peak);
    total += static_cast<double>(out[c]);
  }
  const double inv = 1.0 / total;
  for (auto c : cols) out[c] = static_cast<Real>(static_cast<double>(out[c]) * inv);
}

// Columns [off, off + dh) of x [S, d] into out [dh, S].
template <typename Real>
void transpose_head(const Tensor<Real>& x, std::size_t off, std::size_t dh, Real* out) {
  const std::size_t s = x.dim(0), d = x.dim(1);
  for (std::size_t j = 0; j < s; ++j) {
    for (std::size_t c = 0; c < dh; ++c) out[c * s + j] = x.ptr()[j * d + off + c];
  }
}

template <typename Real>
Tensor<Real> map_unary(const Tensor<Real>& x, Real (*f)(Real)) {
  Tensor<Real> out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = f(x[i]);
  return out;
}

}  // namespace

template <typename Real>
Var<Real> linear(Var<Real> x, Var<Real> weight, Var<Real> bias) {
  const auto& xv = x.value();
  const auto& wv = weight.value();
  const auto& bv = bias.value();
  require_matrix_rows("linear", xv);
  if (wv.rank() != 2 || xv.cols() != wv.dim(0) || bv.size() != wv.dim(1)) {
    throw DimensionError("linear: input " + shape_string(xv.shape()) + " incompatible with weight " +
                         shape_string(wv.shape()) + " and bias " + shape_string(bv.shape()));
  }
  const std::size_t rows = xv.rows();
  const std::size_t in = wv.dim(0);
  const std::size_t out_dim = wv.dim(1);
  Shape out_shape = xv.shape();
  out_shape.back() = out_dim;
  Tensor<Real> out(out_shape);
  for (std::size_t i = 0; i < rows; ++i) {
    Real* o = out.ptr() + i * out_dim;
    std::copy(bv.ptr(), bv.ptr() + out_dim, o);
    const Real* xi = xv.ptr() + i * in;
    for (std::size_t k = 0; k < in; ++k) {
      const Real a = xi[k];
      if (a != Real{0}) axpy(a, wv.ptr() + k * out_dim, o, out_dim);
    }
  }
  const auto xid = x.id(), wid = weight.id(), bid = bias.id();
  return x.tape()->record(std::move(out), {x, weight, bias},
                          [xid, wid, bid, rows, in, out_dim](Tape<Real>& t, const Tensor<Real>& g) {
                            const auto& xv = t.value(xid);
                            const auto& wv = t.value(wid);
                            if (t.requires_grad(xid)) {
                              auto& dx = t.grad(xid);
                              for (std::size_t i = 0; i < rows; ++i) {
                                const Real* gi = g.ptr() + i * out_dim;
                                Real* dxi = dx.ptr() + i * in;
                                for (std::size_t k = 0; k < in; ++k) {
                                  dxi[k] += dot(gi, wv.ptr() + k * out_dim, out_dim);
                                }
                              }
                            }
                            if (t.requires_grad(wid)) {
                              auto& dw = t.grad(wid);
                              for (std::size_t i = 0; i < rows; ++i) {
                                const Real* gi = g.ptr() + i * out_dim;
                                const Real* xi = xv.ptr() + i * in;
                                for (std::size_t k = 0; k < in; ++k) {
                                  if (xi[k] != Real{0}) axpy(xi[k], gi, dw.ptr() + k * out_dim, out_dim);
                                }
                              }
                            }
                            if (t.requires_grad(bid)) {
                              auto& db = t.grad(bid);
                              for (std::size_t i = 0; i < rows; ++i) {
                                axpy(Real{1}, g.ptr() + i * out_dim, db.ptr(), out_dim);
                              }
                            }
                          });
}

template <typename Real>
Var<Real> add(Var<Real> a, Var<Real> b) {
  require_same_shape("add", a.value(), b.value());
  Tensor<Real> out = a.value();
  const auto& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  const auto aid = a.id(), bid = b.id();
  return a.tape()->record(std::move(out), {a, b}, [aid, bid](Tape<Real>& t, const Tensor<Real>& g) {
    for (auto id : {aid, bid}) {
      if (!t.requires_grad(id)) continue;
      auto& d = t.grad(id);
      axpy(Real{1}, g.ptr(), d.ptr(), g.size());
    }
  });
}

template <typename Real>
Var<Real> mul(Var<Real> a, Var<Real> b) {
  require_same_shape("mul", a.value(), b.value());
  Tensor<Real> out = a.value();
  const auto& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  const auto aid = a.id(), bid = b.id();
  return a.tape()->record(std::move(out), {a, b}, [aid, bid](Tape<Real>& t, const Tensor<Real>& g) {
    if (t.requires_grad(aid)) {
      auto& d = t.grad(aid);
      const auto& other = t.value(bid);
      for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * other[i];
    }
    if (t.requires_grad(bid)) {
      auto& d = t.grad(bid);
      const auto& other = t.value(aid);
      for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * other[i];
    }
  });
}

template <typename Real>
Var<Real> scale(Var<Real> x, Real factor) {
  Tensor<Real> out = x.value();
  for (auto& v : out.data()) v *= factor;
  const auto xid = x.id();
  return x.tape()->record(std::move(out), {x}, [xid, factor](Tape<Real>& t, const Tensor<Real>& g) {
    axpy(factor, g.ptr(), t.grad(xid).ptr(), g.size());
  });
}

template <typename Real>
Var<Real> one_minus(Var<Real> x) {
  Tensor<Real> out = x.value();
  for (auto& v : out.data()) v = Real{1} - v;
  const auto xid = x.id();
  return x.tape()->record(std::move(out), {x}, [xid](Tape<Real>& t, const Tensor<Real>& g) {
    axpy(Real{-1}, g.ptr(), t.grad(xid).ptr(), g.size());
  });
}

template <typename Real>
Var<Real> relu(Var<Real> x) {
  Tensor<Real> out = x.value();
  for (auto& v : out.data()) v = v > Real{0} ? v : Real{0};
  const auto xid = x.id();
  return x.tape()->record(std::move(out), {x}, [xid](Tape<Real>& t, const Tensor<Real>& g) {
    const auto& xv = t.value(xid);
    auto& d = t.grad(xid);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (xv[i] > Real{0}) d[i] += g[i];
    }
  });
}

template <typename Real>
Var<Real> sigmoid(Var<Real> x) {
  Tensor<Real> out = map_unary<Real>(x.value(), [](Real v) { return Real{1} / (Real{1} + std::exp(-v)); });
  const auto xid = x.id();
  const auto yid = static_cast<std::uint32_t>(x.tape()->size());
  return x.tape()->record(std::move(out), {x}, [xid, yid](Tape<Real>& t, const Tensor<Real>& g) {
    const auto& y = t.value(yid);
    auto& d = t.grad(xid);
    for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * y[i] * (Real{1} - y[i]);
  });
}

template <typename Real>
Var<Real> tanh(Var<Real> x) {
  Tensor<Real> out = map_unary<Real>(x.value(), [](Real v) { return std::tanh(v); });
  const auto xid = x.id();
  const auto yid = static_cast<std::uint32_t>(x.tape()->size());
  return x.tape()->record(std::move(out), {x}, [xid, yid](Tape<Real>& t, const Tensor<Real>& g) {
    const auto& y = t.value(yid);
    auto& d = t.grad(xid);
    for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * (Real{1} - y[i] * y[i]);
  });
}

template <typename Real>
Var<Real> layer_norm(Var<Real> x, Var<Real> gain, Var<Real> shift, Real epsilon) {
  const auto& xv = x.value();
  require_matrix_rows("layer_norm", xv);
  const std::size_t d = xv.cols();
  const std::size_t rows = xv.rows();
  if (gain.value().size() != d || shift.value().size() != d) {
    throw DimensionError("layer_norm: input " + shape_string(xv.shape()) + " vs gain " +
                         shape_string(gain.value().shape()) + " and shift " +
                         shape_string(shift.value().shape()));
  }
  const auto& gv = gain.value();
  const auto& sv = shift.value();
  auto normalized = std::make_shared<Tensor<Real>>(xv.shape());
  auto inv_std = std::make_shared<std::vector<Real>>(rows);
  Tensor<Real> out(xv.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const Real* xr = xv.ptr() + r * d;
    Real mean{0};
    for (std::size_t j = 0; j < d; ++j) mean += xr[j];
    mean /= static_cast<Real>(d);
    Real var{0};
    for (std::size_t j = 0; j < d; ++j) var += (xr[j] - mean) * (xr[j] - mean);
    var /= static_cast<Real>(d);
    const Real is = Real{1} / std::sqrt(var + epsilon);
    (*inv_std)[r] = is;
    Real* nr = normalized->ptr() + r * d;
    Real* o = out.ptr() + r * d;
    for (std::size_t j = 0; j < d; ++j) {
      nr[j] = (xr[j] - mean) * is;
      o[j] = gv[j] * nr[j] + sv[j];
    }
  }
  const auto xid = x.id(), gid = gain.id(), sid = shift.id();
  return x.tape()->record(
      std::move(out), {x, gain, shift},
      [xid, gid, sid, normalized, inv_std, rows, d](Tape<Real>& t, const Tensor<Real>& g) {
        const auto& gv = t.value(gid);
        if (t.requires_grad(gid)) {
          auto& dg = t.grad(gid);
          for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t j = 0; j < d; ++j) dg[j] += g[r * d + j] * (*normalized)[r * d + j];
          }
        }
        if (t.requires_grad(sid)) {
          auto& ds = t.grad(sid);
          for (std::size_t r = 0; r < rows; ++r) axpy(Real{1}, g.ptr() + r * d, ds.ptr(), d);
        }
        if (t.requires_grad(xid)) {
          auto& dx = t.grad(xid);
          std::vector<Real> dn(d);
          for (std::size_t r = 0; r < rows; ++r) {
            const Real* nr = normalized->ptr() + r * d;
            Real mean_dn{0}, mean_dn_n{0};
            for (std::size_t j = 0; j < d; ++j) {
              dn[j] = g[r * d + j] * gv[j];
              mean_dn += dn[j];
              mean_dn_n += dn[j] * nr[j];
            }
            mean_dn /= static_cast<Real>(d);
            mean_dn_n /= static_cast<Real>(d);
            const Real is = (*inv_std)[r];
            Real* dxr = dx.ptr() + r * d;
            for (std::size_t j = 0; j < d; ++j) dxr[j] += is * (dn[j] - mean_dn - nr[j] * mean_dn_n);
          }
        }
      });
}

template <typename Real>
Var<Real> gather_rows(Var<Real> x, std::vector<std::uint32_t> index) {
  const auto& xv = x.value();
  require_matrix_rows("gather_rows", xv);
  const std::size_t c = xv.cols();
  const std::size_t r = xv.rows();
  if (index.empty()) throw DimensionError("gather_rows: empty index");
  Tensor<Real> out(Shape{index.size(), c});
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= r) {
      throw IndexError("gather_rows: row " + std::to_string(index[i]) + " out of " + std::to_string(r));
    }
    std::copy_n(xv.ptr() + index[i] * c, c, out.ptr() + i * c);
  }
  const auto xid = x.id();
  return x.tape()->record(std::move(out), {x},
                          [xid, c, index = std::move(index)](Tape<Real>& t, const Tensor<Real>& g) {
                            auto& dx = t.grad(xid);
                            for (std::size_t i = 0; i < index.size(); ++i) {
                              axpy(Real{1}, g.ptr() + i * c, dx.ptr() + index[i] * c, c);
                            }
                          });
}

template <typename Real>
Var<Real> concat_cols(Var<Real> a, Var<Real> b) {
  const auto& av = a.value();
  const auto& bv = b.value();
  if (av.rows() != bv.rows()) {
    throw DimensionError("concat_cols: row mismatch " + shape_string(av.shape()) + " vs " +
                         shape_string(bv.shape()));
  }
  const std::size_t rows = av.rows(), ca = av.cols(), cb = bv.cols();
  Tensor<Real> out(Shape{rows, ca + cb});
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(av.ptr() + r * ca, ca, out.ptr() + r * (ca + cb));
    std::copy_n(bv.ptr() + r * cb, cb, out.ptr() + r * (ca + cb) + ca);
  }
  const auto aid = a.id(), bid = b.id();
  return a.tape()->record(std::move(out), {a, b},
                          [aid, bid, rows, ca, cb](Tape<Real>& t, const Tensor<Real>& g) {
                            if (t.requires_grad(aid)) {
                              auto& d = t.grad(aid);
                              for (std::size_t r = 0; r < rows; ++r) {
                                axpy(Real{1}, g.ptr() + r * (ca + cb), d.ptr() + r * ca, ca);
                              }
                            }
                            if (t.requires_grad(bid)) {
                              auto& d = t.grad(bid);
                              for (std::size_t r = 0; r < rows; ++r) {
                                axpy(Real{1}, g.ptr() + r * (ca + cb) + ca, d.ptr() + r * cb, cb);
                              }
                            }
                          });
}

template <typename Real>
Var<Real> concat_rows(std::span<const Var<Real>> parts) {
  if (parts.empty()) throw DimensionError("concat_rows: no inputs");
  const std::size_t c = parts[0].value().cols();
  std::size_t total = 0;
  for (const auto& p : parts) {
    if (p.value().cols() != c) {
      throw DimensionError("concat_rows: column mismatch " + shape_string(parts[0].shape()) + " vs " +
                           shape_string(p.shape()));
    }
    total += p.value().rows();
  }
  Tensor<Real> out(Shape{total, c});
  std::vector<std::uint32_t> ids;
  std::vector<std::size_t> offsets;
  std::size_t at = 0;
  for (const auto& p : parts) {
    std::copy_n(p.value().ptr(), p.value().size(), out.ptr() + at);
    ids.push_back(p.id());
    offsets.push_back(at);
    at += p.value().size();
  }
  return parts[0].tape()->record(
      std::move(out), parts, [ids, offsets](Tape<Real>& t, const Tensor<Real>& g) {
        for (std::size_t i = 0; i < ids.size(); ++i) {
          if (!t.requires_grad(ids[i])) continue;
          auto& d = t.grad(ids[i]);
          axpy(Real{1}, g.ptr() + offsets[i], d.ptr(), d.size());
        }
      });
}

template <typename Real>
Var<Real> group_mean(Var<Real> x, std::vector<std::uint32_t> group, std::size_t groups) {
  const auto& xv = x.value();
  if (group.size() != xv.rows()) {
    throw DimensionError("group_mean: " + std::to_string(group.size()) + " group ids for " +
                         std::to_string(xv.rows()) + " rows");
  }
  const std::size_t c = xv.cols();
  std::vector<Real> inv_count(groups, Real{0});
  for (auto gi : group) {
    if (gi >= groups) throw IndexError("group_mean: group id " + std::to_string(gi) + " out of range");
    inv_count[gi] += Real{1};
  }
  for (auto& n : inv_count) {
    if (n == Real{0}) throw DimensionError("group_mean: empty group");
    n = Real{1} / n;
  }
  Tensor<Real> out(Shape{groups, c});
  for (std::size_t r = 0; r < group.size(); ++r) {
    axpy(inv_count[group[r]], xv.ptr() + r * c, out.ptr() + group[r] * c, c);
  }
  const auto xid = x.id();
  return x.tape()->record(
      std::move(out), {x},
      [xid, c, group = std::move(group), inv_count](Tape<Real>& t, const Tensor<Real>& g) {
        auto& dx = t.grad(xid);
        for (std::size_t r = 0; r < group.size(); ++r) {
          axpy(inv_count[group[r]], g.ptr() + group[r] * c, dx.ptr() + r * c, c);
        }
      });
}

template <typename Real>
Var<Real> sum(Var<Real> x) {
  Real total{0};
  for (auto v : x.value().data()) total += v;
  const auto xid = x.id();
  return x.tape()->record(Tensor<Real>(Shape{1}, total), {x}, [xid](Tape<Real>& t, const Tensor<Real>& g) {
    auto& d = t.grad(xid);
    for (auto& v : d.data()) v += g[0];
  });
}

template <typename Real>
Var<Real> masked_attention(Var<Real> q, Var<Real> k, Var<Real> v, const AttentionMask& mask,
                           std::size_t heads, AttentionCapture<Real>* capture) {
  const auto& qv = q.value();
  const auto& kv = k.value();
  const auto& vv = v.value();
  if (qv.rank() != 2) throw DimensionError("masked_attention: expected [S, d], got " + shape_string(qv.shape()));
  require_same_shape("masked_attention", qv, kv);
  require_same_shape("masked_attention", qv, vv);
  const std::size_t s = qv.dim(0);
  const std::size_t d = qv.dim(1);
  if (heads == 0 || d % heads != 0) {
    throw ConfigError("masked_attention: width " + std::to_string(d) + " not divisible by " +
                      std::to_string(heads) + " heads");
  }
  if (mask.side() != s) {
    throw DimensionError("masked_attention: mask side " + std::to_string(mask.side()) + " for " +
                         std::to_string(s) + " tokens");
  }
  const std::size_t dh = d / heads;
  const Real inv_sqrt = Real{1} / std::sqrt(static_cast<Real>(dh));
  for (std::size_t i = 0; i < s; ++i) {
    if (mask.row_columns(i).empty()) {
      throw InvalidMaskError("attention row " + std::to_string(i) + " has no allowed columns");
    }
  }

  // Each row touches only the span from its first to its last allowed column. Heads are
  // transposed to [dh, S] so every inner loop runs along that span.
  auto spans = std::make_shared<std::vector<std::pair<std::size_t, std::size_t>>>(s);
  for (std::size_t i = 0; i < s; ++i) {
    const auto cols = mask.row_columns(i);
    (*spans)[i] = {cols.front(), cols.back() + 1};
  }
  auto probs = std::make_shared<std::vector<Tensor<Real>>>();
  probs->reserve(heads);
  Tensor<Real> out(Shape{s, d});
  std::vector<Real> kt(dh * s), vt(dh * s), scores(s);
  for (std::size_t h = 0; h < heads; ++h) {
    const std::size_t off = h * dh;
    transpose_head(kv, off, dh, kt.data());
    transpose_head(vv, off, dh, vt.data());
    Tensor<Real> p(Shape{s, s});
    for (std::size_t i = 0; i < s; ++i) {
      const auto [lo, hi] = (*spans)[i];
      const std::size_t n = hi - lo;
      const Real* qi = qv.ptr() + i * d + off;
      std::fill(scores.begin() + lo, scores.begin() + hi, Real{0});
      for (std::size_t c = 0; c < dh; ++c) axpy(qi[c] * inv_sqrt, kt.data() + c * s + lo, scores.data() + lo, n);
      Real* pi = p.ptr() + i * s;
      softmax_over(scores.data(), mask.row_columns(i), pi);
      Real* oi = out.ptr() + i * d + off;
      for (std::size_t c = 0; c < dh; ++c) oi[c] = dot(pi + lo, vt.data() + c * s + lo, n);
    }
    probs->push_back(std::move(p));
  }
  if (capture != nullptr) capture->weights = *probs;

  const auto qid = q.id(), kid = k.id(), vid = v.id();
  return q.tape()->record(
      std::move(out), {q, k, v},
      [qid, kid, vid, probs, spans, s, d, dh, heads, inv_sqrt](Tape<Real>& t, const Tensor<Real>& g) {
        const auto& qv = t.value(qid);
        const auto& kv = t.value(kid);
        const auto& vv = t.value(vid);
        auto& dq = t.grad(qid);
        auto& dk = t.grad(kid);
        auto& dv = t.grad(vid);
        std::vector<Real> kt(dh * s), vt(dh * s), dkt(dh * s), dvt(dh * s), dp(s), ds(s);
        for (std::size_t h = 0; h < heads; ++h) {
          const auto& p = (*probs)[h];
          const std::size_t off = h * dh;
          transpose_head(kv, off, dh, kt.data());
          transpose_head(vv, off, dh, vt.data());
          std::fill(dkt.begin(), dkt.end(), Real{0});
          std::fill(dvt.begin(), dvt.end(), Real{0});
          for (std::size_t i = 0; i < s; ++i) {
            const auto [lo, hi] = (*spans)[i];
            const std::size_t n = hi - lo;
            const Real* gi = g.ptr() + i * d + off;
            const Real* pi = p.ptr() + i * s + lo;
            const Real* qi = qv.ptr() + i * d + off;
            Real* dqi = dq.ptr() + i * d + off;
            std::fill(dp.begin() + lo, dp.begin() + hi, Real{0});
            for (std::size_t c = 0; c < dh; ++c) {
              axpy(gi[c], vt.data() + c * s + lo, dp.data() + lo, n);
              axpy(gi[c], pi, dvt.data() + c * s + lo, n);
            }
            const Real weighted = dot(pi, dp.data() + lo, n);
            // Denied columns carry p = 0, so their ds is zero too.
            for (std::size_t j = 0; j < n; ++j) ds[lo + j] = pi[j] * (dp[lo + j] - weighted) * inv_sqrt;
            for (std::size_t c = 0; c < dh; ++c) {
              dqi[c] += dot(ds.data() + lo, kt.data() + c * s + lo, n);
              axpy(qi[c], ds.data() + lo, dkt.data() + c * s + lo, n);
            }
          }
          for (std::size_t j = 0; j < s; ++j) {
            for (std::size_t c = 0; c < dh; ++c) {
              dk.ptr()[j * d + off + c] += dkt[c * s + j];
              dv.ptr()[j * d + off + c] += dvt[c * s + j];
            }
          }
        }
      });
}

template <typename Real>
Var<Real> softmax_cross_entropy(Var<Real> logits, std::span<const std::int32_t> labels) {
  const auto& lv = logits.value();
  const std::size_t rows = lv.rows();
  const std::size_t n = lv.cols();
  if (labels.size() != rows) {
    throw DimensionError("softmax_cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                         std::to_string(rows) + " rows");
  }
  auto probs = std::make_shared<Tensor<Real>>(lv.shape());
  std::vector<std::int32_t> label_copy(labels.begin(), labels.end());
  double total = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    if (labels[r] < 0 || static_cast<std::size_t>(labels[r]) >= n) {
      throw IndexError("label " + std::to_string(labels[r]) + " outside [0, " + std::to_string(n) + ")");
    }
    const Real* z = lv.ptr() + r * n;
    Real* p = probs->ptr() + r * n;
    const Real peak = *std::max_element(z, z + n);
    Real denom{0};
    for (std::size_t j = 0; j < n; ++j) {
      p[j] = std::exp(z[j] - peak);
      denom += p[j];
    }
    const Real inv = Real{1} / denom;
    for (std::size_t j = 0; j < n; ++j) p[j] *= inv;
    total += static_cast<double>(std::log(denom) - (z[labels[r]] - peak));
  }
  const auto lid = logits.id();
  return logits.tape()->record(
      Tensor<Real>(Shape{1}, static_cast<Real>(total)), {logits},
      [lid, probs, rows, n, label_copy = std::move(label_copy)](Tape<Real>& t, const Tensor<Real>& g) {
        auto& dz = t.grad(lid);
        const Real scale = g[0];
        for (std::size_t r = 0; r < rows; ++r) {
          const Real* p = probs->ptr() + r * n;
          Real* d = dz.ptr() + r * n;
          axpy(scale, p, d, n);
          d[label_copy[r]] -= scale;
        }
      });
}

template <typename Real>
Tensor<Real> masked_softmax(const Tensor<Real>& logits, std::span<const std::uint8_t> allow) {
  if (allow.size() != logits.size()) {
    throw DimensionError("masked_softmax: mask has " + std::to_string(allow.size()) + " entries for logits " +
                         shape_string(logits.shape()));
  }
  const std::size_t n = logits.cols();
  Tensor<Real> out(logits.shape(), Real{0});
  std::vector<std::uint32_t> cols;
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    cols.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (allow[r * n + j]) cols.push_back(static_cast<std::uint32_t>(j));
    }
    if (cols.empty()) throw InvalidMaskError("masked_softmax: row " + std::to_string(r) + " is fully masked");
    softmax_over(logits.ptr() + r * n, cols, out.ptr() + r * n);
  }
  return out;
}

template <typename Real>
Tensor<Real> softmax_rows(const Tensor<Real>& logits) {
  std::vector<std::uint8_t> allow(logits.size(), 1);
  return masked_softmax(logits, allow);
}

namespace {
template <typename Real>
double nll_impl(std::span<const Real> p, std::int64_t label) {
  if (label < 0 || static_cast<std::size_t>(label) >= p.size()) {
    throw IndexError("label " + std::to_string(label) + " outside [0, " + std::to_string(p.size()) + ")");
  }
  return -std::log(static_cast<double>(p[static_cast<std::size_t>(label)]));
}
}  // namespace

double cross_entropy_nll(std::span<const double> probabilities, std::int64_t label) {
  return nll_impl(probabilities, label);
}

double cross_entropy_nll(std::span<const float> probabilities, std::int64_t label) {
  return nll_impl(probabilities, label);
}

template <typename Real>
double log_softmax_nll(std::span<const Real> logits, std::int64_t label) {
  if (label < 0 || static_cast<std::size_t>(label) >= logits.size()) {
    throw IndexError("label " + std::to_string(label) + " outside [0, " + std::to_string(logits.size()) + ")");
  }
  double peak = -std::numeric_limits<double>::infinity();
  for (auto z : logits) peak = std::max(peak, static_cast<double>(z));
  double denom = 0.0;
  for (auto z : logits) denom += std::exp(static_cast<double>(z) - peak);
  return std::log(denom) - (static_cast<double>(logits[static_cast<std::size_t>(label)]) - peak);
}

#define COURTFORMER_INSTANTIATE_OPS(Real)                                                              \
  template Var<Real> linear(Var<Real>, Var<Real>, Var<Real>);                                          \
  template Var<Real> add(Var<Real>, Var<Real>);                                                        \
  template Var<Real> mul(Var<Real>, Var<Real>);                                                        \
  template Var<Real> scale(Var<Real>, Real);                                                           \
  template Var<Real> one_minus(Var<Real>);                                                             \
  template Var<Real> relu(Var<Real>);                                                                  \
  template Var<Real> sigmoid(Var<Real>);                                                               \
  template Var<Real> tanh(Var<Real>);                                                                  \
  template Var<Real> layer_norm(Var<Real>, Var<Real>, Var<Real>, Real);                                \
  template Var<Real> gather_rows(Var<Real>, std::vector<std::uint32_t>);                               \
  template Var<Real> concat_cols(Var<Real>, Var<Real>);                                                \
  template Var<Real> concat_rows(std::span<const Var<Real>>);                                          \
  template Var<Real> group_mean(Var<Real>, std::vector<std::uint32_t>, std::size_t);                   \
  template Var<Real> sum(Var<Real>);                                                                   \
  template Var<Real> masked_attention(Var<Real>, Var<Real>, Var<Real>, const AttentionMask&,           \
                                      std::size_t, AttentionCapture<Real>*);                           \
  template Var<Real> softmax_cross_entropy(Var<Real>, std::span<const std::int32_t>);                  \
  template Tensor<Real> masked_softmax(const Tensor<Real>&, std::span<const std::uint8_t>);            \
  template Tensor<Real> softmax_rows(const Tensor<Real>&);                                             \
  template double log_softmax_nll(std::span<const Real>, std::int64_t);

COURTFORMER_INSTANTIATE_OPS(float)
COURTFORMER_INSTANTIATE_OPS(double)

}  // namespace courtformer::nn
