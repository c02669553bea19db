#include "vrgnn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Core>

#include "vrgnn/error.hpp"

namespace vrgnn::ad {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;
using MutMap = Eigen::Map<RowMatrix>;

ConstMap as_matrix(const Tensor& t) {
  return ConstMap(t.data().data(), static_cast<Eigen::Index>(t.rows()),
                  static_cast<Eigen::Index>(t.cols()));
}
MutMap as_matrix(Tensor& t) {
  return MutMap(t.data().data(), static_cast<Eigen::Index>(t.rows()),
                static_cast<Eigen::Index>(t.cols()));
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b))
    throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_string() + " vs " +
                     b.shape_string());
}

void require_rank2(const Tensor& a, const char* op) {
  if (a.rank() != 2)
    throw ShapeError(std::string(op) + ": expected a matrix, got " + a.shape_string());
}

Tape& tape_of(Var a, Var b) {
  if (a.tape != b.tape) throw Error("operands recorded on different tapes");
  return *a.tape;
}

}  // namespace

Var add(Var a, Var b) { return axpby(1.0, a, 1.0, b); }
Var sub(Var a, Var b) { return axpby(1.0, a, -1.0, b); }

Var axpby(double alpha, Var a, double beta, Var b) {
  Tape& t = tape_of(a, b);
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  require_same_shape(x, y, "axpby");
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = alpha * x[i] + beta * y[i];
  return t.record(std::move(out), {a, b}, [ia = a.id, ib = b.id, alpha, beta](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(ia)) {
      Tensor& ga = t.grad_buffer(ia);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += alpha * g[i];
    }
    if (t.requires_grad(ib)) {
      Tensor& gb = t.grad_buffer(ib);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += beta * g[i];
    }
  });
}

Var add_bias(Var a, Var bias) {
  Tape& t = tape_of(a, bias);
  const Tensor& x = a.value();
  const Tensor& b = bias.value();
  require_rank2(x, "add_bias");
  if (b.size() != x.cols())
    throw ShapeError("add_bias: bias of size " + std::to_string(b.size()) + " for " +
                     x.shape_string());
  Tensor out = x;
  const std::size_t n = x.rows(), m = x.cols();
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < m; ++c) out[r * m + c] += b[c];
  return t.record(std::move(out), {a, bias}, [ia = a.id, ib = bias.id, n, m](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(ia)) {
      Tensor& ga = t.grad_buffer(ia);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (t.requires_grad(ib)) {
      Tensor& gb = t.grad_buffer(ib);
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < m; ++c) gb[c] += g[r * m + c];
    }
  });
}

Var scale(Var a, double c) {
  const Tensor& x = a.value();
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = c * x[i];
  return a.tape->record(std::move(out), {a}, [ia = a.id, c](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor& ga = t.grad_buffer(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += c * g[i];
  });
}

Var mul(Var a, Var b) {
  Tape& t = tape_of(a, b);
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  require_same_shape(x, y, "mul");
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * y[i];
  return t.record(std::move(out), {a, b}, [ia = a.id, ib = b.id](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& x = t.value(ia);
    const Tensor& y = t.value(ib);
    if (t.requires_grad(ia)) {
      Tensor& ga = t.grad_buffer(ia);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i];
    }
    if (t.requires_grad(ib)) {
      Tensor& gb = t.grad_buffer(ib);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * x[i];
    }
  });
}

Var matmul(Var a, Var b) {
  Tape& t = tape_of(a, b);
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  require_rank2(x, "matmul");
  require_rank2(y, "matmul");
  if (x.cols() != y.rows())
    throw ShapeError("matmul: " + x.shape_string() + " * " + y.shape_string());
  Tensor out({x.rows(), y.cols()});
  as_matrix(out).noalias() = as_matrix(x) * as_matrix(y);
  return t.record(std::move(out), {a, b}, [ia = a.id, ib = b.id](Tape& t, std::size_t self) {
    const auto g = as_matrix(t.grad(self));
    if (t.requires_grad(ia)) as_matrix(t.grad_buffer(ia)).noalias() += g * as_matrix(t.value(ib)).transpose();
    if (t.requires_grad(ib)) as_matrix(t.grad_buffer(ib)).noalias() += as_matrix(t.value(ia)).transpose() * g;
  });
}

Var matmul_nt(Var a, Var b) {
  Tape& t = tape_of(a, b);
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  require_rank2(x, "matmul_nt");
  require_rank2(y, "matmul_nt");
  if (x.cols() != y.cols())
    throw ShapeError("matmul_nt: " + x.shape_string() + " * " + y.shape_string() + "^T");
  Tensor out({x.rows(), y.rows()});
  as_matrix(out).noalias() = as_matrix(x) * as_matrix(y).transpose();
  return t.record(std::move(out), {a, b}, [ia = a.id, ib = b.id](Tape& t, std::size_t self) {
    const auto g = as_matrix(t.grad(self));
    if (t.requires_grad(ia)) as_matrix(t.grad_buffer(ia)).noalias() += g * as_matrix(t.value(ib));
    if (t.requires_grad(ib)) as_matrix(t.grad_buffer(ib)).noalias() += g.transpose() * as_matrix(t.value(ia));
  });
}

Var linear(Var x, Var weight, Var bias) { return add_bias(matmul_nt(x, weight), bias); }

Var relu(Var a) {
  const Tensor& x = a.value();
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
  return a.tape->record(std::move(out), {a}, [ia = a.id](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& x = t.value(ia);
    Tensor& ga = t.grad_buffer(ia);
    for (std::size_t i = 0; i < g.size(); ++i)
      if (x[i] > 0.0) ga[i] += g[i];
  });
}

Var exp(Var a) {
  const Tensor& x = a.value();
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = std::exp(x[i]);
  return a.tape->record(std::move(out), {a}, [ia = a.id](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& y = t.value(self);
    Tensor& ga = t.grad_buffer(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i];
  });
}

Var log(Var a) {
  const Tensor& x = a.value();
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0)) throw NumericError("log of non-positive value");
    out[i] = std::log(x[i]);
  }
  return a.tape->record(std::move(out), {a}, [ia = a.id](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& x = t.value(ia);
    Tensor& ga = t.grad_buffer(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] / x[i];
  });
}

Var sqrt(Var a) {
  const Tensor& x = a.value();
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] < 0.0) throw NumericError("sqrt of negative value");
    out[i] = std::sqrt(x[i]);
  }
  return a.tape->record(std::move(out), {a}, [ia = a.id](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& y = t.value(self);
    Tensor& ga = t.grad_buffer(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * 0.5 / y[i];
  });
}

Var sum(Var a) {
  const Tensor& x = a.value();
  double s = 0.0;
  for (double v : x.data()) s += v;
  return a.tape->record(Tensor::scalar(s), {a}, [ia = a.id](Tape& t, std::size_t self) {
    const double g = t.grad(self)[0];
    Tensor& ga = t.grad_buffer(ia);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g;
  });
}

Var mean(Var a) {
  const std::size_t n = a.value().size();
  if (n == 0) throw ShapeError("mean of empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(n));
}

Var concat_cols(Var a, Var b) {
  Tape& t = tape_of(a, b);
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  require_rank2(x, "concat_cols");
  require_rank2(y, "concat_cols");
  if (x.rows() != y.rows())
    throw ShapeError("concat_cols: row mismatch " + x.shape_string() + " vs " + y.shape_string());
  const std::size_t n = x.rows(), p = x.cols(), q = y.cols();
  Tensor out({n, p + q});
  for (std::size_t r = 0; r < n; ++r) {
    std::copy_n(x.data().data() + r * p, p, out.data().data() + r * (p + q));
    std::copy_n(y.data().data() + r * q, q, out.data().data() + r * (p + q) + p);
  }
  return t.record(std::move(out), {a, b}, [ia = a.id, ib = b.id, n, p, q](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(ia)) {
      Tensor& ga = t.grad_buffer(ia);
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < p; ++c) ga[r * p + c] += g[r * (p + q) + c];
    }
    if (t.requires_grad(ib)) {
      Tensor& gb = t.grad_buffer(ib);
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < q; ++c) gb[r * q + c] += g[r * (p + q) + p + c];
    }
  });
}

Var gather_rows(Var a, Index index) {
  const Tensor& x = a.value();
  require_rank2(x, "gather_rows");
  const std::size_t m = x.cols();
  for (std::size_t i : index)
    if (i >= x.rows())
      throw ShapeError("gather_rows: index " + std::to_string(i) + " out of range for " +
                       x.shape_string());
  Tensor out({index.size(), m});
  for (std::size_t k = 0; k < index.size(); ++k)
    std::copy_n(x.data().data() + index[k] * m, m, out.data().data() + k * m);
  return a.tape->record(std::move(out), {a}, [ia = a.id, index = std::move(index), m](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor& ga = t.grad_buffer(ia);
    for (std::size_t k = 0; k < index.size(); ++k) {
      const double* src = g.data().data() + k * m;
      double* dst = ga.data().data() + index[k] * m;
      for (std::size_t c = 0; c < m; ++c) dst[c] += src[c];
    }
  });
}

Var scatter_add_rows(Var a, Index index, std::size_t num_rows) {
  const Tensor& x = a.value();
  require_rank2(x, "scatter_add_rows");
  if (index.size() != x.rows())
    throw ShapeError("scatter_add_rows: " + std::to_string(index.size()) + " indices for " +
                     x.shape_string());
  const std::size_t m = x.cols();
  Tensor out({num_rows, m});
  for (std::size_t k = 0; k < index.size(); ++k) {
    if (index[k] >= num_rows) throw ShapeError("scatter_add_rows: index out of range");
    const double* src = x.data().data() + k * m;
    double* dst = out.data().data() + index[k] * m;
    for (std::size_t c = 0; c < m; ++c) dst[c] += src[c];
  }
  return a.tape->record(std::move(out), {a}, [ia = a.id, index = std::move(index), m](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor& ga = t.grad_buffer(ia);
    for (std::size_t k = 0; k < index.size(); ++k) {
      const double* src = g.data().data() + index[k] * m;
      double* dst = ga.data().data() + k * m;
      for (std::size_t c = 0; c < m; ++c) dst[c] += src[c];
    }
  });
}

Var row_dot(Var a, Var b) {
  Tape& t = tape_of(a, b);
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  require_rank2(x, "row_dot");
  require_same_shape(x, y, "row_dot");
  const std::size_t n = x.rows(), m = x.cols();
  Tensor out({n});
  for (std::size_t r = 0; r < n; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < m; ++c) s += x[r * m + c] * y[r * m + c];
    out[r] = s;
  }
  return t.record(std::move(out), {a, b}, [ia = a.id, ib = b.id, n, m](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& x = t.value(ia);
    const Tensor& y = t.value(ib);
    if (t.requires_grad(ia)) {
      Tensor& ga = t.grad_buffer(ia);
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < m; ++c) ga[r * m + c] += g[r] * y[r * m + c];
    }
    if (t.requires_grad(ib)) {
      Tensor& gb = t.grad_buffer(ib);
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < m; ++c) gb[r * m + c] += g[r] * x[r * m + c];
    }
  });
}

Var scale_rows(Var a, Var w) {
  Tape& t = tape_of(a, w);
  const Tensor& x = a.value();
  const Tensor& s = w.value();
  require_rank2(x, "scale_rows");
  if (s.size() != x.rows())
    throw ShapeError("scale_rows: " + std::to_string(s.size()) + " weights for " +
                     x.shape_string());
  const std::size_t n = x.rows(), m = x.cols();
  Tensor out(x.shape());
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < m; ++c) out[r * m + c] = s[r] * x[r * m + c];
  return t.record(std::move(out), {a, w}, [ia = a.id, iw = w.id, n, m](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& x = t.value(ia);
    const Tensor& s = t.value(iw);
    if (t.requires_grad(ia)) {
      Tensor& ga = t.grad_buffer(ia);
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < m; ++c) ga[r * m + c] += s[r] * g[r * m + c];
    }
    if (t.requires_grad(iw)) {
      Tensor& gw = t.grad_buffer(iw);
      for (std::size_t r = 0; r < n; ++r) {
        double acc = 0.0;
        for (std::size_t c = 0; c < m; ++c) acc += g[r * m + c] * x[r * m + c];
        gw[r] += acc;
      }
    }
  });
}

Var segment_softmax(Var logits, Index segments, std::size_t num_segments) {
  const Tensor& x = logits.value();
  if (x.size() != segments.size())
    throw ShapeError("segment_softmax: " + std::to_string(x.size()) + " logits but " +
                     std::to_string(segments.size()) + " segment ids");
  std::vector<double> seg_max(num_segments, -std::numeric_limits<double>::infinity());
  for (std::size_t k = 0; k < segments.size(); ++k) {
    if (segments[k] >= num_segments) throw ShapeError("segment_softmax: segment id out of range");
    seg_max[segments[k]] = std::max(seg_max[segments[k]], x[k]);
  }
  Tensor out({x.size()});
  std::vector<double> seg_sum(num_segments, 0.0);
  for (std::size_t k = 0; k < segments.size(); ++k) {
    out[k] = std::exp(x[k] - seg_max[segments[k]]);
    seg_sum[segments[k]] += out[k];
  }
  for (std::size_t k = 0; k < segments.size(); ++k) out[k] /= seg_sum[segments[k]];
  return logits.tape->record(std::move(out), {logits},
      [ia = logits.id, segments = std::move(segments), num_segments](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        const Tensor& y = t.value(self);
        std::vector<double> dot(num_segments, 0.0);
        for (std::size_t k = 0; k < segments.size(); ++k) dot[segments[k]] += y[k] * g[k];
        Tensor& ga = t.grad_buffer(ia);
        for (std::size_t k = 0; k < segments.size(); ++k) ga[k] += y[k] * (g[k] - dot[segments[k]]);
      });
}

Var log_sum_exp_rows(Var a) {
  const Tensor& x = a.value();
  require_rank2(x, "log_sum_exp_rows");
  const std::size_t n = x.rows(), m = x.cols();
  if (m == 0) throw ShapeError("log_sum_exp_rows: zero columns");
  Tensor out({n});
  for (std::size_t r = 0; r < n; ++r) {
    const double* row = x.data().data() + r * m;
    const std::size_t arg = static_cast<std::size_t>(std::max_element(row, row + m) - row);
    double rest = 0.0;
    for (std::size_t c = 0; c < m; ++c)
      if (c != arg) rest += std::exp(row[c] - row[arg]);
    out[r] = row[arg] + std::log1p(rest);
  }
  return a.tape->record(std::move(out), {a}, [ia = a.id, n, m](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& x = t.value(ia);
    const Tensor& y = t.value(self);
    Tensor& ga = t.grad_buffer(ia);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < m; ++c) ga[r * m + c] += g[r] * std::exp(x[r * m + c] - y[r]);
  });
}

Var dropout(Var a, double rate, Rng& rng, bool train) {
  if (rate < 0.0 || rate >= 1.0) throw ConfigError("dropout rate must lie in [0, 1)");
  if (!train || rate == 0.0) return a;
  const Tensor& x = a.value();
  const double keep_scale = 1.0 / (1.0 - rate);
  std::vector<double> mask(x.size());
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    mask[i] = rng.uniform() >= rate ? keep_scale : 0.0;
    out[i] = x[i] * mask[i];
  }
  return a.tape->record(std::move(out), {a}, [ia = a.id, mask = std::move(mask)](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor& ga = t.grad_buffer(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * mask[i];
  });
}

Var gaussian_kl(Var mu, Var sigma) {
  Tape& t = tape_of(mu, sigma);
  const Tensor& m = mu.value();
  const Tensor& s = sigma.value();
  require_same_shape(m, s, "gaussian_kl");
  double kl = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (!(s[i] > 0.0)) throw NumericError("gaussian_kl: non-positive sigma");
    const double var = s[i] * s[i];
    kl += m[i] * m[i] + var - 1.0 - std::log(var);
  }
  return t.record(Tensor::scalar(0.5 * kl), {mu, sigma}, [im = mu.id, is = sigma.id](Tape& t, std::size_t self) {
    const double g = t.grad(self)[0];
    if (t.requires_grad(im)) {
      const Tensor& m = t.value(im);
      Tensor& gm = t.grad_buffer(im);
      for (std::size_t i = 0; i < m.size(); ++i) gm[i] += g * m[i];
    }
    if (t.requires_grad(is)) {
      const Tensor& s = t.value(is);
      Tensor& gs = t.grad_buffer(is);
      for (std::size_t i = 0; i < s.size(); ++i) gs[i] += g * (s[i] - 1.0 / s[i]);
    }
  });
}

Var masked_cross_entropy(Var logits, const std::vector<int>& labels, const std::vector<bool>& mask) {
  const Tensor& x = logits.value();
  require_rank2(x, "masked_cross_entropy");
  const std::size_t n = x.rows(), m = x.cols();
  if (labels.size() != n || mask.size() != n)
    throw ShapeError("masked_cross_entropy: labels/mask length does not match logits rows");
  std::vector<std::size_t> rows;
  for (std::size_t r = 0; r < n; ++r) {
    if (!mask[r]) continue;
    if (labels[r] < 0 || static_cast<std::size_t>(labels[r]) >= m)
      throw DataError("masked_cross_entropy: masked node " + std::to_string(r) +
                      " has no valid label");
    rows.push_back(r);
  }
  if (rows.empty()) throw DataError("masked_cross_entropy: empty mask");

  double total = 0.0;
  std::vector<double> lse(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const double* row = x.data().data() + rows[k] * m;
    const std::size_t arg = static_cast<std::size_t>(std::max_element(row, row + m) - row);
    double rest = 0.0;
    for (std::size_t c = 0; c < m; ++c)
      if (c != arg) rest += std::exp(row[c] - row[arg]);
    const double log1p_rest = std::log1p(rest);
    lse[k] = row[arg] + log1p_rest;
    // (row[arg] - row[label]) + log1p(rest) keeps precision when the
    // true class dominates.
    total += (row[arg] - row[labels[rows[k]]]) + log1p_rest;
  }
  const double inv = 1.0 / static_cast<double>(rows.size());
  std::vector<std::size_t> targets;
  targets.reserve(rows.size());
  for (std::size_t r : rows) targets.push_back(static_cast<std::size_t>(labels[r]));
  return logits.tape->record(Tensor::scalar(total * inv), {logits},
      [ia = logits.id, rows = std::move(rows), targets = std::move(targets), lse = std::move(lse), m, inv](Tape& t, std::size_t self) {
        const double g = t.grad(self)[0] * inv;
        const Tensor& x = t.value(ia);
        Tensor& ga = t.grad_buffer(ia);
        for (std::size_t k = 0; k < rows.size(); ++k) {
          const std::size_t base = rows[k] * m;
          for (std::size_t c = 0; c < m; ++c) ga[base + c] += g * std::exp(x[base + c] - lse[k]);
          ga[base + targets[k]] -= g;
        }
      });
}

}  // namespace vrgnn::ad
