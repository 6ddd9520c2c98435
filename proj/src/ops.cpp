// SPDX-License-Identifier: Apache-2.0
#include "xdv/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "xdv/error.hpp"

namespace xdv {
namespace {

using Id = std::uint32_t;

Tensor matrix_like(std::size_t rows, std::size_t cols) { return Tensor(Shape{rows, cols}); }

void same_tape(Var a, Var b) {
  if (&a.tape() != &b.tape()) throw ContractError("operands recorded on different tapes");
}

[[noreturn]] void mismatch(const char* op, const Tensor& a, const Tensor& b) {
  throw DimensionError(std::string(op) + ": incompatible shapes " + a.shape().to_string() + " and " +
                       b.shape().to_string());
}

double sigmoid_of(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// C[m x n] += A[m x k] * B[k x n]
void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c + i * n;
    const double* ai = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ai[p];
      if (av == 0.0) continue;
      const double* bp = b + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

// dA[m x k] += G[m x n] * B[k x n]^T
void gemm_nt(const double* g, const double* b, double* da, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* gi = g + i * n;
    double* dai = da + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double* bp = b + p * n;
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += gi[j] * bp[j];
      dai[p] += acc;
    }
  }
}

// dB[k x n] += A[m x k]^T * G[m x n]
void gemm_tn(const double* a, const double* g, double* db, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    const double* gi = g + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ai[p];
      if (av == 0.0) continue;
      double* dbp = db + p * n;
      for (std::size_t j = 0; j < n; ++j) dbp[j] += av * gi[j];
    }
  }
}

template <class F>
Var unary(Var a, F f, Tape::BackwardFn bw) {
  const Tensor& x = a.value();
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
  return a.tape().record(std::move(y), a.needs_grad(), std::move(bw));
}

}  // namespace

Var matmul(Var a, Var b) {
  same_tape(a, b);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  const std::size_t m = A.rows(), k = A.cols(), n = B.cols();
  if (B.rows() != k) mismatch("matmul", A, B);
  Tensor C = matrix_like(m, n);
  gemm_nn(A.data().data(), B.data().data(), C.data().data(), m, k, n);
  const Id ia = a.id(), ib = b.id();
  return a.tape().record(std::move(C), a.needs_grad() || b.needs_grad(), [ia, ib](Tape& t, Id self) {
    const Tensor& A = t.value(ia);
    const Tensor& B = t.value(ib);
    const std::size_t m = A.rows(), k = A.cols(), n = B.cols();
    const double* g = t.node_grad(self).data();
    if (t.needs_grad(ia)) gemm_nt(g, B.data().data(), t.grad_buffer(ia).data(), m, k, n);
    if (t.needs_grad(ib)) gemm_tn(A.data().data(), g, t.grad_buffer(ib).data(), m, k, n);
  });
}

Var transpose(Var a) {
  const Tensor& x = a.value();
  const std::size_t m = x.rows(), n = x.cols();
  Tensor y = matrix_like(n, m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) y[j * m + i] = x[i * n + j];
  const Id ia = a.id();
  return a.tape().record(std::move(y), a.needs_grad(), [ia](Tape& t, Id self) {
    const std::size_t m = t.value(ia).rows(), n = t.value(ia).cols();
    auto g = t.node_grad(self);
    auto d = t.grad_buffer(ia);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) d[i * n + j] += g[j * m + i];
  });
}

Var add(Var a, Var b) {
  same_tape(a, b);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  const Id ia = a.id(), ib = b.id();
  const bool ng = a.needs_grad() || b.needs_grad();
  if (A.size() == B.size() && (A.shape() == B.shape() || (A.rows() == B.rows() && A.cols() == B.cols()))) {
    Tensor y(A.shape());
    for (std::size_t i = 0; i < A.size(); ++i) y[i] = A[i] + B[i];
    return a.tape().record(std::move(y), ng, [ia, ib](Tape& t, Id self) {
      auto g = t.node_grad(self);
      for (Id target : {ia, ib}) {
        if (!t.needs_grad(target)) continue;
        auto d = t.grad_buffer(target);
        for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i];
      }
    });
  }
  if (B.rows() != 1 || B.cols() != A.cols()) mismatch("add", A, B);
  const std::size_t m = A.rows(), n = A.cols();
  Tensor y = matrix_like(m, n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) y[i * n + j] = A[i * n + j] + B[j];
  return a.tape().record(std::move(y), ng, [ia, ib](Tape& t, Id self) {
    auto g = t.node_grad(self);
    if (t.needs_grad(ia)) {
      auto d = t.grad_buffer(ia);
      for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i];
    }
    if (t.needs_grad(ib)) {
      auto d = t.grad_buffer(ib);
      const std::size_t n = d.size();
      for (std::size_t i = 0; i < g.size(); ++i) d[i % n] += g[i];
    }
  });
}

Var sub(Var a, Var b) {
  same_tape(a, b);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (A.rows() != B.rows() || A.cols() != B.cols()) mismatch("sub", A, B);
  Tensor y(A.shape());
  for (std::size_t i = 0; i < A.size(); ++i) y[i] = A[i] - B[i];
  const Id ia = a.id(), ib = b.id();
  return a.tape().record(std::move(y), a.needs_grad() || b.needs_grad(), [ia, ib](Tape& t, Id self) {
    auto g = t.node_grad(self);
    if (t.needs_grad(ia)) {
      auto d = t.grad_buffer(ia);
      for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i];
    }
    if (t.needs_grad(ib)) {
      auto d = t.grad_buffer(ib);
      for (std::size_t i = 0; i < g.size(); ++i) d[i] -= g[i];
    }
  });
}

Var mul(Var a, Var b) {
  same_tape(a, b);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (A.rows() != B.rows() || A.cols() != B.cols()) mismatch("mul", A, B);
  Tensor y(A.shape());
  for (std::size_t i = 0; i < A.size(); ++i) y[i] = A[i] * B[i];
  const Id ia = a.id(), ib = b.id();
  return a.tape().record(std::move(y), a.needs_grad() || b.needs_grad(), [ia, ib](Tape& t, Id self) {
    auto g = t.node_grad(self);
    if (t.needs_grad(ia)) {
      const Tensor& B = t.value(ib);
      auto d = t.grad_buffer(ia);
      for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * B[i];
    }
    if (t.needs_grad(ib)) {
      const Tensor& A = t.value(ia);
      auto d = t.grad_buffer(ib);
      for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * A[i];
    }
  });
}

Var scale(Var a, double factor) {
  const Id ia = a.id();
  return unary(
      a, [factor](double x) { return factor * x; },
      [ia, factor](Tape& t, Id self) {
        auto g = t.node_grad(self);
        auto d = t.grad_buffer(ia);
        for (std::size_t i = 0; i < g.size(); ++i) d[i] += factor * g[i];
      });
}

Var add_scalar(Var a, double offset) {
  const Id ia = a.id();
  return unary(
      a, [offset](double x) { return x + offset; },
      [ia](Tape& t, Id self) {
        auto g = t.node_grad(self);
        auto d = t.grad_buffer(ia);
        for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i];
      });
}

Var sigmoid(Var a) {
  const Id ia = a.id();
  return unary(a, sigmoid_of, [ia](Tape& t, Id self) {
    auto g = t.node_grad(self);
    const Tensor& y = t.value(self);
    auto d = t.grad_buffer(ia);
    for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * y[i] * (1.0 - y[i]);
  });
}

Var tanh(Var a) {
  const Id ia = a.id();
  return unary(
      a, [](double x) { return std::tanh(x); },
      [ia](Tape& t, Id self) {
        auto g = t.node_grad(self);
        const Tensor& y = t.value(self);
        auto d = t.grad_buffer(ia);
        for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * (1.0 - y[i] * y[i]);
      });
}

Var relu(Var a) {
  const Id ia = a.id();
  return unary(
      a, [](double x) { return x > 0.0 ? x : 0.0; },
      [ia](Tape& t, Id self) {
        auto g = t.node_grad(self);
        const Tensor& x = t.value(ia);
        auto d = t.grad_buffer(ia);
        for (std::size_t i = 0; i < g.size(); ++i)
          if (x[i] > 0.0) d[i] += g[i];
      });
}

namespace {

// Group layout of a softmax: `groups` groups of `len` elements, element e of
// group k at offset k*outer_stride + e*inner_stride.
struct SoftmaxLayout {
  std::size_t groups, len, outer_stride, inner_stride;
};

SoftmaxLayout softmax_layout(const Tensor& x, int axis) {
  if (x.rank() <= 1) return {1, x.size(), 0, 1};
  const std::size_t m = x.rows(), n = x.cols();
  if (axis == 0) return {n, m, 1, n};
  if (axis == 1 || axis == -1) return {m, n, n, 1};
  throw DimensionError("softmax axis " + std::to_string(axis) + " out of range for " + x.shape().to_string());
}

}  // namespace

Var softmax(Var a, int axis) {
  const Tensor& x = a.value();
  const SoftmaxLayout L = softmax_layout(x, axis);
  Tensor y(x.shape());
  for (std::size_t k = 0; k < L.groups; ++k) {
    const std::size_t base = k * L.outer_stride;
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t e = 0; e < L.len; ++e) mx = std::max(mx, x[base + e * L.inner_stride]);
    double z = 0.0;
    for (std::size_t e = 0; e < L.len; ++e) {
      const double v = std::exp(x[base + e * L.inner_stride] - mx);
      y[base + e * L.inner_stride] = v;
      z += v;
    }
    for (std::size_t e = 0; e < L.len; ++e) y[base + e * L.inner_stride] /= z;
  }
  const Id ia = a.id();
  return a.tape().record(std::move(y), a.needs_grad(), [ia, axis](Tape& t, Id self) {
    const Tensor& y = t.value(self);
    const SoftmaxLayout L = softmax_layout(y, axis);
    auto g = t.node_grad(self);
    auto d = t.grad_buffer(ia);
    for (std::size_t k = 0; k < L.groups; ++k) {
      const std::size_t base = k * L.outer_stride;
      double dot = 0.0;
      for (std::size_t e = 0; e < L.len; ++e) {
        const std::size_t i = base + e * L.inner_stride;
        dot += g[i] * y[i];
      }
      for (std::size_t e = 0; e < L.len; ++e) {
        const std::size_t i = base + e * L.inner_stride;
        d[i] += y[i] * (g[i] - dot);
      }
    }
  });
}

Var sum(Var a) {
  const Tensor& x = a.value();
  double s = 0.0;
  for (double v : x.data()) s += v;
  const Id ia = a.id();
  return a.tape().record(Tensor::scalar(s), a.needs_grad(), [ia](Tape& t, Id self) {
    const double g = t.node_grad(self)[0];
    for (double& d : t.grad_buffer(ia)) d += g;
  });
}

Var sum_rows(Var a) {
  const Tensor& x = a.value();
  const std::size_t m = x.rows(), n = x.cols();
  Tensor y = matrix_like(1, n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) y[j] += x[i * n + j];
  const Id ia = a.id();
  return a.tape().record(std::move(y), a.needs_grad(), [ia](Tape& t, Id self) {
    auto g = t.node_grad(self);
    auto d = t.grad_buffer(ia);
    const std::size_t n = g.size();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += g[i % n];
  });
}

Var sum_cols(Var a) {
  const Tensor& x = a.value();
  const std::size_t m = x.rows(), n = x.cols();
  Tensor y = matrix_like(m, 1);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) y[i] += x[i * n + j];
  const Id ia = a.id();
  return a.tape().record(std::move(y), a.needs_grad(), [ia](Tape& t, Id self) {
    auto g = t.node_grad(self);
    auto d = t.grad_buffer(ia);
    const std::size_t n = d.size() / g.size();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += g[i / n];
  });
}

Var mean_rows(Var a) { return scale(sum_rows(a), 1.0 / static_cast<double>(a.rows())); }

Var squared_norm(Var a) {
  const Tensor& x = a.value();
  double s = 0.0;
  for (double v : x.data()) s += v * v;
  const Id ia = a.id();
  return a.tape().record(Tensor::scalar(s), a.needs_grad(), [ia](Tape& t, Id self) {
    const double g = t.node_grad(self)[0];
    const Tensor& x = t.value(ia);
    auto d = t.grad_buffer(ia);
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += 2.0 * g * x[i];
  });
}

Var row(Var a, std::size_t index) {
  const Tensor& x = a.value();
  const std::size_t n = x.cols();
  if (index >= x.rows()) {
    throw DimensionError("row " + std::to_string(index) + " of " + x.shape().to_string());
  }
  Tensor y = matrix_like(1, n);
  std::copy_n(x.data().begin() + static_cast<std::ptrdiff_t>(index * n), n, y.data().begin());
  const Id ia = a.id();
  return a.tape().record(std::move(y), a.needs_grad(), [ia, index](Tape& t, Id self) {
    auto g = t.node_grad(self);
    auto d = t.grad_buffer(ia);
    const std::size_t n = g.size();
    for (std::size_t j = 0; j < n; ++j) d[index * n + j] += g[j];
  });
}

Var slice_cols(Var a, std::size_t start, std::size_t count) {
  const Tensor& x = a.value();
  const std::size_t m = x.rows(), n = x.cols();
  if (count == 0 || start + count > n) {
    throw DimensionError("columns [" + std::to_string(start) + ", " + std::to_string(start + count) + ") of " +
                         x.shape().to_string());
  }
  Tensor y = matrix_like(m, count);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < count; ++j) y[i * count + j] = x[i * n + start + j];
  const Id ia = a.id();
  return a.tape().record(std::move(y), a.needs_grad(), [ia, start](Tape& t, Id self) {
    auto g = t.node_grad(self);
    auto d = t.grad_buffer(ia);
    const Tensor& y = t.value(self);
    const std::size_t m = y.rows(), count = y.cols(), n = d.size() / m;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < count; ++j) d[i * n + start + j] += g[i * count + j];
  });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("concat_rows of nothing");
  const std::size_t n = parts[0].cols();
  std::size_t m = 0;
  bool ng = false;
  std::vector<Id> ids;
  ids.reserve(parts.size());
  for (const Var& p : parts) {
    same_tape(parts[0], p);
    if (p.cols() != n) mismatch("concat_rows", parts[0].value(), p.value());
    m += p.rows();
    ng = ng || p.needs_grad();
    ids.push_back(p.id());
  }
  Tensor y = matrix_like(m, n);
  std::size_t off = 0;
  for (const Var& p : parts) {
    const auto src = p.value().data();
    std::copy(src.begin(), src.end(), y.data().begin() + static_cast<std::ptrdiff_t>(off));
    off += src.size();
  }
  return parts[0].tape().record(std::move(y), ng, [ids = std::move(ids)](Tape& t, Id self) {
    auto g = t.node_grad(self);
    std::size_t off = 0;
    for (Id id : ids) {
      const std::size_t len = t.value(id).size();
      if (t.needs_grad(id)) {
        auto d = t.grad_buffer(id);
        for (std::size_t i = 0; i < len; ++i) d[i] += g[off + i];
      }
      off += len;
    }
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("concat_cols of nothing");
  const std::size_t m = parts[0].rows();
  std::size_t n = 0;
  bool ng = false;
  std::vector<Id> ids;
  ids.reserve(parts.size());
  for (const Var& p : parts) {
    same_tape(parts[0], p);
    if (p.rows() != m) mismatch("concat_cols", parts[0].value(), p.value());
    n += p.cols();
    ng = ng || p.needs_grad();
    ids.push_back(p.id());
  }
  Tensor y = matrix_like(m, n);
  std::size_t col = 0;
  for (const Var& p : parts) {
    const Tensor& x = p.value();
    const std::size_t w = x.cols();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < w; ++j) y[i * n + col + j] = x[i * w + j];
    col += w;
  }
  return parts[0].tape().record(std::move(y), ng, [ids = std::move(ids)](Tape& t, Id self) {
    auto g = t.node_grad(self);
    const std::size_t m = t.value(self).rows(), n = t.value(self).cols();
    std::size_t col = 0;
    for (Id id : ids) {
      const std::size_t w = t.value(id).cols();
      if (t.needs_grad(id)) {
        auto d = t.grad_buffer(id);
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < w; ++j) d[i * w + j] += g[i * n + col + j];
      }
      col += w;
    }
  });
}

Var flatten(Var a) {
  const Tensor& x = a.value();
  Tensor y(Shape{1, x.size()}, std::vector<double>(x.data().begin(), x.data().end()));
  const Id ia = a.id();
  return a.tape().record(std::move(y), a.needs_grad(), [ia](Tape& t, Id self) {
    auto g = t.node_grad(self);
    auto d = t.grad_buffer(ia);
    for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i];
  });
}

Var gather_rows(Var table, std::span<const int> ids) {
  const Tensor& x = table.value();
  const std::size_t vocab = x.rows(), n = x.cols();
  if (ids.empty()) throw InputError("gather_rows with no ids");
  Tensor y = matrix_like(ids.size(), n);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= vocab) {
      throw InputError("token id " + std::to_string(ids[i]) + " outside table of " + std::to_string(vocab) + " rows");
    }
    std::copy_n(x.data().begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(ids[i]) * n), n,
                y.data().begin() + static_cast<std::ptrdiff_t>(i * n));
  }
  const Id it = table.id();
  std::vector<int> rows(ids.begin(), ids.end());
  return table.tape().record(std::move(y), table.needs_grad(), [it, rows = std::move(rows)](Tape& t, Id self) {
    auto g = t.node_grad(self);
    auto d = t.grad_buffer(it);
    const std::size_t n = g.size() / rows.size();
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t j = 0; j < n; ++j) d[static_cast<std::size_t>(rows[i]) * n + j] += g[i * n + j];
  });
}

Var cross_entropy(Var logits, std::span<const int> targets) {
  const Tensor& x = logits.value();
  const std::size_t m = x.rows(), n = x.cols();
  if (targets.size() != m) {
    throw DimensionError("cross_entropy: " + std::to_string(targets.size()) + " targets for logits " +
                         x.shape().to_string());
  }
  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    if (targets[i] < 0 || static_cast<std::size_t>(targets[i]) >= n) {
      throw InputError("target id " + std::to_string(targets[i]) + " outside vocabulary of " + std::to_string(n));
    }
    const double* xi = x.data().data() + i * n;
    const double mx = *std::max_element(xi, xi + n);
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) z += std::exp(xi[j] - mx);
    total += mx + std::log(z) - xi[targets[i]];
  }
  const Id il = logits.id();
  std::vector<int> tgt(targets.begin(), targets.end());
  return logits.tape().record(
      Tensor::scalar(total / static_cast<double>(m)), logits.needs_grad(), [il, tgt = std::move(tgt)](Tape& t, Id self) {
        const double g = t.node_grad(self)[0] / static_cast<double>(tgt.size());
        const Tensor& x = t.value(il);
        const std::size_t n = x.cols();
        auto d = t.grad_buffer(il);
        for (std::size_t i = 0; i < tgt.size(); ++i) {
          const double* xi = x.data().data() + i * n;
          const double mx = *std::max_element(xi, xi + n);
          double z = 0.0;
          for (std::size_t j = 0; j < n; ++j) z += std::exp(xi[j] - mx);
          for (std::size_t j = 0; j < n; ++j) d[i * n + j] += g * std::exp(xi[j] - mx) / z;
          d[i * n + static_cast<std::size_t>(tgt[i])] -= g;
        }
      });
}

Var gru_gates(Var gx, Var gh, Var h) {
  same_tape(gx, gh);
  same_tape(gx, h);
  const Tensor& X = gx.value();
  const Tensor& H = gh.value();
  const Tensor& S = h.value();
  const std::size_t rows = S.rows(), d = S.cols();
  if (X.rows() != rows || H.rows() != rows || X.cols() != 3 * d || H.cols() != 3 * d) {
    throw DimensionError("gru_gates: pre-activations " + X.shape().to_string() + " / " + H.shape().to_string() +
                         " for state " + S.shape().to_string());
  }
  Tensor y = matrix_like(rows, d);
  for (std::size_t i = 0; i < rows; ++i) {
    const double* x = X.data().data() + i * 3 * d;
    const double* hh = H.data().data() + i * 3 * d;
    for (std::size_t j = 0; j < d; ++j) {
      const double u = sigmoid_of(x[j] + hh[j]);
      const double r = sigmoid_of(x[d + j] + hh[d + j]);
      const double c = std::tanh(x[2 * d + j] + r * hh[2 * d + j]);
      const double prev = S[i * d + j];
      y[i * d + j] = u * prev + (1.0 - u) * c;
    }
  }
  const Id ix = gx.id(), ih = gh.id(), is = h.id();
  const bool ng = gx.needs_grad() || gh.needs_grad() || h.needs_grad();
  return gx.tape().record(std::move(y), ng, [ix, ih, is](Tape& t, Id self) {
    const Tensor& X = t.value(ix);
    const Tensor& H = t.value(ih);
    const Tensor& S = t.value(is);
    const std::size_t rows = S.rows(), d = S.cols();
    auto g = t.node_grad(self);
    const bool want_x = t.needs_grad(ix), want_h = t.needs_grad(ih), want_s = t.needs_grad(is);
    double* dx = want_x ? t.grad_buffer(ix).data() : nullptr;
    double* dh = want_h ? t.grad_buffer(ih).data() : nullptr;
    double* ds = want_s ? t.grad_buffer(is).data() : nullptr;
    for (std::size_t i = 0; i < rows; ++i) {
      const double* x = X.data().data() + i * 3 * d;
      const double* hh = H.data().data() + i * 3 * d;
      for (std::size_t j = 0; j < d; ++j) {
        const double u = sigmoid_of(x[j] + hh[j]);
        const double r = sigmoid_of(x[d + j] + hh[d + j]);
        const double c = std::tanh(x[2 * d + j] + r * hh[2 * d + j]);
        const double prev = S[i * d + j];
        const double go = g[i * d + j];
        const double da_u = go * (prev - c) * u * (1.0 - u);
        const double da_c = go * (1.0 - u) * (1.0 - c * c);
        const double da_r = da_c * hh[2 * d + j] * r * (1.0 - r);
        const std::size_t o = i * 3 * d;
        if (dx) {
          dx[o + j] += da_u;
          dx[o + d + j] += da_r;
          dx[o + 2 * d + j] += da_c;
        }
        if (dh) {
          dh[o + j] += da_u;
          dh[o + d + j] += da_r;
          dh[o + 2 * d + j] += da_c * r;
        }
        if (ds) ds[i * d + j] += go * u;
      }
    }
  });
}

}  // namespace xdv
