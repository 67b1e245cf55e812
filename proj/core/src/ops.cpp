#include "dim/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "dim/error.hpp"

namespace dim {

namespace {

using detail::Node;
using Backward = std::function<void(Node&)>;

void check_finite(const char* op, const std::vector<double>& data) {
  for (double v : data) {
    if (!std::isfinite(v)) throw NumericError(std::string(op) + ": produced a non-finite value");
  }
}

Tensor make_result(const char* op, Shape shape, std::vector<double> data,
                   std::initializer_list<const Tensor*> inputs, Backward backward) {
  check_finite(op, data);
  Tensor out(std::move(shape), std::move(data), false);
  bool needs_grad = false;
  for (const Tensor* in : inputs) needs_grad = needs_grad || in->requires_grad();
  if (needs_grad) {
    Node& node = *out.node();
    node.requires_grad = true;
    for (const Tensor* in : inputs) node.parents.push_back(in->node());
    node.backward = std::move(backward);
  }
  return out;
}

Tensor make_result(const char* op, Shape shape, std::vector<double> data,
                   const std::vector<Tensor>& inputs, Backward backward) {
  check_finite(op, data);
  Tensor out(std::move(shape), std::move(data), false);
  bool needs_grad = false;
  for (const Tensor& in : inputs) needs_grad = needs_grad || in.requires_grad();
  if (needs_grad) {
    Node& node = *out.node();
    node.requires_grad = true;
    for (const Tensor& in : inputs) node.parents.push_back(in.node());
    node.backward = std::move(backward);
  }
  return out;
}

// Gradient buffer of a parent, or nullptr when it does not take gradients.
double* grad_of(Node& self, std::size_t i) {
  Node& p = *self.parents[i];
  return p.requires_grad ? p.grad.data() : nullptr;
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
  }
}

// C[m x n] += A[m x k] * B[k x n]
void gemm_nn(const double* A, const double* B, double* C, std::size_t m, std::size_t k,
             std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* c = C + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double a = A[i * k + p];
      if (a == 0.0) continue;
      const double* b = B + p * n;
      for (std::size_t j = 0; j < n; ++j) c[j] += a * b[j];
    }
  }
}

// C[m x k] += A[m x n] * B[k x n]^T
void gemm_nt(const double* A, const double* B, double* C, std::size_t m, std::size_t n,
             std::size_t k) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* a = A + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double* b = B + p * n;
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += a[j] * b[j];
      C[i * k + p] += s;
    }
  }
}

// C[k x n] += A[m x k]^T * B[m x n]
void gemm_tn(const double* A, const double* B, double* C, std::size_t m, std::size_t k,
             std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* b = B + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double a = A[i * k + p];
      if (a == 0.0) continue;
      double* c = C + p * n;
      for (std::size_t j = 0; j < n; ++j) c[j] += a * b[j];
    }
  }
}

// Splits a shape around `axis` into (outer, extent, inner) element counts.
struct AxisSplit {
  std::size_t outer = 1;
  std::size_t extent = 1;
  std::size_t inner = 1;
};

AxisSplit split_axis(const Shape& s, std::size_t axis) {
  AxisSplit r;
  for (std::size_t i = 0; i < axis; ++i) r.outer *= s[i];
  r.extent = s[axis];
  for (std::size_t i = axis + 1; i < s.size(); ++i) r.inner *= s[i];
  return r;
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  const std::size_t ra = a.rank();
  const std::size_t rb = b.rank();
  if (ra < 2 || ra > 3 || rb < 2 || rb > 3) {
    throw DimensionError("matmul: operands must have rank 2 or 3, got " + shape_string(a.shape()) +
                         " and " + shape_string(b.shape()));
  }
  const std::size_t m = a.extent(ra - 2);
  const std::size_t k = a.extent(ra - 1);
  const std::size_t n = b.extent(rb - 1);
  if (b.extent(rb - 2) != k) {
    throw DimensionError("matmul: inner extents disagree " + shape_string(a.shape()) + " x " +
                         shape_string(b.shape()));
  }
  const std::size_t batch_a = ra == 3 ? a.extent(0) : 0;
  const std::size_t batch_b = rb == 3 ? b.extent(0) : 0;
  if (batch_a && batch_b && batch_a != batch_b) {
    throw DimensionError("matmul: batch extents disagree " + shape_string(a.shape()) + " x " +
                         shape_string(b.shape()));
  }
  const std::size_t batch = std::max<std::size_t>({batch_a, batch_b, 1});
  const std::size_t stride_a = batch_a ? m * k : 0;
  const std::size_t stride_b = batch_b ? k * n : 0;

  std::vector<double> out(batch * m * n, 0.0);
  const double* A = a.data().data();
  const double* B = b.data().data();
  for (std::size_t t = 0; t < batch; ++t) {
    gemm_nn(A + t * stride_a, B + t * stride_b, out.data() + t * m * n, m, k, n);
  }
  Shape shape = (batch_a || batch_b) ? Shape{batch, m, n} : Shape{m, n};
  return make_result("matmul", std::move(shape), std::move(out), {&a, &b},
                     [=](Node& self) {
                       const double* G = self.grad.data();
                       const double* Av = self.parents[0]->data.data();
                       const double* Bv = self.parents[1]->data.data();
                       double* dA = grad_of(self, 0);
                       double* dB = grad_of(self, 1);
                       for (std::size_t t = 0; t < batch; ++t) {
                         const double* g = G + t * m * n;
                         if (dA) gemm_nt(g, Bv + t * stride_b, dA + t * stride_a, m, n, k);
                         if (dB) gemm_tn(Av + t * stride_a, g, dB + t * stride_b, m, k, n);
                       }
                     });
}

Tensor transpose(const Tensor& x) {
  const std::size_t r = x.rank();
  if (r < 2) throw DimensionError("transpose: rank must be >= 2");
  const std::size_t rows = x.extent(r - 2);
  const std::size_t cols = x.extent(r - 1);
  const std::size_t outer = x.numel() / (rows * cols);
  std::vector<double> out(x.numel());
  const auto in = x.data();
  for (std::size_t o = 0; o < outer; ++o) {
    const std::size_t base = o * rows * cols;
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < cols; ++j) out[base + j * rows + i] = in[base + i * cols + j];
    }
  }
  Shape shape = x.shape();
  std::swap(shape[r - 1], shape[r - 2]);
  return make_result("transpose", std::move(shape), std::move(out), {&x}, [=](Node& self) {
    double* dx = grad_of(self, 0);
    const double* g = self.grad.data();
    for (std::size_t o = 0; o < outer; ++o) {
      const std::size_t base = o * rows * cols;
      for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) dx[base + i * cols + j] += g[base + j * rows + i];
      }
    }
  });
}

Tensor elementwise(const Tensor& a, const Tensor& b, ElementwiseKind kind) {
  require_same_shape("elementwise", a, b);
  const auto av = a.data();
  const auto bv = b.data();
  std::vector<double> out(av.size());
  switch (kind) {
    case ElementwiseKind::add:
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
      break;
    case ElementwiseKind::sub:
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
      break;
    case ElementwiseKind::mul:
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
      break;
  }
  return make_result("elementwise", a.shape(), std::move(out), {&a, &b}, [kind](Node& self) {
    const std::size_t n = self.grad.size();
    const double* g = self.grad.data();
    double* da = grad_of(self, 0);
    double* db = grad_of(self, 1);
    const double* av2 = self.parents[0]->data.data();
    const double* bv2 = self.parents[1]->data.data();
    for (std::size_t i = 0; i < n; ++i) {
      switch (kind) {
        case ElementwiseKind::add:
          if (da) da[i] += g[i];
          if (db) db[i] += g[i];
          break;
        case ElementwiseKind::sub:
          if (da) da[i] += g[i];
          if (db) db[i] -= g[i];
          break;
        case ElementwiseKind::mul:
          if (da) da[i] += g[i] * bv2[i];
          if (db) db[i] += g[i] * av2[i];
          break;
      }
    }
  });
}

Tensor add_bias(const Tensor& x, const Tensor& bias) {
  const std::size_t n = x.extent(x.rank() - 1);
  if (bias.rank() != 1 || bias.extent(0) != n) {
    throw DimensionError("add_bias: bias " + shape_string(bias.shape()) + " does not fit " +
                         shape_string(x.shape()));
  }
  const auto xv = x.data();
  const auto bv = bias.data();
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i] + bv[i % n];
  return make_result("add_bias", x.shape(), std::move(out), {&x, &bias}, [n](Node& self) {
    const double* g = self.grad.data();
    double* dx = grad_of(self, 0);
    double* db = grad_of(self, 1);
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      if (dx) dx[i] += g[i];
      if (db) db[i % n] += g[i];
    }
  });
}

Tensor scale(const Tensor& x, double factor) {
  const auto xv = x.data();
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i] * factor;
  return make_result("scale", x.shape(), std::move(out), {&x}, [factor](Node& self) {
    double* dx = grad_of(self, 0);
    for (std::size_t i = 0; i < self.grad.size(); ++i) dx[i] += self.grad[i] * factor;
  });
}

Tensor relu(const Tensor& x) {
  const auto xv = x.data();
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i] > 0.0 ? xv[i] : 0.0;
  return make_result("relu", x.shape(), std::move(out), {&x}, [](Node& self) {
    double* dx = grad_of(self, 0);
    const double* in = self.parents[0]->data.data();
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      if (in[i] > 0.0) dx[i] += self.grad[i];
    }
  });
}

Tensor sigmoid(const Tensor& x) {
  const auto xv = x.data();
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double v = xv[i];
    out[i] = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
  }
  return make_result("sigmoid", x.shape(), std::move(out), {&x}, [](Node& self) {
    double* dx = grad_of(self, 0);
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      const double y = self.data[i];
      dx[i] += self.grad[i] * y * (1.0 - y);
    }
  });
}

Tensor tanh(const Tensor& x) {
  const auto xv = x.data();
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(xv[i]);
  return make_result("tanh", x.shape(), std::move(out), {&x}, [](Node& self) {
    double* dx = grad_of(self, 0);
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      const double y = self.data[i];
      dx[i] += self.grad[i] * (1.0 - y * y);
    }
  });
}

Tensor masked_softmax(const Tensor& logits, const Tensor& mask) {
  require_same_shape("masked_softmax", logits, mask);
  const std::size_t n = logits.extent(logits.rank() - 1);
  const std::size_t rows = logits.numel() / n;
  const auto x = logits.data();
  const auto mk = mask.data();
  std::vector<double> out(x.size(), 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t base = r * n;
    double hi = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (std::size_t j = 0; j < n; ++j) {
      if (mk[base + j] != 0.0) {
        hi = std::max(hi, x[base + j]);
        any = true;
      }
    }
    if (!any) throw DegenerateError("masked_softmax: row " + std::to_string(r) + " is fully masked");
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (mk[base + j] != 0.0) {
        out[base + j] = std::exp(x[base + j] - hi);
        total += out[base + j];
      }
    }
    for (std::size_t j = 0; j < n; ++j) out[base + j] /= total;
  }
  return make_result("masked_softmax", logits.shape(), std::move(out), {&logits, &mask},
                     [n, rows](Node& self) {
                       double* dx = grad_of(self, 0);
                       if (!dx) return;
                       const double* y = self.data.data();
                       const double* g = self.grad.data();
                       for (std::size_t r = 0; r < rows; ++r) {
                         const std::size_t base = r * n;
                         double dot = 0.0;
                         for (std::size_t j = 0; j < n; ++j) dot += y[base + j] * g[base + j];
                         for (std::size_t j = 0; j < n; ++j) {
                           dx[base + j] += y[base + j] * (g[base + j] - dot);
                         }
                       }
                     });
}

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
  if (parts.empty()) throw DimensionError("concat: no inputs");
  const Shape& first = parts.front().shape();
  if (axis >= first.size()) throw DimensionError("concat: axis out of range");
  Shape shape = first;
  shape[axis] = 0;
  for (const Tensor& p : parts) {
    const Shape& s = p.shape();
    bool ok = s.size() == first.size();
    for (std::size_t i = 0; ok && i < s.size(); ++i) ok = i == axis || s[i] == first[i];
    if (!ok) {
      throw DimensionError("concat: side extents differ " + shape_string(first) + " vs " +
                           shape_string(s));
    }
    shape[axis] += s[axis];
  }
  const AxisSplit out_split = split_axis(shape, axis);
  std::vector<double> out(shape_numel(shape));
  std::vector<std::size_t> offsets;
  std::size_t offset = 0;
  for (const Tensor& p : parts) {
    offsets.push_back(offset);
    const std::size_t block = p.extent(axis) * out_split.inner;
    const auto src = p.data();
    for (std::size_t o = 0; o < out_split.outer; ++o) {
      std::copy_n(src.begin() + o * block, block,
                  out.begin() + o * out_split.extent * out_split.inner + offset * out_split.inner);
    }
    offset += p.extent(axis);
  }
  return make_result("concat", shape, std::move(out), parts, [out_split, offsets](Node& self) {
    for (std::size_t i = 0; i < self.parents.size(); ++i) {
      double* dp = grad_of(self, i);
      if (!dp) continue;
      const std::size_t ext = self.parents[i]->data.size() / (out_split.outer * out_split.inner);
      const std::size_t block = ext * out_split.inner;
      for (std::size_t o = 0; o < out_split.outer; ++o) {
        const double* g =
            self.grad.data() + o * out_split.extent * out_split.inner + offsets[i] * out_split.inner;
        for (std::size_t j = 0; j < block; ++j) dp[o * block + j] += g[j];
      }
    }
  });
}

Tensor slice(const Tensor& x, std::size_t axis, std::size_t start, std::size_t length) {
  const Shape& in_shape = x.shape();
  if (axis >= in_shape.size()) throw DimensionError("slice: axis out of range");
  if (length == 0 || start + length > in_shape[axis]) {
    throw DimensionError("slice: range [" + std::to_string(start) + ", " +
                         std::to_string(start + length) + ") outside extent " +
                         std::to_string(in_shape[axis]));
  }
  const AxisSplit in_split = split_axis(in_shape, axis);
  Shape shape = in_shape;
  shape[axis] = length;
  const std::size_t block = length * in_split.inner;
  std::vector<double> out(in_split.outer * block);
  const auto src = x.data();
  for (std::size_t o = 0; o < in_split.outer; ++o) {
    std::copy_n(src.begin() + o * in_split.extent * in_split.inner + start * in_split.inner, block,
                out.begin() + o * block);
  }
  return make_result("slice", std::move(shape), std::move(out), {&x},
                     [in_split, start, block](Node& self) {
                       double* dx = grad_of(self, 0);
                       for (std::size_t o = 0; o < in_split.outer; ++o) {
                         double* d = dx + o * in_split.extent * in_split.inner + start * in_split.inner;
                         const double* g = self.grad.data() + o * block;
                         for (std::size_t j = 0; j < block; ++j) d[j] += g[j];
                       }
                     });
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    throw DimensionError("reshape: " + shape_string(x.shape()) + " -> " + shape_string(shape));
  }
  const auto src = x.data();
  return make_result("reshape", std::move(shape), std::vector<double>(src.begin(), src.end()), {&x},
                     [](Node& self) {
                       double* dx = grad_of(self, 0);
                       for (std::size_t i = 0; i < self.grad.size(); ++i) dx[i] += self.grad[i];
                     });
}

Tensor gather_rows(const Tensor& table, const std::vector<std::int64_t>& indices) {
  if (table.rank() != 2) throw DimensionError("gather_rows: table must be rank 2");
  if (indices.empty()) throw DimensionError("gather_rows: no indices");
  const std::size_t rows = table.extent(0);
  const std::size_t width = table.extent(1);
  const auto src = table.data();
  std::vector<double> out(indices.size() * width, 0.0);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const std::int64_t idx = indices[i];
    if (idx < 0) continue;
    if (static_cast<std::size_t>(idx) >= rows) {
      throw IndexError("gather_rows: index " + std::to_string(idx) + " outside table of " +
                       std::to_string(rows) + " rows");
    }
    std::copy_n(src.begin() + idx * width, width, out.begin() + i * width);
  }
  return make_result("gather_rows", {indices.size(), width}, std::move(out), {&table},
                     [indices, width](Node& self) {
                       double* dt = grad_of(self, 0);
                       for (std::size_t i = 0; i < indices.size(); ++i) {
                         if (indices[i] < 0) continue;
                         double* d = dt + indices[i] * width;
                         const double* g = self.grad.data() + i * width;
                         for (std::size_t j = 0; j < width; ++j) d[j] += g[j];
                       }
                     });
}

Tensor mask_rows(const Tensor& x, const Tensor& mask) {
  const Shape& xs = x.shape();
  if (xs.size() < 2 || mask.shape() != Shape(xs.begin(), xs.end() - 1)) {
    throw DimensionError("mask_rows: mask " + shape_string(mask.shape()) + " does not fit " +
                         shape_string(xs));
  }
  const std::size_t width = xs.back();
  const auto xv = x.data();
  const auto mv = mask.data();
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i] * mv[i / width];
  return make_result("mask_rows", xs, std::move(out), {&x}, [mask, width](Node& self) {
    double* dx = grad_of(self, 0);
    const auto mv2 = mask.data();
    for (std::size_t i = 0; i < self.grad.size(); ++i) dx[i] += self.grad[i] * mv2[i / width];
  });
}

Tensor pool(const Tensor& x, PoolKind kind, const Tensor& mask, bool allow_empty) {
  const Shape& xs = x.shape();
  if (xs.size() < 2 || mask.shape() != Shape(xs.begin(), xs.end() - 1)) {
    throw DimensionError("pool: mask " + shape_string(mask.shape()) + " does not fit " +
                         shape_string(xs));
  }
  const std::size_t steps = xs[xs.size() - 2];
  const std::size_t width = xs.back();
  const std::size_t outer = x.numel() / (steps * width);
  constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  const auto xv = x.data();
  const auto mv = mask.data();

  // Source step for every (sequence, feature) output cell.
  std::vector<std::size_t> source(outer * width, kNone);
  std::vector<double> out(outer * width, 0.0);
  for (std::size_t o = 0; o < outer; ++o) {
    std::size_t last = kNone;
    for (std::size_t t = 0; t < steps; ++t) {
      if (mv[o * steps + t] != 0.0) last = t;
    }
    if (last == kNone) {
      if (!allow_empty) {
        throw DegenerateError("pool: sequence " + std::to_string(o) + " has no unmasked step");
      }
      continue;
    }
    for (std::size_t j = 0; j < width; ++j) {
      std::size_t pick = last;
      if (kind == PoolKind::max) {
        pick = kNone;
        for (std::size_t t = 0; t <= last; ++t) {
          if (mv[o * steps + t] == 0.0) continue;
          if (pick == kNone || xv[(o * steps + t) * width + j] > xv[(o * steps + pick) * width + j]) {
            pick = t;
          }
        }
      }
      source[o * width + j] = pick;
      out[o * width + j] = xv[(o * steps + pick) * width + j];
    }
  }
  Shape shape(xs.begin(), xs.end() - 2);
  shape.push_back(width);
  return make_result("pool", std::move(shape), std::move(out), {&x},
                     [source = std::move(source), steps, width, outer](Node& self) {
                       double* dx = grad_of(self, 0);
                       for (std::size_t o = 0; o < outer; ++o) {
                         for (std::size_t j = 0; j < width; ++j) {
                           const std::size_t t = source[o * width + j];
                           if (t == kNone) continue;
                           dx[(o * steps + t) * width + j] += self.grad[o * width + j];
                         }
                       }
                     });
}

Tensor dropout(const Tensor& x, double rate, bool training, Rng& rng) {
  if (!(rate >= 0.0) || rate >= 1.0) {
    throw ConfigError("dropout: rate must lie in [0, 1), got " + std::to_string(rate));
  }
  if (!training || rate == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - rate);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::vector<double> factor(x.numel());
  for (double& f : factor) f = uniform(rng) >= rate ? keep_scale : 0.0;
  const auto xv = x.data();
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i] * factor[i];
  return make_result("dropout", x.shape(), std::move(out), {&x},
                     [factor = std::move(factor)](Node& self) {
                       double* dx = grad_of(self, 0);
                       for (std::size_t i = 0; i < self.grad.size(); ++i) dx[i] += self.grad[i] * factor[i];
                     });
}

Tensor sum(const Tensor& x) {
  double total = 0.0;
  for (double v : x.data()) total += v;
  return make_result("sum", {1}, {total}, {&x}, [](Node& self) {
    double* dx = grad_of(self, 0);
    const std::size_t n = self.parents[0]->data.size();
    for (std::size_t i = 0; i < n; ++i) dx[i] += self.grad[0];
  });
}

Tensor mean(const Tensor& x) { return scale(sum(x), 1.0 / static_cast<double>(x.numel())); }

Tensor softmax_cross_entropy(const Tensor& logits, std::size_t target) {
  if (logits.rank() != 1) throw DimensionError("softmax_cross_entropy: logits must be rank 1");
  const std::size_t n = logits.extent(0);
  if (target >= n) {
    throw IndexError("softmax_cross_entropy: target " + std::to_string(target) + " outside " +
                     std::to_string(n) + " candidates");
  }
  const auto x = logits.data();
  const double hi = *std::max_element(x.begin(), x.end());
  double total = 0.0;
  for (double v : x) total += std::exp(v - hi);
  const double loss = std::log(total) + (hi - x[target]);
  return make_result("softmax_cross_entropy", {1}, {loss}, {&logits},
                     [hi, total, target](Node& self) {
                       double* dx = grad_of(self, 0);
                       const auto& xv = self.parents[0]->data;
                       for (std::size_t i = 0; i < xv.size(); ++i) {
                         const double p = std::exp(xv[i] - hi) / total;
                         dx[i] += self.grad[0] * (p - (i == target ? 1.0 : 0.0));
                       }
                     });
}

}  // namespace dim
