#include "cmsa/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "cmsa/errors.hpp"

namespace cmsa {

namespace {

using detail::Node;
using detail::NodePtr;

bool tracked(std::initializer_list<const Tensor*> ts) {
  if (!detail::grad_enabled()) return false;
  for (const Tensor* t : ts) {
    if (t->requires_grad()) return true;
  }
  return false;
}

Tensor finish(NodePtr out, std::vector<Tensor> parents,
              std::function<void(const double*, const std::vector<double*>&)> bw) {
  out->requires_grad = true;
  out->parents.reserve(parents.size());
  for (auto& p : parents) out->parents.push_back(p.node());
  out->backward = std::move(bw);
  return Tensor(std::move(out));
}

void check_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw DimError(std::string(op) + ": shape mismatch " + shape_to_string(a.shape()) + " vs " +
                   shape_to_string(b.shape()));
  }
}

// Splits a shape at `axis` into (outer, extent, inner) so that the flat
// offset of (o, a, i) is (o * extent + a) * inner + i.
struct AxisView {
  std::size_t outer = 1, extent = 1, inner = 1;
};

AxisView axis_view(const char* op, const Shape& shape, std::size_t axis) {
  if (axis >= shape.size()) {
    throw DimError(std::string(op) + ": axis " + std::to_string(axis) + " out of range for shape " +
                   shape_to_string(shape));
  }
  AxisView v;
  for (std::size_t d = 0; d < axis; ++d) v.outer *= shape[d];
  v.extent = shape[axis];
  for (std::size_t d = axis + 1; d < shape.size(); ++d) v.inner *= shape[d];
  return v;
}

std::vector<std::size_t> strides_of(const Shape& shape) {
  std::vector<std::size_t> st(shape.size(), 1);
  for (std::size_t d = shape.size(); d-- > 1;) st[d - 1] = st[d] * shape[d];
  return st;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape("add", a, b);
  const std::size_t n = a.size();
  std::vector<double> out(n);
  const double* pa = a.data();
  const double* pb = b.data();
  for (std::size_t i = 0; i < n; ++i) out[i] = pa[i] + pb[i];
  NodePtr node = detail::new_result(a.shape(), std::move(out));
  if (!tracked({&a, &b})) return Tensor(node);
  return finish(node, {a, b}, [n](const double* og, const std::vector<double*>& pg) {
    if (pg[0]) {
      for (std::size_t i = 0; i < n; ++i) pg[0][i] += og[i];
    }
    if (pg[1]) {
      for (std::size_t i = 0; i < n; ++i) pg[1][i] += og[i];
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape("sub", a, b);
  const std::size_t n = a.size();
  std::vector<double> out(n);
  const double* pa = a.data();
  const double* pb = b.data();
  for (std::size_t i = 0; i < n; ++i) out[i] = pa[i] - pb[i];
  NodePtr node = detail::new_result(a.shape(), std::move(out));
  if (!tracked({&a, &b})) return Tensor(node);
  return finish(node, {a, b}, [n](const double* og, const std::vector<double*>& pg) {
    if (pg[0]) {
      for (std::size_t i = 0; i < n; ++i) pg[0][i] += og[i];
    }
    if (pg[1]) {
      for (std::size_t i = 0; i < n; ++i) pg[1][i] -= og[i];
    }
  });
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
  check_same_shape("hadamard", a, b);
  const std::size_t n = a.size();
  std::vector<double> out(n);
  const double* pa = a.data();
  const double* pb = b.data();
  for (std::size_t i = 0; i < n; ++i) out[i] = pa[i] * pb[i];
  NodePtr node = detail::new_result(a.shape(), std::move(out));
  if (!tracked({&a, &b})) return Tensor(node);
  Node* an = a.node().get();
  Node* bn = b.node().get();
  return finish(node, {a, b}, [n, an, bn](const double* og, const std::vector<double*>& pg) {
    if (pg[0]) {
      const double* pb = bn->value.data();
      for (std::size_t i = 0; i < n; ++i) pg[0][i] += og[i] * pb[i];
    }
    if (pg[1]) {
      const double* pa = an->value.data();
      for (std::size_t i = 0; i < n; ++i) pg[1][i] += og[i] * pa[i];
    }
  });
}

Tensor scalar_mul(const Tensor& x, double c) {
  const std::size_t n = x.size();
  std::vector<double> out(n);
  const double* px = x.data();
  for (std::size_t i = 0; i < n; ++i) out[i] = px[i] * c;
  NodePtr node = detail::new_result(x.shape(), std::move(out));
  if (!tracked({&x})) return Tensor(node);
  return finish(node, {x}, [n, c](const double* og, const std::vector<double*>& pg) {
    for (std::size_t i = 0; i < n; ++i) pg[0][i] += og[i] * c;
  });
}

Tensor add_scalar(const Tensor& x, double c) {
  const std::size_t n = x.size();
  std::vector<double> out(n);
  const double* px = x.data();
  for (std::size_t i = 0; i < n; ++i) out[i] = px[i] + c;
  NodePtr node = detail::new_result(x.shape(), std::move(out));
  if (!tracked({&x})) return Tensor(node);
  return finish(node, {x}, [n](const double* og, const std::vector<double*>& pg) {
    for (std::size_t i = 0; i < n; ++i) pg[0][i] += og[i];
  });
}

Tensor relu(const Tensor& x) {
  const std::size_t n = x.size();
  std::vector<double> out(n);
  const double* px = x.data();
  for (std::size_t i = 0; i < n; ++i) out[i] = px[i] > 0.0 ? px[i] : 0.0;
  NodePtr node = detail::new_result(x.shape(), std::move(out));
  if (!tracked({&x})) return Tensor(node);
  Node* xn = x.node().get();
  return finish(node, {x}, [n, xn](const double* og, const std::vector<double*>& pg) {
    const double* px = xn->value.data();
    for (std::size_t i = 0; i < n; ++i) {
      if (px[i] > 0.0) pg[0][i] += og[i];
    }
  });
}

Tensor tanh(const Tensor& x) {
  const std::size_t n = x.size();
  std::vector<double> out(n);
  const double* px = x.data();
  for (std::size_t i = 0; i < n; ++i) out[i] = std::tanh(px[i]);
  NodePtr node = detail::new_result(x.shape(), std::move(out));
  if (!tracked({&x})) return Tensor(node);
  Node* self = node.get();
  return finish(node, {x}, [n, self](const double* og, const std::vector<double*>& pg) {
    const double* py = self->value.data();
    for (std::size_t i = 0; i < n; ++i) pg[0][i] += og[i] * (1.0 - py[i] * py[i]);
  });
}

Tensor sigmoid(const Tensor& x) {
  const std::size_t n = x.size();
  std::vector<double> out(n);
  const double* px = x.data();
  for (std::size_t i = 0; i < n; ++i) {
    // Evaluate through exp(-|x|) so neither branch overflows.
    const double v = px[i];
    if (v >= 0.0) {
      out[i] = 1.0 / (1.0 + std::exp(-v));
    } else {
      const double e = std::exp(v);
      out[i] = e / (1.0 + e);
    }
  }
  NodePtr node = detail::new_result(x.shape(), std::move(out));
  if (!tracked({&x})) return Tensor(node);
  Node* self = node.get();
  return finish(node, {x}, [n, self](const double* og, const std::vector<double*>& pg) {
    const double* py = self->value.data();
    for (std::size_t i = 0; i < n; ++i) pg[0][i] += og[i] * py[i] * (1.0 - py[i]);
  });
}

Tensor log_clamped(const Tensor& x, double lo, double hi) {
  if (!(lo > 0.0) || !(hi >= lo)) throw UsageError("log_clamped: need 0 < lo <= hi");
  const std::size_t n = x.size();
  std::vector<double> out(n);
  const double* px = x.data();
  for (std::size_t i = 0; i < n; ++i) out[i] = std::log(std::clamp(px[i], lo, hi));
  NodePtr node = detail::new_result(x.shape(), std::move(out));
  if (!tracked({&x})) return Tensor(node);
  Node* xn = x.node().get();
  return finish(node, {x}, [n, lo, hi, xn](const double* og, const std::vector<double*>& pg) {
    const double* px = xn->value.data();
    for (std::size_t i = 0; i < n; ++i) {
      if (px[i] >= lo && px[i] <= hi) pg[0][i] += og[i] / px[i];
    }
  });
}

Tensor mul_by_scalar_tensor(const Tensor& x, const Tensor& s) {
  if (s.size() != 1) {
    throw DimError("mul_by_scalar_tensor: scale must have one element, got shape " +
                   shape_to_string(s.shape()));
  }
  const std::size_t n = x.size();
  const double c = s.data()[0];
  std::vector<double> out(n);
  const double* px = x.data();
  for (std::size_t i = 0; i < n; ++i) out[i] = px[i] * c;
  NodePtr node = detail::new_result(x.shape(), std::move(out));
  if (!tracked({&x, &s})) return Tensor(node);
  Node* xn = x.node().get();
  return finish(node, {x, s}, [n, c, xn](const double* og, const std::vector<double*>& pg) {
    if (pg[0]) {
      for (std::size_t i = 0; i < n; ++i) pg[0][i] += og[i] * c;
    }
    if (pg[1]) {
      const double* px = xn->value.data();
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) acc += og[i] * px[i];
      pg[1][0] += acc;
    }
  });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2) {
    throw DimError("matmul: expected rank-2 operands, got " + shape_to_string(a.shape()) + " and " +
                   shape_to_string(b.shape()));
  }
  const std::size_t m = a.shape()[0];
  const std::size_t k = a.shape()[1];
  const std::size_t p = b.shape()[1];
  if (b.shape()[0] != k) {
    throw DimError("matmul: inner extents " + std::to_string(k) + " vs " +
                   std::to_string(b.shape()[0]));
  }
  std::vector<double> out(m * p, 0.0);
  {
    const double* pa = a.data();
    const double* pb = b.data();
    for (std::size_t i = 0; i < m; ++i) {
      double* co = out.data() + i * p;
      const double* ar = pa + i * k;
      for (std::size_t kk = 0; kk < k; ++kk) {
        const double av = ar[kk];
        const double* br = pb + kk * p;
        for (std::size_t j = 0; j < p; ++j) co[j] += av * br[j];
      }
    }
  }
  NodePtr node = detail::new_result(Shape{m, p}, std::move(out));
  if (!tracked({&a, &b})) return Tensor(node);
  Node* an = a.node().get();
  Node* bn = b.node().get();
  return finish(node, {a, b}, [m, k, p, an, bn](const double* og, const std::vector<double*>& pg) {
    if (pg[0]) {
      // dA += og * B^T, against a transposed copy so the inner loop is a
      // contiguous saxpy instead of a strided dot.
      const double* pb = bn->value.data();
      std::vector<double> bt(p * k);
      for (std::size_t kk = 0; kk < k; ++kk) {
        for (std::size_t j = 0; j < p; ++j) bt[j * k + kk] = pb[kk * p + j];
      }
      for (std::size_t i = 0; i < m; ++i) {
        const double* gr = og + i * p;
        double* da = pg[0] + i * k;
        for (std::size_t j = 0; j < p; ++j) {
          const double g = gr[j];
          const double* btr = bt.data() + j * k;
          for (std::size_t kk = 0; kk < k; ++kk) da[kk] += g * btr[kk];
        }
      }
    }
    if (pg[1]) {
      // dB[kk,j] += sum_i A[i,kk] * og[i,j]
      const double* pa = an->value.data();
      for (std::size_t i = 0; i < m; ++i) {
        const double* ar = pa + i * k;
        const double* gr = og + i * p;
        for (std::size_t kk = 0; kk < k; ++kk) {
          const double av = ar[kk];
          double* db = pg[1] + kk * p;
          for (std::size_t j = 0; j < p; ++j) db[j] += av * gr[j];
        }
      }
    }
  });
}

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& bias, std::size_t stride) {
  if (x.rank() != 3 || w.rank() != 4 || bias.rank() != 1) {
    throw DimError("conv2d: expected x [C,H,W], w [O,C,k,k], bias [O]");
  }
  const std::size_t ci = x.shape()[0], h = x.shape()[1], wd = x.shape()[2];
  const std::size_t co = w.shape()[0], kk = w.shape()[2];
  if (w.shape()[1] != ci) {
    throw DimError("conv2d: input has " + std::to_string(ci) + " channels, kernel expects " +
                   std::to_string(w.shape()[1]));
  }
  if (w.shape()[3] != kk || kk % 2 == 0) throw DimError("conv2d: kernel must be square with odd extent");
  if (bias.shape()[0] != co) throw DimError("conv2d: bias extent does not match output channels");
  if (stride == 0) throw UsageError("conv2d: stride must be positive");
  const std::size_t pad = (kk - 1) / 2;
  const std::size_t ho = (h + 2 * pad - kk) / stride + 1;
  const std::size_t wo = (wd + 2 * pad - kk) / stride + 1;

  // Kernel ranges clipped against the borders once per output coordinate.
  const auto clip_lo = [pad](std::size_t o, std::size_t stride_) {
    const std::ptrdiff_t v = static_cast<std::ptrdiff_t>(pad) -
                             static_cast<std::ptrdiff_t>(o * stride_);
    return v > 0 ? static_cast<std::size_t>(v) : 0;
  };
  const auto clip_hi = [pad, kk](std::size_t o, std::size_t stride_, std::size_t extent) {
    const std::ptrdiff_t v = static_cast<std::ptrdiff_t>(extent + pad) -
                             static_cast<std::ptrdiff_t>(o * stride_);
    return v < static_cast<std::ptrdiff_t>(kk) ? static_cast<std::size_t>(v > 0 ? v : 0) : kk;
  };

  std::vector<double> out(co * ho * wo);
  {
    const double* px = x.data();
    const double* pw = w.data();
    const double* pb = bias.data();
    for (std::size_t oc = 0; oc < co; ++oc) {
      for (std::size_t oy = 0; oy < ho; ++oy) {
        const std::size_t ky_lo = clip_lo(oy, stride);
        const std::size_t ky_hi = clip_hi(oy, stride, h);
        for (std::size_t ox = 0; ox < wo; ++ox) {
          const std::size_t kx_lo = clip_lo(ox, stride);
          const std::size_t kx_hi = clip_hi(ox, stride, wd);
          double acc = pb[oc];
          const std::size_t span = kx_hi - kx_lo;
          const std::size_t ix0 = ox * stride + kx_lo - pad;
          for (std::size_t ic = 0; ic < ci; ++ic) {
            for (std::size_t ky = ky_lo; ky < ky_hi; ++ky) {
              const std::size_t iy = oy * stride + ky - pad;
              const double* xrow = px + (ic * h + iy) * wd + ix0;
              const double* wrow = pw + ((oc * ci + ic) * kk + ky) * kk + kx_lo;
              for (std::size_t j = 0; j < span; ++j) acc += xrow[j] * wrow[j];
            }
          }
          out[(oc * ho + oy) * wo + ox] = acc;
        }
      }
    }
  }
  NodePtr node = detail::new_result(Shape{co, ho, wo}, std::move(out));
  if (!tracked({&x, &w, &bias})) return Tensor(node);
  Node* xn = x.node().get();
  Node* wn = w.node().get();
  return finish(node, {x, w, bias},
                [ci, h, wd, co, kk, pad, stride, ho, wo, xn, wn](const double* og,
                                                                 const std::vector<double*>& pg) {
    const double* px = xn->value.data();
    const double* pw = wn->value.data();
    const auto lo = [pad](std::size_t o, std::size_t stride_) {
      const std::ptrdiff_t v = static_cast<std::ptrdiff_t>(pad) -
                               static_cast<std::ptrdiff_t>(o * stride_);
      return v > 0 ? static_cast<std::size_t>(v) : 0;
    };
    const auto hi = [pad, kk](std::size_t o, std::size_t stride_, std::size_t extent) {
      const std::ptrdiff_t v = static_cast<std::ptrdiff_t>(extent + pad) -
                               static_cast<std::ptrdiff_t>(o * stride_);
      return v < static_cast<std::ptrdiff_t>(kk) ? static_cast<std::size_t>(v > 0 ? v : 0) : kk;
    };
    for (std::size_t oc = 0; oc < co; ++oc) {
      for (std::size_t oy = 0; oy < ho; ++oy) {
        const std::size_t ky_lo = lo(oy, stride);
        const std::size_t ky_hi = hi(oy, stride, h);
        for (std::size_t ox = 0; ox < wo; ++ox) {
          const double g = og[(oc * ho + oy) * wo + ox];
          if (pg[2]) pg[2][oc] += g;
          if (!pg[0] && !pg[1]) continue;
          const std::size_t kx_lo = lo(ox, stride);
          const std::size_t kx_hi = hi(ox, stride, wd);
          const std::size_t span = kx_hi - kx_lo;
          const std::size_t ix0 = ox * stride + kx_lo - pad;
          for (std::size_t ic = 0; ic < ci; ++ic) {
            for (std::size_t ky = ky_lo; ky < ky_hi; ++ky) {
              const std::size_t iy = oy * stride + ky - pad;
              const std::size_t xi = (ic * h + iy) * wd + ix0;
              const std::size_t wi = ((oc * ci + ic) * kk + ky) * kk + kx_lo;
              if (pg[0] && pg[1]) {
                for (std::size_t j = 0; j < span; ++j) {
                  pg[0][xi + j] += g * pw[wi + j];
                  pg[1][wi + j] += g * px[xi + j];
                }
              } else if (pg[0]) {
                for (std::size_t j = 0; j < span; ++j) pg[0][xi + j] += g * pw[wi + j];
              } else {
                for (std::size_t j = 0; j < span; ++j) pg[1][wi + j] += g * px[xi + j];
              }
            }
          }
        }
      }
    }
  });
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.size()) {
    throw DimError("reshape: cannot view " + shape_to_string(x.shape()) + " as " +
                   shape_to_string(shape));
  }
  NodePtr node = detail::new_result(std::move(shape), x.values());
  if (!tracked({&x})) return Tensor(node);
  const std::size_t n = x.size();
  return finish(node, {x}, [n](const double* og, const std::vector<double*>& pg) {
    for (std::size_t i = 0; i < n; ++i) pg[0][i] += og[i];
  });
}

Tensor permute(const Tensor& x, const std::vector<std::size_t>& perm) {
  const Shape& in_shape = x.shape();
  const std::size_t r = in_shape.size();
  if (perm.size() != r) throw DimError("permute: permutation rank mismatch");
  std::vector<bool> seen(r, false);
  Shape out_shape(r);
  for (std::size_t d = 0; d < r; ++d) {
    if (perm[d] >= r || seen[perm[d]]) throw DimError("permute: invalid permutation");
    seen[perm[d]] = true;
    out_shape[d] = in_shape[perm[d]];
  }
  const auto in_strides = strides_of(in_shape);
  const std::size_t n = x.size();
  // Walk output positions in order; in_off tracks the permuted source offset.
  std::vector<std::size_t> idx(r, 0);
  std::vector<double> out(n);
  const double* px = x.data();
  std::vector<std::size_t> src_stride(r);
  for (std::size_t d = 0; d < r; ++d) src_stride[d] = in_strides[perm[d]];
  std::size_t in_off = 0;
  for (std::size_t o = 0; o < n; ++o) {
    out[o] = px[in_off];
    for (std::size_t d = r; d-- > 0;) {
      idx[d]++;
      in_off += src_stride[d];
      if (idx[d] < out_shape[d]) break;
      in_off -= src_stride[d] * out_shape[d];
      idx[d] = 0;
    }
  }
  NodePtr node = detail::new_result(out_shape, std::move(out));
  if (!tracked({&x})) return Tensor(node);
  return finish(node, {x},
                [out_shape, src_stride, r, n](const double* og, const std::vector<double*>& pg) {
    std::vector<std::size_t> idx(r, 0);
    std::size_t in_off = 0;
    for (std::size_t o = 0; o < n; ++o) {
      pg[0][in_off] += og[o];
      for (std::size_t d = r; d-- > 0;) {
        idx[d]++;
        in_off += src_stride[d];
        if (idx[d] < out_shape[d]) break;
        in_off -= src_stride[d] * out_shape[d];
        idx[d] = 0;
      }
    }
  });
}

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
  if (parts.empty()) throw UsageError("concat: no inputs");
  const Shape& first = parts[0].shape();
  if (axis >= first.size()) throw DimError("concat: axis out of range");
  Shape out_shape = first;
  std::size_t total = first[axis];
  for (std::size_t i = 1; i < parts.size(); ++i) {
    const Shape& s = parts[i].shape();
    if (s.size() != first.size()) throw DimError("concat: rank mismatch");
    for (std::size_t d = 0; d < s.size(); ++d) {
      if (d != axis && s[d] != first[d]) {
        throw DimError("concat: extent mismatch at dim " + std::to_string(d));
      }
    }
    total += s[axis];
  }
  out_shape[axis] = total;

  const AxisView ov = axis_view("concat", out_shape, axis);
  std::vector<double> out(shape_numel(out_shape));
  std::vector<std::size_t> extents(parts.size());
  for (std::size_t i = 0; i < parts.size(); ++i) extents[i] = parts[i].shape()[axis];
  {
    std::size_t base = 0;
    for (std::size_t i = 0; i < parts.size(); ++i) {
      const double* src = parts[i].data();
      const std::size_t block = extents[i] * ov.inner;
      for (std::size_t o = 0; o < ov.outer; ++o) {
        std::memcpy(out.data() + (o * ov.extent + base) * ov.inner, src + o * block,
                    block * sizeof(double));
      }
      base += extents[i];
    }
  }
  NodePtr node = detail::new_result(out_shape, std::move(out));
  bool any = false;
  for (const Tensor& t : parts) any = any || t.requires_grad();
  if (!detail::grad_enabled() || !any) return Tensor(node);
  return finish(node, parts, [ov, extents](const double* og, const std::vector<double*>& pg) {
    std::size_t base = 0;
    for (std::size_t i = 0; i < extents.size(); ++i) {
      const std::size_t block = extents[i] * ov.inner;
      if (pg[i]) {
        for (std::size_t o = 0; o < ov.outer; ++o) {
          const double* g = og + (o * ov.extent + base) * ov.inner;
          double* dst = pg[i] + o * block;
          for (std::size_t j = 0; j < block; ++j) dst[j] += g[j];
        }
      }
      base += extents[i];
    }
  });
}

Tensor rows(const Tensor& table, const std::vector<int>& ids) {
  if (table.rank() != 2) throw DimError("rows: table must be rank 2");
  if (ids.empty()) throw UsageError("rows: empty id list");
  const std::size_t v = table.shape()[0];
  const std::size_t c = table.shape()[1];
  for (int id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= v) {
      throw VocabError("rows: id " + std::to_string(id) + " outside table of " + std::to_string(v) +
                       " rows");
    }
  }
  std::vector<double> out(ids.size() * c);
  const double* pt = table.data();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    std::memcpy(out.data() + i * c, pt + static_cast<std::size_t>(ids[i]) * c, c * sizeof(double));
  }
  NodePtr node = detail::new_result(Shape{ids.size(), c}, std::move(out));
  if (!tracked({&table})) return Tensor(node);
  return finish(node, {table}, [ids, c](const double* og, const std::vector<double*>& pg) {
    for (std::size_t i = 0; i < ids.size(); ++i) {
      double* dst = pg[0] + static_cast<std::size_t>(ids[i]) * c;
      const double* g = og + i * c;
      for (std::size_t j = 0; j < c; ++j) dst[j] += g[j];
    }
  });
}

Tensor tile_spatial(const Tensor& channels, std::size_t h, std::size_t w) {
  if (channels.rank() != 1) throw DimError("tile_spatial: expected a rank-1 tensor");
  if (h == 0 || w == 0) throw DimError("tile_spatial: empty spatial extents");
  const std::size_t c = channels.shape()[0];
  std::vector<double> out(h * w * c);
  const double* src = channels.data();
  for (std::size_t p = 0; p < h * w; ++p) std::memcpy(out.data() + p * c, src, c * sizeof(double));
  NodePtr node = detail::new_result(Shape{h, w, c}, std::move(out));
  if (!tracked({&channels})) return Tensor(node);
  return finish(node, {channels}, [h, w, c](const double* og, const std::vector<double*>& pg) {
    for (std::size_t p = 0; p < h * w; ++p) {
      const double* g = og + p * c;
      for (std::size_t j = 0; j < c; ++j) pg[0][j] += g[j];
    }
  });
}

Tensor broadcast_channels(const Tensor& plane, std::size_t c) {
  if (plane.rank() != 2) throw DimError("broadcast_channels: expected a rank-2 tensor");
  if (c == 0) throw DimError("broadcast_channels: zero channels");
  const std::size_t hw = plane.size();
  std::vector<double> out(c * hw);
  const double* src = plane.data();
  for (std::size_t ch = 0; ch < c; ++ch) std::memcpy(out.data() + ch * hw, src, hw * sizeof(double));
  NodePtr node = detail::new_result(Shape{c, plane.shape()[0], plane.shape()[1]}, std::move(out));
  if (!tracked({&plane})) return Tensor(node);
  return finish(node, {plane}, [c, hw](const double* og, const std::vector<double*>& pg) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      const double* g = og + ch * hw;
      for (std::size_t j = 0; j < hw; ++j) pg[0][j] += g[j];
    }
  });
}

Tensor sum(const Tensor& x) {
  const std::size_t n = x.size();
  const double* px = x.data();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += px[i];
  NodePtr node = detail::new_result(Shape{}, {acc});
  if (!tracked({&x})) return Tensor(node);
  return finish(node, {x}, [n](const double* og, const std::vector<double*>& pg) {
    for (std::size_t i = 0; i < n; ++i) pg[0][i] += og[0];
  });
}

Tensor mean(const Tensor& x) {
  const std::size_t n = x.size();
  if (n == 0) throw UsageError("mean: empty tensor");
  const double* px = x.data();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += px[i];
  NodePtr node = detail::new_result(Shape{}, {acc / static_cast<double>(n)});
  if (!tracked({&x})) return Tensor(node);
  return finish(node, {x}, [n](const double* og, const std::vector<double*>& pg) {
    const double g = og[0] / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) pg[0][i] += g;
  });
}

namespace {

Tensor reduce_axis(const Tensor& x, std::size_t axis, bool take_mean) {
  const AxisView v = axis_view(take_mean ? "mean" : "sum", x.shape(), axis);
  Shape out_shape;
  for (std::size_t d = 0; d < x.rank(); ++d) {
    if (d != axis) out_shape.push_back(x.shape()[d]);
  }
  const double scale = take_mean ? 1.0 / static_cast<double>(v.extent) : 1.0;
  std::vector<double> out(v.outer * v.inner, 0.0);
  const double* px = x.data();
  for (std::size_t o = 0; o < v.outer; ++o) {
    for (std::size_t a = 0; a < v.extent; ++a) {
      const double* src = px + (o * v.extent + a) * v.inner;
      double* dst = out.data() + o * v.inner;
      for (std::size_t i = 0; i < v.inner; ++i) dst[i] += src[i];
    }
  }
  if (take_mean) {
    for (double& e : out) e *= scale;
  }
  NodePtr node = detail::new_result(std::move(out_shape), std::move(out));
  if (!tracked({&x})) return Tensor(node);
  return finish(node, {x}, [v, scale](const double* og, const std::vector<double*>& pg) {
    for (std::size_t o = 0; o < v.outer; ++o) {
      const double* g = og + o * v.inner;
      for (std::size_t a = 0; a < v.extent; ++a) {
        double* dst = pg[0] + (o * v.extent + a) * v.inner;
        for (std::size_t i = 0; i < v.inner; ++i) dst[i] += g[i] * scale;
      }
    }
  });
}

Tensor softmax_impl(const Tensor& x, std::size_t axis, const Tensor* mask) {
  const AxisView v = axis_view("softmax", x.shape(), axis);
  const double* px = x.data();
  const double* pm = nullptr;
  if (mask) {
    if (mask->shape() != x.shape()) throw DimError("softmax: mask shape mismatch");
    pm = mask->data();
  }
  std::vector<double> out(x.size(), 0.0);
  for (std::size_t o = 0; o < v.outer; ++o) {
    for (std::size_t i = 0; i < v.inner; ++i) {
      const std::size_t base = o * v.extent * v.inner + i;
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < v.extent; ++a) {
        const std::size_t at = base + a * v.inner;
        if (pm && pm[at] == 0.0) continue;
        mx = std::max(mx, px[at]);
      }
      if (!std::isfinite(mx)) throw UsageError("softmax: a slice has empty mask support");
      double denom = 0.0;
      for (std::size_t a = 0; a < v.extent; ++a) {
        const std::size_t at = base + a * v.inner;
        if (pm && pm[at] == 0.0) continue;
        const double e = std::exp(px[at] - mx);
        out[at] = e;
        denom += e;
      }
      for (std::size_t a = 0; a < v.extent; ++a) {
        const std::size_t at = base + a * v.inner;
        out[at] /= denom;
      }
    }
  }
  NodePtr node = detail::new_result(x.shape(), std::move(out));
  std::vector<Tensor> parents{x};
  if (mask) parents.push_back(*mask);
  bool any = detail::grad_enabled() && x.requires_grad();
  if (!any) return Tensor(node);
  Node* self = node.get();
  return finish(node, parents, [v, self](const double* og, const std::vector<double*>& pg) {
    const double* py = self->value.data();
    if (!pg[0]) return;
    for (std::size_t o = 0; o < v.outer; ++o) {
      for (std::size_t i = 0; i < v.inner; ++i) {
        const std::size_t base = o * v.extent * v.inner + i;
        double dot = 0.0;
        for (std::size_t a = 0; a < v.extent; ++a) {
          const std::size_t at = base + a * v.inner;
          dot += og[at] * py[at];
        }
        for (std::size_t a = 0; a < v.extent; ++a) {
          const std::size_t at = base + a * v.inner;
          pg[0][at] += py[at] * (og[at] - dot);
        }
      }
    }
  });
}

}  // namespace

Tensor sum(const Tensor& x, std::size_t axis) { return reduce_axis(x, axis, false); }
Tensor mean(const Tensor& x, std::size_t axis) { return reduce_axis(x, axis, true); }

Tensor softmax(const Tensor& x, std::size_t axis) { return softmax_impl(x, axis, nullptr); }

Tensor masked_softmax(const Tensor& x, std::size_t axis, const Tensor& mask) {
  return softmax_impl(x, axis, &mask);
}

Tensor l2_normalize(const Tensor& x, std::size_t axis, double eps) {
  const AxisView v = axis_view("l2_normalize", x.shape(), axis);
  const double* px = x.data();
  std::vector<double> out(x.size(), 0.0);
  std::vector<double> norms(v.outer * v.inner, 0.0);
  for (std::size_t o = 0; o < v.outer; ++o) {
    for (std::size_t i = 0; i < v.inner; ++i) {
      const std::size_t base = o * v.extent * v.inner + i;
      double sq = 0.0;
      for (std::size_t a = 0; a < v.extent; ++a) {
        const double e = px[base + a * v.inner];
        sq += e * e;
      }
      const double norm = std::sqrt(sq);
      norms[o * v.inner + i] = norm;
      if (norm < eps) continue;  // fibre stays zero
      for (std::size_t a = 0; a < v.extent; ++a) {
        const std::size_t at = base + a * v.inner;
        out[at] = px[at] / norm;
      }
    }
  }
  NodePtr node = detail::new_result(x.shape(), std::move(out));
  if (!tracked({&x})) return Tensor(node);
  Node* self = node.get();
  return finish(node, {x}, [v, eps, norms, self](const double* og, const std::vector<double*>& pg) {
    const double* py = self->value.data();
    for (std::size_t o = 0; o < v.outer; ++o) {
      for (std::size_t i = 0; i < v.inner; ++i) {
        const double norm = norms[o * v.inner + i];
        if (norm < eps) continue;
        const std::size_t base = o * v.extent * v.inner + i;
        double dot = 0.0;
        for (std::size_t a = 0; a < v.extent; ++a) {
          const std::size_t at = base + a * v.inner;
          dot += og[at] * py[at];
        }
        for (std::size_t a = 0; a < v.extent; ++a) {
          const std::size_t at = base + a * v.inner;
          pg[0][at] += (og[at] - py[at] * dot) / norm;
        }
      }
    }
  });
}

Tensor random_normal(Shape shape, double stddev, std::mt19937_64& rng, bool requires_grad) {
  std::normal_distribution<double> dist(0.0, stddev);
  std::vector<double> data(shape_numel(shape));
  for (double& v : data) v = dist(rng);
  return Tensor::from_data(std::move(shape), std::move(data), requires_grad);
}

Tensor random_uniform(Shape shape, double lo, double hi, std::mt19937_64& rng, bool requires_grad) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> data(shape_numel(shape));
  for (double& v : data) v = dist(rng);
  return Tensor::from_data(std::move(shape), std::move(data), requires_grad);
}

}  // namespace cmsa
