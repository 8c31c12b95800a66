#include "cap/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cap {

namespace kernels {

void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n) {
  // Four rows of c share each streamed row of b.
  std::size_t i = 0;
  for (; i + 4 <= m; i += 4) {
    double* c0 = c + i * n;
    double* c1 = c0 + n;
    double* c2 = c1 + n;
    double* c3 = c2 + n;
    const double* a0 = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double v0 = a0[p], v1 = a0[k + p], v2 = a0[2 * k + p], v3 = a0[3 * k + p];
      const double* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) {
        const double bv = brow[j];
        c0[j] += v0 * bv;
        c1[j] += v1 * bv;
        c2[j] += v2 * bv;
        c3[j] += v3 * bv;
      }
    }
  }
  for (; i < m; ++i) {
    double* crow = c + i * n;
    const double* arow = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      const double* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void gemm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n) {
  std::vector<double> at(m * k);
  for (std::size_t p = 0; p < k; ++p)
    for (std::size_t i = 0; i < m; ++i) at[i * k + p] = a[p * m + i];
  gemm_nn(at.data(), b, c, m, k, n);
}

void gemm_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n) {
  std::vector<double> bt(k * n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t p = 0; p < k; ++p) bt[p * n + j] = b[j * k + p];
  gemm_nn(a, bt.data(), c, m, k, n);
}

}  // namespace kernels

namespace {

void require_rank(const Tensor& t, std::size_t rank, const char* op) {
  if (t.rank() != rank)
    throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) +
                         ", got " + to_string(t.shape()));
}

void axpy(double* y, const double* x, std::size_t n, double alpha = 1.0) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

// Number of leading "outer" repetitions when b broadcasts over a's trailing axes.
std::size_t broadcast_outer(const Shape& a, const Shape& b, const char* op) {
  if (a == b) return 1;
  const std::size_t nb = num_elements(b);
  if (nb == 1) return num_elements(a);
  if (b.size() <= a.size() && std::equal(b.rbegin(), b.rend(), a.rbegin()))
    return num_elements(a) / nb;
  throw DimensionError(std::string(op) + ": cannot broadcast " + to_string(b) + " onto " +
                       to_string(a));
}

}  // namespace

Var matmul(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_rank(av, 2, "matmul");
  require_rank(bv, 2, "matmul");
  const std::size_t m = av.dim(0), k = av.dim(1), n = bv.dim(1);
  if (bv.dim(0) != k)
    throw DimensionError("matmul: inner dimensions disagree, " + to_string(av.shape()) +
                         " x " + to_string(bv.shape()));
  Tensor out({m, n});
  kernels::gemm_nn(av.data().data(), bv.data().data(), out.data().data(), m, k, n);
  Var ops[] = {a, b};
  return a.tape().record(std::move(out), ops, [m, k, n](const GradContext& ctx) {
    const double* g = ctx.grad_output.data().data();
    if (ctx.grads[0])  // da = g . b^T
      kernels::gemm_nt(g, ctx.inputs[1]->data().data(), ctx.grads[0]->data().data(), m, n, k);
    if (ctx.grads[1])  // db = a^T . g
      kernels::gemm_tn(ctx.inputs[0]->data().data(), g, ctx.grads[1]->data().data(), k, m, n);
  });
}

Var transpose(Var a) {
  const Tensor& av = a.value();
  require_rank(av, 2, "transpose");
  const std::size_t m = av.dim(0), n = av.dim(1);
  Tensor out({n, m});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = av[i * n + j];
  return a.tape().record(std::move(out), {a}, [m, n](const GradContext& ctx) {
    Tensor& ga = *ctx.grads[0];
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += ctx.grad_output[j * m + i];
  });
}

Var elementwise(Var x, Unary kind) {
  const Tensor& xv = x.value();
  Tensor out(xv.shape());
  const std::size_t n = xv.size();
  switch (kind) {
    case Unary::tanh:
      for (std::size_t i = 0; i < n; ++i) out[i] = std::tanh(xv[i]);
      break;
    case Unary::sigmoid:
      for (std::size_t i = 0; i < n; ++i) out[i] = 1.0 / (1.0 + std::exp(-xv[i]));
      break;
    case Unary::relu:
      for (std::size_t i = 0; i < n; ++i) out[i] = xv[i] > 0.0 ? xv[i] : 0.0;
      break;
  }
  return x.tape().record(std::move(out), {x}, [kind, n](const GradContext& ctx) {
    const Tensor& y = ctx.output;
    const Tensor& g = ctx.grad_output;
    Tensor& gx = *ctx.grads[0];
    switch (kind) {
      case Unary::tanh:
        for (std::size_t i = 0; i < n; ++i) gx[i] += g[i] * (1.0 - y[i] * y[i]);
        break;
      case Unary::sigmoid:
        for (std::size_t i = 0; i < n; ++i) gx[i] += g[i] * y[i] * (1.0 - y[i]);
        break;
      case Unary::relu:
        for (std::size_t i = 0; i < n; ++i)
          if ((*ctx.inputs[0])[i] > 0.0) gx[i] += g[i];
        break;
    }
  });
}

Var tanh(Var x) { return elementwise(x, Unary::tanh); }
Var sigmoid(Var x) { return elementwise(x, Unary::sigmoid); }
Var relu(Var x) { return elementwise(x, Unary::relu); }

Var log(Var x) {
  const Tensor& xv = x.value();
  Tensor out(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) {
    if (!(xv[i] > 0.0)) throw ContractViolation("log of a non-positive value");
    out[i] = std::log(xv[i]);
  }
  return x.tape().record(std::move(out), {x}, [](const GradContext& ctx) {
    const Tensor& xin = *ctx.inputs[0];
    Tensor& gx = *ctx.grads[0];
    for (std::size_t i = 0; i < xin.size(); ++i) gx[i] += ctx.grad_output[i] / xin[i];
  });
}

Var elementwise(Var a, Var b, Binary kind) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const char* name = kind == Binary::add ? "add" : "mul";
  const std::size_t outer = broadcast_outer(av.shape(), bv.shape(), name);
  const std::size_t nb = bv.size();
  Tensor out = av;
  for (std::size_t o = 0; o < outer; ++o) {
    double* dst = out.data().data() + o * nb;
    const double* src = bv.data().data();
    if (kind == Binary::add)
      for (std::size_t j = 0; j < nb; ++j) dst[j] += src[j];
    else
      for (std::size_t j = 0; j < nb; ++j) dst[j] *= src[j];
  }
  Var ops[] = {a, b};
  return a.tape().record(std::move(out), ops, [kind, outer, nb](const GradContext& ctx) {
    const double* g = ctx.grad_output.data().data();
    const double* av = ctx.inputs[0]->data().data();
    const double* bv = ctx.inputs[1]->data().data();
    if (Tensor* ga = ctx.grads[0]) {
      double* d = ga->data().data();
      for (std::size_t o = 0; o < outer; ++o) {
        if (kind == Binary::add)
          axpy(d + o * nb, g + o * nb, nb);
        else
          for (std::size_t j = 0; j < nb; ++j) d[o * nb + j] += g[o * nb + j] * bv[j];
      }
    }
    if (Tensor* gb = ctx.grads[1]) {
      double* d = gb->data().data();
      for (std::size_t o = 0; o < outer; ++o) {
        if (kind == Binary::add)
          axpy(d, g + o * nb, nb);
        else
          for (std::size_t j = 0; j < nb; ++j) d[j] += g[o * nb + j] * av[o * nb + j];
      }
    }
  });
}

Var add(Var a, Var b) { return elementwise(a, b, Binary::add); }
Var mul(Var a, Var b) { return elementwise(a, b, Binary::mul); }
Var sub(Var a, Var b) { return add(a, scale(b, -1.0)); }

Var scale(Var x, double factor) {
  Tensor out = x.value();
  for (auto& v : out.data()) v *= factor;
  return x.tape().record(std::move(out), {x}, [factor](const GradContext& ctx) {
    axpy(ctx.grads[0]->data().data(), ctx.grad_output.data().data(), ctx.grad_output.size(),
         factor);
  });
}

Var softmax(Var x, std::size_t axis) {
  const Tensor& xv = x.value();
  if (axis >= xv.rank())
    throw DimensionError("softmax: axis " + std::to_string(axis) + " out of range for " +
                         to_string(xv.shape()));
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= xv.dim(i);
  for (std::size_t i = axis + 1; i < xv.rank(); ++i) inner *= xv.dim(i);
  const std::size_t n = xv.dim(axis);
  Tensor out(xv.shape());
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t in = 0; in < inner; ++in) {
      const std::size_t base = o * n * inner + in;
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < n; ++j) mx = std::max(mx, xv[base + j * inner]);
      double z = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double e = std::exp(xv[base + j * inner] - mx);
        out[base + j * inner] = e;
        z += e;
      }
      for (std::size_t j = 0; j < n; ++j) out[base + j * inner] /= z;
    }
  }
  return x.tape().record(std::move(out), {x}, [outer, inner, n](const GradContext& ctx) {
    const Tensor& y = ctx.output;
    const Tensor& g = ctx.grad_output;
    Tensor& gx = *ctx.grads[0];
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t in = 0; in < inner; ++in) {
        const std::size_t base = o * n * inner + in;
        double dot = 0.0;
        for (std::size_t j = 0; j < n; ++j) dot += g[base + j * inner] * y[base + j * inner];
        for (std::size_t j = 0; j < n; ++j) {
          const std::size_t idx = base + j * inner;
          gx[idx] += y[idx] * (g[idx] - dot);
        }
      }
    }
  });
}

Var sum(Var x) {
  double s = 0.0;
  for (double v : x.value().data()) s += v;
  return x.tape().record(Tensor::scalar(s), {x}, [](const GradContext& ctx) {
    const double g = ctx.grad_output[0];
    for (auto& v : ctx.grads[0]->data()) v += g;
  });
}

Var mean(Var x) { return scale(sum(x), 1.0 / static_cast<double>(x.size())); }

Var mean_axis(Var x, std::size_t axis) {
  const Tensor& xv = x.value();
  if (axis >= xv.rank())
    throw DimensionError("mean_axis: axis out of range for " + to_string(xv.shape()));
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= xv.dim(i);
  for (std::size_t i = axis + 1; i < xv.rank(); ++i) inner *= xv.dim(i);
  const std::size_t n = xv.dim(axis);
  Shape shape;
  for (std::size_t i = 0; i < xv.rank(); ++i)
    if (i != axis) shape.push_back(xv.dim(i));
  if (shape.empty()) shape.push_back(1);
  Tensor out(shape);
  const double inv = 1.0 / static_cast<double>(n);
  for (std::size_t o = 0; o < outer; ++o) {
    double* dst = out.data().data() + o * inner;
    for (std::size_t j = 0; j < n; ++j) axpy(dst, xv.data().data() + (o * n + j) * inner, inner);
    for (std::size_t in = 0; in < inner; ++in) dst[in] *= inv;
  }
  return x.tape().record(std::move(out), {x}, [outer, inner, n, inv](const GradContext& ctx) {
    double* gx = ctx.grads[0]->data().data();
    const double* g = ctx.grad_output.data().data();
    for (std::size_t o = 0; o < outer; ++o)
      for (std::size_t j = 0; j < n; ++j) axpy(gx + (o * n + j) * inner, g + o * inner, inner, inv);
  });
}

Var reshape(Var x, Shape shape) {
  Tensor out = x.value().reshaped(std::move(shape));
  return x.tape().record(std::move(out), {x}, [](const GradContext& ctx) {
    axpy(ctx.grads[0]->data().data(), ctx.grad_output.data().data(), ctx.grad_output.size());
  });
}

Var global_avg_pool(Var x) {
  const Tensor& xv = x.value();
  require_rank(xv, 3, "global_avg_pool");
  const std::size_t c = xv.dim(2);
  return mean_axis(reshape(x, {xv.dim(0) * xv.dim(1), c}), 0);
}

Var conv1x1(Var x, Var w, Var b) {
  const Tensor& xv = x.value();
  require_rank(xv, 3, "conv1x1");
  require_rank(w.value(), 2, "conv1x1");
  const std::size_t h = xv.dim(0), wd = xv.dim(1), cin = xv.dim(2);
  if (w.value().dim(0) != cin)
    throw DimensionError("conv1x1: input channels " + std::to_string(cin) +
                         " do not match weight " + to_string(w.value().shape()));
  const std::size_t cout = w.value().dim(1);
  if (b.value().shape() != Shape{cout})
    throw DimensionError("conv1x1: bias " + to_string(b.value().shape()) + " for " +
                         std::to_string(cout) + " output channels");
  Var flat = reshape(x, {h * wd, cin});
  return reshape(add(matmul(flat, w), b), {h, wd, cout});
}

Shape conv3x3_output_shape(const Shape& input, std::size_t out_channels, std::size_t stride,
                           Padding padding) {
  if (input.size() != 3) throw DimensionError("conv3x3: expected rank-3 input");
  if (stride == 0) throw ContractViolation("conv3x3: stride must be >= 1");
  const std::size_t pad = padding == Padding::same ? 1 : 0;
  const std::size_t h = input[0], w = input[1];
  if (h + 2 * pad < 3 || w + 2 * pad < 3)
    throw DimensionError("conv3x3: input " + to_string(input) + " smaller than the 3x3 kernel");
  return {(h + 2 * pad - 3) / stride + 1, (w + 2 * pad - 3) / stride + 1, out_channels};
}

namespace {

struct ConvGeometry {
  std::size_t h, w, cin, oh, ow, stride;
  long pad;
};

// Patch matrix [oh*ow x 9*cin]; taps outside the input stay zero.
std::vector<double> im2col(const double* in, const ConvGeometry& g) {
  const std::size_t cols = 9 * g.cin;
  std::vector<double> out(g.oh * g.ow * cols, 0.0);
  for (std::size_t oy = 0; oy < g.oh; ++oy)
    for (std::size_t ox = 0; ox < g.ow; ++ox) {
      double* dst = out.data() + (oy * g.ow + ox) * cols;
      for (long ky = 0; ky < 3; ++ky) {
        const long iy = static_cast<long>(oy * g.stride) + ky - g.pad;
        if (iy < 0 || iy >= static_cast<long>(g.h)) continue;
        for (long kx = 0; kx < 3; ++kx) {
          const long ix = static_cast<long>(ox * g.stride) + kx - g.pad;
          if (ix < 0 || ix >= static_cast<long>(g.w)) continue;
          std::copy_n(in + (iy * g.w + ix) * g.cin, g.cin, dst + (ky * 3 + kx) * g.cin);
        }
      }
    }
  return out;
}

// Scatter-add of a patch-matrix gradient back onto the input layout.
void col2im_add(const double* cols_grad, const ConvGeometry& g, double* in_grad) {
  const std::size_t cols = 9 * g.cin;
  for (std::size_t oy = 0; oy < g.oh; ++oy)
    for (std::size_t ox = 0; ox < g.ow; ++ox) {
      const double* src = cols_grad + (oy * g.ow + ox) * cols;
      for (long ky = 0; ky < 3; ++ky) {
        const long iy = static_cast<long>(oy * g.stride) + ky - g.pad;
        if (iy < 0 || iy >= static_cast<long>(g.h)) continue;
        for (long kx = 0; kx < 3; ++kx) {
          const long ix = static_cast<long>(ox * g.stride) + kx - g.pad;
          if (ix < 0 || ix >= static_cast<long>(g.w)) continue;
          axpy(in_grad + (iy * g.w + ix) * g.cin, src + (ky * 3 + kx) * g.cin, g.cin);
        }
      }
    }
}

}  // namespace

Var conv3x3(Var x, Var w, Var b, std::size_t stride, Padding padding) {
  const Tensor& xv = x.value();
  const Tensor& wv = w.value();
  require_rank(xv, 3, "conv3x3");
  require_rank(wv, 4, "conv3x3");
  const std::size_t cin = xv.dim(2);
  if (wv.dim(0) != 3 || wv.dim(1) != 3 || wv.dim(2) != cin)
    throw DimensionError("conv3x3: weight " + to_string(wv.shape()) + " does not fit input " +
                         to_string(xv.shape()));
  const std::size_t cout = wv.dim(3);
  if (b.value().shape() != Shape{cout})
    throw DimensionError("conv3x3: bias " + to_string(b.value().shape()) + " for " +
                         std::to_string(cout) + " output channels");
  const Shape os = conv3x3_output_shape(xv.shape(), cout, stride, padding);
  const ConvGeometry geo{xv.dim(0), xv.dim(1), cin, os[0], os[1], stride,
                         padding == Padding::same ? 1L : 0L};
  const std::size_t pixels = geo.oh * geo.ow;

  Tensor out(os);
  const double* bias = b.value().data().data();
  for (std::size_t p = 0; p < pixels; ++p) std::copy_n(bias, cout, out.data().data() + p * cout);
  std::vector<double> cols = im2col(xv.data().data(), geo);
  kernels::gemm_nn(cols.data(), wv.data().data(), out.data().data(), pixels, 9 * cin, cout);

  Var ops[] = {x, w, b};
  const bool keep_cols = w.tape().requires_grad(w);
  return x.tape().record(
      std::move(out), ops,
      [geo, cout, pixels, cols = keep_cols ? std::move(cols) : std::vector<double>{}](
          const GradContext& ctx) {
        const double* g = ctx.grad_output.data().data();
        const std::size_t k = 9 * geo.cin;
        if (Tensor* gb = ctx.grads[2])
          for (std::size_t p = 0; p < pixels; ++p) axpy(gb->data().data(), g + p * cout, cout);
        if (Tensor* gw = ctx.grads[1]) {
          const std::vector<double> local =
              cols.empty() ? im2col(ctx.inputs[0]->data().data(), geo) : std::vector<double>{};
          const double* patches = cols.empty() ? local.data() : cols.data();
          kernels::gemm_tn(patches, g, gw->data().data(), k, pixels, cout);
        }
        if (Tensor* gx = ctx.grads[0]) {
          std::vector<double> gcols(pixels * k, 0.0);
          kernels::gemm_nt(g, ctx.inputs[1]->data().data(), gcols.data(), pixels, cout, k);
          col2im_add(gcols.data(), geo, gx->data().data());
        }
      });
}

Var max_pool2x2(Var x) {
  const Tensor& xv = x.value();
  require_rank(xv, 3, "max_pool2x2");
  const std::size_t h = xv.dim(0), w = xv.dim(1), c = xv.dim(2);
  if (h < 2 || w < 2) throw DimensionError("max_pool2x2: input " + to_string(xv.shape()) + " too small");
  const std::size_t oh = h / 2, ow = w / 2;
  Tensor out({oh, ow, c});
  std::vector<std::uint32_t> argmax(oh * ow * c);
  for (std::size_t oy = 0; oy < oh; ++oy)
    for (std::size_t ox = 0; ox < ow; ++ox)
      for (std::size_t ch = 0; ch < c; ++ch) {
        std::size_t best = ((2 * oy) * w + 2 * ox) * c + ch;
        for (std::size_t dy = 0; dy < 2; ++dy)
          for (std::size_t dx = 0; dx < 2; ++dx) {
            const std::size_t idx = ((2 * oy + dy) * w + 2 * ox + dx) * c + ch;
            if (xv[idx] > xv[best]) best = idx;
          }
        const std::size_t o = (oy * ow + ox) * c + ch;
        out[o] = xv[best];
        argmax[o] = static_cast<std::uint32_t>(best);
      }
  return x.tape().record(std::move(out), {x},
                         [argmax = std::move(argmax)](const GradContext& ctx) {
                           Tensor& gx = *ctx.grads[0];
                           for (std::size_t o = 0; o < argmax.size(); ++o)
                             gx[argmax[o]] += ctx.grad_output[o];
                         });
}

Var stack(std::span<const Var> xs) {
  Tape& tape = common_tape(xs);
  const Shape& s0 = xs.front().shape();
  Shape shape{xs.size()};
  shape.insert(shape.end(), s0.begin(), s0.end());
  const std::size_t n = num_elements(s0);
  Tensor out(shape);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i].shape() != s0)
      throw DimensionError("stack: shape " + to_string(xs[i].shape()) + " differs from " +
                           to_string(s0));
    std::copy_n(xs[i].value().data().data(), n, out.data().data() + i * n);
  }
  return tape.record(std::move(out), xs, [n](const GradContext& ctx) {
    for (std::size_t i = 0; i < ctx.grads.size(); ++i)
      if (ctx.grads[i]) axpy(ctx.grads[i]->data().data(), ctx.grad_output.data().data() + i * n, n);
  });
}

Var row(Var x, std::size_t i) {
  const Tensor& xv = x.value();
  if (xv.rank() < 2) throw DimensionError("row: needs rank >= 2, got " + to_string(xv.shape()));
  if (i >= xv.dim(0)) throw DimensionError("row: index out of range for " + to_string(xv.shape()));
  Shape shape(xv.shape().begin() + 1, xv.shape().end());
  const std::size_t n = num_elements(shape);
  Tensor out(shape, std::vector<double>(xv.data().begin() + i * n, xv.data().begin() + (i + 1) * n));
  return x.tape().record(std::move(out), {x}, [i, n](const GradContext& ctx) {
    axpy(ctx.grads[0]->data().data() + i * n, ctx.grad_output.data().data(), n);
  });
}

Var pick(Var x, std::size_t flat_index) {
  if (flat_index >= x.size())
    throw DimensionError("pick: index out of range for " + to_string(x.shape()));
  return x.tape().record(Tensor::scalar(x.value()[flat_index]), {x},
                         [flat_index](const GradContext& ctx) {
                           (*ctx.grads[0])[flat_index] += ctx.grad_output[0];
                         });
}

Var pairwise_sum(Var q, Var k) {
  const Tensor& qv = q.value();
  const Tensor& kv = k.value();
  require_rank(qv, 2, "pairwise_sum");
  require_rank(kv, 2, "pairwise_sum");
  if (qv.dim(1) != kv.dim(1))
    throw DimensionError("pairwise_sum: feature sizes differ, " + to_string(qv.shape()) + " vs " +
                         to_string(kv.shape()));
  const std::size_t r = qv.dim(0), s = kv.dim(0), d = qv.dim(1);
  Tensor out({r, s, d});
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < s; ++j) {
      double* dst = out.data().data() + (i * s + j) * d;
      const double* qa = qv.data().data() + i * d;
      const double* ka = kv.data().data() + j * d;
      for (std::size_t c = 0; c < d; ++c) dst[c] = qa[c] + ka[c];
    }
  Var ops[] = {q, k};
  return q.tape().record(std::move(out), ops, [r, s, d](const GradContext& ctx) {
    const double* g = ctx.grad_output.data().data();
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < s; ++j) {
        const double* gp = g + (i * s + j) * d;
        if (ctx.grads[0]) axpy(ctx.grads[0]->data().data() + i * d, gp, d);
        if (ctx.grads[1]) axpy(ctx.grads[1]->data().data() + j * d, gp, d);
      }
  });
}

}  // namespace cap
