/*
 * Copyright 2026 The attrcam Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "attrcam/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#include "attrcam/errors.hpp"

namespace attrcam::ops {
namespace {

void require_rank(const Tensor& t, std::size_t rank, const char* op, const char* what) {
  if (t.rank() != rank) {
    throw DimensionError(std::string(op) + ": " + what + " must have rank " + std::to_string(rank) +
                         ", got " + shape_string(t.shape()));
  }
}

// Output positions o in [lo, hi) whose input index o*stride + offset lies in [0, extent).
struct Range {
  std::size_t lo, hi;
};

Range valid_outputs(long offset, long stride, long extent, long out_extent) {
  long lo = 0;
  if (offset < 0) lo = (-offset + stride - 1) / stride;
  long hi = offset >= extent ? 0 : (extent - 1 - offset) / stride + 1;
  hi = std::min(hi, out_extent);
  if (hi < lo) hi = lo;
  return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
}

struct ConvGeometry {
  std::size_t n, c, h, w, k, kh, kw, oh, ow;
  long stride, pad;
};

ConvGeometry conv_geometry(const Tensor& in, const Tensor& ker, const Tensor& bias, int stride,
                           int padding) {
  require_rank(in, 4, "conv2d", "input");
  require_rank(ker, 4, "conv2d", "kernel");
  require_rank(bias, 1, "conv2d", "bias");
  if (stride < 1) throw ConfigError("conv2d: stride must be >= 1");
  if (padding < 0) throw ConfigError("conv2d: padding must be >= 0");
  ConvGeometry g{};
  g.n = in.dim(0);
  g.c = in.dim(1);
  g.h = in.dim(2);
  g.w = in.dim(3);
  g.k = ker.dim(0);
  g.kh = ker.dim(2);
  g.kw = ker.dim(3);
  g.stride = stride;
  g.pad = padding;
  if (ker.dim(1) != g.c) {
    throw DimensionError("conv2d: kernel expects " + std::to_string(ker.dim(1)) +
                         " input channels, input has " + std::to_string(g.c));
  }
  if (bias.dim(0) != g.k) throw DimensionError("conv2d: bias length must equal output channels");
  const std::size_t ph = g.h + 2 * static_cast<std::size_t>(padding);
  const std::size_t pw = g.w + 2 * static_cast<std::size_t>(padding);
  if (g.kh > ph || g.kw > pw) throw DimensionError("conv2d: kernel larger than padded input");
  if ((ph - g.kh) % static_cast<std::size_t>(stride) || (pw - g.kw) % static_cast<std::size_t>(stride)) {
    throw ConfigError("conv2d: stride does not divide the padded extent exactly");
  }
  g.oh = (ph - g.kh) / static_cast<std::size_t>(stride) + 1;
  g.ow = (pw - g.kw) / static_cast<std::size_t>(stride) + 1;
  return g;
}

// Visits every (output position, input position) pair of one kernel tap.
template <typename F>
void for_each_tap(const ConvGeometry& g, std::size_t ky, std::size_t kx, F f) {
  const long oy_off = static_cast<long>(ky) - g.pad;
  const long ox_off = static_cast<long>(kx) - g.pad;
  const Range ry = valid_outputs(oy_off, g.stride, static_cast<long>(g.h), static_cast<long>(g.oh));
  const Range rx = valid_outputs(ox_off, g.stride, static_cast<long>(g.w), static_cast<long>(g.ow));
  for (std::size_t oy = ry.lo; oy < ry.hi; ++oy) {
    const std::size_t iy = static_cast<std::size_t>(static_cast<long>(oy) * g.stride + oy_off);
    f(oy, iy, rx, ox_off);
  }
}

// Unrolls one image [C, H, W] into col[C * kh * kw, oh * ow]; taps that
// fall into the padding stay 0.
void im2col(const ConvGeometry& g, const double* x, std::vector<double>& col) {
  const std::size_t plane = g.oh * g.ow;
  col.assign(g.c * g.kh * g.kw * plane, 0.0);
  for (std::size_t c = 0; c < g.c; ++c) {
    const double* xc = x + c * g.h * g.w;
    for (std::size_t ky = 0; ky < g.kh; ++ky) {
      for (std::size_t kx = 0; kx < g.kw; ++kx) {
        double* row = col.data() + ((c * g.kh + ky) * g.kw + kx) * plane;
        for_each_tap(g, ky, kx, [&](std::size_t oy, std::size_t iy, Range rx, long ox_off) {
          double* dst = row + oy * g.ow;
          const double* src = xc + iy * g.w;
          for (std::size_t ox = rx.lo; ox < rx.hi; ++ox) dst[ox] = src[static_cast<long>(ox) * g.stride + ox_off];
        });
      }
    }
  }
}

// Adjoint of im2col: scatters col back onto dx [C, H, W].
void col2im(const ConvGeometry& g, const std::vector<double>& col, double* dx) {
  const std::size_t plane = g.oh * g.ow;
  for (std::size_t c = 0; c < g.c; ++c) {
    double* dc = dx + c * g.h * g.w;
    for (std::size_t ky = 0; ky < g.kh; ++ky) {
      for (std::size_t kx = 0; kx < g.kw; ++kx) {
        const double* row = col.data() + ((c * g.kh + ky) * g.kw + kx) * plane;
        for_each_tap(g, ky, kx, [&](std::size_t oy, std::size_t iy, Range rx, long ox_off) {
          const double* src = row + oy * g.ow;
          double* dst = dc + iy * g.w;
          for (std::size_t ox = rx.lo; ox < rx.hi; ++ox) dst[static_cast<long>(ox) * g.stride + ox_off] += src[ox];
        });
      }
    }
  }
}

#if defined(__GNUC__)
using Lane2 = double __attribute__((vector_size(16)));

inline Lane2 load2(const double* p) {
  Lane2 v;
  std::memcpy(&v, p, sizeof v);
  return v;
}

inline void store2(double* p, Lane2 v) { std::memcpy(p, &v, sizeof v); }
#endif

// Fixed-order dot product with four partial sums.
double dot(const double* a, const double* b, std::size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

// out[j] += dot(a, b + j * n, n) for j < 4, sharing the loads of a. Each sum
// uses the same partial sums and order as dot().
void dot4(const double* a, const double* b, std::size_t n, double* out) {
#if defined(__GNUC__)
  Lane2 lo[4] = {}, hi[4] = {};
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const Lane2 al = load2(a + i);
    const Lane2 ah = load2(a + i + 2);
    for (std::size_t j = 0; j < 4; ++j) {
      lo[j] += al * load2(b + j * n + i);
      hi[j] += ah * load2(b + j * n + i + 2);
    }
  }
  for (std::size_t j = 0; j < 4; ++j) {
    double s0 = lo[j][0];
    for (std::size_t t = i; t < n; ++t) s0 += a[t] * b[j * n + t];
    out[j] += (s0 + lo[j][1]) + (hi[j][0] + hi[j][1]);
  }
#else
  for (std::size_t j = 0; j < 4; ++j) out[j] += dot(a, b + j * n, n);
#endif
}

// out[p] = init[p] + sum over r of w[r * w_stride] * rows[r * plane + p], for
// one output row. Accumulates in registers, eight lanes at a time, adding the
// terms in increasing r so every element matches the plain loop bit for bit.
void accumulate_rows(double* out, const double* init, const double* w, std::size_t w_stride,
                     const double* rows, std::size_t count, std::size_t plane) {
  std::size_t p = 0;
#if defined(__GNUC__)
  for (; p + 8 <= plane; p += 8) {
    Lane2 a0{0.0, 0.0}, a1{0.0, 0.0}, a2{0.0, 0.0}, a3{0.0, 0.0};
    if (init) {
      a0 = load2(init + p);
      a1 = load2(init + p + 2);
      a2 = load2(init + p + 4);
      a3 = load2(init + p + 6);
    }
    for (std::size_t r = 0; r < count; ++r) {
      const double wv = w[r * w_stride];
      const Lane2 wl{wv, wv};
      const double* src = rows + r * plane + p;
      a0 += wl * load2(src);
      a1 += wl * load2(src + 2);
      a2 += wl * load2(src + 4);
      a3 += wl * load2(src + 6);
    }
    store2(out + p, a0);
    store2(out + p + 2, a1);
    store2(out + p + 4, a2);
    store2(out + p + 6, a3);
  }
#endif
  for (; p < plane; ++p) {
    double acc = init ? init[p] : 0.0;
    for (std::size_t r = 0; r < count; ++r) acc += w[r * w_stride] * rows[r * plane + p];
    out[p] = acc;
  }
}

}  // namespace

Var conv2d(Var input, Var kernel, Var bias, int stride, int padding) {
  const Tensor& in = input.value();
  const Tensor& ker = kernel.value();
  const Tensor& b = bias.value();
  const ConvGeometry g = conv_geometry(in, ker, b, stride, padding);

  Tensor out(Shape{g.n, g.k, g.oh, g.ow});
  const std::size_t plane = g.oh * g.ow;
  const std::size_t taps = g.c * g.kh * g.kw;
  std::vector<double> col, bias_row(plane);
  for (std::size_t n = 0; n < g.n; ++n) {
    im2col(g, in.data() + n * g.c * g.h * g.w, col);
    for (std::size_t k = 0; k < g.k; ++k) {
      std::fill(bias_row.begin(), bias_row.end(), b[k]);
      accumulate_rows(out.data() + (n * g.k + k) * plane, bias_row.data(), ker.data() + k * taps, 1,
                      col.data(), taps, plane);
    }
  }

  return input.graph->record(
      "conv2d", std::move(out), {input, kernel, bias}, [g](const BackwardContext& ctx) {
        const Tensor& x = *ctx.inputs[0];
        const Tensor& ker = *ctx.inputs[1];
        const Tensor& dy = ctx.output_grad;
        Tensor* dx = ctx.input_grads[0];
        Tensor* dk = ctx.input_grads[1];
        Tensor* db = ctx.input_grads[2];
        const std::size_t plane = g.oh * g.ow;
        const std::size_t taps = g.c * g.kh * g.kw;
        const std::size_t in_size = g.c * g.h * g.w;
        std::vector<double> col, dcol;
        for (std::size_t n = 0; n < g.n; ++n) {
          const double* go = dy.data() + n * g.k * plane;
          if (db) {
            for (std::size_t k = 0; k < g.k; ++k) {
              double s = 0.0;
              for (std::size_t p = 0; p < plane; ++p) s += go[k * plane + p];
              (*db)[k] += s;
            }
          }
          if (dk) {
            im2col(g, x.data() + n * in_size, col);
            for (std::size_t k = 0; k < g.k; ++k) {
              std::size_t r = 0;
              for (; r + 4 <= taps; r += 4) {
                dot4(go + k * plane, col.data() + r * plane, plane, dk->data() + k * taps + r);
              }
              for (; r < taps; ++r) (*dk)[k * taps + r] += dot(go + k * plane, col.data() + r * plane, plane);
            }
          }
          if (dx) {
            dcol.resize(taps * plane);
            for (std::size_t r = 0; r < taps; ++r) {
              accumulate_rows(dcol.data() + r * plane, nullptr, ker.data() + r, taps, go, g.k, plane);
            }
            col2im(g, dcol, dx->data() + n * in_size);
          }
        }
      });
}

Var relu(Var x) {
  Tensor out = x.value();
  for (auto& v : out.values()) v = v > 0.0 ? v : 0.0;
  return x.graph->record("relu", std::move(out), {x}, [](const BackwardContext& ctx) {
    if (!ctx.input_grads[0]) return;
    const Tensor& in = *ctx.inputs[0];
    Tensor& gx = *ctx.input_grads[0];
    for (std::size_t i = 0; i < in.size(); ++i) {
      if (in[i] > 0.0) gx[i] += ctx.output_grad[i];
    }
  });
}

Var avg_pool2d(Var x, int k) {
  const Tensor& in = x.value();
  require_rank(in, 4, "avg_pool2d", "input");
  if (k < 1) throw ConfigError("avg_pool2d: window must be >= 1");
  const std::size_t kk = static_cast<std::size_t>(k);
  const std::size_t n = in.dim(0), c = in.dim(1), h = in.dim(2), w = in.dim(3);
  if (h % kk || w % kk) {
    throw ConfigError("avg_pool2d: window " + std::to_string(k) + " does not divide " +
                      shape_string(in.shape()));
  }
  const std::size_t oh = h / kk, ow = w / kk;
  const double area = static_cast<double>(kk * kk);
  Tensor out(Shape{n, c, oh, ow});
  for (std::size_t p = 0; p < n * c; ++p) {
    const double* src = in.data() + p * h * w;
    double* dst = out.data() + p * oh * ow;
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        double s = 0.0;
        for (std::size_t dy = 0; dy < kk; ++dy) {
          for (std::size_t dx = 0; dx < kk; ++dx) s += src[(oy * kk + dy) * w + ox * kk + dx];
        }
        dst[oy * ow + ox] = s / area;
      }
    }
  }
  return x.graph->record("avg_pool2d", std::move(out), {x}, [=](const BackwardContext& ctx) {
    if (!ctx.input_grads[0]) return;
    Tensor& gx = *ctx.input_grads[0];
    for (std::size_t p = 0; p < n * c; ++p) {
      const double* go = ctx.output_grad.data() + p * oh * ow;
      double* gi = gx.data() + p * h * w;
      for (std::size_t iy = 0; iy < h; ++iy) {
        for (std::size_t ix = 0; ix < w; ++ix) gi[iy * w + ix] += go[(iy / kk) * ow + ix / kk] / area;
      }
    }
  });
}

Var global_avg_pool(Var x) {
  const Tensor& in = x.value();
  require_rank(in, 4, "global_avg_pool", "input");
  if (in.dim(2) != in.dim(3)) throw DimensionError("global_avg_pool: feature map must be square");
  const Var pooled = avg_pool2d(x, static_cast<int>(in.dim(2)));
  return reshape(pooled, Shape{in.dim(0), in.dim(1)});
}

Var dense(Var input, Var weight, Var bias) {
  const Tensor& x = input.value();
  const Tensor& wt = weight.value();
  const Tensor& b = bias.value();
  require_rank(x, 2, "dense", "input");
  require_rank(wt, 2, "dense", "weight");
  require_rank(b, 1, "dense", "bias");
  const std::size_t n = x.dim(0), d = x.dim(1), o = wt.dim(0);
  if (wt.dim(1) != d) {
    throw DimensionError("dense: weight " + shape_string(wt.shape()) + " incompatible with input " +
                         shape_string(x.shape()));
  }
  if (b.dim(0) != o) throw DimensionError("dense: bias length must equal output size");
  Tensor out(Shape{n, o});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < o; ++j) {
      double s = 0.0;
      for (std::size_t q = 0; q < d; ++q) s += wt[j * d + q] * x[i * d + q];
      out[i * o + j] = s + b[j];
    }
  }
  return input.graph->record("dense", std::move(out), {input, weight, bias}, [=](const BackwardContext& ctx) {
    const Tensor& x = *ctx.inputs[0];
    const Tensor& wt = *ctx.inputs[1];
    const Tensor& gy = ctx.output_grad;
    Tensor* gx = ctx.input_grads[0];
    Tensor* gw = ctx.input_grads[1];
    Tensor* gb = ctx.input_grads[2];
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < o; ++j) {
        const double g = gy[i * o + j];
        if (gb) (*gb)[j] += g;
        for (std::size_t q = 0; q < d; ++q) {
          if (gx) (*gx)[i * d + q] += g * wt[j * d + q];
          if (gw) (*gw)[j * d + q] += g * x[i * d + q];
        }
      }
    }
  });
}

double logistic(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

Var logistic(Var z) {
  Tensor out = z.value();
  for (auto& v : out.values()) v = logistic(v);
  return z.graph->record("logistic", std::move(out), {z}, [](const BackwardContext& ctx) {
    if (!ctx.input_grads[0]) return;
    Tensor& gz = *ctx.input_grads[0];
    for (std::size_t i = 0; i < gz.size(); ++i) {
      const double y = ctx.output[i];
      gz[i] += ctx.output_grad[i] * y * (1.0 - y);
    }
  });
}

Var add(Var a, Var b) {
  Tensor out = a.value() + b.value();
  return a.graph->record("add", std::move(out), {a, b}, [](const BackwardContext& ctx) {
    for (Tensor* g : ctx.input_grads) {
      if (!g) continue;
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += ctx.output_grad[i];
    }
  });
}

Var mul(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.shape() != bv.shape()) {
    throw DimensionError("mul: shape mismatch " + shape_string(av.shape()) + " vs " + shape_string(bv.shape()));
  }
  Tensor out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  return a.graph->record("mul", std::move(out), {a, b}, [](const BackwardContext& ctx) {
    const Tensor& av = *ctx.inputs[0];
    const Tensor& bv = *ctx.inputs[1];
    for (std::size_t i = 0; i < av.size(); ++i) {
      if (ctx.input_grads[0]) (*ctx.input_grads[0])[i] += ctx.output_grad[i] * bv[i];
      if (ctx.input_grads[1]) (*ctx.input_grads[1])[i] += ctx.output_grad[i] * av[i];
    }
  });
}

Var scale(Var x, double factor) {
  Tensor out = x.value() * factor;
  return x.graph->record("scale", std::move(out), {x}, [factor](const BackwardContext& ctx) {
    if (!ctx.input_grads[0]) return;
    Tensor& g = *ctx.input_grads[0];
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += factor * ctx.output_grad[i];
  });
}

Var square(Var x) {
  Tensor out = x.value();
  for (auto& v : out.values()) v *= v;
  return x.graph->record("square", std::move(out), {x}, [](const BackwardContext& ctx) {
    if (!ctx.input_grads[0]) return;
    Tensor& g = *ctx.input_grads[0];
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += 2.0 * (*ctx.inputs[0])[i] * ctx.output_grad[i];
  });
}

Var sum(Var x) {
  Tensor out = Tensor::scalar(x.value().sum());
  return x.graph->record("sum", std::move(out), {x}, [](const BackwardContext& ctx) {
    if (!ctx.input_grads[0]) return;
    for (auto& v : ctx.input_grads[0]->values()) v += ctx.output_grad[0];
  });
}

Var reshape(Var x, Shape shape) {
  Tensor out = x.value().reshaped(std::move(shape));
  return x.graph->record("reshape", std::move(out), {x}, [](const BackwardContext& ctx) {
    if (!ctx.input_grads[0]) return;
    Tensor& g = *ctx.input_grads[0];
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += ctx.output_grad[i];
  });
}

namespace {

struct Sample1d {
  std::size_t i0, i1;
  double frac;
};

Sample1d source_coordinate(std::size_t dst, std::size_t src_extent, std::size_t dst_extent) {
  const double scale = static_cast<double>(src_extent) / static_cast<double>(dst_extent);
  double s = (static_cast<double>(dst) + 0.5) * scale - 0.5;
  s = std::clamp(s, 0.0, static_cast<double>(src_extent - 1));
  const auto i0 = static_cast<std::size_t>(std::floor(s));
  const std::size_t i1 = std::min(i0 + 1, src_extent - 1);
  return {i0, i1, s - static_cast<double>(i0)};
}

// a + f*(b - a) keeps constant inputs exact; the clamp keeps the result in [min, max].
double lerp(double a, double b, double f) {
  const double v = a + f * (b - a);
  return std::clamp(v, std::min(a, b), std::max(a, b));
}

}  // namespace

Tensor upsample_bilinear(const Tensor& map, std::size_t target_h, std::size_t target_w) {
  require_rank(map, 2, "upsample_bilinear", "map");
  if (target_h < 1 || target_w < 1) throw ConfigError("upsample_bilinear: target size must be >= 1");
  const std::size_t h = map.dim(0), w = map.dim(1);
  if (h == target_h && w == target_w) return map;
  Tensor out(Shape{target_h, target_w});
  for (std::size_t y = 0; y < target_h; ++y) {
    const Sample1d sy = source_coordinate(y, h, target_h);
    for (std::size_t x = 0; x < target_w; ++x) {
      const Sample1d sx = source_coordinate(x, w, target_w);
      const double top = lerp(map[sy.i0 * w + sx.i0], map[sy.i0 * w + sx.i1], sx.frac);
      const double bottom = lerp(map[sy.i1 * w + sx.i0], map[sy.i1 * w + sx.i1], sx.frac);
      out[y * target_w + x] = lerp(top, bottom, sy.frac);
    }
  }
  return out;
}

}  // namespace attrcam::ops
