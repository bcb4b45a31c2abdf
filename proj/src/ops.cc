/* Copyright 2026 The fhat Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "fhat/ops.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fhat/errors.h"

namespace fhat::ops {

namespace {

void RequireSameShape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(what) + ": " + ShapeString(a.shape()) + " vs " +
                         ShapeString(b.shape()));
  }
}

}  // namespace

Tensor MatMul(const Tensor& a, const Tensor& b) {
  RequireRank2(a, "MatMul");
  RequireRank2(b, "MatMul");
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k) {
    throw DimensionError("MatMul: inner dims differ, " + ShapeString(a.shape()) + " x " +
                         ShapeString(b.shape()));
  }
  Tensor out({m, n});
  const double* pa = a.ptr();
  const double* pb = b.ptr();
  double* po = out.ptr();
  for (std::size_t i = 0; i < m; ++i) {
    double* orow = po + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = pa[i * k + p];
      if (av == 0.0) continue;
      const double* brow = pb + p * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
  return out;
}

Tensor MatMulTransB(const Tensor& a, const Tensor& b) {
  RequireRank2(a, "MatMulTransB");
  RequireRank2(b, "MatMulTransB");
  const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
  if (b.cols() != k) throw DimensionError("MatMulTransB: inner dims differ");
  Tensor out({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a.ptr() + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const double* brow = b.ptr() + j * k;
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += arow[p] * brow[p];
      out.at(i, j) = s;
    }
  }
  return out;
}

Tensor MatMulTransA(const Tensor& a, const Tensor& b) {
  RequireRank2(a, "MatMulTransA");
  RequireRank2(b, "MatMulTransA");
  const std::size_t k = a.rows(), m = a.cols(), n = b.cols();
  if (b.rows() != k) throw DimensionError("MatMulTransA: inner dims differ");
  Tensor out({m, n});
  double* po = out.ptr();
  for (std::size_t p = 0; p < k; ++p) {
    const double* arow = a.ptr() + p * m;
    const double* brow = b.ptr() + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const double av = arow[i];
      if (av == 0.0) continue;
      double* orow = po + i * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
  return out;
}

Tensor Softmax(const Tensor& x, std::size_t axis) {
  if (axis >= x.rank()) throw DimensionError("Softmax: axis out of range");
  const Shape& s = x.shape();
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= s[i];
  for (std::size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
  const std::size_t n = s[axis];
  Tensor y(s);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t in = 0; in < inner; ++in) {
      const std::size_t base = o * n * inner + in;
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < n; ++j) mx = std::max(mx, x[base + j * inner]);
      double z = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double e = std::exp(x[base + j * inner] - mx);
        y[base + j * inner] = e;
        z += e;
      }
      for (std::size_t j = 0; j < n; ++j) y[base + j * inner] /= z;
    }
  }
  return y;
}

Tensor SoftmaxBackward(const Tensor& y, const Tensor& dy) {
  RequireSameShape(y, dy, "SoftmaxBackward");
  const std::size_t n = y.shape().back();
  const std::size_t outer = y.size() / n;
  Tensor dx(y.shape());
  for (std::size_t o = 0; o < outer; ++o) {
    const double* yr = y.ptr() + o * n;
    const double* gr = dy.ptr() + o * n;
    double dot = 0.0;
    for (std::size_t j = 0; j < n; ++j) dot += yr[j] * gr[j];
    double* dr = dx.ptr() + o * n;
    for (std::size_t j = 0; j < n; ++j) dr[j] = yr[j] * (gr[j] - dot);
  }
  return dx;
}

Tensor LogSoftmaxRows(const Tensor& x) {
  const std::size_t n = x.shape().back();
  const std::size_t outer = x.size() / n;
  Tensor y(x.shape());
  for (std::size_t o = 0; o < outer; ++o) {
    const double* xr = x.ptr() + o * n;
    double mx = *std::max_element(xr, xr + n);
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) z += std::exp(xr[j] - mx);
    const double lz = mx + std::log(z);
    for (std::size_t j = 0; j < n; ++j) y[o * n + j] = xr[j] - lz;
  }
  return y;
}

Tensor LayerNorm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                 LayerNormCache* cache) {
  RequireRank2(x, "LayerNorm");
  const std::size_t n = x.rows(), d = x.cols();
  if (d == 0) throw DimensionError("LayerNorm: d must be >= 1");
  if (gain.size() != d || bias.size() != d) throw DimensionError("LayerNorm: gain/bias size");
  Tensor y({n, d});
  Tensor normalized({n, d});
  std::vector<double> inv_std(n);
  for (std::size_t r = 0; r < n; ++r) {
    const double* xr = x.ptr() + r * d;
    double mean = 0.0;
    for (std::size_t j = 0; j < d; ++j) mean += xr[j];
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) var += (xr[j] - mean) * (xr[j] - mean);
    var /= static_cast<double>(d);
    const double is = 1.0 / std::sqrt(var + kLayerNormEps);
    inv_std[r] = is;
    for (std::size_t j = 0; j < d; ++j) {
      const double h = (xr[j] - mean) * is;
      normalized.at(r, j) = h;
      y.at(r, j) = gain[j] * h + bias[j];
    }
  }
  if (cache) {
    cache->normalized = std::move(normalized);
    cache->inv_std = std::move(inv_std);
  }
  return y;
}

void LayerNormBackward(const LayerNormCache& cache, const Tensor& gain, const Tensor& dy,
                       Tensor* dx, Tensor* dgain, Tensor* dbias) {
  const Tensor& h = cache.normalized;
  RequireSameShape(h, dy, "LayerNormBackward");
  const std::size_t n = h.rows(), d = h.cols();
  if (dx) *dx = Tensor({n, d});
  std::vector<double> dh(d);
  for (std::size_t r = 0; r < n; ++r) {
    double mean_dh = 0.0, mean_dh_h = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double g = dy.at(r, j);
      if (dgain) (*dgain)[j] += g * h.at(r, j);
      if (dbias) (*dbias)[j] += g;
      dh[j] = g * gain[j];
      mean_dh += dh[j];
      mean_dh_h += dh[j] * h.at(r, j);
    }
    if (!dx) continue;
    mean_dh /= static_cast<double>(d);
    mean_dh_h /= static_cast<double>(d);
    for (std::size_t j = 0; j < d; ++j) {
      dx->at(r, j) = cache.inv_std[r] * (dh[j] - mean_dh - h.at(r, j) * mean_dh_h);
    }
  }
}

Tensor DepthwiseConv1d(const Tensor& x, const Tensor& kernel) {
  RequireRank2(x, "DepthwiseConv1d");
  RequireRank2(kernel, "DepthwiseConv1d kernel");
  const std::size_t t_len = x.rows(), d = x.cols(), k = kernel.rows();
  if (k % 2 == 0) throw ConfigError("DepthwiseConv1d: kernel size must be odd, got " +
                                    std::to_string(k));
  if (kernel.cols() != d) throw DimensionError("DepthwiseConv1d: channel mismatch");
  const std::ptrdiff_t half = static_cast<std::ptrdiff_t>(k / 2);
  Tensor y({t_len, d});
  for (std::size_t t = 0; t < t_len; ++t) {
    double* yr = y.ptr() + t * d;
    for (std::size_t j = 0; j < k; ++j) {
      const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t + j) - half;
      if (src < 0 || src >= static_cast<std::ptrdiff_t>(t_len)) continue;
      const double* xr = x.ptr() + static_cast<std::size_t>(src) * d;
      const double* kr = kernel.ptr() + j * d;
      for (std::size_t c = 0; c < d; ++c) yr[c] += kr[c] * xr[c];
    }
  }
  return y;
}

void DepthwiseConv1dBackward(const Tensor& x, const Tensor& kernel, const Tensor& dy,
                             Tensor* dx, Tensor* dkernel) {
  const std::size_t t_len = x.rows(), d = x.cols(), k = kernel.rows();
  const std::ptrdiff_t half = static_cast<std::ptrdiff_t>(k / 2);
  if (dx) *dx = Tensor({t_len, d});
  for (std::size_t t = 0; t < t_len; ++t) {
    const double* gr = dy.ptr() + t * d;
    for (std::size_t j = 0; j < k; ++j) {
      const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t + j) - half;
      if (src < 0 || src >= static_cast<std::ptrdiff_t>(t_len)) continue;
      const std::size_t s = static_cast<std::size_t>(src);
      for (std::size_t c = 0; c < d; ++c) {
        if (dx) dx->at(s, c) += kernel.at(j, c) * gr[c];
        if (dkernel) dkernel->at(j, c) += x.at(s, c) * gr[c];
      }
    }
  }
}

Tensor Pool1d(const Tensor& x, std::size_t stride, PoolMode mode,
              std::vector<std::size_t>* argmax) {
  RequireRank2(x, "Pool1d");
  if (stride < 1) throw ConfigError("Pool1d: stride must be >= 1");
  const std::size_t t_len = x.rows(), d = x.cols();
  const std::size_t out_len = CeilDiv(t_len, stride);
  Tensor y({out_len, d});
  if (argmax) argmax->assign(out_len * d, 0);
  for (std::size_t o = 0; o < out_len; ++o) {
    const std::size_t begin = o * stride;
    const std::size_t end = std::min(t_len, begin + stride);
    for (std::size_t c = 0; c < d; ++c) {
      if (mode == PoolMode::kAvg) {
        double s = 0.0;
        for (std::size_t t = begin; t < end; ++t) s += x.at(t, c);
        y.at(o, c) = s / static_cast<double>(end - begin);
      } else {
        std::size_t best = begin;
        for (std::size_t t = begin + 1; t < end; ++t) {
          if (x.at(t, c) > x.at(best, c)) best = t;
        }
        y.at(o, c) = x.at(best, c);
        if (argmax) (*argmax)[o * d + c] = best;
      }
    }
  }
  return y;
}

Tensor Pool1dBackward(const Shape& input_shape, std::size_t stride, PoolMode mode,
                      const std::vector<std::size_t>& argmax, const Tensor& dy) {
  const std::size_t t_len = input_shape[0], d = input_shape[1];
  Tensor dx(input_shape);
  const std::size_t out_len = dy.rows();
  for (std::size_t o = 0; o < out_len; ++o) {
    const std::size_t begin = o * stride;
    const std::size_t end = std::min(t_len, begin + stride);
    for (std::size_t c = 0; c < d; ++c) {
      const double g = dy.at(o, c);
      if (mode == PoolMode::kAvg) {
        const double share = g / static_cast<double>(end - begin);
        for (std::size_t t = begin; t < end; ++t) dx.at(t, c) += share;
      } else {
        dx.at(argmax[o * d + c], c) += g;
      }
    }
  }
  return dx;
}

double Sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double LogSigmoid(double x) {
  if (x >= 0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

double LogSumExp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

}  // namespace fhat::ops
