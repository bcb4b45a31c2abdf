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

#ifndef FHAT_OPS_H_
#define FHAT_OPS_H_

#include <cstddef>
#include <vector>

#include "fhat/tensor.h"

// Forward kernels and their analytic vector-Jacobian products. Everything is a
// pure function of its arguments; the autodiff graph in graph.h composes these.
namespace fhat::ops {

inline constexpr double kLayerNormEps = 1e-6;

// [m x k] * [k x n] -> [m x n]
Tensor MatMul(const Tensor& a, const Tensor& b);
// a * b^T : [m x k] * [n x k]^T -> [m x n]
Tensor MatMulTransB(const Tensor& a, const Tensor& b);
// a^T * b : [k x m]^T * [k x n] -> [m x n]
Tensor MatMulTransA(const Tensor& a, const Tensor& b);

// Numerically stable softmax along `axis` of a tensor of any rank.
Tensor Softmax(const Tensor& x, std::size_t axis);
// Backward of a last-axis softmax given its output y and upstream grad dy.
Tensor SoftmaxBackward(const Tensor& y, const Tensor& dy);
Tensor LogSoftmaxRows(const Tensor& x);

struct LayerNormCache {
  Tensor normalized;            // (x - mean) / sqrt(var + eps), per row
  std::vector<double> inv_std;  // per row
};
// Per-row normalization of a [n x d] matrix followed by gain/bias ([1 x d]).
Tensor LayerNorm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                 LayerNormCache* cache = nullptr);
void LayerNormBackward(const LayerNormCache& cache, const Tensor& gain, const Tensor& dy,
                       Tensor* dx, Tensor* dgain, Tensor* dbias);

// Per-channel "same" convolution with symmetric zero padding. x: [T x d],
// kernel: [k x d] with k odd. out[t][c] = sum_j kernel[j][c] * x[t + j - k/2][c].
Tensor DepthwiseConv1d(const Tensor& x, const Tensor& kernel);
void DepthwiseConv1dBackward(const Tensor& x, const Tensor& kernel, const Tensor& dy,
                             Tensor* dx, Tensor* dkernel);

enum class PoolMode { kAvg, kMax };

// Non-overlapping blocks of `stride` rows; output has ceil(T / stride) rows and
// a ragged final block is reduced over the rows it actually holds. For kMax,
// `argmax` (optional) receives, per output element, the winning input row.
Tensor Pool1d(const Tensor& x, std::size_t stride, PoolMode mode,
              std::vector<std::size_t>* argmax = nullptr);
Tensor Pool1dBackward(const Shape& input_shape, std::size_t stride, PoolMode mode,
                      const std::vector<std::size_t>& argmax, const Tensor& dy);

inline std::size_t CeilDiv(std::size_t n, std::size_t d) { return (n + d - 1) / d; }

double Sigmoid(double x);
double LogSigmoid(double x);  // log(sigmoid(x)) without overflow
double LogSumExp(double a, double b);

}  // namespace fhat::ops

#endif  // FHAT_OPS_H_
