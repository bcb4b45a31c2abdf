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

#ifndef FHAT_HAT_LOSS_H_
#define FHAT_HAT_LOSS_H_

#include <cstddef>
#include <span>
#include <vector>

#include "fhat/graph.h"
#include "fhat/tensor.h"

namespace fhat {

// Log-probabilities on the (t, u) lattice of one utterance with T frames and
// reference length U. Node (t, u) means u labels emitted before frame t.
struct TransducerLattice {
  std::size_t frames = 0;  // T >= 1
  std::size_t labels = 0;  // U >= 0
  std::vector<double> log_blank;  // [T x (U+1)]: log b(t, u)
  std::vector<double> log_emit;   // [T x U]: log[(1-b(t,u)) P(y_{u+1} | t, u)]

  double blank(std::size_t t, std::size_t u) const { return log_blank[t * (labels + 1) + u]; }
  double emit(std::size_t t, std::size_t u) const { return log_emit[t * labels + u]; }
};

struct ForwardBackwardResult {
  double log_likelihood = 0.0;  // log sum over alignments
  std::vector<double> alpha;    // [T x (U+1)]
  std::vector<double> beta;     // [T x (U+1)], includes the final blank
};

// Log-space forward recursion:
//   alpha(t,u) = alpha(t-1,u) + log b(t-1,u)  (+)  alpha(t,u-1) + log emit(t,u-1)
//   log P(y|x) = alpha(T-1,U) + log b(T-1,U)
double LatticeLogLikelihood(const TransducerLattice& lattice);
ForwardBackwardResult LatticeForwardBackward(const TransducerLattice& lattice);

// Joint logits are [(T*(U+1)) x (V+1)], row t*(U+1)+u; column 0 is the blank
// logit (b = sigmoid), columns 1..V the label logits (renormalized softmax
// scaled by 1-b). `labels` holds ids in [0, V).
TransducerLattice LatticeFromLogits(const Tensor& logits, std::size_t frames,
                                    std::span<const int> labels);

// -log P(labels | x) with the analytic lattice gradient w.r.t. the logits.
ad::Var HatLossFromLogits(ad::Var logits, std::size_t frames, std::vector<int> labels);

}  // namespace fhat

#endif  // FHAT_HAT_LOSS_H_
