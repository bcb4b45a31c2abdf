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

#ifndef FHAT_ENCODER_H_
#define FHAT_ENCODER_H_

#include <cstddef>
#include <string>

#include "fhat/encoder_config.h"
#include "fhat/graph.h"
#include "fhat/param_set.h"
#include "fhat/rng.h"
#include "fhat/tensor.h"

namespace fhat {

struct EncodedSequence {
  Tensor frames;  // [T x model_dim]
  double frame_duration_ms = 0.0;
};

// Declares the parameters of one conformer block under `prefix`
// ("<prefix>.ffn1.w1", ...): Glorot-uniform weights, zero biases, unit
// layer-norm gains. Funnel blocks use exactly the same parameters.
void DeclareBlockParams(const EncoderConfig& config, const std::string& prefix,
                        ParamLayout* layout);
// All encoder parameters under "enc.".
void DeclareEncoderParams(const EncoderConfig& config, ParamLayout* layout);
std::size_t CountEncoderParams(const EncoderConfig& config);

// Fixed sinusoidal position table [length x dim].
Tensor SinusoidalPositions(std::size_t length, std::size_t dim);

namespace encoder {

// Stride-2 depthwise-separable stages then a projection to model_dim, plus
// positions. [T' x d] -> [SubsampledLength(T') x m].
ad::Var Subsample(ad::Graph& g, ad::Var features, const EncoderConfig& config);

// Modified conformer block (convolution before self-attention):
//   a   = v + FFN1(v)/2
//   v'  = a + Conv(a)
//   v'' = v' + MHSA(Q=v', KV=v')
//   out = LayerNorm(v'' + FFN2(v'')/2)
ad::Var ConformerBlock(ad::Graph& g, ad::Var v, const EncoderConfig& config,
                       const std::string& prefix);

// Funnel variant: the attention query is AvgPool(v', s) and the residual is
// MaxPool(v', s); keys/values keep the full length. Output has ceil(T/s) rows.
ad::Var FunnelBlock(ad::Graph& g, ad::Var v, const EncoderConfig& config,
                    const std::string& prefix, std::size_t stride);

// Subsampling followed by every block, using the funnel variant where placed.
ad::Var Encode(ad::Graph& g, ad::Var features, const EncoderConfig& config);

}  // namespace encoder

// Inference convenience: runs Encode on a non-recording graph.
EncodedSequence Encode(const Tensor& features, const EncoderConfig& config,
                       const ParamSet& params);

}  // namespace fhat

#endif  // FHAT_ENCODER_H_
