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

#include "fhat/encoder.h"

#include <cmath>

#include "fhat/errors.h"

namespace fhat {

namespace {

void DeclareLinear(ParamLayout* l, const std::string& name, std::size_t in, std::size_t out) {
  l->Glorot(name, {in, out}, in, out);
  l->Constant(name + "_b", {1, out});
}

void DeclareNorm(ParamLayout* l, const std::string& name, std::size_t dim) {
  l->Constant(name + "_g", {1, dim}, 1.0);
  l->Constant(name + "_b", {1, dim});
}

}  // namespace

void DeclareBlockParams(const EncoderConfig& c, const std::string& prefix, ParamLayout* l) {
  const std::size_t m = c.model_dim, f = c.ffn_multiplier * c.model_dim;
  for (const char* ffn : {"ffn1", "ffn2"}) {
    const std::string p = prefix + "." + ffn;
    DeclareNorm(l, p + ".ln", m);
    DeclareLinear(l, p + ".w1", m, f);
    DeclareLinear(l, p + ".w2", f, m);
  }
  const std::string conv = prefix + ".conv";
  DeclareNorm(l, conv + ".ln", m);
  DeclareLinear(l, conv + ".pw1", m, 2 * m);
  l->Glorot(conv + ".dw", {c.conv_kernel_size, m}, c.conv_kernel_size, c.conv_kernel_size);
  l->Constant(conv + ".dw_b", {1, m});
  DeclareNorm(l, conv + ".ln2", m);
  DeclareLinear(l, conv + ".pw2", m, m);
  const std::string att = prefix + ".mhsa";
  DeclareNorm(l, att + ".ln", m);
  DeclareLinear(l, att + ".wq", m, m);
  // Keys carry no bias: it would shift every score of a query equally.
  l->Glorot(att + ".wk", {m, m}, m, m);
  DeclareLinear(l, att + ".wv", m, m);
  DeclareLinear(l, att + ".wo", m, m);
  DeclareNorm(l, prefix + ".ln_out", m);
}

void DeclareEncoderParams(const EncoderConfig& c, ParamLayout* l) {
  c.Validate();
  std::size_t in = c.input_dim;
  for (std::size_t s = 0; s < c.NumSubsampleStages(); ++s) {
    const std::string p = "enc.sub" + std::to_string(s);
    l->Glorot(p + ".dw", {3, in}, 3, 3);
    DeclareLinear(l, p + ".pw", in, c.model_dim);
    in = c.model_dim;
  }
  DeclareLinear(l, "enc.sub_proj", in, c.model_dim);
  for (std::size_t b = 0; b < c.num_blocks; ++b) {
    DeclareBlockParams(c, "enc.block" + std::to_string(b), l);
  }
}

std::size_t CountEncoderParams(const EncoderConfig& config) {
  ParamLayout layout;
  DeclareEncoderParams(config, &layout);
  return layout.NumScalars();
}

Tensor SinusoidalPositions(std::size_t length, std::size_t dim) {
  Tensor pe({length, dim});
  for (std::size_t t = 0; t < length; ++t) {
    for (std::size_t i = 0; i < dim; ++i) {
      const double rate = std::pow(10000.0, -static_cast<double>(2 * (i / 2)) /
                                                static_cast<double>(dim));
      const double angle = static_cast<double>(t) * rate;
      pe.at(t, i) = (i % 2 == 0) ? std::sin(angle) : std::cos(angle);
    }
  }
  return pe;
}

namespace encoder {

namespace {

using ad::Var;

Var P(ad::Graph& g, const std::string& name) { return g.Param(name); }

Var Norm(ad::Graph& g, Var x, const std::string& name) {
  return ad::LayerNorm(x, P(g, name + "_g"), P(g, name + "_b"));
}

Var Dense(ad::Graph& g, Var x, const std::string& name) {
  return ad::Linear(x, P(g, name), P(g, name + "_b"));
}

Var FeedForward(ad::Graph& g, Var x, const std::string& p) {
  Var h = ad::Swish(Dense(g, Norm(g, x, p + ".ln"), p + ".w1"));
  return Dense(g, h, p + ".w2");
}

Var ConvModule(ad::Graph& g, Var x, const std::string& p) {
  Var h = ad::Glu(Dense(g, Norm(g, x, p + ".ln"), p + ".pw1"));
  h = ad::AddBias(ad::DepthwiseConv1d(h, P(g, p + ".dw")), P(g, p + ".dw_b"));
  h = ad::Swish(Norm(g, h, p + ".ln2"));
  return Dense(g, h, p + ".pw2");
}

Var SelfAttention(ad::Graph& g, Var query_in, Var kv_in, const std::string& p,
                  std::size_t heads) {
  Var qn = Norm(g, query_in, p + ".ln");
  Var kn = Norm(g, kv_in, p + ".ln");
  Var q = Dense(g, qn, p + ".wq");
  Var k = ad::MatMul(kn, P(g, p + ".wk"));
  Var v = Dense(g, kn, p + ".wv");
  return Dense(g, ad::MultiHeadAttention(q, k, v, heads), p + ".wo");
}

// v' of the block: v + FFN1(v)/2 followed by the convolution residual.
Var PreAttention(ad::Graph& g, Var v, const std::string& prefix) {
  Var a = ad::Add(v, ad::Scale(FeedForward(g, v, prefix + ".ffn1"), 0.5));
  return ad::Add(a, ConvModule(g, a, prefix + ".conv"));
}

Var PostAttention(ad::Graph& g, Var v2, const std::string& prefix) {
  Var x = ad::Add(v2, ad::Scale(FeedForward(g, v2, prefix + ".ffn2"), 0.5));
  return Norm(g, x, prefix + ".ln_out");
}

}  // namespace

Var Subsample(ad::Graph& g, Var features, const EncoderConfig& c) {
  if (features.value().rank() != 2 || features.cols() != c.input_dim) {
    throw DimensionError("Subsample: expected [T' x " + std::to_string(c.input_dim) +
                         "] features, got " + ShapeString(features.value().shape()));
  }
  if (features.rows() == 0) throw DimensionError("Subsample: empty feature sequence");
  Var x = features;
  for (std::size_t s = 0; s < c.NumSubsampleStages(); ++s) {
    const std::string p = "enc.sub" + std::to_string(s);
    x = ad::DecimateRows(ad::DepthwiseConv1d(x, P(g, p + ".dw")), 2);
    x = ad::Swish(Dense(g, x, p + ".pw"));
  }
  x = Dense(g, x, "enc.sub_proj");
  return ad::AddConstant(x, SinusoidalPositions(x.rows(), c.model_dim));
}

Var ConformerBlock(ad::Graph& g, Var v, const EncoderConfig& c, const std::string& prefix) {
  Var v1 = PreAttention(g, v, prefix);
  Var v2 = ad::Add(v1, SelfAttention(g, v1, v1, prefix + ".mhsa", c.attention_heads));
  return PostAttention(g, v2, prefix);
}

Var FunnelBlock(ad::Graph& g, Var v, const EncoderConfig& c, const std::string& prefix,
                std::size_t stride) {
  if (stride < 1) throw ConfigError("FunnelBlock: stride must be >= 1");
  Var v1 = PreAttention(g, v, prefix);
  Var query = ad::Pool1d(v1, stride, ops::PoolMode::kAvg);
  Var residual = ad::Pool1d(v1, stride, ops::PoolMode::kMax);
  Var v2 = ad::Add(residual, SelfAttention(g, query, v1, prefix + ".mhsa", c.attention_heads));
  return PostAttention(g, v2, prefix);
}

Var Encode(ad::Graph& g, Var features, const EncoderConfig& c) {
  c.Validate();
  Var x = Subsample(g, features, c);
  for (std::size_t b = 0; b < c.num_blocks; ++b) {
    const std::string prefix = "enc.block" + std::to_string(b);
    const std::size_t stride = c.StrideAt(b);
    bool funnel = false;
    for (const auto& p : c.funnel) funnel = funnel || p.layer == b;
    x = funnel ? FunnelBlock(g, x, c, prefix, stride) : ConformerBlock(g, x, c, prefix);
  }
  return x;
}

}  // namespace encoder

EncodedSequence Encode(const Tensor& features, const EncoderConfig& config,
                       const ParamSet& params) {
  ad::Graph g(false);
  g.BindParams(&params, nullptr);
  ad::Var out = encoder::Encode(g, g.Constant(features), config);
  return {out.value(), config.FrameDurationMs()};
}

}  // namespace fhat
