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

#include "fhat/hat_model.h"

#include <cmath>

#include "fhat/errors.h"
#include "fhat/hat_loss.h"
#include "fhat/ops.h"
#include "fhat/rng.h"

namespace fhat {

std::string PredNetKindName(PredNetKind kind) {
  return kind == PredNetKind::kEmbedding ? "embedding" : "recurrent";
}

PredNetKind ParsePredNetKind(const std::string& name) {
  if (name == "embedding" || name == "v2" || name == "V2") return PredNetKind::kEmbedding;
  if (name == "recurrent" || name == "lstm" || name == "LSTM") return PredNetKind::kRecurrent;
  throw ConfigError("unknown prediction network kind '" + name + "'");
}

void PredNetConfig::Validate() const {
  if (embed_dim == 0) throw ConfigError("pred embed_dim must be >= 1");
  if (kind == PredNetKind::kEmbedding && context < 1) {
    throw ConfigError("embedding prediction network needs context >= 1");
  }
  if (kind == PredNetKind::kRecurrent && (layers < 1 || hidden < 1)) {
    throw ConfigError("recurrent prediction network needs layers >= 1 and hidden >= 1");
  }
}

void HatConfig::Validate() const {
  encoder.Validate();
  pred.Validate();
  if (vocab_size < 1) throw ConfigError("vocab_size must be >= 1");
  if (joint_dim < 1) throw ConfigError("joint_dim must be >= 1");
}

namespace {

void DeclareHatParams(const HatConfig& c, ParamLayout* l) {
  c.Validate();
  DeclareEncoderParams(c.encoder, l);
  const std::size_t V = c.vocab_size, E = c.pred.embed_dim, P = c.pred.OutputDim();
  const std::size_t J = c.joint_dim;
  l->Glorot("pred.embed", {V + 1, E}, V + 1, E);
  if (c.pred.kind == PredNetKind::kEmbedding) {
    const std::size_t in = c.pred.context * E;
    l->Glorot("pred.proj", {in, E}, in, E);
    l->Constant("pred.proj_b", {1, E});
  } else {
    const std::size_t H = c.pred.hidden;
    for (std::size_t layer = 0; layer < c.pred.layers; ++layer) {
      const std::string p = "pred.lstm" + std::to_string(layer);
      const std::size_t in = layer == 0 ? E : H;
      l->Glorot(p + ".wx", {in, 4 * H}, in, 4 * H);
      l->Glorot(p + ".wh", {H, 4 * H}, H, 4 * H);
      l->Constant(p + ".b", {1, 4 * H});
    }
  }
  l->Glorot("joint.enc", {c.encoder.model_dim, J}, c.encoder.model_dim, J);
  l->Constant("joint.enc_b", {1, J});
  l->Glorot("joint.pred", {P, J}, P, J);
  l->Glorot("joint.out", {J, V + 1}, J, V + 1);
  l->Constant("joint.out_b", {1, V + 1});
}

std::size_t EmbeddingRow(const HatConfig& c, int label) {
  return label == kStartSymbol ? c.vocab_size : static_cast<std::size_t>(label);
}

// Embedding network output for rows of contexts (most recent label first).
ad::Var EmbeddingPred(ad::Graph& g, const HatConfig& c,
                      const std::vector<std::vector<int>>& contexts) {
  ad::Var table = g.Param("pred.embed");
  std::vector<ad::Var> slots;
  for (std::size_t n = 0; n < c.pred.context; ++n) {
    std::vector<std::size_t> rows;
    rows.reserve(contexts.size());
    for (const auto& ctx : contexts) rows.push_back(EmbeddingRow(c, ctx[n]));
    slots.push_back(ad::GatherRows(table, rows));
  }
  ad::Var joined = slots.size() == 1 ? slots[0] : ad::ConcatCols(slots);
  return ad::Linear(joined, g.Param("pred.proj"), g.Param("pred.proj_b"));
}

struct LstmOut {
  ad::Var h;
  ad::Var c;
};

// One LSTM cell update; `x_proj` is the input already multiplied by wx.
// Gate order: input, forget, candidate, output.
LstmOut LstmStep(ad::Graph& g, std::size_t hidden, const std::string& p, ad::Var x_proj,
                 ad::Var h, ad::Var c) {
  ad::Var gates = ad::AddBias(ad::Add(x_proj, ad::MatMul(h, g.Param(p + ".wh"))),
                              g.Param(p + ".b"));
  const std::size_t H = hidden;
  ad::Var i = ad::Sigmoid(ad::SliceCols(gates, 0, H));
  ad::Var f = ad::Sigmoid(ad::SliceCols(gates, H, 2 * H));
  ad::Var cand = ad::Tanh(ad::SliceCols(gates, 2 * H, 3 * H));
  ad::Var o = ad::Sigmoid(ad::SliceCols(gates, 3 * H, 4 * H));
  ad::Var c_next = ad::Add(ad::Mul(f, c), ad::Mul(i, cand));
  return {ad::Mul(o, ad::Tanh(c_next)), c_next};
}

std::vector<int> ContextAfter(std::span<const int> history, std::size_t n) {
  std::vector<int> ctx(n, kStartSymbol);
  for (std::size_t k = 0; k < n && k < history.size(); ++k) {
    ctx[k] = history[history.size() - 1 - k];
  }
  return ctx;
}

}  // namespace

ParamSet InitHatParams(const HatConfig& config, std::uint64_t seed) {
  ParamLayout layout;
  DeclareHatParams(config, &layout);
  Rng rng(seed);
  ParamSet ps = layout.Materialize(rng);
  if (config.pred.kind == PredNetKind::kRecurrent) {
    // Forget-gate bias of 1.
    const std::size_t H = config.pred.hidden;
    for (std::size_t layer = 0; layer < config.pred.layers; ++layer) {
      Tensor& b = ps.at("pred.lstm" + std::to_string(layer) + ".b");
      for (std::size_t j = H; j < 2 * H; ++j) b[j] = 1.0;
    }
  }
  return ps;
}

std::size_t CountParams(const HatConfig& config) {
  ParamLayout layout;
  DeclareHatParams(config, &layout);
  return layout.NumScalars();
}

namespace hat {

ad::Var PredictionOutputs(ad::Graph& g, const HatConfig& c, std::span<const int> labels) {
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= c.vocab_size) {
      throw DimensionError("label id " + std::to_string(y) + " out of range");
    }
  }
  const std::size_t U = labels.size();
  if (c.pred.kind == PredNetKind::kEmbedding) {
    std::vector<std::vector<int>> contexts;
    contexts.reserve(U + 1);
    for (std::size_t u = 0; u <= U; ++u) {
      contexts.push_back(ContextAfter(labels.subspan(0, u), c.pred.context));
    }
    return EmbeddingPred(g, c, contexts);
  }
  std::vector<std::size_t> rows;
  rows.push_back(EmbeddingRow(c, kStartSymbol));
  for (int y : labels) rows.push_back(EmbeddingRow(c, y));
  ad::Var inputs = ad::GatherRows(g.Param("pred.embed"), rows);
  const std::size_t H = c.pred.hidden;
  for (std::size_t layer = 0; layer < c.pred.layers; ++layer) {
    const std::string p = "pred.lstm" + std::to_string(layer);
    ad::Var x_proj = ad::MatMul(inputs, g.Param(p + ".wx"));
    ad::Var h = g.Constant(Tensor({1, H}));
    ad::Var cell = g.Constant(Tensor({1, H}));
    std::vector<ad::Var> outputs;
    for (std::size_t u = 0; u <= U; ++u) {
      LstmOut out = LstmStep(g, H, p, ad::SliceRows(x_proj, u, u + 1), h, cell);
      h = out.h;
      cell = out.c;
      outputs.push_back(h);
    }
    inputs = ad::ConcatRows(outputs);
  }
  return inputs;
}

ad::Var JointLogits(ad::Graph& g, const HatConfig& c, ad::Var encoded, ad::Var pred) {
  (void)c;
  ad::Var enc_proj = ad::Linear(encoded, g.Param("joint.enc"), g.Param("joint.enc_b"));
  ad::Var pred_proj = ad::MatMul(pred, g.Param("joint.pred"));
  ad::Var hidden = ad::Tanh(ad::OuterAddRows(enc_proj, pred_proj));
  return ad::Linear(hidden, g.Param("joint.out"), g.Param("joint.out_b"));
}

ad::Var Loss(ad::Graph& g, const HatConfig& c, ad::Var encoded, std::span<const int> labels) {
  if (encoded.rows() == 0) throw DimensionError("hat loss needs at least one encoder frame");
  ad::Var pred = PredictionOutputs(g, c, labels);
  ad::Var logits = JointLogits(g, c, encoded, pred);
  return HatLossFromLogits(logits, encoded.rows(), std::vector<int>(labels.begin(), labels.end()));
}

ad::Var UtteranceLoss(ad::Graph& g, const HatConfig& c, const Tensor& features,
                      std::span<const int> labels) {
  ad::Var encoded = encoder::Encode(g, g.Constant(features), c.encoder);
  return Loss(g, c, encoded, labels);
}

}  // namespace hat

double HatLoss(const Tensor& encoded, std::span<const int> labels, const ParamSet& params,
               const HatConfig& config) {
  ad::Graph g(false);
  g.BindParams(&params, nullptr);
  return hat::Loss(g, config, g.Constant(encoded), labels).value()[0];
}

HatOutput ToHatOutput(std::span<const double> logits) {
  HatOutput out;
  out.blank_prob = ops::Sigmoid(logits[0]);
  Tensor label_logits = Tensor::Row(std::vector<double>(logits.begin() + 1, logits.end()));
  Tensor sm = ops::Softmax(label_logits, 1);
  out.label_probs.resize(sm.size());
  for (std::size_t k = 0; k < sm.size(); ++k) out.label_probs[k] = (1.0 - out.blank_prob) * sm[k];
  return out;
}

StepLogProbs ToLogProbs(std::span<const double> logits) {
  StepLogProbs out;
  const std::size_t V = logits.size() - 1;
  out.blank = ops::LogSigmoid(logits[0]);
  double mx = logits[1];
  for (std::size_t k = 2; k <= V; ++k) mx = std::max(mx, logits[k]);
  double s = 0.0;
  for (std::size_t k = 1; k <= V; ++k) s += std::exp(logits[k] - mx);
  const double log_nonblank = ops::LogSigmoid(-logits[0]);
  out.labels.resize(V);
  for (std::size_t k = 0; k < V; ++k) {
    out.labels[k] = log_nonblank + (logits[k + 1] - mx - std::log(s));
  }
  return out;
}

HatOutput JointForward(std::span<const double> encoder_frame, std::span<const double> pred_vector,
                       const ParamSet& params, const HatConfig& config) {
  ad::Graph g(false);
  g.BindParams(&params, nullptr);
  ad::Var h = g.Constant(Tensor::Row({encoder_frame.begin(), encoder_frame.end()}));
  ad::Var p = g.Constant(Tensor::Row({pred_vector.begin(), pred_vector.end()}));
  const Tensor& logits = hat::JointLogits(g, config, h, p).value();
  return ToHatOutput(logits.data());
}

PredictionNetwork::PredictionNetwork(const HatConfig& config, const ParamSet& params)
    : config_(config), params_(params) {
  config_.Validate();
}

PredState PredictionNetwork::Initial() const {
  PredState s;
  if (config_.pred.kind == PredNetKind::kEmbedding) {
    s.context.assign(config_.pred.context, kStartSymbol);
    return Finish(std::move(s));
  }
  const std::size_t H = config_.pred.hidden;
  s.hidden.assign(config_.pred.layers, Tensor({1, H}));
  s.cell.assign(config_.pred.layers, Tensor({1, H}));
  return Advance(s, kStartSymbol);
}

PredState PredictionNetwork::Advance(const PredState& state, int label) const {
  if (label != kStartSymbol && (label < 0 || static_cast<std::size_t>(label) >= config_.vocab_size)) {
    throw DimensionError("label id " + std::to_string(label) + " out of range");
  }
  PredState next;
  if (config_.pred.kind == PredNetKind::kEmbedding) {
    next.context.reserve(state.context.size());
    next.context.push_back(label);
    for (std::size_t k = 0; k + 1 < state.context.size(); ++k) next.context.push_back(state.context[k]);
    return Finish(std::move(next));
  }
  ad::Graph g(false);
  g.BindParams(&params_, nullptr);
  ad::Var input = ad::GatherRows(g.Param("pred.embed"), {EmbeddingRow(config_, label)});
  for (std::size_t layer = 0; layer < config_.pred.layers; ++layer) {
    const std::string p = "pred.lstm" + std::to_string(layer);
    ad::Var x_proj = ad::MatMul(input, g.Param(p + ".wx"));
    LstmOut out = LstmStep(g, config_.pred.hidden, p, x_proj, g.Constant(state.hidden[layer]),
                           g.Constant(state.cell[layer]));
    next.hidden.push_back(out.h.value());
    next.cell.push_back(out.c.value());
    input = out.h;
  }
  next.output = next.hidden.back();
  return next;
}

PredState PredictionNetwork::Finish(PredState state) const {
  ad::Graph g(false);
  g.BindParams(&params_, nullptr);
  state.output = EmbeddingPred(g, config_, {state.context}).value();
  return state;
}

HatScorer::HatScorer(const HatConfig& config, const ParamSet& params, const Tensor& encoded)
    : config_(config), params_(params), encoded_(encoded), pred_(config, params) {
  if (encoded_.rank() != 2 || encoded_.rows() == 0 || encoded_.cols() != config.encoder.model_dim) {
    throw DimensionError("HatScorer: encoded sequence must be [T x model_dim] with T >= 1");
  }
  ad::Graph g(false);
  g.BindParams(&params_, nullptr);
  encoder_projection_ =
      ad::Linear(g.Constant(encoded_), g.Param("joint.enc"), g.Param("joint.enc_b")).value();
}

void HatScorer::Project(PredState* state) const {
  state->joint_projection = ops::MatMul(state->output, params_.at("joint.pred"));
}

PredState HatScorer::Initial() {
  PredState s = pred_.Initial();
  Project(&s);
  return s;
}

PredState HatScorer::Advance(const PredState& state, int label) {
  PredState s = pred_.Advance(state, label);
  Project(&s);
  return s;
}

StepLogProbs HatScorer::Score(std::size_t frame, const PredState& state) {
  const std::size_t J = config_.joint_dim;
  Tensor hidden({1, J});
  for (std::size_t j = 0; j < J; ++j) {
    hidden[j] = std::tanh(encoder_projection_.at(frame, j) + state.joint_projection[j]);
  }
  Tensor logits = ops::MatMul(hidden, params_.at("joint.out"));
  const Tensor& bias = params_.at("joint.out_b");
  for (std::size_t k = 0; k < logits.size(); ++k) logits[k] += bias[k];
  return ToLogProbs(logits.data());
}

}  // namespace fhat
