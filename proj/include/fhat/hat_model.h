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

#ifndef FHAT_HAT_MODEL_H_
#define FHAT_HAT_MODEL_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fhat/encoder.h"
#include "fhat/graph.h"
#include "fhat/param_set.h"
#include "fhat/scorer.h"

namespace fhat {

enum class PredNetKind {
  kEmbedding,  // last N labels, concatenated embeddings + projection (N = 2: "V^2")
  kRecurrent,  // stacked LSTM over the full label history
};

std::string PredNetKindName(PredNetKind kind);
PredNetKind ParsePredNetKind(const std::string& name);

struct PredNetConfig {
  PredNetKind kind = PredNetKind::kEmbedding;
  std::size_t context = 2;     // N, embedding networks
  std::size_t layers = 2;      // recurrent networks
  std::size_t hidden = 64;     // recurrent networks
  std::size_t embed_dim = 64;  // label embedding width (and projection width for kEmbedding)

  std::size_t OutputDim() const { return kind == PredNetKind::kEmbedding ? embed_dim : hidden; }
  void Validate() const;
};

struct HatConfig {
  EncoderConfig encoder;
  PredNetConfig pred;
  std::size_t vocab_size = 20;  // V non-blank labels, ids 0..V-1
  std::size_t joint_dim = 64;

  void Validate() const;
};

// Per-(t, u) output distribution.
struct HatOutput {
  double blank_prob = 0.0;
  std::vector<double> label_probs;  // (1 - b) * softmax(label logits)
};

ParamSet InitHatParams(const HatConfig& config, std::uint64_t seed);
// Total scalar parameters; independent of funnel placements.
std::size_t CountParams(const HatConfig& config);

namespace hat {

// Prediction vectors for every history prefix of `labels`: row u conditions on
// labels[0..u). Result is [(U+1) x OutputDim()].
ad::Var PredictionOutputs(ad::Graph& g, const HatConfig& config, std::span<const int> labels);

// Joint logits for every (t, u): [(T*(U+1)) x (V+1)], column 0 = blank.
ad::Var JointLogits(ad::Graph& g, const HatConfig& config, ad::Var encoded, ad::Var pred);

// -log P(labels | encoded), summed over all alignments.
ad::Var Loss(ad::Graph& g, const HatConfig& config, ad::Var encoded, std::span<const int> labels);

// Encoder + prediction + joint + loss for one utterance.
ad::Var UtteranceLoss(ad::Graph& g, const HatConfig& config, const Tensor& features,
                      std::span<const int> labels);

}  // namespace hat

// Value-only wrappers.
double HatLoss(const Tensor& encoded, std::span<const int> labels, const ParamSet& params,
               const HatConfig& config);
HatOutput JointForward(std::span<const double> encoder_frame, std::span<const double> pred_vector,
                       const ParamSet& params, const HatConfig& config);
HatOutput ToHatOutput(std::span<const double> logits);
StepLogProbs ToLogProbs(std::span<const double> logits);

// Incremental prediction network for decoding.
class PredictionNetwork {
 public:
  PredictionNetwork(const HatConfig& config, const ParamSet& params);

  PredState Initial() const;
  PredState Advance(const PredState& state, int label) const;
  // Vector that conditions the joint network on `state`.
  const Tensor& Output(const PredState& state) const { return state.output; }

 private:
  PredState Finish(PredState state) const;

  const HatConfig& config_;
  const ParamSet& params_;
};

// TransducerScorer backed by a HAT model and one encoded utterance.
class HatScorer : public TransducerScorer {
 public:
  HatScorer(const HatConfig& config, const ParamSet& params, const Tensor& encoded);

  std::size_t num_frames() const override { return encoded_.rows(); }
  std::size_t vocab_size() const override { return config_.vocab_size; }
  PredState Initial() override;
  PredState Advance(const PredState& state, int label) override;
  StepLogProbs Score(std::size_t frame, const PredState& state) override;

 private:
  void Project(PredState* state) const;

  const HatConfig& config_;
  const ParamSet& params_;
  Tensor encoded_;
  Tensor encoder_projection_;  // [T x J]
  PredictionNetwork pred_;
};

}  // namespace fhat

#endif  // FHAT_HAT_MODEL_H_
