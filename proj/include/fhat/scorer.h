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

#ifndef FHAT_SCORER_H_
#define FHAT_SCORER_H_

#include <cstddef>
#include <vector>

#include "fhat/tensor.h"

namespace fhat {

// Start-of-sequence padding for prediction network history. Blank never enters
// the history.
inline constexpr int kStartSymbol = -1;

// Prediction-network state after consuming a non-blank label history.
struct PredState {
  // Embedding networks: last N labels, most recent first, padded with
  // kStartSymbol. Recurrent networks leave this empty.
  std::vector<int> context;
  // Recurrent networks: per-layer hidden and cell vectors ([1 x H] each).
  std::vector<Tensor> hidden;
  std::vector<Tensor> cell;
  // Prediction vector and its joint-network projection, cached by the scorer.
  Tensor output;
  Tensor joint_projection;
};

struct StepLogProbs {
  double blank = 0.0;           // log b(t, u)
  std::vector<double> labels;   // log[(1 - b) * P(y | t, u)], one per label
};

// Source of per-(frame, state) transducer log-probabilities for the decoders.
class TransducerScorer {
 public:
  virtual ~TransducerScorer() = default;
  virtual std::size_t num_frames() const = 0;
  virtual std::size_t vocab_size() const = 0;
  virtual PredState Initial() = 0;
  virtual PredState Advance(const PredState& state, int label) = 0;
  virtual StepLogProbs Score(std::size_t frame, const PredState& state) = 0;
};

}  // namespace fhat

#endif  // FHAT_SCORER_H_
