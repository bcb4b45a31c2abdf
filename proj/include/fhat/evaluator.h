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

#ifndef FHAT_EVALUATOR_H_
#define FHAT_EVALUATOR_H_

#include <cstddef>
#include <vector>

#include "fhat/hat_model.h"
#include "fhat/param_set.h"
#include "fhat/synthetic.h"

namespace fhat {

// Corpus sums; every rate is derived, so merging partial results is exact and
// independent of order.
struct EvalMetrics {
  std::size_t utterances = 0;
  std::size_t reference_tokens = 0;
  std::size_t token_errors = 0;  // summed edit distance
  std::size_t exact_matches = 0;
  std::size_t total_steps = 0;
  std::size_t max_steps = 0;
  std::size_t invariant_violations = 0;

  double TokenErrorRate() const;
  double ExactMatchRate() const;
  double MeanSteps() const;
  void Merge(const EvalMetrics& other);
  friend bool operator==(const EvalMetrics&, const EvalMetrics&) = default;
};

struct EvalOptions {
  std::size_t beam = 4;
  std::size_t max_labels = 30;
  std::size_t workers = 1;
};

struct EvalResult {
  EvalMetrics metrics;
  std::vector<std::vector<int>> hypotheses;  // top-1 per example, dataset order
  std::size_t step_bound = 0;  // ceil(T'_max / reduction) + U_max for this dataset
};

// Decodes every example with the alignment-synchronous beam search.
EvalResult Evaluate(const HatConfig& config, const ParamSet& params, const Dataset& data,
                    const EvalOptions& options);

}  // namespace fhat

#endif  // FHAT_EVALUATOR_H_
