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

#ifndef FHAT_MWER_H_
#define FHAT_MWER_H_

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "fhat/graph.h"
#include "fhat/hat_model.h"

namespace fhat {

// Token-level Levenshtein distance.
std::size_t EditDistance(std::span<const int> hyp, std::span<const int> ref);

inline constexpr double kDefaultMwerHatScale = 0.03;
inline constexpr std::size_t kDefaultMwerNBest = 4;

// Expected-risk term over an n-best list:
//   sum_i p_i (W_i - W_bar),  p = softmax(log_probs),  W_bar = sum_i p_i W_i.
// W_bar is treated as a constant baseline when differentiating, so the value is
// zero at the current point while the gradient is p_j (W_j - W_bar). Passing
// `baseline` pins W_bar to a fixed number (used to finite-difference the term).
double MwerRiskValue(std::span<const double> log_probs, std::span<const double> errors,
                     std::optional<double> baseline = std::nullopt);
// log_probs: [1 x n]
ad::Var MwerRisk(ad::Var log_probs, std::vector<double> errors,
                 std::optional<double> baseline = std::nullopt);

struct MwerOptions {
  double hat_scale = kDefaultMwerHatScale;  // lambda
  std::optional<double> baseline;
};

// Risk over `nbest` (log-probabilities recomputed under the model as
// alignment sums) plus lambda * hat loss of the reference. Throws ConfigError
// for an empty n-best list.
ad::Var MwerLoss(ad::Graph& g, const HatConfig& config, ad::Var encoded,
                 const std::vector<std::vector<int>>& nbest, std::span<const int> reference,
                 const MwerOptions& options = {});

}  // namespace fhat

#endif  // FHAT_MWER_H_
