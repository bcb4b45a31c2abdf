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

#include "fhat/mwer.h"

#include <algorithm>
#include <cmath>

#include "fhat/errors.h"
#include "fhat/ops.h"

namespace fhat {

std::size_t EditDistance(std::span<const int> hyp, std::span<const int> ref) {
  std::vector<std::size_t> prev(ref.size() + 1), cur(ref.size() + 1);
  for (std::size_t j = 0; j <= ref.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= hyp.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= ref.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (hyp[i - 1] == ref[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[ref.size()];
}

namespace {

std::vector<double> Normalize(std::span<const double> log_probs) {
  if (log_probs.empty()) throw ConfigError("MWER needs a non-empty n-best list");
  const double mx = *std::max_element(log_probs.begin(), log_probs.end());
  std::vector<double> p(log_probs.size());
  double z = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = std::exp(log_probs[i] - mx);
    z += p[i];
  }
  for (auto& v : p) v /= z;
  return p;
}

double WeightedMean(const std::vector<double>& p, std::span<const double> errors) {
  double m = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) m += p[i] * errors[i];
  return m;
}

}  // namespace

double MwerRiskValue(std::span<const double> log_probs, std::span<const double> errors,
                     std::optional<double> baseline) {
  if (errors.size() != log_probs.size()) throw DimensionError("MWER: errors/log_probs size");
  const std::vector<double> p = Normalize(log_probs);
  const double bar = baseline.value_or(WeightedMean(p, errors));
  double risk = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) risk += p[i] * (errors[i] - bar);
  return risk;
}

ad::Var MwerRisk(ad::Var log_probs, std::vector<double> errors, std::optional<double> baseline) {
  const Tensor& lp = log_probs.value();
  const double value = MwerRiskValue(lp.data(), errors, baseline);
  return log_probs.graph()->Record(
      "MwerRisk", Tensor({1, 1}, {value}), {log_probs},
      [log_probs, errors](ad::Graph& g, const Tensor& dy) {
        const std::vector<double> p = Normalize(g.value(log_probs).data());
        const double bar = WeightedMean(p, errors);
        Tensor d(g.value(log_probs).shape());
        for (std::size_t i = 0; i < p.size(); ++i) d[i] = dy[0] * p[i] * (errors[i] - bar);
        g.Accumulate(log_probs, d);
      });
}

ad::Var MwerLoss(ad::Graph& g, const HatConfig& config, ad::Var encoded,
                 const std::vector<std::vector<int>>& nbest, std::span<const int> reference,
                 const MwerOptions& options) {
  if (nbest.empty()) throw ConfigError("MWER needs a non-empty n-best list");
  std::vector<ad::Var> log_probs;
  std::vector<double> errors;
  for (const auto& hyp : nbest) {
    log_probs.push_back(ad::Scale(hat::Loss(g, config, encoded, hyp), -1.0));
    errors.push_back(static_cast<double>(EditDistance(hyp, reference)));
  }
  ad::Var risk = MwerRisk(log_probs.size() == 1 ? log_probs[0] : ad::ConcatCols(log_probs),
                          std::move(errors), options.baseline);
  if (options.hat_scale == 0.0) return risk;
  return ad::Add(risk, ad::Scale(hat::Loss(g, config, encoded, reference), options.hat_scale));
}

}  // namespace fhat
