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

#ifndef FHAT_TRAINER_H_
#define FHAT_TRAINER_H_

#include <cstddef>
#include <iosfwd>
#include <vector>

#include "fhat/param_set.h"
#include "fhat/run_config.h"
#include "fhat/synthetic.h"

namespace fhat {

// Warmup then inverse-square-root decay; step counts from 1.
double LearningRate(const RunConfig& config, std::size_t step);

// Per-coordinate adaptive step with no momentum term (RMSProp with bias
// correction of the second-moment estimate).
class AdaptiveOptimizer {
 public:
  explicit AdaptiveOptimizer(const ParamSet& params, double decay = 0.99, double epsilon = 1e-8);
  // Applies params -= lr * g / (sqrt(v_hat) + eps).
  void Update(ParamSet* params, const ParamSet& grads, double learning_rate);
  std::size_t steps() const { return steps_; }

 private:
  ParamSet second_moment_;
  double decay_;
  double epsilon_;
  std::size_t steps_ = 0;
};

// Rescales `grads` in place so their global L2 norm is at most `max_norm`;
// returns the norm before clipping.
double ClipGlobalNorm(ParamSet* grads, double max_norm);

struct LossPoint {
  std::size_t step = 0;
  double loss = 0.0;  // mean per-utterance loss over the preceding window
};

struct TrainResult {
  ParamSet params;
  std::vector<LossPoint> curve;       // step 0 holds the first batch before any update
  std::vector<LossPoint> mwer_curve;  // empty without an MWER phase
  double seconds = 0.0;

  double InitialLoss() const { return curve.empty() ? 0.0 : curve.front().loss; }
  double FinalLoss() const { return curve.empty() ? 0.0 : curve.back().loss; }
};

// Mini-batch training of the HAT loss, then optional MWER fine-tuning whose
// n-best lists come from the alignment-synchronous decoder under the current
// parameters. Single-threaded and deterministic given config.seed. Throws
// NumericError ("diverged") if a loss or gradient becomes non-finite.
TrainResult Train(const RunConfig& config, const Dataset& data, std::ostream* log = nullptr);

// Same, continuing from existing parameters.
TrainResult Train(const RunConfig& config, const Dataset& data, ParamSet initial,
                  std::ostream* log = nullptr);

}  // namespace fhat

#endif  // FHAT_TRAINER_H_
