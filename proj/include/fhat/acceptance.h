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

#ifndef FHAT_ACCEPTANCE_H_
#define FHAT_ACCEPTANCE_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "fhat/evaluator.h"
#include "fhat/run_config.h"
#include "fhat/synthetic.h"

namespace fhat {

inline constexpr int kNumCriteria = 12;

struct CriterionResult {
  int id = 0;
  std::string title;
  bool passed = false;
  bool skipped = false;
  std::string detail;
  double seconds = 0.0;
};

// One trained toy model of the end-to-end check.
struct ToyModelRun {
  std::string name;
  std::uint64_t seed = 0;
  RunConfig config;
  double train_seconds = 0.0;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  EvalMetrics metrics;
  std::size_t step_bound = 0;
};

struct AcceptanceOptions {
  bool run_training = true;  // false reports the end-to-end criterion as skipped
  std::vector<std::uint64_t> toy_seeds{1};
  std::size_t train_examples = 5000;
  std::size_t eval_examples = 500;
  double train_budget_seconds = 1800.0;  // per model, single-threaded
  std::size_t eval_workers = 1;
  std::filesystem::path artifact_dir;  // checkpoints and reports when non-empty
  std::ostream* log = nullptr;
};

struct AcceptanceReport {
  std::vector<CriterionResult> criteria;
  std::vector<ToyModelRun> toy_models;

  bool AllPassed() const;  // skipped criteria do not count as failures
  std::string ToJson() const;
};

// Default synthetic task of the end-to-end check.
SyntheticTask AcceptanceTask();
// Toy models of the end-to-end check: total reduction 4 (no funnel blocks)
// and total reduction 64 (six stride-2 funnel blocks, no subsampling).
RunConfig ToyBaselineConfig();
RunConfig ToyFunnelConfig(PredNetKind kind);

AcceptanceReport RunAcceptance(const AcceptanceOptions& options);

// "PASS  3  <title>: <detail>" (or FAIL / SKIP).
std::string FormatCriterionLine(const CriterionResult& result);

}  // namespace fhat

#endif  // FHAT_ACCEPTANCE_H_
