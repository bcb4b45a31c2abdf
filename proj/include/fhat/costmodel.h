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

#ifndef FHAT_COSTMODEL_H_
#define FHAT_COSTMODEL_H_

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fhat/encoder_config.h"

namespace fhat {

// Benchmark settings: longest utterance 15.36 s of 10 ms frames, at most 30
// output labels.
inline constexpr double kBenchMaxAudioMs = 15360.0;
inline constexpr std::size_t kBenchMaxLabels = 30;

// ceil(max_audio_ms / f_enc_ms) + max_labels. Throws ConfigError on
// non-positive durations.
std::size_t DecoderSteps(double max_audio_ms, double f_enc_ms, std::size_t max_labels);

// Multiply-accumulate counts of one encoder forward pass.
struct EncoderCostModel {
  // Per block with input length L and query length Lq = ceil(L / s):
  //   linear_coeff * L + query_coeff * Lq + attention_coeff * Lq * L
  // with the coefficients derived from the architecture (see FromConfig).
  double linear_coeff = 0.0;     // FFN1, conv module, key/value projections
  double query_coeff = 0.0;      // query/output projections, FFN2
  double attention_coeff = 0.0;  // scores and weighted values
  double subsample_cost = 0.0;   // fixed front end at the modeled input length

  static EncoderCostModel FromConfig(const EncoderConfig& config, std::size_t input_frames);
  double BlockCost(std::size_t length, std::size_t stride) const;
};

struct EncoderCost {
  double total = 0.0;
  double subsample = 0.0;
  std::vector<double> blocks;         // per block, in order
  std::vector<std::size_t> lengths;   // block input lengths + output length
};

EncoderCost ComputeEncoderCost(const EncoderConfig& config, std::size_t input_frames);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

// Ordinary least squares y ~ slope * x + intercept. Throws DimensionError for
// mismatched or too-short inputs and NumericError when x is constant.
LinearFit FitLatency(std::span<const double> x, std::span<const double> y);

struct CostReport {
  std::string id;
  std::string shorthand;
  double f_enc_ms = 0.0;
  std::size_t encoder_frames = 0;  // T_max
  std::size_t decoder_steps = 0;   // T_max + U_max
  EncoderCost encoder;
  // Relative to the report's baseline (first row); 0 for the baseline itself.
  double decoder_reduction = 0.0;
  double encoder_reduction = 0.0;
};

struct CostSettings {
  double max_audio_ms = kBenchMaxAudioMs;
  std::size_t max_labels = kBenchMaxLabels;
  EncoderConfig base = EncoderConfig::FullScale();
};

CostReport MakeCostReport(const std::string& id, const std::string& shorthand,
                          const CostSettings& settings = {});

struct Reduction {
  double decoder = 0.0;  // 1 - candidate / baseline decoder steps
  double encoder = 0.0;  // 1 - candidate / baseline encoder cost
};
Reduction ReductionReport(const CostReport& baseline, const CostReport& candidate);

struct CostTable {
  std::vector<CostReport> rows;
  std::optional<LinearFit> decoder_fit;  // steps vs published decoder ms
  std::optional<LinearFit> encoder_fit;  // cost vs published encoder ms
};

// One row per (id, shorthand); reductions are against the first row.
CostTable BuildCostTable(const std::vector<std::pair<std::string, std::string>>& configs,
                         const CostSettings& settings = {});

std::string CostTableCsv(const CostTable& table);
std::string CostTableJson(const CostTable& table);

// Published TPU latencies for batch-8 decoding of 15.36 s audio with at most 30
// labels, bundled read-only for calibration.
struct PublishedLatency {
  const char* id;
  const char* shorthand;
  double f_enc_ms;
  double encoder_ms;
  double decoder_ms;  // < 0 when not published for the row
};

// Increasing encoder frame duration, B0 .. E7.
std::span<const PublishedLatency> PublishedFrameRateSweep();
// Placement ablations at a fixed frame duration: 1280 ms (E5 group) then 2560 ms
// (E6 group).
std::span<const PublishedLatency> PublishedPlacementAblation();

// Fits for the bundled sweep: decoder steps vs decoder ms, encoder cost vs
// encoder ms.
CostTable PublishedSweepTable(const CostSettings& settings = {});

}  // namespace fhat

#endif  // FHAT_COSTMODEL_H_
