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

#ifndef FHAT_DECODER_H_
#define FHAT_DECODER_H_

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "fhat/scorer.h"

namespace fhat {

struct Hypothesis {
  std::size_t frame = 0;           // t in [0, T]; T once finished
  std::vector<int> labels;         // emitted non-blank labels
  std::vector<std::size_t> emit_frames;  // frame of each emitted label
  double score = 0.0;              // log-probability of the alignment so far
  PredState state;
  bool finished = false;           // last extension was blank at t == T-1

  std::size_t alignment_length() const { return frame + labels.size(); }
};

// Strict ordering used for pruning: higher score first, then label ids
// lexicographically, then emission frames.
bool BetterHypothesis(const Hypothesis& a, const Hypothesis& b);

struct Beam {
  std::vector<Hypothesis> hyps;  // sorted by BetterHypothesis
  std::size_t steps = 0;
};

struct NBestEntry {
  std::vector<int> labels;
  double score = 0.0;
};

struct DecodeResult {
  std::vector<NBestEntry> nbest;  // finished hypotheses, best first
  std::size_t steps = 0;
  // Steps after which some unfinished hypothesis had t + |labels| != steps.
  std::size_t invariant_violations = 0;
};

struct AlignmentSyncOptions {
  std::size_t beam = 4;     // K
  std::size_t max_labels = 30;  // U_max
  // Keep stepping until the best `min_finished` hypotheses are all finished
  // (or nothing is left to extend). 1 is the plain termination rule.
  std::size_t min_finished = 1;
};

// Beam containing only the initial hypothesis (t = 0, no labels).
Beam InitialBeam(TransducerScorer& scorer);

// One alignment-length-synchronous expansion: every unfinished hypothesis is
// extended by blank and by each label (labels blocked once |labels| ==
// max_labels), finished ones carry over unchanged, and the best `beam_size`
// are kept.
Beam Step(const Beam& beam, TransducerScorer& scorer, std::size_t beam_size,
          std::size_t max_labels);

// True when every unfinished hypothesis has alignment length == beam.steps.
bool AlignmentSynchronous(const Beam& beam);

// Runs Step until the best hypothesis holds a blank emitted from the last
// frame. Never exceeds T + max_labels steps.
DecodeResult DecodeAlignmentSync(TransducerScorer& scorer, const AlignmentSyncOptions& options);

struct FrameSyncOptions {
  std::size_t beam = 4;
  std::size_t max_labels = 30;
  std::size_t max_expansions_per_frame = 4;
};

// Reference frame-synchronous search: every beam entry sits on the same frame;
// each frame is expanded (at most max_expansions_per_frame labels per
// hypothesis) until blank moves all survivors to the next frame. Hypotheses
// with identical labels on the same frame are merged by max.
DecodeResult DecodeFrameSync(TransducerScorer& scorer, const FrameSyncOptions& options);

struct ExhaustiveResult {
  std::vector<int> best_max;     // argmax of the best single alignment
  double best_max_score = 0.0;   // log
  std::vector<int> best_sum;     // argmax of the alignment sum
  double best_sum_score = 0.0;   // log
  std::vector<std::vector<int>> sequences;  // every candidate, enumeration order
  std::vector<double> max_scores;           // log max-alignment probability
  std::vector<double> sum_scores;           // log sum-alignment probability
};

inline constexpr std::size_t kExhaustiveMaxFrames = 6;
inline constexpr std::size_t kExhaustiveMaxLabels = 4;
inline constexpr std::size_t kExhaustiveMaxVocab = 4;

// Scores every label sequence of length <= max_labels. Limited to T <= 6,
// max_labels <= 4, V <= 4; ConfigError otherwise.
ExhaustiveResult DecodeExhaustive(TransducerScorer& scorer, std::size_t max_labels);

// "rank<TAB>score<TAB>ids..." one line per entry, rank from 1.
void WriteNBest(std::ostream& os, const std::vector<NBestEntry>& nbest);
std::string FormatNBest(const std::vector<NBestEntry>& nbest);

}  // namespace fhat

#endif  // FHAT_DECODER_H_
