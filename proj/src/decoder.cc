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

#include "fhat/decoder.h"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include "fhat/errors.h"
#include "fhat/ops.h"

namespace fhat {

bool BetterHypothesis(const Hypothesis& a, const Hypothesis& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.labels != b.labels) return a.labels < b.labels;
  if (a.emit_frames != b.emit_frames) return a.emit_frames < b.emit_frames;
  if (a.frame != b.frame) return a.frame < b.frame;
  return a.finished && !b.finished;
}

namespace {

// An extension that has not yet paid for its prediction-network update.
struct Candidate {
  std::size_t parent = 0;
  int label = -1;  // -1 = blank (or carry-over when parent is finished)
  Hypothesis hyp;  // state left empty until the candidate survives pruning
};

void Prune(std::vector<Candidate>* cands, std::size_t k) {
  auto better = [](const Candidate& a, const Candidate& b) {
    return BetterHypothesis(a.hyp, b.hyp);
  };
  if (cands->size() > k) {
    std::partial_sort(cands->begin(), cands->begin() + static_cast<std::ptrdiff_t>(k),
                      cands->end(), better);
    cands->resize(k);
  } else {
    std::sort(cands->begin(), cands->end(), better);
  }
}

Hypothesis Extend(const Hypothesis& h, const StepLogProbs& lp, int label, std::size_t num_frames) {
  Hypothesis out;
  out.labels = h.labels;
  out.emit_frames = h.emit_frames;
  out.frame = h.frame;
  if (label < 0) {
    out.score = h.score + lp.blank;
    out.frame = h.frame + 1;
    out.finished = out.frame == num_frames;
  } else {
    out.score = h.score + lp.labels[static_cast<std::size_t>(label)];
    out.labels.push_back(label);
    out.emit_frames.push_back(h.frame);
  }
  return out;
}

std::vector<NBestEntry> ToNBest(const std::vector<Hypothesis>& hyps) {
  std::vector<NBestEntry> out;
  for (const auto& h : hyps) {
    if (h.finished) out.push_back({h.labels, h.score});
  }
  return out;
}

}  // namespace

Beam InitialBeam(TransducerScorer& scorer) {
  if (scorer.num_frames() == 0) throw DimensionError("decoder: empty encoded sequence");
  Beam beam;
  Hypothesis h;
  h.state = scorer.Initial();
  beam.hyps.push_back(std::move(h));
  return beam;
}

Beam Step(const Beam& beam, TransducerScorer& scorer, std::size_t beam_size,
          std::size_t max_labels) {
  if (beam.hyps.empty()) throw ConfigError("Step: empty beam");
  if (beam_size < 1) throw ConfigError("Step: beam size must be >= 1");
  const std::size_t T = scorer.num_frames();
  const std::size_t V = scorer.vocab_size();

  std::vector<Candidate> cands;
  cands.reserve(beam.hyps.size() * (V + 1));
  for (std::size_t i = 0; i < beam.hyps.size(); ++i) {
    const Hypothesis& h = beam.hyps[i];
    if (h.finished) {
      Hypothesis carry = h;
      carry.state = {};
      cands.push_back({i, -1, std::move(carry)});
      continue;
    }
    const StepLogProbs lp = scorer.Score(h.frame, h.state);
    cands.push_back({i, -1, Extend(h, lp, -1, T)});
    if (h.labels.size() >= max_labels) continue;
    for (std::size_t y = 0; y < V; ++y) {
      cands.push_back({i, static_cast<int>(y), Extend(h, lp, static_cast<int>(y), T)});
    }
  }
  Prune(&cands, beam_size);

  Beam next;
  next.steps = beam.steps + 1;
  next.hyps.reserve(cands.size());
  for (auto& c : cands) {
    const PredState& parent = beam.hyps[c.parent].state;
    c.hyp.state = c.label < 0 ? parent : scorer.Advance(parent, c.label);
    next.hyps.push_back(std::move(c.hyp));
  }
  return next;
}

bool AlignmentSynchronous(const Beam& beam) {
  for (const auto& h : beam.hyps) {
    if (!h.finished && h.alignment_length() != beam.steps) return false;
  }
  return true;
}

DecodeResult DecodeAlignmentSync(TransducerScorer& scorer, const AlignmentSyncOptions& options) {
  if (options.beam < 1) throw ConfigError("decode: beam size must be >= 1");
  const std::size_t need = std::max<std::size_t>(1, options.min_finished);
  Beam beam = InitialBeam(scorer);
  DecodeResult result;
  for (;;) {
    beam = Step(beam, scorer, options.beam, options.max_labels);
    const bool synchronous = AlignmentSynchronous(beam);
    assert(synchronous);
    if (!synchronous) ++result.invariant_violations;

    const std::size_t top = std::min(need, beam.hyps.size());
    bool done = true;
    for (std::size_t i = 0; i < top; ++i) done = done && beam.hyps[i].finished;
    bool any_open = false;
    for (const auto& h : beam.hyps) any_open = any_open || !h.finished;
    if (done || !any_open) break;
  }
  result.steps = beam.steps;
  result.nbest = ToNBest(beam.hyps);
  return result;
}

DecodeResult DecodeFrameSync(TransducerScorer& scorer, const FrameSyncOptions& options) {
  if (options.beam < 1) throw ConfigError("decode: beam size must be >= 1");
  if (options.max_expansions_per_frame < 1) {
    throw ConfigError("decode: per-frame expansion cap must be >= 1");
  }
  const std::size_t T = scorer.num_frames();
  const std::size_t V = scorer.vocab_size();
  const std::size_t K = options.beam;
  Beam beam = InitialBeam(scorer);
  DecodeResult result;

  // Keeps the better of two hypotheses carrying the same label sequence.
  auto merge = [](std::map<std::vector<int>, Hypothesis>* pool, Hypothesis h) {
    auto it = pool->find(h.labels);
    if (it == pool->end()) {
      pool->emplace(h.labels, std::move(h));
    } else if (BetterHypothesis(h, it->second)) {
      it->second = std::move(h);
    }
  };

  std::vector<Hypothesis> current = std::move(beam.hyps);
  for (std::size_t t = 0; t < T; ++t) {
    std::map<std::vector<int>, Hypothesis> next;  // moved past frame t
    std::vector<Hypothesis> active = std::move(current);
    for (std::size_t round = 0; !active.empty(); ++round) {
      ++result.steps;
      std::map<std::vector<int>, Hypothesis> stay;  // one more label at frame t
      for (const Hypothesis& h : active) {
        const StepLogProbs lp = scorer.Score(t, h.state);
        Hypothesis b = Extend(h, lp, -1, T);
        b.state = h.state;
        merge(&next, std::move(b));
        if (round >= options.max_expansions_per_frame || h.labels.size() >= options.max_labels) {
          continue;
        }
        for (std::size_t y = 0; y < V; ++y) {
          Hypothesis e = Extend(h, lp, static_cast<int>(y), T);
          // Parent state for now; advanced only if it survives.
          e.state = h.state;
          merge(&stay, std::move(e));
        }
      }
      // Joint pruning of both pools to K.
      std::vector<Hypothesis> pool;
      for (auto& [_, h] : next) pool.push_back(std::move(h));
      const std::size_t moved = pool.size();
      for (auto& [_, h] : stay) pool.push_back(std::move(h));
      std::vector<std::size_t> order(pool.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return BetterHypothesis(pool[a], pool[b]);
      });
      if (order.size() > K) order.resize(K);
      next.clear();
      active.clear();
      for (std::size_t i : order) {
        Hypothesis& h = pool[i];
        if (i < moved) {
          next.emplace(h.labels, std::move(h));
        } else {
          h.state = scorer.Advance(h.state, h.labels.back());
          active.push_back(std::move(h));
        }
      }
    }
    for (auto& [_, h] : next) current.push_back(std::move(h));
    std::sort(current.begin(), current.end(), BetterHypothesis);
  }
  result.nbest = ToNBest(current);
  return result;
}

ExhaustiveResult DecodeExhaustive(TransducerScorer& scorer, std::size_t max_labels) {
  const std::size_t T = scorer.num_frames();
  const std::size_t V = scorer.vocab_size();
  if (T < 1 || T > kExhaustiveMaxFrames || max_labels > kExhaustiveMaxLabels || V < 1 ||
      V > kExhaustiveMaxVocab) {
    throw ConfigError("DecodeExhaustive: instance too large (T <= 6, U_max <= 4, V <= 4)");
  }
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  ExhaustiveResult out;
  out.best_max_score = kNegInf;
  out.best_sum_score = kNegInf;

  // Depth-first over label sequences in lexicographic order; `states` holds the
  // prediction state of every prefix of `seq`.
  std::vector<int> seq;
  std::vector<PredState> states{scorer.Initial()};
  auto score_sequence = [&]() {
    const std::size_t U = seq.size();
    std::vector<StepLogProbs> lp(T * (U + 1));
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t u = 0; u <= U; ++u) lp[t * (U + 1) + u] = scorer.Score(t, states[u]);
    }
    std::vector<double> amax(T * (U + 1), kNegInf), asum(T * (U + 1), kNegInf);
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t u = 0; u <= U; ++u) {
        const std::size_t i = t * (U + 1) + u;
        if (t == 0 && u == 0) {
          amax[i] = asum[i] = 0.0;
          continue;
        }
        if (t > 0) {
          const std::size_t p = i - (U + 1);
          amax[i] = std::max(amax[i], amax[p] + lp[p].blank);
          asum[i] = ops::LogSumExp(asum[i], asum[p] + lp[p].blank);
        }
        if (u > 0) {
          const double e = lp[i - 1].labels[static_cast<std::size_t>(seq[u - 1])];
          amax[i] = std::max(amax[i], amax[i - 1] + e);
          asum[i] = ops::LogSumExp(asum[i], asum[i - 1] + e);
        }
      }
    }
    const std::size_t last = (T - 1) * (U + 1) + U;
    const double smax = amax[last] + lp[last].blank;
    const double ssum = asum[last] + lp[last].blank;
    out.sequences.push_back(seq);
    out.max_scores.push_back(smax);
    out.sum_scores.push_back(ssum);
    // Enumeration is lexicographic, so strict '>' keeps the smallest sequence on ties.
    if (smax > out.best_max_score) {
      out.best_max_score = smax;
      out.best_max = seq;
    }
    if (ssum > out.best_sum_score) {
      out.best_sum_score = ssum;
      out.best_sum = seq;
    }
  };
  auto visit = [&](auto&& self) -> void {
    score_sequence();
    if (seq.size() == max_labels) return;
    for (std::size_t y = 0; y < V; ++y) {
      seq.push_back(static_cast<int>(y));
      states.push_back(scorer.Advance(states.back(), static_cast<int>(y)));
      self(self);
      states.pop_back();
      seq.pop_back();
    }
  };
  visit(visit);
  return out;
}

void WriteNBest(std::ostream& os, const std::vector<NBestEntry>& nbest) {
  const auto flags = os.flags();
  const auto precision = os.precision();
  os << std::fixed << std::setprecision(6);
  for (std::size_t i = 0; i < nbest.size(); ++i) {
    os << (i + 1) << '\t' << nbest[i].score << '\t';
    for (std::size_t j = 0; j < nbest[i].labels.size(); ++j) {
      if (j) os << ' ';
      os << nbest[i].labels[j];
    }
    os << '\n';
  }
  os.flags(flags);
  os.precision(precision);
}

std::string FormatNBest(const std::vector<NBestEntry>& nbest) {
  std::ostringstream os;
  WriteNBest(os, nbest);
  return os.str();
}

}  // namespace fhat
