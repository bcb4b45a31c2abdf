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

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>

#include "doctest.h"
#include "fhat/decoder.h"
#include "fhat/errors.h"
#include "fhat/hat_model.h"
#include "fhat/rng.h"

namespace fhat {
namespace {

// Same distribution at every (t, state).
class FixedScorer : public TransducerScorer {
 public:
  FixedScorer(std::size_t frames, double blank_prob, std::vector<double> label_weights)
      : frames_(frames) {
    lp_.blank = std::log(blank_prob);
    double z = 0.0;
    for (double w : label_weights) z += w;
    for (double w : label_weights) lp_.labels.push_back(std::log((1.0 - blank_prob) * w / z));
  }
  std::size_t num_frames() const override { return frames_; }
  std::size_t vocab_size() const override { return lp_.labels.size(); }
  PredState Initial() override { return {}; }
  PredState Advance(const PredState& s, int) override { return s; }
  StepLogProbs Score(std::size_t, const PredState&) override { return lp_; }

 private:
  std::size_t frames_;
  StepLogProbs lp_;
};

// A random tiny HAT model bound to a random encoding.
struct RandomInstance {
  HatConfig config;
  ParamSet params;
  Tensor encoded;
  std::unique_ptr<HatScorer> scorer;

  RandomInstance(std::uint64_t seed, std::size_t T, std::size_t V,
                 PredNetKind kind = PredNetKind::kEmbedding) {
    config.encoder.model_dim = 4;
    config.encoder.attention_heads = 1;
    config.pred.kind = kind;
    config.pred.embed_dim = 4;
    config.pred.hidden = 4;
    config.vocab_size = V;
    config.joint_dim = 6;
    params = InitHatParams(config, seed);
    Rng rng(seed ^ 0xabcdefULL);
    for (auto& e : params) {
      for (auto& v : e.value.data()) v += 0.5 * rng.Normal();
    }
    encoded = rng.NormalTensor({T, 4}, 1.5);
    scorer = std::make_unique<HatScorer>(config, params, encoded);
  }
};

TEST_CASE("greedy decoding stays within the step bound") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    RandomInstance inst(seed, 5, 1);
    const DecodeResult r = DecodeAlignmentSync(*inst.scorer, {1, 7, 1});
    CHECK(r.steps <= 5 + 7);
    REQUIRE(r.nbest.size() == 1);
  }
}

TEST_CASE("decoding stops once the best hypothesis is finished") {
  // Blank dominates: the all-blank path finishes after T steps and is best.
  FixedScorer s(6, 0.999, {1, 1, 1});
  const DecodeResult r = DecodeAlignmentSync(s, {4, 30, 1});
  CHECK(r.steps == 6);
  REQUIRE(!r.nbest.empty());
  CHECK(r.nbest[0].labels.empty());
  CHECK(r.nbest[0].score == doctest::Approx(6 * std::log(0.999)));
}

TEST_CASE("forced labels use every step of the bound") {
  // Labels dominate until U_max, then only blank remains.
  FixedScorer s(6, 1e-4, {1, 3});
  const DecodeResult r = DecodeAlignmentSync(s, {2, 30, 1});
  CHECK(r.steps == 36);
  REQUIRE(!r.nbest.empty());
  CHECK(r.nbest[0].labels == std::vector<int>(30, 1));
  CHECK(r.invariant_violations == 0);
}

TEST_CASE("step count bound for six frames and thirty labels") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    RandomInstance inst(seed, 6, 5);
    const DecodeResult r = DecodeAlignmentSync(*inst.scorer, {8, 30, 1});
    CHECK(r.steps <= 36);
  }
}

TEST_CASE("alignment-length synchrony after every step") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    const auto T = static_cast<std::size_t>(rng.UniformInt(1, 6));
    const auto V = static_cast<std::size_t>(rng.UniformInt(1, 5));
    const auto K = static_cast<std::size_t>(rng.UniformInt(1, 10));
    const auto U = static_cast<std::size_t>(rng.UniformInt(0, 6));
    RandomInstance inst(seed, T, V);
    Beam beam = InitialBeam(*inst.scorer);
    for (std::size_t n = 1; n <= T + U; ++n) {
      beam = Step(beam, *inst.scorer, K, U);
      CHECK(beam.steps == n);
      CHECK(AlignmentSynchronous(beam));
      CHECK(beam.hyps.size() <= K);
      for (const auto& h : beam.hyps) {
        CHECK(h.frame <= T);
        CHECK(h.labels.size() <= U);
        CHECK(h.finished == (h.frame == T));
      }
      for (std::size_t i = 1; i < beam.hyps.size(); ++i) {
        CHECK_FALSE(BetterHypothesis(beam.hyps[i], beam.hyps[i - 1]));
      }
    }
    // Every hypothesis is finished by T + U steps.
    for (const auto& h : beam.hyps) CHECK(h.finished);
    CHECK(DecodeAlignmentSync(*inst.scorer, {K, U, 1}).invariant_violations == 0);
  }
}

TEST_CASE("alignment-synchronous beam matches the exhaustive oracle") {
  std::size_t instances = 0;
  for (std::uint64_t seed = 0; seed < 220; ++seed) {
    Rng rng(seed + 9000);
    const auto T = static_cast<std::size_t>(rng.UniformInt(1, 4));
    const auto V = static_cast<std::size_t>(rng.UniformInt(1, 3));
    const auto U = static_cast<std::size_t>(rng.UniformInt(0, 3));
    RandomInstance inst(seed, T, V, seed % 2 ? PredNetKind::kRecurrent : PredNetKind::kEmbedding);
    const ExhaustiveResult oracle = DecodeExhaustive(*inst.scorer, U);
    const DecodeResult r = DecodeAlignmentSync(*inst.scorer, {64, U, 1});
    REQUIRE(!r.nbest.empty());
    INFO("seed " << seed);
    CHECK(r.nbest[0].labels == oracle.best_max);
    CHECK(r.nbest[0].score == doctest::Approx(oracle.best_max_score).epsilon(1e-12));
    CHECK(r.invariant_violations == 0);
    ++instances;
  }
  CHECK(instances >= 200);
}

TEST_CASE("frame-synchronous greedy agrees with alignment-synchronous greedy") {
  std::size_t compared = 0;
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    Rng rng(seed);
    const auto T = static_cast<std::size_t>(rng.UniformInt(1, 6));
    const auto V = static_cast<std::size_t>(rng.UniformInt(1, 4));
    RandomInstance inst(seed, T, V);
    // Skip instances where some greedy decision is a near tie.
    bool ambiguous = false;
    {
      PredState s = inst.scorer->Initial();
      std::size_t t = 0, u = 0;
      while (t < T && u <= 20) {
        const StepLogProbs lp = inst.scorer->Score(t, s);
        std::vector<double> all{lp.blank};
        all.insert(all.end(), lp.labels.begin(), lp.labels.end());
        const auto best = static_cast<std::size_t>(
            std::max_element(all.begin(), all.end()) - all.begin());
        std::sort(all.begin(), all.end(), std::greater<>());
        if (all.size() > 1 && all[0] - all[1] <= 1e-6) ambiguous = true;
        if (best == 0) {
          ++t;
        } else {
          s = inst.scorer->Advance(s, static_cast<int>(best - 1));
          ++u;
        }
      }
      // Label-happy random models can loop past any cap; leave those out.
      if (u > 20) ambiguous = true;
    }
    if (ambiguous) continue;
    const DecodeResult a = DecodeAlignmentSync(*inst.scorer, {1, 20, 1});
    const DecodeResult f = DecodeFrameSync(*inst.scorer, {1, 20, 20});
    REQUIRE(!a.nbest.empty());
    REQUIRE(!f.nbest.empty());
    CHECK(a.nbest[0].labels == f.nbest[0].labels);
    CHECK(a.nbest[0].score == doctest::Approx(f.nbest[0].score).epsilon(1e-12));
    ++compared;
  }
  CHECK(compared >= 150);
}

TEST_CASE("frame-synchronous search on an all-blank model") {
  FixedScorer s(4, 0.999, {1, 2});
  const DecodeResult r = DecodeFrameSync(s, {4, 10, 3});
  REQUIRE(!r.nbest.empty());
  CHECK(r.nbest[0].labels.empty());
}

TEST_CASE("frame-synchronous search with a wide beam matches the oracle") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed + 4000);
    const auto T = static_cast<std::size_t>(rng.UniformInt(1, 4));
    const auto V = static_cast<std::size_t>(rng.UniformInt(1, 3));
    const auto U = static_cast<std::size_t>(rng.UniformInt(0, 3));
    RandomInstance inst(seed, T, V);
    const ExhaustiveResult oracle = DecodeExhaustive(*inst.scorer, U);
    const DecodeResult r = DecodeFrameSync(*inst.scorer, {256, U, U + 1});
    REQUIRE(!r.nbest.empty());
    CHECK(r.nbest[0].labels == oracle.best_max);
    CHECK(r.nbest[0].score == doctest::Approx(oracle.best_max_score).epsilon(1e-12));
  }
}

TEST_CASE("exhaustive oracle on a single frame") {
  // b = 0.6, P(a) = 0.4: sequence a^n scores 0.4^n * 0.6 by either criterion.
  FixedScorer s(1, 0.6, {1});
  const ExhaustiveResult r = DecodeExhaustive(s, 3);
  REQUIRE(r.sequences.size() == 4);
  for (std::size_t n = 0; n < 4; ++n) {
    CHECK(r.sequences[n].size() == n);
    const double want = std::log(std::pow(0.4, static_cast<double>(n)) * 0.6);
    CHECK(r.max_scores[n] == doctest::Approx(want).epsilon(1e-14));
    CHECK(r.sum_scores[n] == doctest::Approx(want).epsilon(1e-14));
  }
  CHECK(r.best_max.empty());
}

TEST_CASE("exhaustive sum score equals the hat likelihood") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    Rng rng(seed);
    const auto T = static_cast<std::size_t>(rng.UniformInt(1, 4));
    RandomInstance inst(seed, T, 2, seed % 2 ? PredNetKind::kRecurrent : PredNetKind::kEmbedding);
    const ExhaustiveResult r = DecodeExhaustive(*inst.scorer, 3);
    for (std::size_t i = 0; i < r.sequences.size(); ++i) {
      const double loss = HatLoss(inst.encoded, r.sequences[i], inst.params, inst.config);
      CHECK(std::exp(r.sum_scores[i]) == doctest::Approx(std::exp(-loss)).epsilon(1e-10));
      CHECK(r.max_scores[i] <= r.sum_scores[i] + 1e-12);
    }
  }
}

TEST_CASE("exhaustive oracle size limits") {
  FixedScorer big_t(7, 0.5, {1});
  CHECK_THROWS_AS(DecodeExhaustive(big_t, 2), ConfigError);
  FixedScorer ok(3, 0.5, {1});
  CHECK_THROWS_AS(DecodeExhaustive(ok, 5), ConfigError);
  FixedScorer big_v(3, 0.5, {1, 1, 1, 1, 1});
  CHECK_THROWS_AS(DecodeExhaustive(big_v, 2), ConfigError);
}

TEST_CASE("wider beams never lower the top score") {
  std::size_t violations = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed + 77);
    const auto T = static_cast<std::size_t>(rng.UniformInt(1, 6));
    const auto V = static_cast<std::size_t>(rng.UniformInt(1, 5));
    RandomInstance inst(seed, T, V);
    double prev = -1e300;
    for (std::size_t k : {1, 2, 4, 8, 16, 64}) {
      const double s = DecodeAlignmentSync(*inst.scorer, {k, 6, 1}).nbest.at(0).score;
      if (s < prev - 1e-12) ++violations;
      prev = std::max(prev, s);
    }
  }
  CHECK(violations == 0);
}

TEST_CASE("decoding is deterministic") {
  RandomInstance a(5, 5, 4), b(5, 5, 4);
  const DecodeResult ra = DecodeAlignmentSync(*a.scorer, {6, 6, 3});
  const DecodeResult rb = DecodeAlignmentSync(*b.scorer, {6, 6, 3});
  CHECK(FormatNBest(ra.nbest) == FormatNBest(rb.nbest));
  CHECK(ra.steps == rb.steps);
}

TEST_CASE("n-best collection and text output") {
  RandomInstance inst(8, 4, 3);
  const DecodeResult r = DecodeAlignmentSync(*inst.scorer, {8, 5, 4});
  CHECK(r.nbest.size() >= 4);
  for (std::size_t i = 1; i < r.nbest.size(); ++i) CHECK(r.nbest[i - 1].score >= r.nbest[i].score);
  const std::string text = FormatNBest({{{3, 1, 2}, -1.5}, {{}, -2.25}});
  CHECK(text == "1\t-1.500000\t3 1 2\n2\t-2.250000\t\n");
}

TEST_CASE("tie-breaking is lexicographic on labels") {
  // Two labels with equal probability: the smaller id wins.
  FixedScorer s(2, 0.1, {1, 1});
  const DecodeResult r = DecodeAlignmentSync(s, {1, 1, 1});
  REQUIRE(!r.nbest.empty());
  CHECK(r.nbest[0].labels == std::vector<int>{0});
  Hypothesis a, b;
  a.score = b.score = -1.0;
  a.labels = {0, 2};
  b.labels = {1};
  CHECK(BetterHypothesis(a, b));
  CHECK_FALSE(BetterHypothesis(b, a));
}

TEST_CASE("decoder argument validation") {
  FixedScorer s(2, 0.5, {1});
  CHECK_THROWS_AS(DecodeAlignmentSync(s, {0, 3, 1}), ConfigError);
  CHECK_THROWS_AS(DecodeFrameSync(s, {2, 3, 0}), ConfigError);
  FixedScorer empty(0, 0.5, {1});
  CHECK_THROWS_AS(DecodeAlignmentSync(empty, {2, 3, 1}), DimensionError);
}

}  // namespace
}  // namespace fhat
