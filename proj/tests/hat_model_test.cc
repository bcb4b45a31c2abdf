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
#include <map>

#include "doctest.h"
#include "fhat/errors.h"
#include "fhat/hat_loss.h"
#include "fhat/hat_model.h"
#include "fhat/mwer.h"
#include "fhat/oracle.h"
#include "fhat/rng.h"
#include "test_util.h"

namespace fhat {
namespace {

HatConfig TinyHat(PredNetKind kind, std::size_t vocab = 3) {
  HatConfig c;
  c.encoder.num_blocks = 1;
  c.encoder.model_dim = 4;
  c.encoder.attention_heads = 1;
  c.encoder.conv_kernel_size = 3;
  c.encoder.ffn_multiplier = 1;
  c.encoder.input_dim = 3;
  c.encoder.subsample_factor = 1;
  c.pred.kind = kind;
  c.pred.embed_dim = 4;
  c.pred.hidden = 3;
  c.pred.layers = 2;
  c.vocab_size = vocab;
  c.joint_dim = 5;
  return c;
}

void Jitter(ParamSet* p, Rng& rng, double scale = 0.3) {
  for (auto& e : *p) {
    for (auto& v : e.value.data()) v += scale * rng.Normal();
  }
}

TransducerLattice RandomLattice(Rng& rng, std::size_t T, std::size_t U, std::size_t V,
                                std::vector<int>* labels) {
  labels->clear();
  for (std::size_t u = 0; u < U; ++u) labels->push_back(static_cast<int>(rng.UniformInt(0, V - 1)));
  return LatticeFromLogits(rng.NormalTensor({T * (U + 1), V + 1}, 2.0), T, *labels);
}

TEST_CASE("prediction network kind names") {
  CHECK(ParsePredNetKind("embedding") == PredNetKind::kEmbedding);
  CHECK(ParsePredNetKind("lstm") == PredNetKind::kRecurrent);
  CHECK(ParsePredNetKind(PredNetKindName(PredNetKind::kRecurrent)) == PredNetKind::kRecurrent);
  CHECK_THROWS_AS(ParsePredNetKind("gru"), ConfigError);
}

TEST_CASE("embedding network starts from two start symbols") {
  const HatConfig c = TinyHat(PredNetKind::kEmbedding);
  const ParamSet p = InitHatParams(c, 3);
  PredictionNetwork net(c, p);
  const PredState s = net.Initial();
  CHECK(s.context == std::vector<int>{kStartSymbol, kStartSymbol});
  // proj([E[start], E[start]]) + b by hand.
  const Tensor& embed = p.at("pred.embed");
  const Tensor& proj = p.at("pred.proj");
  for (std::size_t j = 0; j < c.pred.embed_dim; ++j) {
    double want = p.at("pred.proj_b")[j];
    for (std::size_t n = 0; n < 2; ++n) {
      for (std::size_t k = 0; k < c.pred.embed_dim; ++k) {
        want += embed.at(c.vocab_size, k) * proj.at(n * c.pred.embed_dim + k, j);
      }
    }
    CHECK(s.output[j] == doctest::Approx(want).epsilon(1e-14));
  }
}

std::vector<std::vector<int>> AllHistories(std::size_t V, std::size_t max_len) {
  std::vector<std::vector<int>> out{{}};
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i].size() == max_len) continue;
    for (std::size_t y = 0; y < V; ++y) {
      auto h = out[i];
      h.push_back(static_cast<int>(y));
      out.push_back(h);
    }
  }
  return out;
}

PredState Consume(PredictionNetwork& net, const std::vector<int>& history) {
  PredState s = net.Initial();
  for (int y : history) s = net.Advance(s, y);
  return s;
}

TEST_CASE("embedding network depends on exactly the last N labels") {
  for (std::size_t n : {1, 2, 3}) {
    HatConfig c = TinyHat(PredNetKind::kEmbedding);
    c.pred.context = n;
    ParamSet p = InitHatParams(c, 7);
    PredictionNetwork net(c, p);
    std::map<std::vector<int>, Tensor> seen;
    std::size_t distinct_checked = 0;
    for (const auto& h : AllHistories(3, 5)) {
      const PredState s = Consume(net, h);
      const std::vector<int> key(s.context.begin(), s.context.end());
      auto [it, inserted] = seen.emplace(key, s.output);
      if (!inserted) CHECK(it->second == s.output);
      ++distinct_checked;
    }
    // Different last-N contexts give different outputs.
    for (auto a = seen.begin(); a != seen.end(); ++a) {
      for (auto b = std::next(a); b != seen.end(); ++b) CHECK(MaxAbsDiff(a->second, b->second) > 1e-9);
    }
    CHECK(distinct_checked == AllHistories(3, 5).size());
  }
}

TEST_CASE("recurrent network sees beyond the last two labels") {
  const HatConfig c = TinyHat(PredNetKind::kRecurrent);
  const ParamSet p = InitHatParams(c, 5);
  PredictionNetwork net(c, p);
  const PredState a = Consume(net, {0, 1, 2, 2});
  const PredState b = Consume(net, {1, 0, 2, 2});
  CHECK(MaxAbsDiff(a.output, b.output) > 1e-9);
  const HatConfig e = TinyHat(PredNetKind::kEmbedding);
  const ParamSet pe = InitHatParams(e, 5);
  PredictionNetwork emb(e, pe);
  CHECK(Consume(emb, {0, 1, 2, 2}).output == Consume(emb, {1, 0, 2, 2}).output);
}

TEST_CASE("incremental prediction matches the batched graph") {
  for (auto kind : {PredNetKind::kEmbedding, PredNetKind::kRecurrent}) {
    const HatConfig c = TinyHat(kind);
    const ParamSet p = InitHatParams(c, 9);
    const std::vector<int> labels{2, 0, 1, 1};
    ad::Graph g(false);
    g.BindParams(&p, nullptr);
    const Tensor batched = hat::PredictionOutputs(g, c, labels).value();
    PredictionNetwork net(c, p);
    PredState s = net.Initial();
    for (std::size_t u = 0; u <= labels.size(); ++u) {
      for (std::size_t j = 0; j < batched.cols(); ++j) {
        CHECK(s.output[j] == doctest::Approx(batched.at(u, j)).epsilon(1e-13));
      }
      if (u < labels.size()) s = net.Advance(s, labels[u]);
    }
  }
}

TEST_CASE("joint output with a zero blank logit and uniform labels") {
  const HatOutput out = ToHatOutput(std::vector<double>{0, 0, 0, 0, 0});
  CHECK(out.blank_prob == 0.5);
  for (double p : out.label_probs) CHECK(p == 0.125);
}

TEST_CASE("joint outputs are normalized") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const HatConfig c = TinyHat(PredNetKind::kEmbedding, 4);
    ParamSet p = InitHatParams(c, seed);
    Rng rng(seed);
    Jitter(&p, rng, 1.0);
    const Tensor h = rng.NormalTensor({1, c.encoder.model_dim}, 3.0);
    const Tensor pv = rng.NormalTensor({1, c.pred.OutputDim()}, 3.0);
    const HatOutput out = JointForward(h.data(), pv.data(), p, c);
    double total = out.blank_prob;
    for (double q : out.label_probs) total += q;
    CHECK(out.blank_prob > 0.0);
    CHECK(out.blank_prob < 1.0);
    CHECK(std::abs(total - 1.0) <= 1e-12);
  }
}

TEST_CASE("log-domain joint output agrees with the probability form") {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const Tensor logits = rng.NormalTensor({1, 6}, 5.0);
    const HatOutput p = ToHatOutput(logits.data());
    const StepLogProbs lp = ToLogProbs(logits.data());
    CHECK(std::exp(lp.blank) == doctest::Approx(p.blank_prob).epsilon(1e-13));
    for (std::size_t k = 0; k < 5; ++k) {
      CHECK(std::exp(lp.labels[k]) == doctest::Approx(p.label_probs[k]).epsilon(1e-12));
    }
  }
}

TEST_CASE("joint gradient matches finite differences") {
  const HatConfig c = TinyHat(PredNetKind::kEmbedding);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    ParamSet p = InitHatParams(c, seed);
    Rng rng(seed + 300);
    Jitter(&p, rng);
    ParamSet q;
    for (const char* name : {"joint.enc", "joint.enc_b", "joint.pred", "joint.out", "joint.out_b"}) {
      q.Add(name, p.at(name));
    }
    q.Add("h", rng.NormalTensor({3, c.encoder.model_dim}));
    q.Add("pv", rng.NormalTensor({2, c.pred.OutputDim()}));
    auto body = [&c, seed](ad::Graph& g) {
      return testing::RandomReadout(hat::JointLogits(g, c, g.Param("h"), g.Param("pv")), seed);
    };
    CHECK(testing::MaxRelError(body, q) <= 1e-6);
  }
}

TEST_CASE("hat loss on single-path lattices") {
  Rng rng(1);
  std::vector<int> labels{1};
  // T = 1, U = 1: emit then the closing blank.
  const TransducerLattice one = LatticeFromLogits(rng.NormalTensor({2, 4}), 1, labels);
  CHECK(LatticeLogLikelihood(one) == doctest::Approx(one.emit(0, 0) + one.blank(0, 1)).epsilon(1e-14));
  // T = 2, U = 0: two blanks.
  const TransducerLattice two = LatticeFromLogits(rng.NormalTensor({2, 4}), 2, {});
  CHECK(LatticeLogLikelihood(two) == doctest::Approx(two.blank(0, 0) + two.blank(1, 0)).epsilon(1e-14));
  // Same through the probability formula of the joint output.
  const Tensor logits = rng.NormalTensor({2, 4});
  const TransducerLattice l = LatticeFromLogits(logits, 1, labels);
  const HatOutput o0 = ToHatOutput(logits.row(0));
  const HatOutput o1 = ToHatOutput(logits.row(1));
  CHECK(std::exp(LatticeLogLikelihood(l)) ==
        doctest::Approx(o0.label_probs[1] * o1.blank_prob).epsilon(1e-13));
}

TEST_CASE("hat loss equals the enumerated alignment sum") {
  Rng rng(10);
  std::vector<int> labels;
  const TransducerLattice l = RandomLattice(rng, 3, 2, 3, &labels);
  CHECK(CountAlignments(3, 2) == 6);
  CHECK(CountAlignments(4, 3) == 20);
  const double brute = BruteForceAlignmentProbability(l);
  CHECK(std::abs(std::exp(LatticeLogLikelihood(l)) - brute) <= 1e-10);

  for (int trial = 0; trial < 250; ++trial) {
    const auto T = static_cast<std::size_t>(rng.UniformInt(1, 4));
    const auto U = static_cast<std::size_t>(rng.UniformInt(0, 3));
    const auto V = static_cast<std::size_t>(rng.UniformInt(1, 3));
    const TransducerLattice r = RandomLattice(rng, T, U, V, &labels);
    const ForwardBackwardResult fb = LatticeForwardBackward(r);
    CHECK(std::abs(std::exp(fb.log_likelihood) - BruteForceAlignmentProbability(r)) <= 1e-8);
    CHECK(fb.log_likelihood == doctest::Approx(fb.beta[0]).epsilon(1e-12));
  }
}

TEST_CASE("hat loss distinguishes label order") {
  const HatConfig c = TinyHat(PredNetKind::kEmbedding);
  const ParamSet p = InitHatParams(c, 2);
  Rng rng(2);
  const Tensor enc = rng.NormalTensor({4, c.encoder.model_dim});
  CHECK(HatLoss(enc, std::vector<int>{0, 1, 2}, p, c) != HatLoss(enc, std::vector<int>{2, 1, 0}, p, c));
}

TEST_CASE("hat loss gradient w.r.t. joint logits") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const auto T = static_cast<std::size_t>(rng.UniformInt(1, 4));
    const auto U = static_cast<std::size_t>(rng.UniformInt(0, 3));
    std::vector<int> labels;
    for (std::size_t u = 0; u < U; ++u) labels.push_back(static_cast<int>(rng.UniformInt(0, 2)));
    ParamSet p;
    p.Add("z", rng.NormalTensor({T * (U + 1), 4}));
    auto body = [T, labels](ad::Graph& g) { return HatLossFromLogits(g.Param("z"), T, labels); };
    CHECK(testing::MaxRelError(body, p) <= 1e-4);
  }
}

TEST_CASE("prediction network gradients") {
  for (auto kind : {PredNetKind::kEmbedding, PredNetKind::kRecurrent}) {
    const HatConfig c = TinyHat(kind);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      ParamSet p = InitHatParams(c, seed);
      Rng rng(seed + 77);
      Jitter(&p, rng);
      ParamSet q;
      for (const auto& e : p) {
        if (e.name.rfind("pred.", 0) == 0) q.Add(e.name, e.value);
      }
      const std::vector<int> labels{1, 0, 2};
      auto body = [&c, labels, seed](ad::Graph& g) {
        return testing::RandomReadout(hat::PredictionOutputs(g, c, labels), seed);
      };
      INFO(PredNetKindName(kind) << " seed " << seed);
      // Unused embedding rows are exactly zero both ways and score 0.
      CHECK(testing::MaxRelError(body, q) <= 1e-4);
    }
  }
}

TEST_CASE("full model gradient") {
  for (auto kind : {PredNetKind::kEmbedding, PredNetKind::kRecurrent}) {
    HatConfig c = TinyHat(kind);
    c.encoder.num_blocks = 2;
    c.encoder.funnel = {{1, 2}};
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
      ParamSet p = InitHatParams(c, seed);
      Rng rng(seed + 5);
      Jitter(&p, rng, 0.1);
      const Tensor x = rng.NormalTensor({6, c.encoder.input_dim});
      const std::vector<int> labels{2, 0};
      auto body = [&c, &x, labels](ad::Graph& g) { return hat::UtteranceLoss(g, c, x, labels); };
      INFO(PredNetKindName(kind) << " seed " << seed);
      CHECK(testing::MaxRelError(body, p, 4, seed) <= 1e-4);
    }
  }
}

TEST_CASE("hat scorer reproduces the lattice") {
  for (auto kind : {PredNetKind::kEmbedding, PredNetKind::kRecurrent}) {
    const HatConfig c = TinyHat(kind);
    const ParamSet p = InitHatParams(c, 12);
    Rng rng(12);
    const Tensor enc = rng.NormalTensor({3, c.encoder.model_dim});
    const std::vector<int> labels{1, 2};
    ad::Graph g(false);
    g.BindParams(&p, nullptr);
    const Tensor logits =
        hat::JointLogits(g, c, g.Constant(enc), hat::PredictionOutputs(g, c, labels)).value();
    const TransducerLattice l = LatticeFromLogits(logits, 3, labels);
    HatScorer scorer(c, p, enc);
    std::vector<PredState> states{scorer.Initial()};
    for (int y : labels) states.push_back(scorer.Advance(states.back(), y));
    for (std::size_t t = 0; t < 3; ++t) {
      for (std::size_t u = 0; u <= labels.size(); ++u) {
        const StepLogProbs lp = scorer.Score(t, states[u]);
        CHECK(lp.blank == doctest::Approx(l.blank(t, u)).epsilon(1e-12));
        if (u < labels.size()) {
          CHECK(lp.labels[static_cast<std::size_t>(labels[u])] ==
                doctest::Approx(l.emit(t, u)).epsilon(1e-12));
        }
      }
    }
  }
}

TEST_CASE("parameter counts") {
  HatConfig base = TinyHat(PredNetKind::kEmbedding);
  base.encoder.num_blocks = 16;
  const HatConfig e1 = [&] {
    HatConfig c = base;
    c.encoder = WithFunnel(base.encoder, "s15^2");
    return c;
  }();
  const HatConfig e6 = [&] {
    HatConfig c = base;
    c.encoder = WithFunnel(base.encoder, "s5^2,s7^2,s9^2,s11^2,s13^2,s15^2");
    return c;
  }();
  CHECK(CountParams(e1) == CountParams(e6));
  CHECK(CountParams(e1) == InitHatParams(e1, 0).NumScalars());
  HatConfig rec = base;
  rec.pred.kind = PredNetKind::kRecurrent;
  rec.pred.hidden = base.pred.embed_dim;
  CHECK(CountParams(rec) > CountParams(base));
  HatConfig wide = base;
  wide.encoder.model_dim *= 2;
  CHECK(CountParams(wide) > CountParams(base));

  // Full-sized layout is counted without allocating it.
  HatConfig big;
  big.encoder = EncoderConfig::FullScale();
  big.vocab_size = 4096;
  big.joint_dim = 640;
  big.pred.embed_dim = 640;
  CHECK(CountParams(big) > 500'000'000);
}

TEST_CASE("edit distance") {
  CHECK(EditDistance(std::vector<int>{}, std::vector<int>{}) == 0);
  CHECK(EditDistance(std::vector<int>{1, 2, 3}, std::vector<int>{1, 2, 3}) == 0);
  CHECK(EditDistance(std::vector<int>{1, 3}, std::vector<int>{1, 2, 3}) == 1);
  CHECK(EditDistance(std::vector<int>{}, std::vector<int>{4, 4}) == 2);
  CHECK(EditDistance(std::vector<int>{3, 2, 1}, std::vector<int>{1, 2, 3}) == 2);
}

TEST_CASE("mwer risk is zero at the evaluation point") {
  const std::vector<double> flat(4, std::log(0.25));
  CHECK(std::abs(MwerRiskValue(flat, std::vector<double>{2, 1, 0, 1})) < 1e-15);
  CHECK(MwerRiskValue(std::vector<double>{-3.0}, std::vector<double>{5.0}) == 0.0);
  CHECK_THROWS_AS(MwerRiskValue(std::vector<double>{}, std::vector<double>{}), ConfigError);
  // With a pinned baseline the value is the centered expected error.
  CHECK(MwerRiskValue(flat, std::vector<double>{2, 1, 0, 1}, 0.0) == doctest::Approx(1.0));
}

TEST_CASE("mwer risk gradient matches finite differences") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    ParamSet p;
    p.Add("lp", rng.NormalTensor({1, 4}, 2.0));
    const std::vector<double> errors{2, 1, 0, 3};
    // The value at the point is taken with W_bar frozen, which is what the
    // analytic gradient differentiates.
    const double bar = [&] {
      const Tensor sm = ops::Softmax(p.at("lp"), 1);
      double m = 0;
      for (std::size_t i = 0; i < 4; ++i) m += sm[i] * errors[i];
      return m;
    }();
    auto body = [errors, bar](ad::Graph& g) { return MwerRisk(g.Param("lp"), errors, bar); };
    CHECK(testing::MaxRelError(body, p) <= 1e-4);
  }
}

TEST_CASE("mwer loss through the model") {
  const HatConfig c = TinyHat(PredNetKind::kEmbedding);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    ParamSet p = InitHatParams(c, seed);
    Rng rng(seed);
    Jitter(&p, rng, 0.2);
    const Tensor enc = rng.NormalTensor({3, c.encoder.model_dim});
    const std::vector<std::vector<int>> nbest{{0, 1}, {0}, {2, 1, 1}, {}};
    const std::vector<int> ref{0, 1};
    // Baseline at the unperturbed parameters.
    std::vector<double> lps, errs;
    for (const auto& h : nbest) {
      lps.push_back(-HatLoss(enc, h, p, c));
      errs.push_back(static_cast<double>(EditDistance(h, ref)));
    }
    const double value = MwerRiskValue(lps, errs);
    CHECK(std::abs(value) < 1e-12);
    const std::vector<double> sm = [&] {
      double mx = *std::max_element(lps.begin(), lps.end()), z = 0;
      std::vector<double> q;
      for (double v : lps) {
        q.push_back(std::exp(v - mx));
        z += q.back();
      }
      for (auto& v : q) v /= z;
      return q;
    }();
    double bar = 0;
    for (std::size_t i = 0; i < sm.size(); ++i) bar += sm[i] * errs[i];
    MwerOptions opts;
    opts.hat_scale = 0.0;
    opts.baseline = bar;
    auto body = [&c, &enc, nbest, ref, opts](ad::Graph& g) {
      return MwerLoss(g, c, g.Constant(enc), nbest, ref, opts);
    };
    // Only joint and prediction parameters reach the loss from a fixed encoding.
    ParamSet q;
    for (const auto& e : p) {
      if (e.name.rfind("joint.", 0) == 0 || e.name.rfind("pred.", 0) == 0) q.Add(e.name, e.value);
    }
    CHECK(testing::MaxRelError(body, q, 8, seed) <= 1e-4);
  }
  CHECK_THROWS_AS(
      [&] {
        ParamSet p = InitHatParams(c, 0);
        ad::Graph g;
        g.BindParams(&p, nullptr);
        MwerLoss(g, c, g.Constant(Tensor({2, c.encoder.model_dim})), {}, std::vector<int>{1});
      }(),
      ConfigError);
}

TEST_CASE("mwer loss adds the scaled hat term") {
  const HatConfig c = TinyHat(PredNetKind::kEmbedding);
  const ParamSet p = InitHatParams(c, 1);
  Rng rng(1);
  const Tensor enc = rng.NormalTensor({3, c.encoder.model_dim});
  const std::vector<int> ref{2};
  ad::Graph g(false);
  g.BindParams(&p, nullptr);
  const double total = MwerLoss(g, c, g.Constant(enc), {{2}, {1}}, ref).value()[0];
  CHECK(total == doctest::Approx(kDefaultMwerHatScale * HatLoss(enc, ref, p, c)).epsilon(1e-12));
}

}  // namespace
}  // namespace fhat
