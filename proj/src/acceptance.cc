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

#include "fhat/acceptance.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>
#include <ostream>
#include <sstream>

#include "fhat/checkpoint.h"
#include "fhat/costmodel.h"
#include "fhat/decoder.h"
#include "fhat/encoder.h"
#include "fhat/errors.h"
#include "fhat/grad_check.h"
#include "fhat/hat_loss.h"
#include "fhat/hat_model.h"
#include "fhat/mwer.h"
#include "fhat/oracle.h"
#include "fhat/ops.h"
#include "fhat/rng.h"
#include "fhat/trainer.h"
#include "json.hpp"

namespace fhat {

namespace {

using Clock = std::chrono::steady_clock;

std::string Fmt(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), fmt, args...);
  return buf;
}

void Jitter(ParamSet* p, Rng& rng, double scale) {
  for (auto& e : *p) {
    for (auto& v : e.value.data()) v += scale * rng.Normal();
  }
}

// State shared between criteria: 12 audits the decodes of 7 and 11.
struct SynchronyAudit {
  std::size_t decodes = 0;
  std::size_t violations = 0;
  bool end_to_end_ran = false;
};

struct Context {
  const AcceptanceOptions& options;
  SynchronyAudit audit;
  std::vector<ToyModelRun> toy_models;
};

CriterionResult StepCounts(Context&) {
  const std::vector<std::size_t> want{414, 222, 126, 78, 54, 42, 36, 33};
  const CostTable t = PublishedSweepTable();
  std::vector<std::size_t> got;
  for (const auto& r : t.rows) got.push_back(r.decoder_steps);
  std::string list;
  for (std::size_t s : got) list += (list.empty() ? "" : ",") + std::to_string(s);
  return {1, "decoder step counts of the frame-rate sweep", got == want, false, "steps {" + list + "}"};
}

CriterionResult LatencyFit(Context&) {
  const CostTable t = PublishedSweepTable();
  if (!t.decoder_fit) return {2, "fixed per-step decoder cost fit", false, false, "no fit available"};
  const LinearFit& f = *t.decoder_fit;
  return {2, "fixed per-step decoder cost fit", f.r_squared >= 0.99, false,
          Fmt("R^2 %.5f (slope %.4f ms/step, intercept %.3f ms)", f.r_squared, f.slope, f.intercept)};
}

CriterionResult DecoderReductions(Context&) {
  const auto rows = PublishedFrameRateSweep();
  const CostTable t = PublishedSweepTable();
  auto find = [&](const std::string& id) {
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].id == id) return i;
    }
    throw ConfigError("missing row " + id);
  };
  const std::size_t b0 = find("B0"), e6 = find("E6"), e7 = find("E7");
  auto measured = [&](std::size_t i) { return 1.0 - rows[i].decoder_ms / rows[b0].decoder_ms; };
  const double p6 = t.rows[e6].decoder_reduction, p7 = t.rows[e7].decoder_reduction;
  const double m6 = measured(e6), m7 = measured(e7);
  const bool ok = std::abs(p6 - m6) <= 0.02 && std::abs(p7 - m7) <= 0.02;
  return {3, "predicted decoder reductions vs measured", ok, false,
          Fmt("B0->E6 %.1f%% vs %.1f%%, B0->E7 %.1f%% vs %.1f%%", 100 * p6, 100 * m6, 100 * p7, 100 * m7)};
}

CriterionResult EncoderOrderings(Context&) {
  const auto rows = PublishedPlacementAblation();
  std::size_t pairs = 0, agree = 0;
  std::string first_miss;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = i + 1; j < rows.size(); ++j) {
      if (rows[i].f_enc_ms != rows[j].f_enc_ms || rows[i].encoder_ms == rows[j].encoder_ms) continue;
      ++pairs;
      const double ci = MakeCostReport(rows[i].id, rows[i].shorthand).encoder.total;
      const double cj = MakeCostReport(rows[j].id, rows[j].shorthand).encoder.total;
      if ((rows[i].encoder_ms < rows[j].encoder_ms) == (ci < cj) && ci != cj) {
        ++agree;
      } else if (first_miss.empty()) {
        first_miss = std::string(" first disagreement ") + rows[i].id + "/" + rows[j].id;
      }
    }
  }
  const auto sweep = PublishedFrameRateSweep();
  const CostTable t = PublishedSweepTable();
  std::size_t e6 = 0;
  for (std::size_t i = 0; i < sweep.size(); ++i) {
    if (std::string(sweep[i].id) == "E6") e6 = i;
  }
  const double predicted = t.rows[e6].encoder_reduction;
  const double measured = 1.0 - sweep[e6].encoder_ms / sweep[0].encoder_ms;
  const bool ok = pairs > 0 && agree == pairs && std::abs(predicted - measured) <= 0.07;
  return {4, "encoder cost orderings and B0->E6 encoder reduction", ok, false,
          Fmt("%zu/%zu pairwise orderings agree; E6 encoder reduction %.1f%% vs %.1f%%", agree, pairs,
              100 * predicted, 100 * measured) + first_miss};
}

CriterionResult ParamInvariance(Context&) {
  Rng rng(2024);
  std::size_t architectures = 0, conversions = 0, mismatches = 0;
  for (; architectures < 25; ++architectures) {
    HatConfig c;
    EncoderConfig& e = c.encoder;
    e.num_blocks = static_cast<std::size_t>(rng.UniformInt(1, 6));
    e.attention_heads = static_cast<std::size_t>(1) << rng.UniformInt(0, 2);
    e.model_dim = e.attention_heads * static_cast<std::size_t>(rng.UniformInt(1, 4));
    e.conv_kernel_size = static_cast<std::size_t>(2 * rng.UniformInt(1, 3) + 1);
    e.ffn_multiplier = static_cast<std::size_t>(rng.UniformInt(1, 4));
    e.input_dim = static_cast<std::size_t>(rng.UniformInt(1, 8));
    e.subsample_factor = static_cast<std::size_t>(1) << rng.UniformInt(0, 2);
    c.pred.kind = rng.Uniform() < 0.5 ? PredNetKind::kEmbedding : PredNetKind::kRecurrent;
    c.pred.embed_dim = static_cast<std::size_t>(rng.UniformInt(1, 6));
    c.vocab_size = static_cast<std::size_t>(rng.UniformInt(1, 8));
    c.joint_dim = static_cast<std::size_t>(rng.UniformInt(1, 8));
    const std::size_t base = CountParams(c);
    const std::size_t base_materialized = InitHatParams(c, architectures).NumScalars();
    if (base != base_materialized) ++mismatches;
    for (int trial = 0; trial < 4; ++trial) {
      HatConfig f = c;
      for (std::size_t b = 0; b < e.num_blocks; ++b) {
        if (rng.Uniform() < 0.5) f.encoder.funnel.push_back({b, static_cast<std::size_t>(rng.UniformInt(1, 8))});
      }
      ++conversions;
      if (CountParams(f) != base || InitHatParams(f, trial).NumScalars() != base) ++mismatches;
    }
  }
  // Full scale, counted without allocating.
  HatConfig full;
  full.encoder = EncoderConfig::FullScale();
  const std::size_t full_base = CountParams(full);
  for (const auto& row : PublishedFrameRateSweep()) {
    HatConfig f = full;
    f.encoder = WithFunnel(full.encoder, row.shorthand);
    ++conversions;
    if (CountParams(f) != full_base) ++mismatches;
  }
  return {5, "parameter count invariance under funnel conversion", mismatches == 0 && architectures >= 20, false,
          Fmt("%zu architectures, %zu conversions, %zu count changes", architectures, conversions, mismatches)};
}

CriterionResult FrameDurations(Context&) {
  const EncoderConfig base = EncoderConfig::FullScale();
  std::size_t n = 0, bad = 0;
  auto check = [&](const PublishedLatency& row) {
    ++n;
    if (WithFunnel(base, row.shorthand).FrameDurationMs() != row.f_enc_ms) ++bad;
  };
  for (const auto& row : PublishedFrameRateSweep()) check(row);
  for (const auto& row : PublishedPlacementAblation()) check(row);
  return {6, "encoder frame duration law", bad == 0, false,
          Fmt("%zu/%zu configurations match exactly", n - bad, n)};
}

// Tiny random HAT model bound to a random encoding; the shared instance
// family of the oracle criteria.
struct OracleInstance {
  HatConfig config;
  ParamSet params;
  Tensor encoded;
  std::size_t max_labels = 0;

  explicit OracleInstance(std::uint64_t seed) {
    Rng shape(seed + 9000);
    const auto T = static_cast<std::size_t>(shape.UniformInt(1, 4));
    config.vocab_size = static_cast<std::size_t>(shape.UniformInt(1, 3));
    max_labels = static_cast<std::size_t>(shape.UniformInt(0, 3));
    config.encoder.model_dim = 4;
    config.encoder.attention_heads = 1;
    config.pred.kind = seed % 2 ? PredNetKind::kRecurrent : PredNetKind::kEmbedding;
    config.pred.embed_dim = 4;
    config.pred.hidden = 4;
    config.joint_dim = 6;
    params = InitHatParams(config, seed);
    Rng rng(seed ^ 0xabcdefULL);
    Jitter(&params, rng, 0.5);
    encoded = rng.NormalTensor({T, 4}, 1.5);
  }
};

constexpr std::size_t kOracleInstances = 250;

CriterionResult OracleEquivalence(Context& ctx) {
  std::size_t mismatches = 0, violations = 0;
  for (std::uint64_t seed = 0; seed < kOracleInstances; ++seed) {
    OracleInstance inst(seed);
    HatScorer scorer(inst.config, inst.params, inst.encoded);
    const ExhaustiveResult oracle = DecodeExhaustive(scorer, inst.max_labels);
    AlignmentSyncOptions opts;
    opts.beam = 64;
    opts.max_labels = inst.max_labels;
    const DecodeResult r = DecodeAlignmentSync(scorer, opts);
    violations += r.invariant_violations;
    if (r.nbest.empty() || r.nbest[0].labels != oracle.best_max ||
        std::abs(r.nbest[0].score - oracle.best_max_score) > 1e-12 * std::max(1.0, std::abs(oracle.best_max_score))) {
      ++mismatches;
    }
  }
  ctx.audit.decodes += kOracleInstances;
  ctx.audit.violations += violations;
  return {7, "beam search (K=64) vs exhaustive max-alignment oracle", mismatches == 0, false,
          Fmt("%zu instances (T<=4, U_max<=3, V<=3), %zu top-1 mismatches", kOracleInstances, mismatches)};
}

CriterionResult LossVsBruteForce(Context&) {
  double worst_brute = 0.0, worst_oracle = 0.0;
  for (std::uint64_t seed = 0; seed < kOracleInstances; ++seed) {
    OracleInstance inst(seed);
    Rng rng(seed + 31337);
    std::vector<int> ref(static_cast<std::size_t>(rng.UniformInt(0, static_cast<std::int64_t>(inst.max_labels))));
    for (auto& y : ref) y = static_cast<int>(rng.UniformInt(0, static_cast<std::int64_t>(inst.config.vocab_size) - 1));

    ad::Graph g(false);
    g.BindParams(&inst.params, nullptr);
    const Tensor logits = hat::JointLogits(g, inst.config, g.Constant(inst.encoded),
                                           hat::PredictionOutputs(g, inst.config, ref))
                              .value();
    const TransducerLattice lattice = LatticeFromLogits(logits, inst.encoded.rows(), ref);
    const double loss = HatLoss(inst.encoded, ref, inst.params, inst.config);
    worst_brute = std::max(worst_brute, std::abs(std::exp(-loss) - BruteForceAlignmentProbability(lattice)));

    HatScorer scorer(inst.config, inst.params, inst.encoded);
    const ExhaustiveResult oracle = DecodeExhaustive(scorer, inst.max_labels);
    const auto it = std::find(oracle.sequences.begin(), oracle.sequences.end(), ref);
    const double sum = it == oracle.sequences.end()
                           ? -INFINITY
                           : oracle.sum_scores[static_cast<std::size_t>(it - oracle.sequences.begin())];
    worst_oracle = std::max(worst_oracle, std::abs(std::exp(-loss) - std::exp(sum)));
  }
  return {8, "hat loss vs brute-force alignment sums", worst_brute <= 1e-8 && worst_oracle <= 1e-8, false,
          Fmt("%zu instances; max |P - brute| %.2e, max |P - oracle sum| %.2e", kOracleInstances, worst_brute,
              worst_oracle)};
}

CriterionResult GradientChecks(Context&) {
  constexpr std::uint64_t kSeeds = 20;
  struct Component {
    std::string name;
    double worst = 0.0;
  };
  std::vector<Component> parts;
  auto record = [&](const std::string& name, double err) {
    for (auto& p : parts) {
      if (p.name == name) {
        p.worst = std::max(p.worst, err);
        return;
      }
    }
    parts.push_back({name, err});
  };

  EncoderConfig enc;
  enc.num_blocks = 3;
  enc.model_dim = 8;
  enc.attention_heads = 2;
  enc.conv_kernel_size = 3;
  enc.ffn_multiplier = 2;
  enc.input_dim = 4;
  for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
    ParamLayout layout;
    DeclareBlockParams(enc, "b", &layout);
    Rng rng(seed);
    ParamSet p = layout.Materialize(rng);
    Jitter(&p, rng, 0.1);
    Rng xr(seed + 50);
    p.Add("x", xr.NormalTensor({5, 8}));
    record("conformer", GraphMaxRelError(
                            [&](ad::Graph& g) {
                              return RandomReadout(encoder::ConformerBlock(g, g.Param("x"), enc, "b"), seed);
                            },
                            p, 6, seed));
    for (std::size_t s : {1, 2, 4}) {
      record("funnel s=" + std::to_string(s),
             GraphMaxRelError(
                 [&](ad::Graph& g) {
                   return RandomReadout(encoder::FunnelBlock(g, g.Param("x"), enc, "b", s), seed);
                 },
                 p, 6, seed));
    }
  }

  auto tiny_hat = [](PredNetKind kind) {
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
    c.vocab_size = 3;
    c.joint_dim = 5;
    return c;
  };

  const HatConfig jc = tiny_hat(PredNetKind::kEmbedding);
  for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
    ParamSet p = InitHatParams(jc, seed);
    Rng rng(seed + 300);
    Jitter(&p, rng, 0.3);
    ParamSet q;
    for (const char* name : {"joint.enc", "joint.enc_b", "joint.pred", "joint.out", "joint.out_b"}) {
      q.Add(name, p.at(name));
    }
    q.Add("h", rng.NormalTensor({3, jc.encoder.model_dim}));
    q.Add("pv", rng.NormalTensor({2, jc.pred.OutputDim()}));
    record("joint", GraphMaxRelError(
                        [&](ad::Graph& g) {
                          return RandomReadout(hat::JointLogits(g, jc, g.Param("h"), g.Param("pv")), seed);
                        },
                        q));
  }

  for (auto kind : {PredNetKind::kEmbedding, PredNetKind::kRecurrent}) {
    const HatConfig c = tiny_hat(kind);
    for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
      ParamSet p = InitHatParams(c, seed);
      Rng rng(seed + 77);
      Jitter(&p, rng, 0.3);
      ParamSet q;
      for (const auto& e : p) {
        if (e.name.rfind("pred.", 0) == 0) q.Add(e.name, e.value);
      }
      const std::vector<int> labels{1, 0, 2};
      record(PredNetKindName(kind) + " prediction network",
             GraphMaxRelError(
                 [&](ad::Graph& g) { return RandomReadout(hat::PredictionOutputs(g, c, labels), seed); }, q));
    }
  }

  for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
    Rng rng(seed);
    const auto T = static_cast<std::size_t>(rng.UniformInt(1, 4));
    const auto U = static_cast<std::size_t>(rng.UniformInt(0, 3));
    std::vector<int> labels;
    for (std::size_t u = 0; u < U; ++u) labels.push_back(static_cast<int>(rng.UniformInt(0, 2)));
    ParamSet p;
    p.Add("z", rng.NormalTensor({T * (U + 1), 4}));
    record("hat loss", GraphMaxRelError([&](ad::Graph& g) { return HatLossFromLogits(g.Param("z"), T, labels); }, p));
  }

  for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
    Rng rng(seed);
    ParamSet p;
    p.Add("lp", rng.NormalTensor({1, 4}, 2.0));
    const std::vector<double> errors{2, 1, 0, 3};
    const Tensor sm = ops::Softmax(p.at("lp"), 1);
    double bar = 0.0;
    for (std::size_t i = 0; i < 4; ++i) bar += sm[i] * errors[i];
    // W_bar pinned at the evaluation point, as the analytic gradient treats it.
    record("mwer risk", GraphMaxRelError([&](ad::Graph& g) { return MwerRisk(g.Param("lp"), errors, bar); }, p));
  }

  bool ok = true;
  std::string detail;
  for (const auto& p : parts) {
    ok = ok && p.worst <= 1e-4;
    detail += (detail.empty() ? "" : ", ") + p.name + Fmt(" %.1e", p.worst);
  }
  return {9, "analytic vs central-difference gradients (20 seeds each)", ok, false, "max rel err: " + detail};
}

CriterionResult FunnelIdentity(Context&) {
  EncoderConfig c;
  c.num_blocks = 1;
  c.model_dim = 8;
  c.attention_heads = 2;
  c.conv_kernel_size = 3;
  c.input_dim = 4;
  std::size_t identical = 0, n = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed, ++n) {
    ParamLayout layout;
    DeclareBlockParams(c, "b", &layout);
    Rng rng(seed);
    ParamSet p = layout.Materialize(rng);
    Jitter(&p, rng, 0.2);
    const Tensor x = rng.NormalTensor({static_cast<std::size_t>(rng.UniformInt(1, 9)), 8});
    ad::Graph g(false);
    g.BindParams(&p, nullptr);
    const Tensor a = encoder::ConformerBlock(g, g.Constant(x), c, "b").value();
    const Tensor b = encoder::FunnelBlock(g, g.Constant(x), c, "b", 1).value();
    identical += a == b ? 1 : 0;
  }
  return {10, "funnel block with stride 1 equals the conformer block", identical == n, false,
          Fmt("%zu/%zu inputs bit-identical", identical, n)};
}

ToyModelRun TrainToy(Context& ctx, const std::string& name, RunConfig config, std::uint64_t seed,
                     const Dataset& train, const Dataset& test) {
  config.seed = seed;
  std::ostream* log = ctx.options.log;
  if (log) *log << "training " << name << " (seed " << seed << ")\n";
  const TrainResult tr = Train(config, train, log);
  EvalOptions eo;
  eo.beam = config.beam;
  eo.max_labels = config.max_labels;
  eo.workers = ctx.options.eval_workers;
  const EvalResult er = Evaluate(config.ToHatConfig(), tr.params, test, eo);
  ToyModelRun run{name, seed, config, tr.seconds, tr.InitialLoss(), tr.FinalLoss(), er.metrics, er.step_bound};
  ctx.audit.decodes += er.metrics.utterances;
  ctx.audit.violations += er.metrics.invariant_violations;
  if (!ctx.options.artifact_dir.empty()) {
    SaveCheckpoint(ctx.options.artifact_dir / (name + "_seed" + std::to_string(seed) + ".ckpt"), config, tr.params);
  }
  if (log) {
    *log << name << ": " << Fmt("%.0f s, exact %.3f, TER %.3f, mean steps %.2f", tr.seconds,
                                er.metrics.ExactMatchRate(), er.metrics.TokenErrorRate(), er.metrics.MeanSteps())
         << "\n";
  }
  return run;
}

CriterionResult EndToEnd(Context& ctx) {
  const AcceptanceOptions& o = ctx.options;
  if (!o.run_training) return {11, "toy end-to-end training", false, true, "skipped (training disabled)"};
  const SyntheticTask task = AcceptanceTask();
  const Dataset train = GenerateDataset(task, o.train_examples, 0);
  const Dataset test = GenerateDataset(task, o.eval_examples, 1);

  struct Variant {
    std::string name;
    RunConfig config;
    double mean_exact = 0.0;
  };
  std::vector<Variant> variants{{"baseline", ToyBaselineConfig()},
                                {"funnel64-embedding", ToyFunnelConfig(PredNetKind::kEmbedding)},
                                {"funnel64-recurrent", ToyFunnelConfig(PredNetKind::kRecurrent)}};
  bool in_budget = true, bounded = true;
  for (auto& v : variants) {
    for (std::uint64_t seed : o.toy_seeds) {
      ToyModelRun run = TrainToy(ctx, v.name, v.config, seed, train, test);
      in_budget = in_budget && run.train_seconds <= o.train_budget_seconds;
      bounded = bounded && run.metrics.max_steps <= run.step_bound;
      v.mean_exact += run.metrics.ExactMatchRate() / static_cast<double>(o.toy_seeds.size());
      ctx.toy_models.push_back(std::move(run));
    }
  }
  ctx.audit.end_to_end_ran = true;
  const double b0 = variants[0].mean_exact, e6v2 = variants[1].mean_exact, e6rec = variants[2].mean_exact;
  const bool hard = b0 >= 0.8 && e6v2 >= 0.8 && in_budget && bounded;
  const bool soft = e6rec >= e6v2 - 0.02;
  double slowest = 0.0;
  for (const auto& r : ctx.toy_models) slowest = std::max(slowest, r.train_seconds);
  return {11, "toy end-to-end training", hard && soft, false,
          Fmt("exact match: baseline %.3f, funnel64 V^2 %.3f, funnel64 recurrent %.3f (%s V^2 within 2 points); "
              "slowest training %.0f s of %.0f s",
              b0, e6v2, e6rec, soft ? ">=" : "<", slowest, o.train_budget_seconds)};
}

CriterionResult Synchrony(Context& ctx) {
  const auto& a = ctx.audit;
  std::string scope = ctx.audit.end_to_end_ran ? "oracle and end-to-end decodes" : "oracle decodes only";
  return {12, "alignment-length synchrony at every decoder step", a.violations == 0 && a.decodes > 0, false,
          Fmt("%zu decodes (%s), %zu violations", a.decodes, scope.c_str(), a.violations)};
}

}  // namespace

bool AcceptanceReport::AllPassed() const {
  return std::all_of(criteria.begin(), criteria.end(), [](const auto& c) { return c.passed || c.skipped; });
}

std::string AcceptanceReport::ToJson() const {
  nlohmann::json j;
  j["all_passed"] = AllPassed();
  for (const auto& c : criteria) {
    j["criteria"].push_back({{"id", c.id},
                             {"title", c.title},
                             {"status", c.skipped ? "skip" : c.passed ? "pass" : "fail"},
                             {"detail", c.detail},
                             {"seconds", c.seconds}});
  }
  j["toy_models"] = nlohmann::json::array();
  for (const auto& r : toy_models) {
    j["toy_models"].push_back({{"name", r.name},
                               {"seed", r.seed},
                               {"funnel", r.config.funnel},
                               {"subsample_factor", r.config.subsample_factor},
                               {"pred_kind", PredNetKindName(r.config.pred_kind)},
                               {"train_seconds", r.train_seconds},
                               {"initial_loss", r.initial_loss},
                               {"final_loss", r.final_loss},
                               {"exact_match", r.metrics.ExactMatchRate()},
                               {"token_error_rate", r.metrics.TokenErrorRate()},
                               {"mean_steps", r.metrics.MeanSteps()},
                               {"max_steps", r.metrics.max_steps},
                               {"step_bound", r.step_bound}});
  }
  return j.dump(2);
}

SyntheticTask AcceptanceTask() { return SyntheticTask{}; }

RunConfig ToyBaselineConfig() {
  RunConfig c;
  return c;
}

RunConfig ToyFunnelConfig(PredNetKind kind) {
  RunConfig c = ToyBaselineConfig();
  c.subsample_factor = 1;
  c.funnel = "s0^2,s1^2,s2^2,s3^2,s4^2,s5^2";
  c.pred_kind = kind;
  return c;
}

AcceptanceReport RunAcceptance(const AcceptanceOptions& options) {
  Context ctx{options, {}, {}};
  using Fn = CriterionResult (*)(Context&);
  const Fn criteria[kNumCriteria] = {&StepCounts,       &LatencyFit,      &DecoderReductions, &EncoderOrderings,
                                     &ParamInvariance,  &FrameDurations,  &OracleEquivalence, &LossVsBruteForce,
                                     &GradientChecks,   &FunnelIdentity,  &EndToEnd,          &Synchrony};
  if (!options.artifact_dir.empty()) std::filesystem::create_directories(options.artifact_dir);
  AcceptanceReport report;
  for (int i = 0; i < kNumCriteria; ++i) {
    const auto t0 = Clock::now();
    CriterionResult r;
    try {
      r = criteria[i](ctx);
    } catch (const std::exception& e) {
      r = {i + 1, "criterion " + std::to_string(i + 1), false, false, std::string("error: ") + e.what()};
    }
    r.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    if (options.log) *options.log << FormatCriterionLine(r) << std::endl;
    report.criteria.push_back(std::move(r));
  }
  report.toy_models = std::move(ctx.toy_models);
  return report;
}

std::string FormatCriterionLine(const CriterionResult& r) {
  const char* status = r.skipped ? "SKIP" : r.passed ? "PASS" : "FAIL";
  return Fmt("%s %2d  %s: %s (%.1f s)", status, r.id, r.title.c_str(), r.detail.c_str(), r.seconds);
}

}  // namespace fhat
