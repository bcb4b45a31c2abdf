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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include "doctest.h"
#include "fhat/acceptance.h"
#include "fhat/checkpoint.h"
#include "fhat/errors.h"
#include "fhat/evaluator.h"
#include "fhat/run_config.h"
#include "fhat/synthetic.h"
#include "fhat/trainer.h"

namespace fhat {
namespace {

namespace fs = std::filesystem;

fs::path TempDir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("fhat_harness_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

// Small enough for unit-test budgets.
RunConfig TinyRun() {
  RunConfig c;
  c.num_blocks = 2;
  c.model_dim = 16;
  c.conv_kernel_size = 3;
  c.pred_embed_dim = 16;
  c.pred_hidden = 16;
  c.joint_dim = 32;
  c.vocab_size = 5;
  c.input_dim = 6;
  c.train_steps = 20;
  c.batch_size = 4;
  c.warmup_steps = 5;
  c.log_every = 5;
  return c;
}

SyntheticTask TinyTask() {
  SyntheticTask t;
  t.vocab_size = 5;
  t.feature_dim = 6;
  t.frames_per_token = 4;
  t.max_labels = 4;
  t.seed = 11;
  return t;
}

TEST_CASE("noise-free example is its prototypes repeated") {
  SyntheticTask t = TinyTask();
  t.noise = 0.0;
  t.min_labels = t.max_labels = 3;
  const Tensor protos = t.Prototypes();
  const Example e = GenerateExample(t, protos, 0, 7);
  REQUIRE(e.labels.size() == 3);
  CHECK(e.features.rows() == 12);
  for (std::size_t r = 0; r < 12; ++r) {
    for (std::size_t k = 0; k < t.feature_dim; ++k) {
      CHECK(e.features.at(r, k) == protos.at(static_cast<std::size_t>(e.labels[r / 4]), k));
    }
  }
}

TEST_CASE("generated datasets respect the task bounds") {
  SyntheticTask t = TinyTask();
  const Dataset ds = GenerateDataset(t, 200);
  for (const auto& e : ds.examples) {
    CHECK(e.labels.size() >= t.min_labels);
    CHECK(e.labels.size() <= t.max_labels);
    CHECK(e.labels.size() <= (e.features.rows() + t.frames_per_token - 1) / t.frames_per_token);
    CHECK(e.features.cols() == t.feature_dim);
    for (int y : e.labels) {
      CHECK(y >= 0);
      CHECK(y < static_cast<int>(t.vocab_size));
    }
  }
  const Dataset other = GenerateDataset(t, 200, 1);
  std::size_t same = 0;
  for (std::size_t i = 0; i < 200; ++i) same += ds.examples[i].labels == other.examples[i].labels;
  CHECK(same < 20);
  CHECK(GenerateDataset(t, 200).examples[123].features == ds.examples[123].features);
  CHECK_THROWS_AS(GenerateDataset(SyntheticTask{.frames_per_token = 0}, 1), ConfigError);
}

TEST_CASE("dataset files are deterministic and round-trip") {
  const fs::path dir = TempDir("dataset");
  const Dataset ds = GenerateDataset(TinyTask(), 50);
  const fs::path m1 = WriteDataset(ds, dir / "a");
  const fs::path m2 = WriteDataset(GenerateDataset(TinyTask(), 50), dir / "b");
  CHECK(m1.extension() == ".manifest");
  CHECK(Slurp(dir / "a.bin") == Slurp(dir / "b.bin"));
  CHECK(Slurp(dir / "a.bin").size() > 0);

  const Dataset back = ReadDataset(m1);
  CHECK(ReadDataset(dir / "a").examples.size() == 50);
  REQUIRE(back.examples.size() == 50);
  CHECK(back.task.seed == ds.task.seed);
  CHECK(back.task.noise == ds.task.noise);
  for (std::size_t i = 0; i < 50; ++i) {
    CHECK(back.examples[i].features == ds.examples[i].features);
    CHECK(back.examples[i].labels == ds.examples[i].labels);
  }

  const std::string bin = Slurp(dir / "a.bin");
  std::ofstream(dir / "a.bin", std::ios::binary | std::ios::trunc) << bin.substr(0, bin.size() / 2);
  CHECK_THROWS_AS(ReadDataset(m1), IoError);
  std::ofstream(dir / "c.manifest") << "not a manifest\n";
  CHECK_THROWS_AS(ReadDataset(dir / "c.manifest"), ParseError);
  CHECK_THROWS_AS(ReadDataset(dir / "missing"), IoError);
  fs::remove_all(dir);
}

TEST_CASE("run config json round-trip and validation") {
  RunConfig c = ToyFunnelConfig(PredNetKind::kRecurrent);
  c.mwer_steps = 7;
  c.peak_learning_rate = 1.25e-3;
  const RunConfig back = RunConfig::FromJson(c.ToJson());
  CHECK(back == c);
  CHECK(back.ToHatConfig().encoder.TotalReductionRatio() == 64);
  CHECK(RunConfig{}.ToHatConfig().encoder.TotalReductionRatio() == 4);

  CHECK(RunConfig::FromJson("{}") == RunConfig{});
  CHECK(RunConfig::FromJson(R"({"beam": 9})").beam == 9);
  CHECK_THROWS_AS(RunConfig::FromJson(R"({"bogus": 1})"), ParseError);
  CHECK_THROWS_AS(RunConfig::FromJson(R"({"beam": "wide"})"), ParseError);
  CHECK_THROWS_AS(RunConfig::FromJson("[1, 2"), ParseError);
  CHECK_THROWS_AS(RunConfig::FromJson(R"({"beam": 0})"), ConfigError);
  CHECK_THROWS_AS(RunConfig::FromJson(R"({"funnel": "s9^2"})"), ConfigError);
  CHECK_THROWS_AS(RunConfig::FromJson(R"({"funnel": "q1"})"), ParseError);
  CHECK_THROWS_AS(RunConfig::FromJson(R"({"pred_kind": "transformer"})"), ConfigError);
  CHECK_THROWS_AS(RunConfig::FromJson(R"({"subsample_factor": 3})"), ConfigError);

  const fs::path dir = TempDir("config");
  c.Save(dir / "run.json");
  CHECK(RunConfig::Load(dir / "run.json") == c);
  CHECK_THROWS_AS(RunConfig::Load(dir / "nope.json"), IoError);
  fs::remove_all(dir);
}

TEST_CASE("learning rate warms up then decays as an inverse square root") {
  RunConfig c;
  c.peak_learning_rate = 1.0;
  c.warmup_steps = 100;
  CHECK(LearningRate(c, 1) == doctest::Approx(0.01));
  CHECK(LearningRate(c, 50) == doctest::Approx(0.5));
  CHECK(LearningRate(c, 100) == doctest::Approx(1.0));
  CHECK(LearningRate(c, 400) == doctest::Approx(0.5));
  for (std::size_t s = 1; s < 100; ++s) CHECK(LearningRate(c, s) < LearningRate(c, s + 1));
  for (std::size_t s = 100; s < 1000; ++s) CHECK(LearningRate(c, s) > LearningRate(c, s + 1));
}

TEST_CASE("adaptive optimizer has no momentum") {
  ParamSet p;
  p.Add("w", Tensor::Row({1.0, -2.0}));
  ParamSet g = p.ZerosLike();
  AdaptiveOptimizer opt(p);
  g.at("w") = Tensor::Row({0.5, -4.0});
  opt.Update(&p, g, 0.1);
  // First step with bias correction moves every coordinate by lr * sign(g).
  CHECK(p.at("w")[0] == doctest::Approx(0.9));
  CHECK(p.at("w")[1] == doctest::Approx(-1.9));
  g.SetZero();
  const Tensor before = p.at("w");
  opt.Update(&p, g, 0.1);
  CHECK(p.at("w") == before);

  // Minimizes a quadratic.
  ParamSet q;
  q.Add("x", Tensor::Row({3.0, -5.0, 0.5}));
  AdaptiveOptimizer qopt(q);
  ParamSet qg = q.ZerosLike();
  for (int step = 1; step <= 2000; ++step) {
    for (std::size_t k = 0; k < 3; ++k) qg.at("x")[k] = 2.0 * q.at("x")[k];
    qopt.Update(&q, qg, 0.2 / std::sqrt(static_cast<double>(step)));
  }
  for (std::size_t k = 0; k < 3; ++k) CHECK(std::abs(q.at("x")[k]) < 1e-2);
}

TEST_CASE("global norm clipping") {
  ParamSet g;
  g.Add("a", Tensor::Row({3.0}));
  g.Add("b", Tensor::Row({4.0}));
  CHECK(ClipGlobalNorm(&g, 10.0) == doctest::Approx(5.0));
  CHECK(g.at("a")[0] == 3.0);
  CHECK(ClipGlobalNorm(&g, 1.0) == doctest::Approx(5.0));
  CHECK(g.at("a")[0] == doctest::Approx(0.6));
  CHECK(g.at("b")[0] == doctest::Approx(0.8));
  g.at("a")[0] = NAN;
  CHECK_THROWS_AS(ClipGlobalNorm(&g, 1.0), NumericError);
}

TEST_CASE("training memorizes a single example") {
  Dataset ds = GenerateDataset(TinyTask(), 1);
  RunConfig c = TinyRun();
  c.batch_size = 1;
  c.train_steps = 300;
  c.peak_learning_rate = 1e-2;
  c.warmup_steps = 20;
  const TrainResult r = Train(c, ds);
  const HatConfig hc = c.ToHatConfig();
  const Example& e = ds.examples[0];
  const double loss = HatLoss(Encode(e.features, hc.encoder, r.params).frames, e.labels, r.params, hc);
  CHECK(loss < 0.1);
}

TEST_CASE("training is deterministic given the seed") {
  const Dataset ds = GenerateDataset(TinyTask(), 40);
  const RunConfig c = TinyRun();
  const TrainResult a = Train(c, ds);
  const TrainResult b = Train(c, ds);
  REQUIRE(a.curve.size() == 5);  // step 0 plus every 5 of 20 steps
  CHECK(a.curve.front().step == 0);
  CHECK(a.curve.back().step == 20);
  for (std::size_t i = 0; i < a.curve.size(); ++i) CHECK(a.curve[i].loss == b.curve[i].loss);
  for (std::size_t i = 0; i < a.params.size(); ++i) {
    CHECK(a.params.entries()[i].value == b.params.entries()[i].value);
  }
  RunConfig other = c;
  other.seed = 2;
  CHECK(Train(other, ds).FinalLoss() != a.FinalLoss());
}

TEST_CASE("training aborts on divergence") {
  const Dataset ds = GenerateDataset(TinyTask(), 4);
  const RunConfig c = TinyRun();
  ParamSet bad = InitHatParams(c.ToHatConfig(), 1);
  bad.at("joint.out")[0] = NAN;
  try {
    Train(c, ds, bad);
    FAIL("expected divergence");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("diverged at step 1") != std::string::npos);
  }
  CHECK_THROWS_AS(Train(c, Dataset{}), ConfigError);
  RunConfig wide = c;
  wide.input_dim = 7;
  CHECK_THROWS_AS(Train(wide, ds), ConfigError);
}

TEST_CASE("mwer fine-tuning runs after the main phase") {
  const Dataset ds = GenerateDataset(TinyTask(), 10);
  RunConfig c = TinyRun();
  c.train_steps = 10;
  c.mwer_steps = 4;
  c.log_every = 2;
  const TrainResult r = Train(c, ds);
  CHECK(r.mwer_curve.size() == 3);
  for (const auto& p : r.mwer_curve) CHECK(std::isfinite(p.loss));
  CHECK(Train(c, ds).mwer_curve.back().loss == r.mwer_curve.back().loss);
}

TEST_CASE("untrained model has no exact matches and bounded decode steps") {
  const Dataset ds = GenerateDataset(TinyTask(), 60);
  const RunConfig c = TinyRun();
  const HatConfig hc = c.ToHatConfig();
  const ParamSet params = InitHatParams(hc, 3);
  EvalOptions o;
  o.max_labels = 8;
  const EvalResult r = Evaluate(hc, params, ds, o);
  CHECK(r.metrics.utterances == 60);
  CHECK(r.metrics.ExactMatchRate() <= 0.05);
  CHECK(r.metrics.max_steps <= r.step_bound);
  CHECK(r.metrics.MeanSteps() <= static_cast<double>(r.step_bound));
  CHECK(r.step_bound == (ds.MaxFrames() + 3) / 4 + 8);
  CHECK(r.metrics.invariant_violations == 0);

  o.workers = 3;
  const EvalResult parallel = Evaluate(hc, params, ds, o);
  CHECK(parallel.metrics == r.metrics);
  CHECK(parallel.hypotheses == r.hypotheses);
}

TEST_CASE("checkpoint round-trip preserves metrics") {
  const fs::path dir = TempDir("checkpoint");
  const Dataset ds = GenerateDataset(TinyTask(), 20);
  RunConfig c = TinyRun();
  c.train_steps = 10;
  const TrainResult r = Train(c, ds);
  SaveCheckpoint(dir / "model.ckpt", c, r.params);
  const Checkpoint ck = LoadCheckpoint(dir / "model.ckpt");
  CHECK(ck.config == c);
  REQUIRE(ck.params.SameLayout(r.params));
  for (std::size_t i = 0; i < r.params.size(); ++i) {
    CHECK(ck.params.entries()[i].value == r.params.entries()[i].value);
  }
  EvalOptions o;
  o.max_labels = 8;
  CHECK(Evaluate(c.ToHatConfig(), r.params, ds, o).metrics ==
        Evaluate(ck.config.ToHatConfig(), ck.params, ds, o).metrics);

  const std::string bytes = Slurp(dir / "model.ckpt");
  std::ofstream(dir / "short.ckpt", std::ios::binary) << bytes.substr(0, bytes.size() - 9);
  CHECK_THROWS_AS(LoadCheckpoint(dir / "short.ckpt"), IoError);
  RunConfig other = c;
  other.joint_dim = 8;
  SaveCheckpoint(dir / "mismatch.ckpt", other, r.params);
  CHECK_THROWS_AS(LoadCheckpoint(dir / "mismatch.ckpt"), ParseError);
  std::ofstream(dir / "junk.ckpt") << "this is not a checkpoint, just some text";
  CHECK_THROWS_AS(LoadCheckpoint(dir / "junk.ckpt"), ParseError);
  CHECK_THROWS_AS(LoadCheckpoint(dir / "absent.ckpt"), IoError);
  fs::remove_all(dir);
}

TEST_CASE("end-to-end runs reproduce metrics through files") {
  const fs::path dir = TempDir("e2e");
  auto run = [&](const std::string& tag) {
    const fs::path manifest = WriteDataset(GenerateDataset(TinyTask(), 30), dir / ("data_" + tag));
    const Dataset ds = ReadDataset(manifest);
    RunConfig c = TinyRun();
    c.train_steps = 15;
    SaveCheckpoint(dir / (tag + ".ckpt"), c, Train(c, ds).params);
    const Checkpoint ck = LoadCheckpoint(dir / (tag + ".ckpt"));
    EvalOptions o;
    o.max_labels = 8;
    return Evaluate(ck.config.ToHatConfig(), ck.params, ds, o);
  };
  const EvalResult a = run("a"), b = run("b");
  CHECK(a.metrics == b.metrics);
  CHECK(a.hypotheses == b.hypotheses);
  CHECK(Slurp(dir / "a.ckpt") == Slurp(dir / "b.ckpt"));
  fs::remove_all(dir);
}

TEST_CASE("default toy run cuts the training loss below 30 percent of its start") {
  const Dataset ds = GenerateDataset(SyntheticTask{}, 5000);
  RunConfig c;
  c.train_steps = 400;
  c.log_every = 100;
  const TrainResult r = Train(c, ds);
  CHECK(r.FinalLoss() < 0.3 * r.InitialLoss());
}

TEST_CASE("noise-free task is solved by the baseline toy model") {
  SyntheticTask t;
  t.noise = 0.0;
  t.frames_per_token = 8;
  const Dataset train = GenerateDataset(t, 5000);
  const Dataset test = GenerateDataset(t, 200, 1);
  RunConfig c;
  c.train_steps = 1500;
  const TrainResult r = Train(c, train);
  const EvalResult e = Evaluate(c.ToHatConfig(), r.params, test, EvalOptions{});
  CHECK(e.metrics.ExactMatchRate() >= 0.95);
  CHECK(e.metrics.max_steps <= e.step_bound);
}

}  // namespace
}  // namespace fhat
