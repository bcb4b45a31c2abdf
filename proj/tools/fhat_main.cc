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

// Command-line front end: gen-data, train, decode, eval, bench, report.

#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fhat/acceptance.h"
#include "fhat/checkpoint.h"
#include "fhat/costmodel.h"
#include "fhat/decoder.h"
#include "fhat/encoder.h"
#include "fhat/errors.h"
#include "fhat/evaluator.h"
#include "fhat/run_config.h"
#include "fhat/synthetic.h"
#include "fhat/trainer.h"
#include "json.hpp"

namespace {

using fhat::RunConfig;

// RunConfig fields exposed as flags; only flags given on the command line
// override the config file (or the defaults).
class RunConfigFlags {
 public:
  void Register(CLI::App* app) {
    Add(app, "--funnel", &RunConfig::funnel, "funnel shorthand, e.g. 's4^2,s5^2' ('-' for none)");
    Add(app, "--blocks", &RunConfig::num_blocks, "number of encoder blocks");
    Add(app, "--model-dim", &RunConfig::model_dim, "encoder width");
    Add(app, "--heads", &RunConfig::attention_heads, "attention heads");
    Add(app, "--conv-kernel", &RunConfig::conv_kernel_size, "depthwise convolution kernel size");
    Add(app, "--ffn-multiplier", &RunConfig::ffn_multiplier, "feed-forward expansion");
    Add(app, "--input-dim", &RunConfig::input_dim, "feature dimension");
    Add(app, "--subsample", &RunConfig::subsample_factor, "convolutional subsampling factor (power of two)");
    app->add_option("--pred", pred_kind_, "prediction network: embedding | recurrent");
    Add(app, "--pred-context", &RunConfig::pred_context, "labels of context for the embedding network");
    Add(app, "--pred-layers", &RunConfig::pred_layers, "LSTM layers for the recurrent network");
    Add(app, "--pred-hidden", &RunConfig::pred_hidden, "LSTM width");
    Add(app, "--pred-embed", &RunConfig::pred_embed_dim, "label embedding width");
    Add(app, "--vocab", &RunConfig::vocab_size, "non-blank vocabulary size");
    Add(app, "--joint-dim", &RunConfig::joint_dim, "joint network width");
    Add(app, "--beam", &RunConfig::beam, "beam size K");
    Add(app, "--max-labels", &RunConfig::max_labels, "label cap U_max");
    Add(app, "--steps", &RunConfig::train_steps, "training steps");
    Add(app, "--batch", &RunConfig::batch_size, "utterances per step");
    Add(app, "--lr", &RunConfig::peak_learning_rate, "peak learning rate");
    Add(app, "--warmup", &RunConfig::warmup_steps, "warmup steps");
    Add(app, "--grad-clip", &RunConfig::grad_clip, "global gradient norm clip (0 disables)");
    Add(app, "--log-every", &RunConfig::log_every, "loss logging interval");
    Add(app, "--mwer-steps", &RunConfig::mwer_steps, "MWER fine-tuning steps");
    Add(app, "--mwer-lambda", &RunConfig::mwer_hat_scale, "weight of the HAT loss inside MWER");
    Add(app, "--mwer-nbest", &RunConfig::mwer_nbest, "n-best size for MWER");
  }

  void Apply(RunConfig* config) const {
    for (const auto& a : appliers_) a(config);
    if (!pred_kind_.empty()) config->pred_kind = fhat::ParsePredNetKind(pred_kind_);
  }

 private:
  template <typename T>
  void Add(CLI::App* app, const char* flag, T RunConfig::*field, const char* help) {
    auto value = std::make_shared<T>();
    CLI::Option* opt = app->add_option(flag, *value, help);
    appliers_.push_back([opt, value, field](RunConfig* c) {
      if (opt->count() > 0) c->*field = *value;
    });
  }

  std::vector<std::function<void(RunConfig*)>> appliers_;
  std::string pred_kind_;
};

void PrintMetrics(const fhat::EvalResult& r, std::ostream& os) {
  const auto& m = r.metrics;
  os << "utterances " << m.utterances << "\n"
     << "token_error_rate " << m.TokenErrorRate() << "\n"
     << "exact_match " << m.ExactMatchRate() << "\n"
     << "mean_steps " << m.MeanSteps() << "\n"
     << "max_steps " << m.max_steps << "\n"
     << "step_bound " << r.step_bound << "\n"
     << "invariant_violations " << m.invariant_violations << "\n";
}

std::string MetricsJson(const fhat::EvalResult& r) {
  const auto& m = r.metrics;
  nlohmann::json j{{"utterances", m.utterances},
                   {"reference_tokens", m.reference_tokens},
                   {"token_errors", m.token_errors},
                   {"exact_matches", m.exact_matches},
                   {"token_error_rate", m.TokenErrorRate()},
                   {"exact_match", m.ExactMatchRate()},
                   {"mean_steps", m.MeanSteps()},
                   {"max_steps", m.max_steps},
                   {"step_bound", r.step_bound},
                   {"invariant_violations", m.invariant_violations}};
  return j.dump(2);
}

// "ID=shorthand" entries; a bare shorthand gets a positional id.
std::vector<std::pair<std::string, std::string>> ParseBenchConfigs(const std::vector<std::string>& specs) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& s : specs) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      out.emplace_back("C" + std::to_string(out.size()), s);
    } else {
      out.emplace_back(s.substr(0, eq), s.substr(eq + 1));
    }
  }
  return out;
}

void WriteText(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw fhat::IoError("cannot write " + path);
  out << text;
  if (!text.empty() && text.back() != '\n') out << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Funnel-encoder HAT transducer toolkit"};
  app.require_subcommand(1);

  // gen-data
  CLI::App* gen = app.add_subcommand("gen-data", "write a synthetic dataset");
  fhat::SyntheticTask task;
  std::string gen_out;
  std::size_t gen_count = 5000;
  std::uint64_t gen_stream = 0;
  gen->add_option("--out", gen_out, "output stem (writes STEM.bin and STEM.manifest)")->required();
  gen->add_option("--seed", task.seed, "prototype seed")->required();
  gen->add_option("--count", gen_count, "number of examples");
  gen->add_option("--stream", gen_stream, "example stream (0 train, 1 held-out, ...)");
  gen->add_option("--vocab", task.vocab_size, "vocabulary size");
  gen->add_option("--dim", task.feature_dim, "feature dimension");
  gen->add_option("--frames-per-token", task.frames_per_token, "frames per token");
  gen->add_option("--noise", task.noise, "Gaussian noise stddev");
  gen->add_option("--min-labels", task.min_labels, "shortest label sequence");
  gen->add_option("--max-labels", task.max_labels, "longest label sequence");

  // train
  CLI::App* train = app.add_subcommand("train", "train a model and write a checkpoint");
  std::string train_data, train_out, train_config, train_curve, train_init;
  std::uint64_t train_seed = 0;
  RunConfigFlags train_flags;
  train->add_option("--data", train_data, "training dataset manifest")->required();
  train->add_option("--out", train_out, "checkpoint path")->required();
  train->add_option("--seed", train_seed, "initialization and sampling seed")->required();
  train->add_option("--config", train_config, "RunConfig JSON; flags override it");
  train->add_option("--init", train_init, "continue from this checkpoint");
  train->add_option("--curve", train_curve, "write the loss curve as CSV");
  train_flags.Register(train);

  // decode
  CLI::App* decode = app.add_subcommand("decode", "print n-best lists");
  std::string dec_ckpt, dec_data, dec_algorithm = "alsync";
  std::optional<std::size_t> dec_beam, dec_max_labels, dec_index;
  std::size_t dec_nbest = 4, dec_limit = 10;
  decode->add_option("--checkpoint", dec_ckpt, "checkpoint")->required();
  decode->add_option("--data", dec_data, "dataset manifest")->required();
  decode->add_option("--index", dec_index, "decode one example");
  decode->add_option("--limit", dec_limit, "examples to decode when --index is absent");
  decode->add_option("--beam", dec_beam, "beam size (default: checkpoint config)");
  decode->add_option("--max-labels", dec_max_labels, "label cap (default: checkpoint config)");
  decode->add_option("--nbest", dec_nbest, "entries to print per example");
  decode->add_option("--algorithm", dec_algorithm, "alsync | framesync")
      ->check(CLI::IsMember({"alsync", "framesync"}));

  // eval
  CLI::App* eval = app.add_subcommand("eval", "corpus metrics of a checkpoint");
  std::string ev_ckpt, ev_data, ev_json;
  std::optional<std::size_t> ev_beam, ev_max_labels;
  std::size_t ev_workers = 1;
  eval->add_option("--checkpoint", ev_ckpt, "checkpoint")->required();
  eval->add_option("--data", ev_data, "dataset manifest")->required();
  eval->add_option("--beam", ev_beam, "beam size (default: checkpoint config)");
  eval->add_option("--max-labels", ev_max_labels, "label cap (default: checkpoint config)");
  eval->add_option("--workers", ev_workers, "decoding threads");
  eval->add_option("--json", ev_json, "also write metrics as JSON");

  // bench
  CLI::App* bench = app.add_subcommand("bench", "decoder steps and encoder cost per configuration");
  std::vector<std::string> bench_configs;
  std::string bench_format = "csv";
  bool bench_published = false;
  fhat::CostSettings bench_settings;
  bench->add_option("configs", bench_configs, "ID=shorthand entries; the first is the reduction baseline");
  bench->add_flag("--published", bench_published, "the published frame-rate sweep, with latency fits");
  bench->add_option("--format", bench_format, "csv | json")->check(CLI::IsMember({"csv", "json"}));
  bench->add_option("--max-audio-ms", bench_settings.max_audio_ms, "longest utterance");
  bench->add_option("--max-labels", bench_settings.max_labels, "label cap");

  // report
  CLI::App* report = app.add_subcommand("report", "run the acceptance suite");
  bool rep_check = false, rep_no_training = false, rep_quiet = false;
  std::string rep_json, rep_artifacts;
  std::vector<std::uint64_t> rep_seeds;
  std::size_t rep_workers = 1;
  report->add_flag("--check", rep_check, "exit non-zero on any failure");
  report->add_flag("--no-training", rep_no_training, "skip the end-to-end training criterion");
  report->add_flag("--quiet", rep_quiet, "no training progress on stderr");
  report->add_option("--json", rep_json, "write the report as JSON");
  report->add_option("--artifacts", rep_artifacts, "directory for toy checkpoints");
  report->add_option("--seeds", rep_seeds, "seed set of the end-to-end criterion");
  report->add_option("--workers", rep_workers, "decoding threads for evaluation");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      const fhat::Dataset ds = fhat::GenerateDataset(task, gen_count, gen_stream);
      std::cout << fhat::WriteDataset(ds, gen_out).string() << "\n";
      return EXIT_SUCCESS;
    }

    if (train->parsed()) {
      RunConfig config = train_config.empty() ? RunConfig{} : RunConfig::Load(train_config);
      if (!train_init.empty()) config = fhat::LoadCheckpoint(train_init).config;
      train_flags.Apply(&config);
      config.seed = train_seed;
      config.Validate();
      const fhat::Dataset ds = fhat::ReadDataset(train_data);
      const fhat::TrainResult r =
          train_init.empty() ? fhat::Train(config, ds, &std::cerr)
                             : fhat::Train(config, ds, fhat::LoadCheckpoint(train_init).params, &std::cerr);
      fhat::SaveCheckpoint(train_out, config, r.params);
      if (!train_curve.empty()) {
        std::ostringstream csv;
        csv << "phase,step,loss\n";
        for (const auto& p : r.curve) csv << "hat," << p.step << "," << p.loss << "\n";
        for (const auto& p : r.mwer_curve) csv << "mwer," << p.step << "," << p.loss << "\n";
        WriteText(train_curve, csv.str());
      }
      std::cout << "initial_loss " << r.InitialLoss() << "\nfinal_loss " << r.FinalLoss() << "\nseconds "
                << r.seconds << "\n";
      return EXIT_SUCCESS;
    }

    if (decode->parsed()) {
      const fhat::Checkpoint ck = fhat::LoadCheckpoint(dec_ckpt);
      const fhat::HatConfig hc = ck.config.ToHatConfig();
      const fhat::Dataset ds = fhat::ReadDataset(dec_data);
      const std::size_t beam = dec_beam.value_or(ck.config.beam);
      const std::size_t max_labels = dec_max_labels.value_or(ck.config.max_labels);
      std::size_t first = 0, last = std::min(dec_limit, ds.examples.size());
      if (dec_index) {
        if (*dec_index >= ds.examples.size()) throw fhat::ConfigError("--index out of range");
        first = *dec_index;
        last = first + 1;
      }
      for (std::size_t i = first; i < last; ++i) {
        const fhat::Example& ex = ds.examples[i];
        const fhat::EncodedSequence enc = fhat::Encode(ex.features, hc.encoder, ck.params);
        fhat::HatScorer scorer(hc, ck.params, enc.frames);
        const fhat::DecodeResult r =
            dec_algorithm == "alsync"
                ? fhat::DecodeAlignmentSync(scorer, {beam, max_labels, 1})
                : fhat::DecodeFrameSync(scorer, {beam, max_labels, fhat::FrameSyncOptions{}.max_expansions_per_frame});
        std::vector<fhat::NBestEntry> top(r.nbest.begin(),
                                          r.nbest.begin() + static_cast<std::ptrdiff_t>(std::min(dec_nbest, r.nbest.size())));
        std::cout << "# example " << i << " frames " << enc.frames.rows() << " steps " << r.steps << " ref";
        for (int y : ex.labels) std::cout << " " << y;
        std::cout << "\n";
        fhat::WriteNBest(std::cout, top);
      }
      return EXIT_SUCCESS;
    }

    if (eval->parsed()) {
      const fhat::Checkpoint ck = fhat::LoadCheckpoint(ev_ckpt);
      const fhat::Dataset ds = fhat::ReadDataset(ev_data);
      fhat::EvalOptions o;
      o.beam = ev_beam.value_or(ck.config.beam);
      o.max_labels = ev_max_labels.value_or(ck.config.max_labels);
      o.workers = ev_workers;
      const fhat::EvalResult r = fhat::Evaluate(ck.config.ToHatConfig(), ck.params, ds, o);
      PrintMetrics(r, std::cout);
      if (!ev_json.empty()) WriteText(ev_json, MetricsJson(r));
      return EXIT_SUCCESS;
    }

    if (bench->parsed()) {
      fhat::CostTable table;
      if (bench_published) {
        table = fhat::PublishedSweepTable();
      } else {
        if (bench_configs.empty()) throw fhat::ConfigError("bench needs configurations or --published");
        table = fhat::BuildCostTable(ParseBenchConfigs(bench_configs), bench_settings);
      }
      std::cout << (bench_format == "csv" ? fhat::CostTableCsv(table) : fhat::CostTableJson(table));
      if (bench_format == "json") std::cout << "\n";
      return EXIT_SUCCESS;
    }

    if (report->parsed()) {
      fhat::AcceptanceOptions o;
      o.run_training = !rep_no_training;
      if (!rep_seeds.empty()) o.toy_seeds = rep_seeds;
      o.artifact_dir = rep_artifacts;
      o.eval_workers = rep_workers;
      if (!rep_quiet) o.log = &std::cerr;
      const fhat::AcceptanceReport r = fhat::RunAcceptance(o);
      for (const auto& c : r.criteria) std::cout << fhat::FormatCriterionLine(c) << "\n";
      if (!rep_json.empty()) WriteText(rep_json, r.ToJson());
      std::cout << (r.AllPassed() ? "ALL PASSED" : "FAILURES") << "\n";
      return rep_check && !r.AllPassed() ? EXIT_FAILURE : EXIT_SUCCESS;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return EXIT_FAILURE;
  }
  return EXIT_SUCCESS;
}
