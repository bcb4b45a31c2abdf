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

#include "fhat/trainer.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>

#include "fhat/decoder.h"
#include "fhat/encoder.h"
#include "fhat/errors.h"
#include "fhat/graph.h"
#include "fhat/mwer.h"
#include "fhat/rng.h"

namespace fhat {

double LearningRate(const RunConfig& config, std::size_t step) {
  const double s = static_cast<double>(std::max<std::size_t>(step, 1));
  const double w = static_cast<double>(std::max<std::size_t>(config.warmup_steps, 1));
  return config.peak_learning_rate * std::min(s / w, std::sqrt(w / s));
}

AdaptiveOptimizer::AdaptiveOptimizer(const ParamSet& params, double decay, double epsilon)
    : second_moment_(params.ZerosLike()), decay_(decay), epsilon_(epsilon) {}

void AdaptiveOptimizer::Update(ParamSet* params, const ParamSet& grads, double learning_rate) {
  ++steps_;
  const double correction = 1.0 - std::pow(decay_, static_cast<double>(steps_));
  auto& p = params->entries();
  auto& v = second_moment_.entries();
  const auto& g = grads.entries();
  for (std::size_t i = 0; i < p.size(); ++i) {
    auto& pd = p[i].value.data();
    auto& vd = v[i].value.data();
    const auto& gd = g[i].value.data();
    for (std::size_t k = 0; k < pd.size(); ++k) {
      vd[k] = decay_ * vd[k] + (1.0 - decay_) * gd[k] * gd[k];
      pd[k] -= learning_rate * gd[k] / (std::sqrt(vd[k] / correction) + epsilon_);
    }
  }
}

double ClipGlobalNorm(ParamSet* grads, double max_norm) {
  double sq = 0.0;
  for (const auto& e : *grads) {
    for (double x : e.value.data()) sq += x * x;
  }
  const double norm = std::sqrt(sq);
  if (!std::isfinite(norm)) throw NumericError("non-finite gradient norm");
  if (max_norm > 0.0 && norm > max_norm) {
    const double s = max_norm / norm;
    for (auto& e : *grads) {
      for (double& x : e.value.data()) x *= s;
    }
  }
  return norm;
}

namespace {

void ScaleInPlace(ParamSet* p, double s) {
  for (auto& e : *p) {
    for (double& x : e.value.data()) x *= s;
  }
}

// Epoch-wise shuffled order (own Fisher-Yates: std::shuffle is not portable).
class BatchSampler {
 public:
  BatchSampler(std::size_t n, std::uint64_t seed) : order_(n), rng_(seed) {
    for (std::size_t i = 0; i < n; ++i) order_[i] = i;
    Shuffle();
  }
  std::size_t Next() {
    if (pos_ == order_.size()) {
      Shuffle();
      pos_ = 0;
    }
    return order_[pos_++];
  }

 private:
  void Shuffle() {
    for (std::size_t i = order_.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(rng_.UniformInt(0, static_cast<std::int64_t>(i) - 1));
      std::swap(order_[i - 1], order_[j]);
    }
  }
  std::vector<std::size_t> order_;
  Rng rng_;
  std::size_t pos_ = 0;
};

using UtteranceObjective = double (*)(const RunConfig&, const HatConfig&, const ParamSet&,
                                      const Example&, ParamSet*);

double HatObjective(const RunConfig&, const HatConfig& hc, const ParamSet& params,
                    const Example& ex, ParamSet* grads) {
  ad::Graph g;
  g.BindParams(&params, grads);
  ad::Var loss = hat::UtteranceLoss(g, hc, ex.features, ex.labels);
  g.Backward(loss);
  return loss.value()[0];
}

double MwerObjective(const RunConfig& rc, const HatConfig& hc, const ParamSet& params,
                     const Example& ex, ParamSet* grads) {
  ad::Graph g;
  g.BindParams(&params, grads);
  ad::Var encoded = encoder::Encode(g, g.Constant(ex.features), hc.encoder);
  HatScorer scorer(hc, params, encoded.value());
  AlignmentSyncOptions opts;
  opts.beam = rc.mwer_nbest;
  opts.max_labels = rc.max_labels;
  const DecodeResult decoded = DecodeAlignmentSync(scorer, opts);
  std::vector<std::vector<int>> nbest;
  for (const auto& h : decoded.nbest) nbest.push_back(h.labels);
  MwerOptions mo;
  mo.hat_scale = rc.mwer_hat_scale;
  ad::Var loss = MwerLoss(g, hc, encoded, nbest, ex.labels, mo);
  g.Backward(loss);
  return loss.value()[0];
}

void RunPhase(const RunConfig& rc, const HatConfig& hc, const Dataset& data, const char* phase,
              UtteranceObjective objective, std::size_t steps, std::size_t step_offset,
              std::uint64_t sampler_seed, ParamSet* params, std::vector<LossPoint>* curve,
              std::ostream* log) {
  if (steps == 0) return;
  AdaptiveOptimizer opt(*params);
  ParamSet grads = params->ZerosLike();
  BatchSampler sampler(data.examples.size(), sampler_seed);
  double window = 0.0;
  std::size_t window_count = 0;
  for (std::size_t step = 1; step <= steps; ++step) {
    grads.SetZero();
    double batch_loss = 0.0;
    try {
      for (std::size_t b = 0; b < rc.batch_size; ++b) {
        batch_loss += objective(rc, hc, *params, data.examples[sampler.Next()], &grads);
      }
      if (!std::isfinite(batch_loss)) throw NumericError("non-finite loss");
      ScaleInPlace(&grads, 1.0 / static_cast<double>(rc.batch_size));
      ClipGlobalNorm(&grads, rc.grad_clip);
    } catch (const NumericError& e) {
      throw NumericError(std::string(phase) + " training diverged at step " + std::to_string(step) +
                         ": " + e.what());
    }
    batch_loss /= static_cast<double>(rc.batch_size);
    if (step == 1) curve->push_back({0, batch_loss});
    const double lr = LearningRate(rc, step_offset + step);
    opt.Update(params, grads, lr);
    window += batch_loss;
    ++window_count;
    if (step % rc.log_every == 0 || step == steps) {
      const LossPoint point{step, window / static_cast<double>(window_count)};
      curve->push_back(point);
      if (log) *log << phase << " step " << step << " loss " << point.loss << " lr " << lr << "\n";
      window = 0.0;
      window_count = 0;
    }
  }
}

}  // namespace

TrainResult Train(const RunConfig& config, const Dataset& data, std::ostream* log) {
  return Train(config, data, InitHatParams(config.ToHatConfig(), config.seed), log);
}

TrainResult Train(const RunConfig& config, const Dataset& data, ParamSet initial,
                  std::ostream* log) {
  config.Validate();
  if (data.examples.empty()) throw ConfigError("training dataset is empty");
  const HatConfig hc = config.ToHatConfig();
  if (data.task.feature_dim != hc.encoder.input_dim) {
    throw ConfigError("dataset feature_dim " + std::to_string(data.task.feature_dim) +
                      " != model input_dim " + std::to_string(hc.encoder.input_dim));
  }
  if (data.task.vocab_size > hc.vocab_size) throw ConfigError("dataset vocabulary exceeds the model's");
  if (!InitHatParams(hc, 0).SameLayout(initial)) throw ConfigError("initial parameters do not match config");

  const auto t0 = std::chrono::steady_clock::now();
  TrainResult result;
  result.params = std::move(initial);
  RunPhase(config, hc, data, "hat", &HatObjective, config.train_steps, 0, config.seed ^ 0x5eed,
           &result.params, &result.curve, log);
  RunPhase(config, hc, data, "mwer", &MwerObjective, config.mwer_steps, config.train_steps,
           config.seed ^ 0x3e3e, &result.params, &result.mwer_curve, log);
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

}  // namespace fhat
