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

#ifndef FHAT_RUN_CONFIG_H_
#define FHAT_RUN_CONFIG_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>

#include "fhat/hat_model.h"

namespace fhat {

// Everything needed to build, train and decode one toy model. Defaults are the
// toy baseline (total reduction 4, no funnel blocks). At full scale the model
// is 16 blocks of 1536 units with 8 heads, trained with an adaptive optimizer
// under a warmup then inverse-square-root schedule; none of that is needed here.
struct RunConfig {
  // Encoder.
  std::string funnel = "-";  // shorthand, e.g. "s0^2,s1^2"
  std::size_t num_blocks = 6;
  std::size_t model_dim = 32;
  std::size_t attention_heads = 2;
  std::size_t conv_kernel_size = 5;
  std::size_t ffn_multiplier = 2;
  std::size_t input_dim = 16;
  std::size_t subsample_factor = 4;

  // Prediction and joint networks.
  PredNetKind pred_kind = PredNetKind::kEmbedding;
  std::size_t pred_context = 2;
  std::size_t pred_layers = 1;
  std::size_t pred_hidden = 64;
  std::size_t pred_embed_dim = 32;
  std::size_t vocab_size = 20;
  std::size_t joint_dim = 96;

  // Decoding.
  std::size_t beam = 4;         // K
  std::size_t max_labels = 30;  // U_max

  // Training.
  std::size_t train_steps = 3000;
  std::size_t batch_size = 8;
  double peak_learning_rate = 3e-3;
  std::size_t warmup_steps = 200;
  double grad_clip = 5.0;  // global L2 norm; 0 disables
  std::size_t log_every = 50;
  std::uint64_t seed = 1;

  // Optional MWER fine-tuning after the main phase.
  std::size_t mwer_steps = 0;
  double mwer_hat_scale = 0.03;  // lambda
  std::size_t mwer_nbest = 4;

  void Validate() const;  // ConfigError, ParseError
  HatConfig ToHatConfig() const;

  std::string ToJson() const;
  // Unknown keys are rejected; missing keys keep their defaults.
  static RunConfig FromJson(const std::string& text);
  static RunConfig Load(const std::filesystem::path& path);  // IoError, ParseError
  void Save(const std::filesystem::path& path) const;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

}  // namespace fhat

#endif  // FHAT_RUN_CONFIG_H_
