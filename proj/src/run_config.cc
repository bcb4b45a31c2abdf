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

#include "fhat/run_config.h"

#include <fstream>
#include <set>
#include <sstream>

#include "fhat/errors.h"
#include "json.hpp"

namespace fhat {

namespace {

using nlohmann::json;

// Visits every serialized field as (key, member reference).
template <typename Config, typename Fn>
void ForEachField(Config& c, Fn&& fn) {
  fn("funnel", c.funnel);
  fn("num_blocks", c.num_blocks);
  fn("model_dim", c.model_dim);
  fn("attention_heads", c.attention_heads);
  fn("conv_kernel_size", c.conv_kernel_size);
  fn("ffn_multiplier", c.ffn_multiplier);
  fn("input_dim", c.input_dim);
  fn("subsample_factor", c.subsample_factor);
  fn("pred_context", c.pred_context);
  fn("pred_layers", c.pred_layers);
  fn("pred_hidden", c.pred_hidden);
  fn("pred_embed_dim", c.pred_embed_dim);
  fn("vocab_size", c.vocab_size);
  fn("joint_dim", c.joint_dim);
  fn("beam", c.beam);
  fn("max_labels", c.max_labels);
  fn("train_steps", c.train_steps);
  fn("batch_size", c.batch_size);
  fn("peak_learning_rate", c.peak_learning_rate);
  fn("warmup_steps", c.warmup_steps);
  fn("grad_clip", c.grad_clip);
  fn("log_every", c.log_every);
  fn("seed", c.seed);
  fn("mwer_steps", c.mwer_steps);
  fn("mwer_hat_scale", c.mwer_hat_scale);
  fn("mwer_nbest", c.mwer_nbest);
}

}  // namespace

void RunConfig::Validate() const {
  ToHatConfig().Validate();
  if (beam < 1) throw ConfigError("beam must be >= 1");
  if (max_labels < 1) throw ConfigError("max_labels must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(peak_learning_rate > 0.0)) throw ConfigError("peak_learning_rate must be > 0");
  if (!(grad_clip >= 0.0)) throw ConfigError("grad_clip must be >= 0");
  if (log_every < 1) throw ConfigError("log_every must be >= 1");
  if (!(mwer_hat_scale >= 0.0)) throw ConfigError("mwer_hat_scale must be >= 0");
  if (mwer_nbest < 1) throw ConfigError("mwer_nbest must be >= 1");
}

HatConfig RunConfig::ToHatConfig() const {
  HatConfig h;
  EncoderConfig& e = h.encoder;
  e.num_blocks = num_blocks;
  e.model_dim = model_dim;
  e.attention_heads = attention_heads;
  e.conv_kernel_size = conv_kernel_size;
  e.ffn_multiplier = ffn_multiplier;
  e.input_dim = input_dim;
  e.subsample_factor = subsample_factor;
  e.funnel = ParseFunnelShorthand(funnel, num_blocks);
  h.pred.kind = pred_kind;
  h.pred.context = pred_context;
  h.pred.layers = pred_layers;
  h.pred.hidden = pred_hidden;
  h.pred.embed_dim = pred_embed_dim;
  h.vocab_size = vocab_size;
  h.joint_dim = joint_dim;
  h.Validate();
  return h;
}

std::string RunConfig::ToJson() const {
  json j;
  ForEachField(*this, [&](const char* key, const auto& value) { j[key] = value; });
  j["pred_kind"] = PredNetKindName(pred_kind);
  return j.dump(2);
}

RunConfig RunConfig::FromJson(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("run config: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("run config must be a JSON object");
  RunConfig c;
  std::set<std::string> known{"pred_kind"};
  ForEachField(c, [&](const char* key, auto& value) {
    known.insert(key);
    if (!j.contains(key)) return;
    try {
      j.at(key).get_to(value);
    } catch (const json::exception& e) {
      throw ParseError(std::string("run config field '") + key + "': " + e.what());
    }
  });
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw ParseError("run config: unknown field '" + key + "'");
  }
  if (j.contains("pred_kind")) {
    if (!j["pred_kind"].is_string()) throw ParseError("run config field 'pred_kind' must be a string");
    c.pred_kind = ParsePredNetKind(j["pred_kind"].get<std::string>());
  }
  c.Validate();
  return c;
}

RunConfig RunConfig::Load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return FromJson(ss.str());
}

void RunConfig::Save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << ToJson() << "\n";
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace fhat
