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

#include "fhat/encoder_config.h"

#include <algorithm>
#include <cctype>
#include <set>

#include "fhat/errors.h"
#include "fhat/ops.h"

namespace fhat {

void EncoderConfig::Validate() const {
  if (num_blocks == 0) throw ConfigError("num_blocks must be >= 1");
  if (model_dim == 0) throw ConfigError("model_dim must be >= 1");
  if (attention_heads == 0 || model_dim % attention_heads) {
    throw ConfigError("attention_heads must divide model_dim");
  }
  if (conv_kernel_size % 2 == 0) throw ConfigError("conv_kernel_size must be odd");
  if (ffn_multiplier == 0) throw ConfigError("ffn_multiplier must be >= 1");
  if (input_dim == 0) throw ConfigError("input_dim must be >= 1");
  if (subsample_factor == 0 || (subsample_factor & (subsample_factor - 1))) {
    throw ConfigError("subsample_factor must be a power of two");
  }
  if (!(input_frame_ms > 0)) throw ConfigError("input_frame_ms must be positive");
  std::set<std::size_t> seen;
  for (std::size_t i = 0; i < funnel.size(); ++i) {
    const auto& p = funnel[i];
    if (p.layer >= num_blocks) {
      throw ConfigError("funnel layer " + std::to_string(p.layer) + " out of range for " +
                        std::to_string(num_blocks) + " blocks");
    }
    if (p.stride < 1) throw ConfigError("funnel stride must be >= 1");
    if (!seen.insert(p.layer).second) {
      throw ConfigError("duplicate funnel layer " + std::to_string(p.layer));
    }
    if (i > 0 && funnel[i - 1].layer > p.layer) throw ConfigError("funnel placements not sorted");
  }
}

std::size_t EncoderConfig::FunnelReductionRatio() const {
  std::size_t r = 1;
  for (const auto& p : funnel) r *= p.stride;
  return r;
}

std::size_t EncoderConfig::TotalReductionRatio() const {
  return subsample_factor * FunnelReductionRatio();
}

double EncoderConfig::FrameDurationMs() const {
  return input_frame_ms * static_cast<double>(TotalReductionRatio());
}

std::size_t EncoderConfig::StrideAt(std::size_t layer) const {
  for (const auto& p : funnel) {
    if (p.layer == layer) return p.stride;
  }
  return 1;
}

std::size_t EncoderConfig::NumSubsampleStages() const {
  std::size_t stages = 0;
  for (std::size_t f = subsample_factor; f > 1; f /= 2) ++stages;
  return stages;
}

std::size_t EncoderConfig::SubsampledLength(std::size_t input_frames) const {
  std::size_t n = input_frames;
  for (std::size_t s = 0; s < NumSubsampleStages(); ++s) n = ops::CeilDiv(n, 2);
  return n;
}

std::vector<std::size_t> EncoderConfig::BlockLengths(std::size_t input_frames) const {
  std::vector<std::size_t> lengths;
  lengths.reserve(num_blocks + 1);
  std::size_t n = SubsampledLength(input_frames);
  for (std::size_t b = 0; b < num_blocks; ++b) {
    lengths.push_back(n);
    n = ops::CeilDiv(n, StrideAt(b));
  }
  lengths.push_back(n);
  return lengths;
}

std::size_t EncoderConfig::OutputLength(std::size_t input_frames) const {
  return BlockLengths(input_frames).back();
}

EncoderConfig EncoderConfig::FullScale() {
  EncoderConfig c;
  c.num_blocks = 16;
  c.model_dim = 1536;
  c.attention_heads = 8;
  c.conv_kernel_size = 15;
  c.input_dim = 128;
  return c;
}

namespace {

class ShorthandLexer {
 public:
  explicit ShorthandLexer(std::string_view token) : s_(token) {}

  FunnelPlacement Parse() {
    Expect('s');
    if (Peek() == '_') ++pos_;
    const std::size_t layer = Number();
    Expect('^');
    const std::size_t stride = Number();
    if (pos_ != s_.size()) Fail("trailing characters");
    return {layer, stride};
  }

 private:
  char Peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }
  void Expect(char c) {
    if (Peek() != c) Fail(std::string("expected '") + c + "'");
    ++pos_;
  }
  std::size_t Number() {
    const bool braced = Peek() == '{';
    if (braced) ++pos_;
    const std::size_t begin = pos_;
    while (std::isdigit(static_cast<unsigned char>(Peek()))) ++pos_;
    if (pos_ == begin) Fail("expected an integer");
    if (pos_ - begin > 9) Fail("integer too large");
    const std::size_t value = std::stoul(std::string(s_.substr(begin, pos_ - begin)));
    if (braced) Expect('}');
    return value;
  }
  [[noreturn]] void Fail(const std::string& why) const {
    throw ParseError("malformed funnel token '" + std::string(s_) + "': " + why);
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

std::string Strip(std::string_view text) {
  std::string out;
  for (char c : text) {
    if (!std::isspace(static_cast<unsigned char>(c))) out.push_back(c);
  }
  return out;
}

}  // namespace

std::vector<FunnelPlacement> ParseFunnelShorthand(std::string_view text, std::size_t num_blocks) {
  std::string body = Strip(text);
  if (!body.empty() && body.front() == '(') {
    if (body.back() != ')') throw ParseError("unbalanced parenthesis in '" + std::string(text) + "'");
    body = body.substr(1, body.size() - 2);
  }
  std::vector<FunnelPlacement> out;
  if (body.empty() || body == "-") return out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = body.find(',', start);
    const std::string token = body.substr(start, comma == std::string::npos ? std::string::npos
                                                                            : comma - start);
    if (token.empty()) throw ParseError("empty funnel token in '" + std::string(text) + "'");
    out.push_back(ShorthandLexer(token).Parse());
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  std::sort(out.begin(), out.end());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i].stride < 1) throw ConfigError("funnel stride must be >= 1");
    if (out[i].layer >= num_blocks) {
      throw ConfigError("funnel layer " + std::to_string(out[i].layer) + " >= num_blocks " +
                        std::to_string(num_blocks));
    }
    if (i > 0 && out[i].layer == out[i - 1].layer) {
      throw ConfigError("duplicate funnel layer " + std::to_string(out[i].layer));
    }
  }
  return out;
}

std::string FormatFunnelShorthand(std::vector<FunnelPlacement> placements) {
  std::sort(placements.begin(), placements.end());
  std::string out;
  for (const auto& p : placements) {
    if (!out.empty()) out += ",";
    out += "s" + std::to_string(p.layer) + "^" + std::to_string(p.stride);
  }
  return out;
}

EncoderConfig WithFunnel(const EncoderConfig& base, std::string_view shorthand) {
  EncoderConfig c = base;
  c.funnel = ParseFunnelShorthand(shorthand, base.num_blocks);
  c.Validate();
  return c;
}

}  // namespace fhat
