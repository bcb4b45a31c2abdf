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

#ifndef FHAT_ENCODER_CONFIG_H_
#define FHAT_ENCODER_CONFIG_H_

#include <compare>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace fhat {

// A conformer block (by 0-based index) replaced by its funnel variant with the
// given query stride.
struct FunnelPlacement {
  std::size_t layer = 0;
  std::size_t stride = 1;
  friend auto operator<=>(const FunnelPlacement&, const FunnelPlacement&) = default;
};

struct EncoderConfig {
  std::size_t num_blocks = 4;
  std::size_t model_dim = 64;
  std::size_t attention_heads = 4;
  std::size_t conv_kernel_size = 7;
  std::size_t ffn_multiplier = 4;
  std::size_t input_dim = 16;         // feature dimension d
  std::size_t subsample_factor = 4;   // power of two; one stride-2 stage per factor of 2
  double input_frame_ms = 10.0;
  std::vector<FunnelPlacement> funnel;  // sorted by layer

  // Throws ConfigError on any violated invariant.
  void Validate() const;

  std::size_t FunnelReductionRatio() const;  // product of strides
  std::size_t TotalReductionRatio() const;   // subsample_factor * product of strides
  double FrameDurationMs() const;            // f_enc
  std::size_t StrideAt(std::size_t layer) const;  // 1 for plain conformer blocks
  std::size_t NumSubsampleStages() const;

  std::size_t SubsampledLength(std::size_t input_frames) const;
  // Input length of every block, followed by the encoder output length
  // (num_blocks + 1 entries).
  std::vector<std::size_t> BlockLengths(std::size_t input_frames) const;
  std::size_t OutputLength(std::size_t input_frames) const;

  // Full-scale dimensions: 16 blocks, 1536 units, 8 heads, kernel 15,
  // 128-dim log-mel input.
  static EncoderConfig FullScale();
};

// Parses the funnel shorthand, e.g. "(s15^2, s13^2)", "s14^8,s15^8" or
// "s_{15}^{2}". Empty text or "-" means no funnel layers. Result is sorted by
// layer. Throws ParseError for malformed tokens and ConfigError for duplicate
// layers, indices >= num_blocks or strides < 1.
std::vector<FunnelPlacement> ParseFunnelShorthand(std::string_view text, std::size_t num_blocks);
std::string FormatFunnelShorthand(std::vector<FunnelPlacement> placements);

// Parses into a copy of `base`, validating against base.num_blocks.
EncoderConfig WithFunnel(const EncoderConfig& base, std::string_view shorthand);

}  // namespace fhat

#endif  // FHAT_ENCODER_CONFIG_H_
