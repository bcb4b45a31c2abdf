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

#ifndef FHAT_SYNTHETIC_H_
#define FHAT_SYNTHETIC_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fhat/tensor.h"

namespace fhat {

// Token-sequence task standing in for speech: every label id has a fixed
// N(0, 1) prototype vector, repeated frames_per_token times and corrupted by
// Gaussian noise.
struct SyntheticTask {
  std::size_t vocab_size = 20;
  std::size_t feature_dim = 16;
  std::size_t frames_per_token = 32;
  double noise = 0.5;
  std::size_t min_labels = 2;
  std::size_t max_labels = 10;
  std::uint64_t seed = 0;  // selects the prototypes

  void Validate() const;  // ConfigError
  // [vocab_size x feature_dim]
  Tensor Prototypes() const;
};

struct Example {
  Tensor features;  // [T' x d]
  std::vector<int> labels;
};

struct Dataset {
  SyntheticTask task;
  std::uint64_t stream = 0;
  std::vector<Example> examples;

  std::size_t MaxFrames() const;
  std::size_t MaxLabels() const;
};

// Examples are drawn independently from (task.seed, stream, index), so the
// train and held-out streams share prototypes but never share utterances.
Example GenerateExample(const SyntheticTask& task, const Tensor& prototypes, std::uint64_t stream,
                        std::size_t index);
Dataset GenerateDataset(const SyntheticTask& task, std::size_t count, std::uint64_t stream = 0);

// On-disk layout: `<stem>.bin` holds the records back to back, each a
// little-endian header (uint64 T', uint64 U, uint64 d), T'*d float64 frames in
// row-major order and U int32 label ids. `<stem>.manifest` is a text file with
// the task parameters and one line per record: index, byte offset, T', U.
// Returns the manifest path. Throws IoError.
std::filesystem::path WriteDataset(const Dataset& dataset, const std::filesystem::path& stem);
// Accepts either the manifest path or the stem. Throws IoError, ParseError.
Dataset ReadDataset(const std::filesystem::path& path);

}  // namespace fhat

#endif  // FHAT_SYNTHETIC_H_
