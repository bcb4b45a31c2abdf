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

#ifndef FHAT_CHECKPOINT_H_
#define FHAT_CHECKPOINT_H_

#include <filesystem>

#include "fhat/param_set.h"
#include "fhat/run_config.h"

namespace fhat {

struct Checkpoint {
  RunConfig config;
  ParamSet params;
};

// Binary container: magic line, the RunConfig as JSON, then every tensor as
// (name, rank, dims, float64 data), all little-endian with uint64 lengths.
void SaveCheckpoint(const std::filesystem::path& path, const RunConfig& config,
                    const ParamSet& params);
// Throws IoError on unreadable or truncated files and ParseError if the stored
// tensors do not match the layout implied by the stored config.
Checkpoint LoadCheckpoint(const std::filesystem::path& path);

}  // namespace fhat

#endif  // FHAT_CHECKPOINT_H_
