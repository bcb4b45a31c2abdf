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

#ifndef FHAT_ORACLE_H_
#define FHAT_ORACLE_H_

#include <cstddef>

#include "fhat/hat_loss.h"

namespace fhat {

// Probability-domain sum over every alignment of the lattice, by explicit
// path enumeration. Exponential; meant for tiny instances only.
double BruteForceAlignmentProbability(const TransducerLattice& lattice);
// Number of alignments, C(T - 1 + U, U).
std::size_t CountAlignments(std::size_t frames, std::size_t labels);

}  // namespace fhat

#endif  // FHAT_ORACLE_H_
