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

#include "fhat/oracle.h"

#include <cmath>

#include "fhat/errors.h"

namespace fhat {

namespace {

// Walks every path from (t, u); `prob` is the product so far.
double Walk(const TransducerLattice& l, std::size_t t, std::size_t u, double prob) {
  const std::size_t T = l.frames, U = l.labels;
  double total = 0.0;
  if (u < U) total += Walk(l, t, u + 1, prob * std::exp(l.emit(t, u)));
  if (t + 1 < T) {
    total += Walk(l, t + 1, u, prob * std::exp(l.blank(t, u)));
  } else if (u == U) {
    total += prob * std::exp(l.blank(t, u));  // closing blank from the last frame
  }
  return total;
}

}  // namespace

double BruteForceAlignmentProbability(const TransducerLattice& lattice) {
  if (lattice.frames == 0) throw DimensionError("lattice needs at least one frame");
  return Walk(lattice, 0, 0, 1.0);
}

std::size_t CountAlignments(std::size_t frames, std::size_t labels) {
  if (frames == 0) return 0;
  std::size_t n = frames - 1 + labels, r = labels, c = 1;
  for (std::size_t i = 1; i <= r; ++i) c = c * (n - r + i) / i;
  return c;
}

}  // namespace fhat
