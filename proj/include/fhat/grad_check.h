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

#ifndef FHAT_GRAD_CHECK_H_
#define FHAT_GRAD_CHECK_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>

#include "fhat/graph.h"
#include "fhat/param_set.h"

namespace fhat {

// A scalar function of a parameter set. When `grad` is non-null it must be
// filled (same layout as `params`) with the analytic gradient.
using ScalarFn = std::function<double(const ParamSet& params, ParamSet* grad)>;

struct GradCheckOptions {
  double step = 1e-5;
  // 0 checks every coordinate; otherwise at most this many per tensor,
  // chosen deterministically from `seed`.
  std::size_t max_coords_per_tensor = 0;
  std::uint64_t seed = 0;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t coords_checked = 0;
  ParamSet analytic;
  ParamSet numeric;  // entries outside the checked subset are left at 0
};

// Central differences vs analytic gradient. The relative error of a coordinate
// is |g_a - g_n| / max(1e-8, |g_a| + |g_n|). Throws NumericError if f is not
// finite anywhere it is evaluated.
GradCheckResult GradCheck(const ScalarFn& f, const ParamSet& params,
                          const GradCheckOptions& options = {});

// ScalarFn from a graph body; the body's 1x1 output is differentiated into the
// grad ParamSet when one is requested.
ScalarFn GraphScalarFn(std::function<ad::Var(ad::Graph&)> body);

// Fixed random projection of `x` to a scalar, so no gradient is structurally
// zero.
ad::Var RandomReadout(ad::Var x, std::uint64_t seed);

// Max relative error of GradCheck(GraphScalarFn(body), params).
double GraphMaxRelError(std::function<ad::Var(ad::Graph&)> body, const ParamSet& params,
                        std::size_t max_coords_per_tensor = 0, std::uint64_t seed = 0);

}  // namespace fhat

#endif  // FHAT_GRAD_CHECK_H_
