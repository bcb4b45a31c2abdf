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

#ifndef FHAT_TESTS_TEST_UTIL_H_
#define FHAT_TESTS_TEST_UTIL_H_

#include <cstdint>
#include <functional>

#include "fhat/grad_check.h"
#include "fhat/graph.h"
#include "fhat/param_set.h"

namespace fhat::testing {

inline ScalarFn GraphFn(std::function<ad::Var(ad::Graph&)> body) {
  return GraphScalarFn(std::move(body));
}

inline ad::Var RandomReadout(ad::Var x, std::uint64_t seed) { return fhat::RandomReadout(x, seed); }

inline double MaxRelError(std::function<ad::Var(ad::Graph&)> body, const ParamSet& params,
                          std::size_t max_coords = 0, std::uint64_t seed = 0) {
  return GraphMaxRelError(std::move(body), params, max_coords, seed);
}

}  // namespace fhat::testing

#endif  // FHAT_TESTS_TEST_UTIL_H_
