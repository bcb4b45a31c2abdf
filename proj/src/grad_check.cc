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

#include "fhat/grad_check.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fhat/errors.h"
#include "fhat/rng.h"

namespace fhat {

namespace {

double Evaluate(const ScalarFn& f, const ParamSet& params, ParamSet* grad) {
  const double v = f(params, grad);
  if (!std::isfinite(v)) throw NumericError("GradCheck: function value is not finite");
  return v;
}

}  // namespace

GradCheckResult GradCheck(const ScalarFn& f, const ParamSet& params,
                          const GradCheckOptions& options) {
  GradCheckResult result;
  result.analytic = params.ZerosLike();
  Evaluate(f, params, &result.analytic);
  result.numeric = params.ZerosLike();

  Rng rng(options.seed);
  ParamSet probe = params;
  for (std::size_t e = 0; e < probe.size(); ++e) {
    auto& entry = probe.entries()[e];
    std::vector<double>& data = entry.value.data();
    std::vector<std::size_t> coords(data.size());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (options.max_coords_per_tensor > 0 && coords.size() > options.max_coords_per_tensor) {
      for (std::size_t i = 0; i < options.max_coords_per_tensor; ++i) {
        const auto j = static_cast<std::size_t>(
            rng.UniformInt(static_cast<std::int64_t>(i), static_cast<std::int64_t>(coords.size() - 1)));
        std::swap(coords[i], coords[j]);
      }
      coords.resize(options.max_coords_per_tensor);
      std::sort(coords.begin(), coords.end());
    }
    for (std::size_t i : coords) {
      const double saved = data[i];
      data[i] = saved + options.step;
      const double up = Evaluate(f, probe, nullptr);
      data[i] = saved - options.step;
      const double down = Evaluate(f, probe, nullptr);
      data[i] = saved;
      const double numeric = (up - down) / (2.0 * options.step);
      const double analytic = result.analytic.entries()[e].value[i];
      result.numeric.entries()[e].value[i] = numeric;
      const double rel = std::abs(analytic - numeric) /
                         std::max(1e-8, std::abs(analytic) + std::abs(numeric));
      ++result.coords_checked;
      if (rel > result.max_rel_error || result.worst_param.empty()) {
        if (rel >= result.max_rel_error) {
          result.max_rel_error = rel;
          result.worst_param = entry.name;
          result.worst_index = i;
          result.worst_analytic = analytic;
          result.worst_numeric = numeric;
        }
      }
    }
  }
  return result;
}

ScalarFn GraphScalarFn(std::function<ad::Var(ad::Graph&)> body) {
  return [body = std::move(body)](const ParamSet& params, ParamSet* grad) {
    ad::Graph g(grad != nullptr);
    g.BindParams(&params, grad);
    ad::Var out = body(g);
    if (grad) g.Backward(out);
    return out.value()[0];
  };
}

ad::Var RandomReadout(ad::Var x, std::uint64_t seed) {
  Rng rng(seed ^ 0x5bd1e995ULL);
  return ad::WeightedSum(x, rng.NormalTensor(x.value().shape()));
}

double GraphMaxRelError(std::function<ad::Var(ad::Graph&)> body, const ParamSet& params,
                        std::size_t max_coords_per_tensor, std::uint64_t seed) {
  GradCheckOptions opts;
  opts.max_coords_per_tensor = max_coords_per_tensor;
  opts.seed = seed;
  return GradCheck(GraphScalarFn(std::move(body)), params, opts).max_rel_error;
}

}  // namespace fhat
