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

#include "fhat/evaluator.h"

#include <algorithm>
#include <exception>
#include <thread>

#include "fhat/decoder.h"
#include "fhat/encoder.h"
#include "fhat/errors.h"
#include "fhat/mwer.h"

namespace fhat {

namespace {

double Ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

double EvalMetrics::TokenErrorRate() const { return Ratio(token_errors, reference_tokens); }
double EvalMetrics::ExactMatchRate() const { return Ratio(exact_matches, utterances); }
double EvalMetrics::MeanSteps() const { return Ratio(total_steps, utterances); }

void EvalMetrics::Merge(const EvalMetrics& o) {
  utterances += o.utterances;
  reference_tokens += o.reference_tokens;
  token_errors += o.token_errors;
  exact_matches += o.exact_matches;
  total_steps += o.total_steps;
  max_steps = std::max(max_steps, o.max_steps);
  invariant_violations += o.invariant_violations;
}

EvalResult Evaluate(const HatConfig& config, const ParamSet& params, const Dataset& data,
                    const EvalOptions& options) {
  config.Validate();
  if (options.beam < 1 || options.max_labels < 1) throw ConfigError("beam and max_labels must be >= 1");
  const std::size_t n = data.examples.size();
  const std::size_t workers = std::clamp<std::size_t>(options.workers, 1, std::max<std::size_t>(n, 1));

  EvalResult result;
  result.hypotheses.resize(n);
  result.step_bound = config.encoder.OutputLength(std::max<std::size_t>(data.MaxFrames(), 1)) + options.max_labels;

  AlignmentSyncOptions decode;
  decode.beam = options.beam;
  decode.max_labels = options.max_labels;

  std::vector<EvalMetrics> partial(workers);
  std::vector<std::exception_ptr> errors(workers);
  auto run = [&](std::size_t w) {
    try {
      for (std::size_t i = w; i < n; i += workers) {
        const Example& ex = data.examples[i];
        const EncodedSequence enc = Encode(ex.features, config.encoder, params);
        HatScorer scorer(config, params, enc.frames);
        const DecodeResult r = DecodeAlignmentSync(scorer, decode);
        std::vector<int> hyp = r.nbest.empty() ? std::vector<int>{} : r.nbest.front().labels;
        EvalMetrics& m = partial[w];
        ++m.utterances;
        m.reference_tokens += ex.labels.size();
        m.token_errors += EditDistance(hyp, ex.labels);
        m.exact_matches += hyp == ex.labels ? 1 : 0;
        m.total_steps += r.steps;
        m.max_steps = std::max(m.max_steps, r.steps);
        m.invariant_violations += r.invariant_violations;
        result.hypotheses[i] = std::move(hyp);
      }
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  if (workers == 1) {
    run(0);
  } else {
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(run, w);
    for (auto& t : threads) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  for (const auto& m : partial) result.metrics.Merge(m);
  return result;
}

}  // namespace fhat
