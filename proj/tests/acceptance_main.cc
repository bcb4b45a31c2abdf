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

// Runs the full acceptance suite and prints one line per criterion. Exit code
// is non-zero if any criterion fails.

#include <cstdlib>
#include <iostream>
#include <string>

#include "fhat/acceptance.h"

int main(int argc, char** argv) {
  fhat::AcceptanceOptions options;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--no-training") {
      options.run_training = false;
    } else if (arg == "--verbose") {
      options.log = &std::cerr;
    } else if (arg == "--artifacts" && i + 1 < argc) {
      options.artifact_dir = argv[++i];
    } else {
      std::cerr << "usage: acceptance_test [--no-training] [--verbose] [--artifacts DIR]\n";
      return 2;
    }
  }
  const fhat::AcceptanceReport report = fhat::RunAcceptance(options);
  for (const auto& c : report.criteria) std::cout << fhat::FormatCriterionLine(c) << "\n";
  for (const auto& r : report.toy_models) {
    std::cout << "  toy " << r.name << " seed " << r.seed << ": exact " << r.metrics.ExactMatchRate()
              << ", TER " << r.metrics.TokenErrorRate() << ", mean steps " << r.metrics.MeanSteps()
              << " (bound " << r.step_bound << "), trained in " << r.train_seconds << " s\n";
  }
  std::cout << (report.AllPassed() ? "ALL PASSED" : "FAILURES") << "\n";
  return report.AllPassed() ? EXIT_SUCCESS : EXIT_FAILURE;
}
