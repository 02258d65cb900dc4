#pragma once

#include <string>
#include <vector>

#include "regkit/config.hpp"
#include "regkit/report.hpp"

namespace regkit {

struct Expectation {
  std::string example;
  std::string check;
  bool passed = false;
  std::string detail;
};

struct ExampleRun {
  std::string example;
  std::vector<Expectation> checks;
  json payload;          // deterministic for a fixed seed
  double seconds = 0.0;  // not part of the payload
  bool passed() const;
};

/// Bundled example names in reproduction order.
std::vector<std::string> reproducible_examples();

/// Runs the expectations of one bundled example. Throws
/// PreconditionViolation for an unknown name.
ExampleRun reproduce_example(const std::string& name, std::uint64_t seed, const AnalysisConfig& cfg);

/// PASS/FAIL table, one row per expectation.
std::string expectation_table(const std::vector<ExampleRun>& runs);

}  // namespace regkit
