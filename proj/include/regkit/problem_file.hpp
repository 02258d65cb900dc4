#pragma once

#include <optional>
#include <string>
#include <vector>

#include "regkit/bilevel.hpp"
#include "regkit/system.hpp"

namespace regkit {

struct NamedPoint {
  std::string name;
  Vec x;
  Vec y;
};

struct UpperSpec {
  std::string F;
  Box X;
};

/// In-memory form of a problem file. Expression strings are kept as written
/// so that dump() reproduces them.
struct ProblemFile {
  std::string name;
  std::string description;
  int n = 0;
  int m = 0;
  std::vector<std::string> ineq;
  std::vector<std::string> eq;
  std::string objective = "0";
  ProblemFlags flags;
  std::optional<UpperSpec> upper;
  std::vector<NamedPoint> points;  // sorted by name
  std::vector<std::string> warnings;

  ParametricProblem lower_problem() const;
  /// Throws PreconditionViolation when the file has no upper level.
  BilevelProblem bilevel() const;
  const NamedPoint* point(const std::string& name) const;
};

/// Parses and validates problem-file text. Every failure is a
/// ProblemFileError whose message starts with the error kind and whose
/// line() points into `text`.
ProblemFile parse_problem(const std::string& text);
/// Reads `path`; a bare bundled name ("ex32_gamma" or "ex32_gamma.json")
/// that does not exist on disk resolves to the embedded copy.
ProblemFile load_problem(const std::string& path, std::string* raw_text = nullptr);
/// Canonical JSON text of the file (sorted keys).
std::string dump_problem(const ProblemFile& p);

struct BundledProblem {
  std::string name;
  std::string text;
};
const std::vector<BundledProblem>& bundled_problems();
const BundledProblem* find_bundled(const std::string& name);

}  // namespace regkit
