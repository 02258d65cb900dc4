#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "regkit/bilevel.hpp"
#include "regkit/cq.hpp"
#include "regkit/geom.hpp"
#include "regkit/parametric.hpp"

namespace regkit {

using json = nlohmann::json;

inline constexpr const char* kToolVersion = "1.0.0";

/// Finite doubles as numbers, +-inf and nan as the strings "inf", "-inf", "nan".
json num(double v);
json vec(const Vec& v);

/// Sorted keys, two-space indentation, floats printed with %.17g.
std::string canonical_dump(const json& j);

/// 64-bit FNV-1a, as 16 lowercase hex digits.
std::string fnv1a64_hex(const std::string& bytes);

json to_json(const Tolerances& t);
json to_json(const SolverConfig& s);
json to_json(const NeighborhoodSampler& s);
json to_json(const CQReport& r);
json to_json(const RegularityProbe& p);
json to_json(const IscProbe& p);
json to_json(const SMapProbes& p);
json to_json(const GridScan& s, const LipschitzReport* lip);
json to_json(const OptimisticSolution& s);
json to_json(const CalmnessReport& r);
json to_json(const ExistenceReport& r);

struct RunReport {
  std::string command;       // verb and arguments that affect the payload
  std::uint64_t seed = 42;
  Tolerances tol;
  SolverConfig solver;
  std::string input_digest;  // FNV-1a of the problem-file bytes
  json payload;
  double wall_time = 0.0;    // seconds; kept out of the payload

  json to_json() const;
};

}  // namespace regkit
