#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "regkit/kernel.hpp"

namespace regkit {

enum class Restriction { full, dom, custom };

std::string to_string(Restriction r);
Restriction restriction_from_string(const std::string& s);

/// Deterministic sampling around a reference point (x, y).
///
/// Sample k of radius index i draws from its own generator seeded by
/// (seed, i, k), so any subset of samples can be evaluated in any order.
struct NeighborhoodSampler {
  std::vector<double> radii{1e-1, 1e-2, 1e-3};
  int samples_per_radius = 200;
  std::uint64_t seed = 42;
  Restriction restriction = Restriction::full;
  std::function<bool(std::span<const double>)> omega;  // used when custom

  /// Throws PreconditionViolation unless radii are positive and strictly
  /// descending and the sample count is positive.
  void validate() const;

  /// Uniform point in the unit ball of dimension dim, stream (i, k).
  Vec unit_ball(int dim, std::size_t radius_index, int k) const;
  /// Uniform direction on the unit sphere of dimension dim, stream k only,
  /// so every radius sees the same directions.
  Vec unit_direction(int dim, int k) const;
  /// Scalar in [0, 1) for stream (i, k, salt).
  double unit_scalar(std::size_t radius_index, int k, std::uint64_t salt) const;
};

}  // namespace regkit
