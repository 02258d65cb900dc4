#include "regkit/sampler.hpp"

#include <cmath>
#include <numbers>

#include "regkit/errors.hpp"
#include "regkit/rng.hpp"

namespace regkit {

namespace {

// Box-Muller; std::normal_distribution is not portable across libraries.
double normal(std::mt19937_64& rng) {
  double u1 = unit_uniform(rng);
  double u2 = unit_uniform(rng);
  if (u1 < 1e-300) u1 = 1e-300;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Vec gaussian_direction(std::mt19937_64& rng, int dim) {
  Vec v(static_cast<std::size_t>(dim));
  for (;;) {
    double s = 0.0;
    for (auto& c : v) {
      c = normal(rng);
      s += c * c;
    }
    if (s > 1e-24) {
      s = std::sqrt(s);
      for (auto& c : v) c /= s;
      return v;
    }
  }
}

}  // namespace

std::string to_string(Restriction r) {
  switch (r) {
    case Restriction::full: return "full";
    case Restriction::dom: return "dom";
    case Restriction::custom: return "custom";
  }
  return "full";
}

Restriction restriction_from_string(const std::string& s) {
  if (s == "full") return Restriction::full;
  if (s == "dom") return Restriction::dom;
  if (s == "custom") return Restriction::custom;
  throw PreconditionViolation("unknown restriction '" + s + "' (expected full or dom)");
}

void NeighborhoodSampler::validate() const {
  if (radii.empty()) throw PreconditionViolation("sampler needs at least one radius");
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (!(radii[i] > 0.0)) throw PreconditionViolation("sampler radii must be positive");
    if (i > 0 && !(radii[i] < radii[i - 1])) {
      throw PreconditionViolation("sampler radii must be strictly descending");
    }
  }
  if (samples_per_radius <= 0) throw PreconditionViolation("samples_per_radius must be positive");
  if (restriction == Restriction::custom && !omega) {
    throw PreconditionViolation("custom restriction without a membership oracle");
  }
}

Vec NeighborhoodSampler::unit_ball(int dim, std::size_t radius_index, int k) const {
  std::mt19937_64 rng(mix_seed(seed, radius_index + 1, static_cast<std::uint64_t>(k)));
  Vec v = gaussian_direction(rng, dim);
  double rho = std::pow(unit_uniform(rng), 1.0 / std::max(dim, 1));
  for (auto& c : v) c *= rho;
  return v;
}

Vec NeighborhoodSampler::unit_direction(int dim, int k) const {
  std::mt19937_64 rng(mix_seed(seed, 0xd1ULL, static_cast<std::uint64_t>(k)));
  return gaussian_direction(rng, dim);
}

double NeighborhoodSampler::unit_scalar(std::size_t radius_index, int k, std::uint64_t salt) const {
  std::mt19937_64 rng(mix_seed(seed ^ (salt * 0x9e3779b97f4a7c15ULL), radius_index + 1,
                               static_cast<std::uint64_t>(k)));
  return unit_uniform(rng);
}

}  // namespace regkit
