#pragma once

#include <limits>
#include <span>
#include <string>
#include <vector>

#include "regkit/config.hpp"
#include "regkit/sampler.hpp"
#include "regkit/system.hpp"

namespace regkit {

struct Projection {
  bool empty = false;  // no candidate reached residual <= tol_feas
  Vec y_star;
  double distance = std::numeric_limits<double>::infinity();
  int restarts = 0;
  double stationarity = 0.0;
};

/// Closest point of Gamma(x) to nu. Shifts of a value-function constraint
/// come from the system; a non-finite shift means an empty image.
Projection project(const ParametricSystem& sys, std::span<const double> x,
                   std::span<const double> nu, const SolverConfig& cfg);

/// dist(nu, Gamma(x)); +inf on an empty image.
double distance_to_image(const ParametricSystem& sys, std::span<const double> x,
                         std::span<const double> nu, const SolverConfig& cfg);

struct MultiplierProbe {
  bool exists = false;
  Vec lambda;  // one per constraint when exists
  double M = 0.0;
  double stationarity_residual = 0.0;
};

/// Is there lambda with (y - nu)/|y - nu| + sum lambda_i grad_y h_i(x,y) = 0,
/// lambda_i >= 0 on active inequalities, 0 on inactive ones, and
/// sum |lambda_i| <= M? Throws DegenerateDirection when y == nu.
MultiplierProbe multiplier_probe(const ParametricSystem& sys, std::span<const double> x,
                                 std::span<const double> y, std::span<const double> nu,
                                 double M, const Tolerances& tol);

enum class RRegVerdict { consistent_with_R_regular, likely_not_R_regular, inconclusive };
std::string to_string(RRegVerdict v);

struct RadiusRecord {
  double radius = 0.0;
  int samples = 0;       // directions tried
  int omega_hits = 0;    // of which x lies in the restriction
  int eligible = 0;      // of which the residual exceeds tol_feas
  double kappa_hat = 0.0;
  Vec argmax;            // joint (x, y) of the largest ratio
  double argmax_distance = 0.0;
  double argmax_residual = 0.0;
};

struct RegularityProbe {
  Vec x_center;
  Vec y_center;
  Restriction restriction = Restriction::full;
  std::vector<RadiusRecord> radii;
  RRegVerdict verdict = RRegVerdict::inconclusive;
  std::vector<std::string> notes;
};

/// Sampled estimate of the modulus in dist(y, Gamma(x)) <= kappa * residual.
/// Samples lie on the sphere of each radius around (x, y); the best
/// directions are refined by a compass search that maximises the ratio.
RegularityProbe estimate_rregularity(const ParametricSystem& sys, std::span<const double> x,
                                     std::span<const double> y,
                                     const NeighborhoodSampler& sampler,
                                     const AnalysisConfig& cfg);

enum class IscVerdict { likely_inner_semicontinuous, likely_not, inconclusive };
std::string to_string(IscVerdict v);

struct IscRecord {
  double radius = 0.0;
  int samples = 0;
  int omega_hits = 0;
  double d = 0.0;  // max over sampled x of dist(y, Gamma(x))
  Vec argmax_x;
};

struct IscProbe {
  Vec x_center;
  Vec y_center;
  Restriction restriction = Restriction::full;
  std::vector<IscRecord> radii;
  IscVerdict verdict = IscVerdict::inconclusive;
};

IscProbe inner_semicontinuity_probe(const ParametricSystem& sys, std::span<const double> x,
                                    std::span<const double> y,
                                    const NeighborhoodSampler& sampler,
                                    const AnalysisConfig& cfg);

struct UniformScan {
  double kappa_uniform = 0.0;  // max over points of kappa_hat at the largest radius
  std::vector<RegularityProbe> probes;
  std::vector<std::size_t> diverging;  // indices of points whose probe diverged
};

/// graph_points are joint (x, y) vectors.
UniformScan uniform_rregularity_scan(const ParametricSystem& sys,
                                     const std::vector<Vec>& graph_points,
                                     const NeighborhoodSampler& sampler,
                                     const AnalysisConfig& cfg);

}  // namespace regkit
