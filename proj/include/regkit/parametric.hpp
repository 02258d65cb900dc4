#pragma once

#include <limits>
#include <map>
#include <memory>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include "regkit/config.hpp"
#include "regkit/geom.hpp"
#include "regkit/sampler.hpp"
#include "regkit/solver.hpp"
#include "regkit/system.hpp"

namespace regkit {

struct LowerSolution {
  Vec x;
  double phi = std::numeric_limits<double>::infinity();  // +inf on an empty image
  std::vector<Vec> reps;  // feasible points with f <= phi + value_tie, deduplicated
  SearchTrace trace;
  bool empty() const { return reps.empty(); }
};

/// phi(x) and representatives of S(x).
LowerSolution solve_lower(const ParametricProblem& problem, std::span<const double> x,
                          const AnalysisConfig& cfg);

/// phi as a ValueFunction with a memo keyed by x rounded to 1e-9. The value
/// is always computed at the rounded x, so lookups never depend on the
/// order in which threads fill the cache.
class MarginalFunction final : public ValueFunction {
 public:
  MarginalFunction(ParametricProblem problem, AnalysisConfig cfg);
  double at(std::span<const double> x) const override;
  /// Memoised lower-level solution at the rounded x.
  LowerSolution solution(std::span<const double> x) const;
  std::size_t cache_size() const;

 private:
  ParametricProblem problem_;
  AnalysisConfig cfg_;
  mutable std::shared_mutex mutex_;
  mutable std::map<std::vector<long long>, std::shared_ptr<const LowerSolution>> memo_;
};

struct GridAxis {
  double lo = 0.0;
  double hi = 0.0;
  int nodes = 1;
  double at(int k) const;
};

struct GridSpec {
  std::vector<GridAxis> axes;
  std::size_t size() const;
  /// Node coordinates, last axis fastest.
  Vec node(std::size_t index) const;
  std::vector<int> multi_index(std::size_t index) const;
  /// "lo:hi:nodes" per axis, axes separated by ','.
  static GridSpec parse(const std::string& text);
  std::string str() const;
};

struct ScanNode {
  Vec x;
  double phi = std::numeric_limits<double>::infinity();
  std::vector<Vec> reps;
  SearchTrace trace;
};

struct GridScan {
  GridSpec grid;
  std::vector<ScanNode> nodes;
};

/// One solve_lower per node, merged in grid order. Throws GridTooLarge
/// above 1e6 nodes and DimensionMismatch when the grid does not match n.
GridScan scan(const ParametricProblem& problem, const GridSpec& grid, const AnalysisConfig& cfg);

std::string scan_csv(const GridScan& s, int m);

struct Window {
  Vec lo;
  Vec hi;
  bool contains(std::span<const double> x) const;
};

struct PairSlope {
  std::size_t a = 0;  // node indices
  std::size_t b = 0;
  int axis = 0;
  double slope = 0.0;
};

struct Discontinuity {
  std::size_t node_a = 0;
  std::size_t node_b = 0;
  int axis = 0;
  double lo = 0.0;  // final bracketing interval along the axis
  double hi = 0.0;
  double phi_lo = 0.0;
  double phi_hi = 0.0;
  double slope = 0.0;
  int bisections = 0;
};

struct LipschitzReport {
  std::vector<PairSlope> slopes;  // neighbour pairs with finite phi at both ends
  std::vector<Discontinuity> flags;
  double modulus = 0.0;           // max slope over pairs inside the window
  std::vector<std::string> notes;
};

/// Neighbour slopes of phi plus bisection of every pair: a pair is flagged
/// when repeated halving keeps the jump while the slope passes slope_cap and
/// stays above it for two more halvings.
LipschitzReport lipschitz_scan(const ParametricProblem& problem, const GridScan& s,
                               const Window& window, const AnalysisConfig& cfg);

struct SMapProbes {
  RegularityProbe rreg;
  std::vector<IscProbe> isc;  // one per representative of S(x)
  IscVerdict lsc = IscVerdict::inconclusive;
  std::vector<std::string> notes;
};

/// R-regularity and lower semicontinuity probes of S at (x, y), on the
/// solution-map system with phi re-solved at every sampled x.
SMapProbes s_map_probes(const ParametricProblem& problem, std::span<const double> x,
                        std::span<const double> y, const NeighborhoodSampler& sampler,
                        const AnalysisConfig& cfg);

}  // namespace regkit
