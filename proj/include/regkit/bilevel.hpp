#pragma once

#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "regkit/config.hpp"
#include "regkit/cq.hpp"
#include "regkit/parametric.hpp"
#include "regkit/sampler.hpp"

namespace regkit {

/// Axis-aligned box of upper-level parameters.
struct Box {
  Vec lo;
  Vec hi;
  bool contains(std::span<const double> x) const;
  Vec clip(std::span<const double> x) const;
};

/// min over x in X, y in S(x) of F(x, y).
struct BilevelProblem {
  Expr F;
  Box X;
  ParametricProblem lower;

  /// Throws DimensionMismatch, IndexError or PreconditionViolation.
  void validate() const;
  double upper(std::span<const double> x, std::span<const double> y) const;
};

struct OptPess {
  double phi_o = std::numeric_limits<double>::infinity();
  double phi_p = -std::numeric_limits<double>::infinity();
  bool empty = true;  // S(x) empty: phi_o = +inf, phi_p = -inf
  Vec y_o;            // representative attaining phi_o
  Vec y_p;            // representative attaining phi_p
};

OptPess phi_opt_pess(const BilevelProblem& problem, std::span<const double> x,
                     const AnalysisConfig& cfg);
/// Same from an already solved lower level.
OptPess phi_opt_pess(const BilevelProblem& problem, const LowerSolution& lower);

struct OptimisticRound {
  GridSpec grid;
  Vec x;
  Vec y;
  double F = std::numeric_limits<double>::infinity();
  int feasible_nodes = 0;
};

struct OptimisticSolution {
  Vec x;
  Vec y;
  double F = std::numeric_limits<double>::infinity();
  std::vector<OptimisticRound> rounds;  // incumbent after each round, round 0 is the grid
};

/// Grid over X followed by refine_rounds zooms: each round lays 21 nodes per
/// axis over the incumbent +- the previous spacing, clipped to X. Throws
/// AllNodesInfeasible when no node of the initial grid has S(x) nonempty.
OptimisticSolution solve_optimistic(const BilevelProblem& problem, const GridSpec& grid,
                                    int refine_rounds, const AnalysisConfig& cfg);

/// Default grid over X with `nodes` nodes per axis.
GridSpec box_grid(const Box& X, int nodes);

enum class CalmVerdict { calm_on_samples, likely_not_calm, inconclusive };
std::string to_string(CalmVerdict v);

struct CalmWitness {
  Vec x;
  Vec y;
  double u = 0.0;       // max(0, f(x,y) - phi(x))
  double margin = 0.0;  // P_kappa(x, y)
  double radius = 0.0;  // radius whose samples produced it
};

struct CalmRadius {
  double radius = 0.0;
  int samples = 0;    // feasible samples inside the ball
  double min_P = std::numeric_limits<double>::infinity();
  bool violated = false;
};

struct KappaResult {
  double kappa = 0.0;
  bool violated = false;  // persistent: at the two smallest radii
  std::vector<CalmRadius> radii;
  std::optional<CalmWitness> witness;
};

struct CalmnessReport {
  Vec x;
  Vec y;
  double F_ref = 0.0;
  std::vector<double> kappa_grid;
  std::vector<KappaResult> kappas;
  CalmVerdict verdict = CalmVerdict::inconclusive;
  std::optional<double> kappa_min;
  int attempted = 0;   // perturbed points drawn
  int skipped = 0;     // empty image, outside the ball or solver failure
  std::vector<std::string> notes;
  Tolerances tol;
};

/// P_kappa(x, y) = F(x,y) - F_ref + kappa * max(0, f(x,y) - phi(x)).
double calmness_penalty(const BilevelProblem& problem, const ValueFunction& phi, double F_ref,
                        double kappa, std::span<const double> x, std::span<const double> y);

/// Samples (x, y) with x in X and y in Gamma(x) inside balls around
/// (xbar, ybar); a kappa is violated when P_kappa < -delta_viol at the two
/// smallest radii.
CalmnessReport check_partial_calmness(const BilevelProblem& problem, std::span<const double> xbar,
                                      std::span<const double> ybar,
                                      const NeighborhoodSampler& sampler,
                                      std::vector<double> kappa_grid, const AnalysisConfig& cfg);

std::vector<double> default_kappa_grid();

struct ExistencePoint {
  Vec x;
  Vec y;
  CQVerdict verdict = CQVerdict::inconclusive;
  std::vector<std::string> notes;
};

struct ExistenceNode {
  Vec x;
  double phi_o = std::numeric_limits<double>::infinity();
  double phi_p = -std::numeric_limits<double>::infinity();
  std::size_t reps = 0;
};

struct ExistenceReport {
  bool x_compact = true;         // boxes are compact by construction
  bool x_in_dom = true;          // every node has Gamma(x) nonempty
  std::vector<Vec> infeasible_nodes;
  bool locally_bounded = false;  // echoed from the problem flags
  std::vector<ExistencePoint> rcpld_s;
  bool rcpld_s_all_hold = true;
  std::vector<ExistenceNode> nodes;
  std::optional<Vec> incumbent_x;
  std::optional<Vec> incumbent_y;
  double incumbent_phi_p = std::numeric_limits<double>::infinity();
  std::vector<std::string> notes;
};

/// Numerical check of the pessimistic existence hypotheses on a grid over X
/// and the grid minimiser of phi_p. RCPLD_S is checked at every
/// representative of `rcpld_nodes` evenly spaced feasible nodes.
ExistenceReport pessimistic_existence_report(const BilevelProblem& problem, const GridSpec& grid,
                                             const NeighborhoodSampler& sampler,
                                             const AnalysisConfig& cfg, int rcpld_nodes = 7);

}  // namespace regkit
