#pragma once

#include <cstdint>

#include "regkit/parallel.hpp"

namespace regkit {

/// Every numerical threshold used by the analyses. Reports embed the block
/// that was actually used.
struct Tolerances {
  double tol_feas = 1e-7;   // residual at or below which a point counts as feasible
  double tol_act = 1e-6;    // |h_i| at or below which an inequality is active
  double tol_rank = 1e-8;   // relative singular-value cut for numerical rank
  double tol_lp = 1e-8;     // phase-1 optimum accepted as feasible
  double eps_pos = 1e-6;    // numerical stand-in for lambda_i > 0
  double dist_tol = 1e-5;   // projection accuracy target
  double delta_viol = 1e-6; // calmness violation margin
  double slope_cap = 1e3;   // slope treated as a discontinuity
  double dedup = 1e-4;      // S-representative merge radius
  double value_tie = 1e-6;  // f-gap within which a point is a representative
  int subset_cap = 12;      // largest active set enumerated exhaustively

  // Probe verdict thresholds.
  double diverge_factor = 10.0;    // kappa(r_min) / kappa(r_max) above this diverges
  double diverge_abs = 100.0;      // ... and kappa(r_min) above this
  double consistent_spread = 2.0;  // max/min kappa below this is consistent
  double isc_shrink = 0.1;         // d(r_min) < isc_shrink * d(r_max) counts as d -> 0
  double isc_radius_factor = 10.0; // d(r_min) < factor * r_min counts as d -> 0
  double isc_gap = 0.1;            // d above this at every radius is a gap
};

/// Knobs of the inner minimiser shared by projection and lower-level solves.
struct SolverConfig {
  double box = 4.0;        // grid half-width (m <= 2) and multistart spread
  int grid_levels = 3;     // zoom levels after the coarse grid, x10 each
  int candidates = 6;      // grid local minima carried into the polish
  int restarts = 16;       // multistart count for m > 2
  double tol_feas = 1e-7;
  double stationarity = 1e-9;
  std::uint64_t seed = 42;
};

struct AnalysisConfig {
  Tolerances tol;
  SolverConfig solver;
  Exec exec = Exec::parallel;
};

}  // namespace regkit
