#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "regkit/config.hpp"
#include "regkit/kernel.hpp"
#include "regkit/sampler.hpp"
#include "regkit/system.hpp"

namespace regkit {

enum class CQVerdict { holds_on_samples, fails, inconclusive };
std::string to_string(CQVerdict v);

/// Constraint labels used in reports: 1..p over (ineq, eq) of the original
/// system, 0 for the value-function constraint of a solution-map system.
int constraint_label(const ParametricSystem& sys, std::size_t pos);

struct RadiusCheck {
  double radius = 0.0;
  int samples = 0;
  int omega_hits = 0;
  bool passed = true;
};

struct RankViolation {
  std::vector<int> K;  // labels of the family whose rank or dependence changed
  double radius = 0.0;
  int sample = -1;     // -1 when the violation is at the center
  Vec point;           // joint (x, y)
  int rank_center = 0;
  int rank_sample = 0;
};

struct SupportCheck {
  std::vector<int> T;      // labels of the support
  bool realizable = false;
  Vec lambda;              // multiplier over the Gamma constraints when realizable
  bool dependent_at_center = false;
  bool passed = true;
};

struct CQReport {
  std::string cq_name;
  Vec x;
  Vec y;
  CQVerdict verdict = CQVerdict::inconclusive;
  std::vector<int> active;   // labels of active inequalities
  std::vector<int> basis_S;  // RCPLD: labels of the equality basis
  int rank = 0;              // LICQ: rank of the active family
  std::optional<PLDCertificate> pld;       // MFCQ fails
  std::optional<RankViolation> violation;  // sampled checks that fail
  std::vector<RadiusCheck> radii;
  double accepted_radius = 0.0;  // largest radius whose samples and all smaller ones passed
  std::vector<SupportCheck> supports;  // RCPLD_S
  std::optional<Vec> multiplier;       // RCPLD_S: first realizable multiplier
  std::vector<std::string> notes;
  Tolerances tol;
};

std::vector<std::size_t> active_positions(const ParametricSystem& sys, std::span<const double> x,
                                          std::span<const double> y, double tol_act);

CQReport check_licq(const ParametricSystem& sys, std::span<const double> x,
                    std::span<const double> y, const AnalysisConfig& cfg);
CQReport check_mfcq(const ParametricSystem& sys, std::span<const double> x,
                    std::span<const double> y, const AnalysisConfig& cfg);
/// Throws SubsetCapExceeded when the active set exceeds tol.subset_cap.
CQReport check_rcrcq(const ParametricSystem& sys, std::span<const double> x,
                     std::span<const double> y, const NeighborhoodSampler& sampler,
                     const AnalysisConfig& cfg);
CQReport check_rcpld(const ParametricSystem& sys, std::span<const double> x,
                     std::span<const double> y, const NeighborhoodSampler& sampler,
                     const AnalysisConfig& cfg);

enum class H0Mode { h0_as_ineq, h0_as_eq };

/// Gamma augmented by h0 = f - phi. With h0_as_ineq h0 is appended to the
/// inequalities, otherwise to the equalities. phi_hat is used at every x
/// unless an oracle is attached, in which case phi(x) is re-solved.
ParametricSystem build_solution_system(const ParametricProblem& problem, double phi_hat,
                                       H0Mode mode,
                                       std::shared_ptr<const ValueFunction> oracle = nullptr);

/// RCPLD of the solution-map system through multiplier supports: RCPLD of
/// Gamma, then for every support T realizable by a multiplier with
/// lambda_i >= eps_pos on T, the family {0} u T u S must stay linearly
/// dependent on samples whenever it is positive-linearly dependent at the
/// center. Throws LowerLevelUnsolved when phi(x) is +inf.
CQReport check_rcpld_S_via_multipliers(const ParametricProblem& problem, std::span<const double> x,
                                       std::span<const double> y,
                                       const NeighborhoodSampler& sampler,
                                       const AnalysisConfig& cfg);

}  // namespace regkit
