#pragma once

#include <span>
#include <vector>

#include "regkit/config.hpp"
#include "regkit/system.hpp"

namespace regkit {

/// Smooth objective in y at a frozen parameter.
class Objective {
 public:
  virtual ~Objective() = default;
  virtual double value(std::span<const double> y) const = 0;
  virtual void gradient(std::span<const double> y, std::span<double> g) const = 0;
};

/// 1/2 ||y - target||^2.
class SquaredDistance final : public Objective {
 public:
  explicit SquaredDistance(Vec target) : target_(std::move(target)) {}
  double value(std::span<const double> y) const override;
  void gradient(std::span<const double> y, std::span<double> g) const override;

 private:
  Vec target_;
};

/// f(x, .) for an expression f and a frozen x.
class ExprObjective final : public Objective {
 public:
  ExprObjective(const Expr& f, int m, Vec x);
  double value(std::span<const double> y) const override;
  void gradient(std::span<const double> y, std::span<double> g) const override;

 private:
  CompiledExpr f_;
  std::vector<CompiledExpr> grad_;
  Vec x_;
};

struct LocalSolution {
  Vec y;
  double objective = 0.0;
  double residual = 0.0;
  double stationarity = 0.0;  // ||grad obj + sum lambda_i grad h_i||_inf
  Vec multipliers;            // one per constraint, from the final update
};

struct SearchTrace {
  int starts = 0;    // grid candidates or multistart points polished
  int evaluations = 0;
};

/// All polished local solutions of min { obj(y) : y in Gamma(x) }.
///
/// m <= 2: coarse grid over center +- cfg.box scored by obj + 1e3 * residual,
/// best separated local minima zoomed cfg.grid_levels times (x10 each), then
/// polished. m > 2: cfg.restarts deterministic starts around center. The
/// polish is an augmented-Lagrangian loop with BFGS inner steps and Armijo
/// backtracking. Results are sorted by (residual > tol_feas, objective) and
/// near-duplicates removed.
std::vector<LocalSolution> minimize_over_image(const ParametricSystem& sys,
                                               std::span<const double> x,
                                               std::span<const double> shifts,
                                               const Objective& obj,
                                               std::span<const double> center,
                                               const SolverConfig& cfg,
                                               SearchTrace* trace = nullptr);

/// Single augmented-Lagrangian polish from y0.
LocalSolution polish(const ParametricSystem& sys, std::span<const double> x,
                     std::span<const double> shifts, const Objective& obj,
                     std::span<const double> y0, const SolverConfig& cfg);

}  // namespace regkit
