#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "regkit/expr.hpp"
#include "regkit/kernel.hpp"

namespace regkit {

/// Optimal-value oracle x -> phi(x); +inf outside the domain.
class ValueFunction {
 public:
  virtual ~ValueFunction() = default;
  virtual double at(std::span<const double> x) const = 0;
};

/// The constraint family of Gamma(x) = { y : h_i(x,y) <= 0 (i in I),
/// h_i(x,y) = 0 (i in J) }. Constraints are numbered 1..p with the
/// inequalities first.
///
/// One constraint may be marked as the value-function constraint
/// h(x,y) = f(x,y) - phi(x); its expression is f and phi is supplied either
/// by an attached oracle or frozen at a reference value.
class ParametricSystem {
 public:
  ParametricSystem() = default;
  /// Throws IndexError when an expression references a variable beyond (n, m).
  ParametricSystem(int n, int m, std::vector<Expr> ineq, std::vector<Expr> eq);

  int n() const { return n_; }
  int m() const { return m_; }
  std::size_t num_ineq() const { return num_ineq_; }
  std::size_t num_eq() const { return entries_.size() - num_ineq_; }
  std::size_t size() const { return entries_.size(); }
  bool is_ineq(std::size_t pos) const { return pos < num_ineq_; }

  /// 0-based position over (ineq, eq).
  const Expr& expr(std::size_t pos) const { return entries_[pos].expr; }
  const std::vector<Expr>& gradient_exprs(std::size_t pos) const { return entries_[pos].grad; }

  void set_value_function(std::size_t pos, std::shared_ptr<const ValueFunction> phi,
                          double frozen_value);
  bool has_value_function() const { return vf_pos_ >= 0; }
  /// 0-based position of the value-function constraint, -1 if none.
  long value_function_position() const { return vf_pos_; }
  /// phi used for the value-function constraint at x (0 for other constraints).
  double shift(std::size_t pos, std::span<const double> x) const;
  /// Shifts of all constraints at x; only the value-function entry is nonzero.
  Vec shifts(std::span<const double> x) const;

  double value(std::size_t pos, std::span<const double> x, std::span<const double> y,
               double shift) const;
  Vec values(std::span<const double> x, std::span<const double> y) const;
  Vec gradient_y(std::size_t pos, std::span<const double> x, std::span<const double> y) const;
  /// m x p matrix; column i is grad_y h_i(x,y).
  Eigen::MatrixXd jacobian_y(std::span<const double> x, std::span<const double> y) const;

  bool contains_division() const;

 private:
  struct Entry {
    Expr expr;
    CompiledExpr fn;
    std::vector<Expr> grad;
    std::vector<CompiledExpr> grad_fn;
  };

  int n_ = 0;
  int m_ = 0;
  std::size_t num_ineq_ = 0;
  std::vector<Entry> entries_;
  long vf_pos_ = -1;
  std::shared_ptr<const ValueFunction> phi_;
  double frozen_phi_ = 0.0;
};

struct Residual {
  double value = 0.0;     // max{0, max_I h_i, max_J |h_i|}
  long argmax = -1;       // 0-based position of the binding constraint, -1 when zero
};

Residual residual(const ParametricSystem& sys, std::span<const double> x,
                  std::span<const double> y);
/// Same formula with precomputed shifts (phi(x) for the value-function entry).
Residual residual(const ParametricSystem& sys, std::span<const double> x,
                  std::span<const double> y, std::span<const double> shifts);

struct ProblemFlags {
  bool convex_in_y = false;      // user assertion, echoed, never inferred
  bool locally_bounded = false;  // user assertion, echoed, never inferred
};

/// min_y { f(x,y) : y in Gamma(x) }.
struct ParametricProblem {
  ParametricSystem sys;
  Expr f;
  ProblemFlags flags;
};

/// 0-based positions of inequalities with |h_i(x,y)| <= tol_act.
std::vector<std::size_t> active_set(const ParametricSystem& sys, std::span<const double> x,
                                    std::span<const double> y, double tol_act);

}  // namespace regkit
