#pragma once

#include <map>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace regkit {

using Vec = std::vector<double>;

/// Labelled family of vectors sharing one dimension.
class VecFamily {
 public:
  struct Member {
    int label;
    Vec v;
  };

  explicit VecFamily(int dim = 0) : dim_(dim) {}

  /// Throws DimensionMismatch on a wrong length and PreconditionViolation
  /// on a duplicate label.
  void add(int label, Vec v);

  int dim() const { return dim_; }
  std::size_t size() const { return members_.size(); }
  bool empty() const { return members_.empty(); }
  const std::vector<Member>& members() const { return members_; }
  const Member& operator[](std::size_t i) const { return members_[i]; }

  /// dim x size matrix with the vectors as columns.
  Eigen::MatrixXd matrix() const;

  VecFamily subfamily(std::span<const std::size_t> positions) const;

 private:
  int dim_;
  std::vector<Member> members_;
};

inline constexpr double kDefaultRankTol = 1e-8;
inline constexpr double kDefaultLpTol = 1e-8;

/// Number of singular values above tol_rank * max(sigma_max, 1), with an
/// absolute floor of 1e-12 on the threshold.
int num_rank(const Eigen::MatrixXd& columns, double tol_rank = kDefaultRankTol);
int num_rank(const VecFamily& fam, double tol_rank = kDefaultRankTol);

/// Columns of `columns` chosen greedily in ascending order, keeping a column
/// whenever it raises the numerical rank. The result spans the column space.
std::vector<std::size_t> greedy_basis(const Eigen::MatrixXd& columns,
                                      double tol_rank = kDefaultRankTol);

struct PLDCertificate {
  std::map<int, double> alphas;  // nonnegative side
  std::map<int, double> betas;   // free side
  double norm = 0.0;             // sum alphas + sum |betas| (1 after scaling)
  double residual = 0.0;         // || sum alpha a + sum beta b ||_2
};

struct PLDResult {
  bool dependent = false;
  std::optional<PLDCertificate> certificate;
  double lp_optimum = 0.0;  // phase-1 violation, 0 when decided by rank
};

/// Decides positive-linear dependence of the pair (pos, free): a nontrivial
/// combination with nonnegative weights on `pos` and free weights on `free`
/// that vanishes. A linearly dependent free family is dependent outright;
/// otherwise a phase-1 LP normalised by sum(alpha) = 1 decides.
PLDResult positive_linear_dependent(const VecFamily& pos, const VecFamily& free,
                                    double tol = kDefaultLpTol,
                                    double tol_rank = kDefaultRankTol);

struct CaratheodoryResult {
  std::vector<int> kept_positive_labels;
  std::map<int, double> coefficients;  // over indep labels and kept labels
  double residual = 0.0;
};

/// Rewrites z = sum_indep c_i v_i + sum_pos c_i v_i (c_i > 0 on pos) over a
/// linearly independent subfamily that keeps all of `indep` and positive
/// coefficients on the retained positive labels.
CaratheodoryResult caratheodory_reduce(std::span<const double> z,
                                       const VecFamily& indep,
                                       const VecFamily& positive,
                                       const std::map<int, double>& coeffs,
                                       double tol_rank = kDefaultRankTol);

// ------------------------------------------------------------------ LP

struct Phase1Result {
  bool feasible = false;
  double infeasibility = 0.0;  // optimal sum of artificials
  Eigen::VectorXd z;           // structural part of the final basic solution
  int iterations = 0;
};

/// Phase-1 simplex for { z >= 0 : A z = b } with Bland's rule. Deterministic;
/// throws LPFailure if the iteration cap is hit.
Phase1Result phase1_feasibility(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                                double tol = kDefaultLpTol);

}  // namespace regkit
