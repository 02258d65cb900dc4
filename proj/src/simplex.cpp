#include <cmath>

#include "regkit/errors.hpp"
#include "regkit/kernel.hpp"

namespace regkit {

Phase1Result phase1_feasibility(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                                double tol) {
  const Eigen::Index rows = A.rows();
  const Eigen::Index n = A.cols();
  if (b.size() != rows) throw DimensionMismatch("phase1: rhs length differs from row count");

  const Eigen::Index cols = n + rows;  // structural + artificial
  const double eps = 1e-11;

  // Tableau rows 0..rows-1 are constraints, row `rows` holds reduced costs;
  // the last column is the right-hand side.
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(rows + 1, cols + 1);
  std::vector<Eigen::Index> basis(static_cast<std::size_t>(rows));
  for (Eigen::Index i = 0; i < rows; ++i) {
    double sign = b(i) < 0 ? -1.0 : 1.0;
    T.row(i).head(n) = sign * A.row(i);
    T(i, n + i) = 1.0;
    T(i, cols) = sign * b(i);
    basis[static_cast<std::size_t>(i)] = n + i;
  }
  for (Eigen::Index j = 0; j < n; ++j) T(rows, j) = -T.col(j).head(rows).sum();
  T(rows, cols) = -T.col(cols).head(rows).sum();

  Phase1Result out;
  const int cap = static_cast<int>(50 * (rows + cols) + 100);
  for (;;) {
    Eigen::Index enter = -1;
    for (Eigen::Index j = 0; j < cols; ++j) {
      if (T(rows, j) < -eps) {
        enter = j;
        break;
      }
    }
    if (enter < 0) break;

    Eigen::Index leave = -1;
    double best = 0.0;
    for (Eigen::Index i = 0; i < rows; ++i) {
      double a = T(i, enter);
      if (a <= eps) continue;
      double ratio = T(i, cols) / a;
      if (leave < 0 || ratio < best - 1e-14 ||
          (std::abs(ratio - best) <= 1e-14 &&
           basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(leave)])) {
        leave = i;
        best = ratio;
      }
    }
    // Phase-1 objective is bounded below by zero, so an unbounded ray
    // cannot occur; a missing pivot row means only roundoff remains.
    if (leave < 0) break;

    T.row(leave) /= T(leave, enter);
    for (Eigen::Index i = 0; i <= rows; ++i) {
      if (i == leave) continue;
      double f = T(i, enter);
      if (f != 0.0) T.row(i) -= f * T.row(leave);
    }
    basis[static_cast<std::size_t>(leave)] = enter;
    if (++out.iterations > cap) throw LPFailure("phase1: iteration cap exceeded");
  }

  out.z = Eigen::VectorXd::Zero(n);
  double artificial = 0.0;
  for (Eigen::Index i = 0; i < rows; ++i) {
    Eigen::Index var = basis[static_cast<std::size_t>(i)];
    double v = std::max(0.0, T(i, cols));
    if (var < n) {
      out.z(var) = v;
    } else {
      artificial += v;
    }
  }
  out.infeasibility = artificial;
  out.feasible = artificial <= tol;
  return out;
}

}  // namespace regkit
