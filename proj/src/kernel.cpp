#include "regkit/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <string>

#include "regkit/errors.hpp"

namespace regkit {

void VecFamily::add(int label, Vec v) {
  if (static_cast<int>(v.size()) != dim_) {
    throw DimensionMismatch("vector of length " + std::to_string(v.size()) +
                            " added to family of dimension " + std::to_string(dim_));
  }
  for (const auto& m : members_) {
    if (m.label == label) throw PreconditionViolation("duplicate label " + std::to_string(label));
  }
  members_.push_back({label, std::move(v)});
}

Eigen::MatrixXd VecFamily::matrix() const {
  Eigen::MatrixXd M(dim_, static_cast<Eigen::Index>(members_.size()));
  for (std::size_t j = 0; j < members_.size(); ++j) {
    for (int i = 0; i < dim_; ++i) M(i, static_cast<Eigen::Index>(j)) = members_[j].v[static_cast<std::size_t>(i)];
  }
  return M;
}

VecFamily VecFamily::subfamily(std::span<const std::size_t> positions) const {
  VecFamily out(dim_);
  for (std::size_t p : positions) out.add(members_[p].label, members_[p].v);
  return out;
}

namespace {

Eigen::VectorXd singular_values(const Eigen::MatrixXd& M) {
  if (M.size() == 0) return Eigen::VectorXd();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
  return svd.singularValues();
}

double rank_threshold(double sigma_max, double tol_rank) {
  return std::max(tol_rank * std::max(sigma_max, 1.0), 1e-12);
}

}  // namespace

int num_rank(const Eigen::MatrixXd& columns, double tol_rank) {
  if (columns.size() == 0) return 0;
  Eigen::VectorXd s = singular_values(columns);
  double thr = rank_threshold(s.size() ? s(0) : 0.0, tol_rank);
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > thr) ++r;
  }
  return r;
}

int num_rank(const VecFamily& fam, double tol_rank) {
  return num_rank(fam.matrix(), tol_rank);
}

std::vector<std::size_t> greedy_basis(const Eigen::MatrixXd& columns, double tol_rank) {
  std::vector<std::size_t> chosen;
  Eigen::MatrixXd acc(columns.rows(), 0);
  int rank = 0;
  for (Eigen::Index j = 0; j < columns.cols(); ++j) {
    Eigen::MatrixXd trial(columns.rows(), acc.cols() + 1);
    trial << acc, columns.col(j);
    int r = num_rank(trial, tol_rank);
    if (r > rank) {
      acc = std::move(trial);
      rank = r;
      chosen.push_back(static_cast<std::size_t>(j));
    }
  }
  return chosen;
}

PLDResult positive_linear_dependent(const VecFamily& pos, const VecFamily& free, double tol,
                                    double tol_rank) {
  if (!pos.empty() && !free.empty() && pos.dim() != free.dim()) {
    throw DimensionMismatch("positive and free families have different dimensions");
  }
  PLDResult out;
  if (pos.empty() && free.empty()) return out;
  const int dim = pos.empty() ? free.dim() : pos.dim();

  Eigen::MatrixXd A = pos.matrix();
  Eigen::MatrixXd B = free.matrix();

  // A dependent free family certifies dependence with alpha = 0.
  if (!free.empty() && num_rank(B, tol_rank) < static_cast<int>(free.size())) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(B, Eigen::ComputeFullV);
    Eigen::VectorXd v = svd.matrixV().col(B.cols() - 1);
    double l1 = v.lpNorm<1>();
    v /= l1;
    PLDCertificate cert;
    for (const auto& m : pos.members()) cert.alphas[m.label] = 0.0;
    for (std::size_t j = 0; j < free.size(); ++j) cert.betas[free[j].label] = v(static_cast<Eigen::Index>(j));
    cert.norm = 1.0;
    cert.residual = (B * v).norm();
    out.dependent = true;
    out.certificate = cert;
    return out;
  }
  if (pos.empty()) return out;

  // sum alpha_i a_i + sum (b+ - b-) b_i = 0, sum alpha = 1, all >= 0
  const Eigen::Index np = A.cols();
  const Eigen::Index nf = B.cols();
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(dim + 1, np + 2 * nf);
  M.block(0, 0, dim, np) = A;
  if (nf > 0) {
    M.block(0, np, dim, nf) = B;
    M.block(0, np + nf, dim, nf) = -B;
  }
  M.row(dim).head(np).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim + 1);
  rhs(dim) = 1.0;

  Phase1Result lp = phase1_feasibility(M, rhs, tol);
  out.lp_optimum = lp.infeasibility;
  out.dependent = lp.feasible;
  if (!lp.feasible) return out;

  Eigen::VectorXd alpha = lp.z.head(np);
  Eigen::VectorXd beta = nf > 0 ? Eigen::VectorXd(lp.z.segment(np, nf) - lp.z.segment(np + nf, nf))
                                : Eigen::VectorXd();
  double norm = alpha.sum() + (nf > 0 ? beta.lpNorm<1>() : 0.0);
  alpha /= norm;
  if (nf > 0) beta /= norm;

  PLDCertificate cert;
  Eigen::VectorXd combo = A * alpha;
  if (nf > 0) combo += B * beta;
  for (Eigen::Index j = 0; j < np; ++j) cert.alphas[pos[static_cast<std::size_t>(j)].label] = alpha(j);
  for (Eigen::Index j = 0; j < nf; ++j) cert.betas[free[static_cast<std::size_t>(j)].label] = beta(j);
  cert.norm = 1.0;
  cert.residual = combo.norm();
  out.certificate = cert;
  return out;
}

CaratheodoryResult caratheodory_reduce(std::span<const double> z, const VecFamily& indep,
                                       const VecFamily& positive,
                                       const std::map<int, double>& coeffs, double tol_rank) {
  const int dim = indep.empty() ? positive.dim() : indep.dim();
  if (static_cast<int>(z.size()) != dim || (!positive.empty() && positive.dim() != dim)) {
    throw DimensionMismatch("caratheodory_reduce: inconsistent dimensions");
  }
  Eigen::Map<const Eigen::VectorXd> zv(z.data(), static_cast<Eigen::Index>(z.size()));
  if (zv.norm() == 0.0) throw PreconditionViolation("caratheodory_reduce: z must be nonzero");
  if (num_rank(indep, tol_rank) < static_cast<int>(indep.size())) {
    throw PreconditionViolation("caratheodory_reduce: indep family is linearly dependent");
  }

  struct Item {
    int label;
    bool is_positive;
    Eigen::VectorXd v;
    double c;
  };
  std::vector<Item> items;
  auto coeff_of = [&](int label) {
    auto it = coeffs.find(label);
    if (it == coeffs.end()) {
      throw PreconditionViolation("caratheodory_reduce: missing coefficient for label " +
                                  std::to_string(label));
    }
    return it->second;
  };
  for (const auto& m : indep.members()) {
    items.push_back({m.label, false, Eigen::Map<const Eigen::VectorXd>(m.v.data(), dim), coeff_of(m.label)});
  }
  for (const auto& m : positive.members()) {
    double c = coeff_of(m.label);
    if (c < 0.0) {
      throw PreconditionViolation("caratheodory_reduce: negative coefficient on positive label " +
                                  std::to_string(m.label));
    }
    if (c == 0.0) continue;
    items.push_back({m.label, true, Eigen::Map<const Eigen::VectorXd>(m.v.data(), dim), c});
  }

  auto reconstruction = [&] {
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(dim);
    for (const auto& it : items) acc += it.c * it.v;
    return (acc - zv).norm();
  };
  const double scale = std::max(1.0, zv.norm());
  if (reconstruction() > 1e-9 * scale) {
    throw PreconditionViolation("caratheodory_reduce: coefficients do not reproduce z");
  }

  auto matrix = [&] {
    Eigen::MatrixXd M(dim, static_cast<Eigen::Index>(items.size()));
    for (std::size_t j = 0; j < items.size(); ++j) M.col(static_cast<Eigen::Index>(j)) = items[j].v;
    return M;
  };

  for (;;) {
    Eigen::MatrixXd M = matrix();
    if (num_rank(M, tol_rank) == static_cast<int>(items.size())) break;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeFullV);
    Eigen::VectorXd v = svd.matrixV().col(M.cols() - 1);

    // Orient so the last positive-labelled component is positive; the step
    // then removes higher labels first.
    for (std::size_t j = items.size(); j-- > 0;) {
      if (items[j].is_positive && std::abs(v(static_cast<Eigen::Index>(j))) > 1e-12) {
        if (v(static_cast<Eigen::Index>(j)) < 0) v = -v;
        break;
      }
    }
    double step = std::numeric_limits<double>::infinity();
    std::size_t drop = items.size();
    for (std::size_t j = 0; j < items.size(); ++j) {
      double vj = v(static_cast<Eigen::Index>(j));
      if (!items[j].is_positive || vj <= 1e-12) continue;
      double t = items[j].c / vj;
      if (t < step - 1e-15 || (std::abs(t - step) <= 1e-15 && drop < items.size() &&
                               items[j].label > items[drop].label)) {
        step = t;
        drop = j;
      }
    }
    if (drop == items.size()) {
      throw PreconditionViolation("caratheodory_reduce: null-space direction has no positive support");
    }
    for (std::size_t j = 0; j < items.size(); ++j) items[j].c -= step * v(static_cast<Eigen::Index>(j));
    items[drop].c = 0.0;
    std::erase_if(items, [&](const Item& it) { return it.is_positive && it.c <= 1e-14 * scale; });
  }

  // Clean up drift: least-squares coefficients on the final independent family.
  Eigen::MatrixXd M = matrix();
  if (M.cols() > 0) {
    Eigen::VectorXd c = M.colPivHouseholderQr().solve(zv);
    for (std::size_t j = 0; j < items.size(); ++j) items[j].c = c(static_cast<Eigen::Index>(j));
  }

  CaratheodoryResult out;
  for (const auto& it : items) {
    out.coefficients[it.label] = it.c;
    if (it.is_positive) out.kept_positive_labels.push_back(it.label);
  }
  std::sort(out.kept_positive_labels.begin(), out.kept_positive_labels.end());
  out.residual = reconstruction();
  return out;
}

}  // namespace regkit
