#include "regkit/system.hpp"

#include <cmath>
#include <limits>

#include "regkit/errors.hpp"

namespace regkit {

ParametricSystem::ParametricSystem(int n, int m, std::vector<Expr> ineq, std::vector<Expr> eq)
    : n_(n), m_(m), num_ineq_(ineq.size()) {
  if (n < 0 || m < 0) throw DimensionMismatch("negative dimension");
  auto push = [&](Expr e) {
    if (e.max_index(Axis::x) > n || e.max_index(Axis::y) > m) {
      throw IndexError("constraint " + e.str() + " references a variable beyond n=" +
                       std::to_string(n) + ", m=" + std::to_string(m));
    }
    Entry entry;
    entry.expr = e;
    entry.fn = CompiledExpr(e);
    entry.grad = grad(e, Axis::y, m);
    for (const auto& g : entry.grad) entry.grad_fn.emplace_back(g);
    entries_.push_back(std::move(entry));
  };
  for (auto& e : ineq) push(std::move(e));
  for (auto& e : eq) push(std::move(e));
}

void ParametricSystem::set_value_function(std::size_t pos, std::shared_ptr<const ValueFunction> phi,
                                          double frozen_value) {
  vf_pos_ = static_cast<long>(pos);
  phi_ = std::move(phi);
  frozen_phi_ = frozen_value;
}

double ParametricSystem::shift(std::size_t pos, std::span<const double> x) const {
  if (static_cast<long>(pos) != vf_pos_) return 0.0;
  return phi_ ? phi_->at(x) : frozen_phi_;
}

Vec ParametricSystem::shifts(std::span<const double> x) const {
  Vec s(entries_.size(), 0.0);
  if (vf_pos_ >= 0) s[static_cast<std::size_t>(vf_pos_)] = shift(static_cast<std::size_t>(vf_pos_), x);
  return s;
}

double ParametricSystem::value(std::size_t pos, std::span<const double> x,
                               std::span<const double> y, double shift) const {
  return entries_[pos].fn(x, y) - shift;
}

Vec ParametricSystem::values(std::span<const double> x, std::span<const double> y) const {
  Vec s = shifts(x);
  Vec out(entries_.size());
  for (std::size_t i = 0; i < entries_.size(); ++i) out[i] = entries_[i].fn(x, y) - s[i];
  return out;
}

Vec ParametricSystem::gradient_y(std::size_t pos, std::span<const double> x,
                                 std::span<const double> y) const {
  const auto& e = entries_[pos];
  Vec g(static_cast<std::size_t>(m_));
  for (int j = 0; j < m_; ++j) g[static_cast<std::size_t>(j)] = e.grad_fn[static_cast<std::size_t>(j)](x, y);
  return g;
}

Eigen::MatrixXd ParametricSystem::jacobian_y(std::span<const double> x,
                                             std::span<const double> y) const {
  Eigen::MatrixXd J(m_, static_cast<Eigen::Index>(entries_.size()));
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    for (int j = 0; j < m_; ++j) {
      J(j, static_cast<Eigen::Index>(i)) = entries_[i].grad_fn[static_cast<std::size_t>(j)](x, y);
    }
  }
  return J;
}

bool ParametricSystem::contains_division() const {
  for (const auto& e : entries_) {
    if (e.expr.contains_division()) return true;
  }
  return false;
}

Residual residual(const ParametricSystem& sys, std::span<const double> x,
                  std::span<const double> y, std::span<const double> shifts) {
  Residual r;
  for (std::size_t i = 0; i < sys.size(); ++i) {
    double h = sys.value(i, x, y, shifts[i]);
    double v = sys.is_ineq(i) ? h : std::abs(h);
    if (std::isnan(v)) v = std::numeric_limits<double>::infinity();
    if (v > r.value) {
      r.value = v;
      r.argmax = static_cast<long>(i);
    }
  }
  return r;
}

Residual residual(const ParametricSystem& sys, std::span<const double> x,
                  std::span<const double> y) {
  Vec s = sys.shifts(x);
  return residual(sys, x, y, s);
}

std::vector<std::size_t> active_set(const ParametricSystem& sys, std::span<const double> x,
                                    std::span<const double> y, double tol_act) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < sys.num_ineq(); ++i) {
    double h = sys.value(i, x, y, sys.shift(i, x));
    if (std::abs(h) <= tol_act) out.push_back(i);
  }
  return out;
}

}  // namespace regkit
