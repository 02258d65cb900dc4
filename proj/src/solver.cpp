#include "regkit/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "regkit/errors.hpp"
#include "regkit/rng.hpp"

namespace regkit {

double SquaredDistance::value(std::span<const double> y) const {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    double d = y[i] - target_[i];
    s += d * d;
  }
  return 0.5 * s;
}

void SquaredDistance::gradient(std::span<const double> y, std::span<double> g) const {
  for (std::size_t i = 0; i < y.size(); ++i) g[i] = y[i] - target_[i];
}

ExprObjective::ExprObjective(const Expr& f, int m, Vec x) : f_(f), x_(std::move(x)) {
  for (const auto& g : grad(f, Axis::y, m)) grad_.emplace_back(g);
}

double ExprObjective::value(std::span<const double> y) const { return f_(x_, y); }

void ExprObjective::gradient(std::span<const double> y, std::span<double> g) const {
  for (std::size_t j = 0; j < grad_.size(); ++j) g[j] = grad_[j](x_, y);
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kGridPenalty = 1e3;

struct Frozen {
  const ParametricSystem& sys;
  std::span<const double> x;
  std::span<const double> shifts;
  const Objective& obj;

  double constraint(std::size_t i, std::span<const double> y) const {
    return sys.value(i, x, y, shifts[i]);
  }

  double residual(std::span<const double> y) const {
    double r = 0.0;
    for (std::size_t i = 0; i < sys.size(); ++i) {
      double h = constraint(i, y);
      double v = sys.is_ineq(i) ? h : std::abs(h);
      if (std::isnan(v)) return kInf;
      r = std::max(r, v);
    }
    return r;
  }

  double merit(std::span<const double> y) const {
    double v = obj.value(y) + kGridPenalty * residual(y);
    return std::isfinite(v) ? v : kInf;
  }
};

// Augmented Lagrangian (PHR) value and gradient.
double augmented(const Frozen& fz, std::span<const double> y, const Vec& lam, double rho,
                 Vec* grad) {
  const std::size_t m = y.size();
  double L = fz.obj.value(y);
  if (grad) fz.obj.gradient(y, *grad);
  for (std::size_t i = 0; i < fz.sys.size(); ++i) {
    double c = fz.constraint(i, y);
    double w = 0.0;
    if (fz.sys.is_ineq(i)) {
      double t = std::max(0.0, c + lam[i] / rho);
      L += 0.5 * rho * t * t - 0.5 * lam[i] * lam[i] / rho;
      w = rho * t;
    } else {
      L += lam[i] * c + 0.5 * rho * c * c;
      w = lam[i] + rho * c;
    }
    if (grad && w != 0.0) {
      Vec gi = fz.sys.gradient_y(i, fz.x, y);
      for (std::size_t j = 0; j < m; ++j) (*grad)[j] += w * gi[j];
    }
  }
  return std::isfinite(L) ? L : kInf;
}

// Quasi-Newton minimisation of the augmented Lagrangian from y (in place).
void minimize_augmented(const Frozen& fz, Vec& y, const Vec& lam, double rho, double gtol,
                        int& evals) {
  const std::size_t m = y.size();
  Vec g(m), gn(m), d(m), yn(m), s(m), dy(m);
  double L = augmented(fz, y, lam, rho, &g);
  ++evals;
  if (!std::isfinite(L)) return;
  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  bool scaled = false;
  // Step cap; doubles after every full capped step. Keeps the first
  // quasi-Newton steps from jumping across a thin feasible region.
  double ymax = 1.0;
  for (double v : y) ymax = std::max(ymax, std::abs(v));
  double cap = 0.05 * ymax;
  for (int it = 0; it < 400; ++it) {
    double gmax = 0.0;
    for (double v : g) gmax = std::max(gmax, std::abs(v));
    if (gmax <= gtol) return;
    Eigen::Map<Eigen::VectorXd> gv(g.data(), static_cast<Eigen::Index>(m));
    Eigen::VectorXd dv = -H * gv;
    double slope = gv.dot(dv);
    if (!(slope < 0.0)) {
      H.setIdentity();
      dv = -gv;
      slope = -gv.squaredNorm();
    }
    double dmax = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      d[j] = dv(static_cast<Eigen::Index>(j));
      dmax = std::max(dmax, std::abs(d[j]));
    }
    const bool capped = dmax > cap;
    if (capped) {
      const double sc = cap / dmax;
      for (auto& v : d) v *= sc;
      slope *= sc;
    }
    double t = 1.0;
    double Ln = kInf;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      for (std::size_t j = 0; j < m; ++j) yn[j] = y[j] + t * d[j];
      Ln = augmented(fz, yn, lam, rho, nullptr);
      ++evals;
      if (Ln <= L + 1e-4 * t * slope) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) return;
    if (capped && t == 1.0) cap *= 2.0;
    augmented(fz, yn, lam, rho, &gn);
    ++evals;
    double sy = 0.0;
    double yy = 0.0;
    double step = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      s[j] = yn[j] - y[j];
      dy[j] = gn[j] - g[j];
      sy += s[j] * dy[j];
      yy += dy[j] * dy[j];
      step = std::max(step, std::abs(s[j]));
    }
    y = yn;
    g = gn;
    double Lprev = L;
    L = Ln;
    if (sy > 1e-300 && yy > 0.0) {
      if (!scaled) {
        H *= sy / yy;
        scaled = true;
      }
      Eigen::Map<Eigen::VectorXd> sv(s.data(), static_cast<Eigen::Index>(m));
      Eigen::Map<Eigen::VectorXd> yv(dy.data(), static_cast<Eigen::Index>(m));
      double r = 1.0 / sy;
      Eigen::VectorXd Hy = H * yv;
      H += (r + r * r * yv.dot(Hy)) * (sv * sv.transpose()) - r * (Hy * sv.transpose() + sv * Hy.transpose());
    }
    double yscale = 1.0;
    for (double v : y) yscale = std::max(yscale, std::abs(v));
    if (step <= 1e-16 * yscale && std::abs(Lprev - L) <= 1e-16 * std::max(1.0, std::abs(L))) return;
  }
}

double stationarity(const Frozen& fz, std::span<const double> y, const Vec& lam) {
  const std::size_t m = y.size();
  Vec g(m);
  fz.obj.gradient(y, g);
  for (std::size_t i = 0; i < fz.sys.size(); ++i) {
    if (lam[i] == 0.0) continue;
    Vec gi = fz.sys.gradient_y(i, fz.x, y);
    for (std::size_t j = 0; j < m; ++j) g[j] += lam[i] * gi[j];
  }
  double s = 0.0;
  for (double v : g) s = std::max(s, std::abs(v));
  return s;
}

// Gauss-Newton on the violated constraints with minimum-norm steps. Used
// after the multiplier loop when the penalty floor leaves a small
// violation, e.g. at feasible points without a multiplier.
void restore_feasibility(const Frozen& fz, Vec& y, int& evals) {
  const std::size_t m = y.size();
  double res = fz.residual(y);
  ++evals;
  for (int it = 0; it < 80 && res > 1e-15 && std::isfinite(res); ++it) {
    std::vector<std::size_t> rows;
    std::vector<double> vals;
    for (std::size_t i = 0; i < fz.sys.size(); ++i) {
      double c = fz.constraint(i, y);
      if (!fz.sys.is_ineq(i) || c > 0.0) {
        rows.push_back(i);
        vals.push_back(c);
      }
    }
    if (rows.empty()) return;
    Eigen::MatrixXd J(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(m));
    Eigen::VectorXd c(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      Vec g = fz.sys.gradient_y(rows[r], fz.x, y);
      for (std::size_t j = 0; j < m; ++j)
        J(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = g[j];
      c(static_cast<Eigen::Index>(r)) = vals[r];
    }
    Eigen::VectorXd d = -J.completeOrthogonalDecomposition().solve(c);
    if (!d.allFinite()) return;
    Vec yn(m);
    double t = 1.0;
    bool improved = false;
    for (int ls = 0; ls < 30; ++ls) {
      for (std::size_t j = 0; j < m; ++j) yn[j] = y[j] + t * d(static_cast<Eigen::Index>(j));
      double rn = fz.residual(yn);
      ++evals;
      if (rn < res) {
        y = yn;
        res = rn;
        improved = true;
        break;
      }
      t *= 0.5;
    }
    if (!improved) return;
  }
}

LocalSolution run_polish(const Frozen& fz, std::span<const double> y0, const SolverConfig& cfg,
                         int& evals) {
  const std::size_t p = fz.sys.size();
  Vec y(y0.begin(), y0.end());
  Vec lam(p, 0.0);
  double rho = 10.0;
  double prev_viol = kInf;
  int stalled = 0;
  for (int outer = 0; outer < 60; ++outer) {
    double gtol = std::max(cfg.stationarity * 1e-2, 1e-13);
    minimize_augmented(fz, y, lam, rho, gtol, evals);
    double viol = 0.0;
    for (std::size_t i = 0; i < p; ++i) {
      double c = fz.constraint(i, y);
      if (fz.sys.is_ineq(i)) {
        viol = std::max(viol, c);
        lam[i] = std::max(0.0, lam[i] + rho * c);
      } else {
        viol = std::max(viol, std::abs(c));
        lam[i] += rho * c;
      }
    }
    if (!std::isfinite(viol)) break;
    if (viol <= 1e-13 && stationarity(fz, y, lam) <= cfg.stationarity) break;
    if (viol > 0.25 * prev_viol) {
      // At the penalty cap keep iterating while the multiplier updates
      // still make progress.
      if (rho >= 1e12 && viol > 0.95 * prev_viol && ++stalled >= 3) break;
      rho = std::min(rho * 10.0, 1e12);
    }
    prev_viol = std::min(prev_viol, viol);
    if (p == 0) break;
  }
  if (p > 0 && fz.residual(y) > 1e-13) restore_feasibility(fz, y, evals);
  LocalSolution sol;
  sol.y = y;
  sol.objective = fz.obj.value(y);
  sol.residual = fz.residual(y);
  sol.multipliers = lam;
  sol.stationarity = stationarity(fz, y, lam);
  return sol;
}

struct GridPoint {
  Vec y;
  double merit;
};

// Separated local minima of the merit on a regular grid (m in {1, 2}).
std::vector<GridPoint> grid_candidates(const Frozen& fz, std::span<const double> center,
                                       double half, int per_axis, int keep, int& evals) {
  const std::size_t m = center.size();
  const double h = 2.0 * half / (per_axis - 1);
  const int N = per_axis;
  const std::size_t total = m == 1 ? static_cast<std::size_t>(N) : static_cast<std::size_t>(N) * N;
  std::vector<double> merit(total);
  auto coord = [&](std::size_t idx, Vec& y) {
    if (m == 1) {
      y[0] = center[0] - half + h * static_cast<double>(idx);
    } else {
      y[0] = center[0] - half + h * static_cast<double>(idx / N);
      y[1] = center[1] - half + h * static_cast<double>(idx % N);
    }
  };
  Vec y(m);
  for (std::size_t k = 0; k < total; ++k) {
    coord(k, y);
    merit[k] = fz.merit(y);
  }
  evals += static_cast<int>(total);

  std::vector<std::size_t> minima;
  for (std::size_t k = 0; k < total; ++k) {
    bool is_min = true;
    if (m == 1) {
      if (k > 0 && merit[k - 1] < merit[k]) is_min = false;
      if (k + 1 < total && merit[k + 1] < merit[k]) is_min = false;
    } else {
      long i = static_cast<long>(k / N), j = static_cast<long>(k % N);
      for (long di = -1; di <= 1 && is_min; ++di) {
        for (long dj = -1; dj <= 1; ++dj) {
          long a = i + di, b = j + dj;
          if ((di == 0 && dj == 0) || a < 0 || b < 0 || a >= N || b >= N) continue;
          if (merit[static_cast<std::size_t>(a * N + b)] < merit[k]) {
            is_min = false;
            break;
          }
        }
      }
    }
    if (is_min && std::isfinite(merit[k])) minima.push_back(k);
  }
  std::stable_sort(minima.begin(), minima.end(),
                   [&](std::size_t a, std::size_t b) { return merit[a] < merit[b]; });

  std::vector<GridPoint> out;
  for (std::size_t k : minima) {
    coord(k, y);
    bool far = true;
    for (const auto& c : out) {
      double d = 0.0;
      for (std::size_t j = 0; j < m; ++j) d = std::max(d, std::abs(c.y[j] - y[j]));
      if (d <= 2.5 * h) {
        far = false;
        break;
      }
    }
    if (!far) continue;
    out.push_back({y, merit[k]});
    if (static_cast<int>(out.size()) >= keep) break;
  }
  return out;
}

}  // namespace

LocalSolution polish(const ParametricSystem& sys, std::span<const double> x,
                     std::span<const double> shifts, const Objective& obj,
                     std::span<const double> y0, const SolverConfig& cfg) {
  Frozen fz{sys, x, shifts, obj};
  int evals = 0;
  return run_polish(fz, y0, cfg, evals);
}

std::vector<LocalSolution> minimize_over_image(const ParametricSystem& sys,
                                               std::span<const double> x,
                                               std::span<const double> shifts,
                                               const Objective& obj,
                                               std::span<const double> center,
                                               const SolverConfig& cfg, SearchTrace* trace) {
  const std::size_t m = static_cast<std::size_t>(sys.m());
  if (center.size() != m) throw DimensionMismatch("solver center has wrong dimension");
  Frozen fz{sys, x, shifts, obj};
  int evals = 0;
  std::vector<Vec> starts;

  if (m == 0) {
    starts.emplace_back();
  } else if (m <= 2) {
    const int coarse = m == 1 ? 401 : 81;
    auto cands = grid_candidates(fz, center, cfg.box, coarse, cfg.candidates, evals);
    double h = 2.0 * cfg.box / (coarse - 1);
    for (auto& c : cands) {
      Vec best = c.y;
      double hh = h;
      for (int level = 0; level < cfg.grid_levels; ++level) {
        auto zoom = grid_candidates(fz, best, hh, 21, 1, evals);
        if (!zoom.empty()) best = zoom.front().y;
        hh /= 10.0;
      }
      starts.push_back(best);
    }
    if (starts.empty()) starts.emplace_back(center.begin(), center.end());
  } else {
    std::mt19937_64 rng(mix_seed(cfg.seed, 0x5eed));
    starts.emplace_back(center.begin(), center.end());
    for (int k = 1; k < cfg.restarts; ++k) {
      Vec s(center.begin(), center.end());
      double spread = (k % 2 == 0) ? cfg.box : 0.1 * cfg.box;
      for (auto& v : s) v += uniform(rng, -spread, spread);
      starts.push_back(std::move(s));
    }
  }

  std::vector<LocalSolution> sols;
  for (const auto& s : starts) sols.push_back(run_polish(fz, s, cfg, evals));

  const double tf = cfg.tol_feas;
  std::stable_sort(sols.begin(), sols.end(), [&](const LocalSolution& a, const LocalSolution& b) {
    bool fa = a.residual <= tf, fb = b.residual <= tf;
    if (fa != fb) return fa;
    if (!fa) return a.residual < b.residual;
    return a.objective < b.objective;
  });
  std::vector<LocalSolution> unique;
  for (auto& s : sols) {
    bool dup = false;
    for (const auto& u : unique) {
      double d = 0.0;
      for (std::size_t j = 0; j < m; ++j) d = std::max(d, std::abs(u.y[j] - s.y[j]));
      if (d <= 1e-9) {
        dup = true;
        break;
      }
    }
    if (!dup) unique.push_back(std::move(s));
  }
  if (trace) {
    trace->starts = static_cast<int>(starts.size());
    trace->evaluations = evals;
  }
  return unique;
}

}  // namespace regkit
