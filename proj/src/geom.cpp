#include "regkit/geom.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "regkit/errors.hpp"
#include "regkit/solver.hpp"

namespace regkit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double c : v) s += c * c;
  return std::sqrt(s);
}

struct RatioEval {
  bool in_omega = false;
  bool eligible = false;
  double ratio = 0.0;
  double distance = 0.0;
  double residual = 0.0;
  Vec point;
};

RatioEval ratio_at(const ParametricSystem& sys, std::span<const double> point,
                   const NeighborhoodSampler& sampler, const AnalysisConfig& cfg) {
  const auto n = static_cast<std::size_t>(sys.n());
  RatioEval ev;
  ev.point.assign(point.begin(), point.end());
  std::span<const double> x = point.subspan(0, n);
  std::span<const double> y = point.subspan(n);
  if (sampler.restriction == Restriction::custom && !sampler.omega(x)) return ev;
  Vec sh = sys.shifts(x);
  ev.residual = residual(sys, x, y, sh).value;
  if (ev.residual <= cfg.tol.tol_feas) {
    // Feasible samples carry no ratio; dom membership is then obvious.
    ev.in_omega = true;
    return ev;
  }
  Projection pr = project(sys, x, y, cfg.solver);
  if (pr.empty && sampler.restriction == Restriction::dom) return ev;
  ev.in_omega = true;
  ev.eligible = true;
  ev.distance = pr.empty ? kInf : pr.distance;
  ev.ratio = pr.empty ? kInf : ev.distance / ev.residual;
  return ev;
}

Vec joint(std::span<const double> x, std::span<const double> y) {
  Vec c(x.begin(), x.end());
  c.insert(c.end(), y.begin(), y.end());
  return c;
}

Vec on_sphere(const Vec& center, const Vec& dir, double r) {
  Vec p(center.size());
  for (std::size_t j = 0; j < p.size(); ++j) p[j] = center[j] + r * dir[j];
  return p;
}

// Compass search over unit directions maximising the ratio on the sphere
// of radius r. Step sizes are relative, so the search resolves the same
// angular detail at every radius.
RatioEval compass_ratio(const ParametricSystem& sys, const Vec& center, Vec dir, RatioEval best,
                        double r, const NeighborhoodSampler& sampler,
                        const AnalysisConfig& cfg) {
  const std::size_t d = dir.size();
  double step = 0.25;
  for (int level = 0; level < 11; ++level, step *= 0.5) {
    for (int iter = 0; iter < 40; ++iter) {
      bool improved = false;
      for (std::size_t j = 0; j < d && !improved; ++j) {
        for (double sgn : {1.0, -1.0}) {
          Vec cand = dir;
          cand[j] += sgn * step;
          double nn = norm2(cand);
          if (nn < 1e-12) continue;
          for (auto& c : cand) c /= nn;
          RatioEval ev = ratio_at(sys, on_sphere(center, cand, r), sampler, cfg);
          if (!ev.eligible) continue;
          if (ev.ratio > best.ratio * (1.0 + 1e-12)) {
            best = ev;
            dir = cand;
            improved = true;
            break;
          }
        }
      }
      if (!improved || std::isinf(best.ratio)) break;
    }
    if (std::isinf(best.ratio)) break;
  }
  return best;
}

}  // namespace

std::string to_string(RRegVerdict v) {
  switch (v) {
    case RRegVerdict::consistent_with_R_regular: return "consistent_with_R_regular";
    case RRegVerdict::likely_not_R_regular: return "likely_not_R_regular";
    case RRegVerdict::inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

std::string to_string(IscVerdict v) {
  switch (v) {
    case IscVerdict::likely_inner_semicontinuous: return "likely_inner_semicontinuous";
    case IscVerdict::likely_not: return "likely_not";
    case IscVerdict::inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

Projection project(const ParametricSystem& sys, std::span<const double> x,
                   std::span<const double> nu, const SolverConfig& cfg) {
  if (nu.size() != static_cast<std::size_t>(sys.m())) {
    throw DimensionMismatch("project: nu has length " + std::to_string(nu.size()) +
                            ", expected " + std::to_string(sys.m()));
  }
  if (x.size() != static_cast<std::size_t>(sys.n())) {
    throw DimensionMismatch("project: x has wrong length");
  }
  Projection p;
  Vec sh = sys.shifts(x);
  for (double s : sh) {
    if (!std::isfinite(s)) {
      p.empty = true;
      return p;
    }
  }
  if (residual(sys, x, nu, sh).value <= cfg.tol_feas) {
    p.y_star.assign(nu.begin(), nu.end());
    p.distance = 0.0;
    return p;
  }
  SquaredDistance obj(Vec(nu.begin(), nu.end()));
  SearchTrace trace;
  auto sols = minimize_over_image(sys, x, sh, obj, nu, cfg, &trace);
  p.restarts = trace.starts;
  if (sols.empty() || !(sols.front().residual <= cfg.tol_feas)) {
    p.empty = true;
    return p;
  }
  const auto& best = sols.front();
  p.y_star = best.y;
  p.stationarity = best.stationarity;
  double s = 0.0;
  for (std::size_t j = 0; j < nu.size(); ++j) s += (best.y[j] - nu[j]) * (best.y[j] - nu[j]);
  p.distance = std::sqrt(s);
  return p;
}

double distance_to_image(const ParametricSystem& sys, std::span<const double> x,
                         std::span<const double> nu, const SolverConfig& cfg) {
  Projection p = project(sys, x, nu, cfg);
  return p.empty ? kInf : p.distance;
}

MultiplierProbe multiplier_probe(const ParametricSystem& sys, std::span<const double> x,
                                 std::span<const double> y, std::span<const double> nu,
                                 double M, const Tolerances& tol) {
  const auto m = static_cast<std::size_t>(sys.m());
  Vec dir(m);
  for (std::size_t j = 0; j < m; ++j) dir[j] = y[j] - nu[j];
  double len = norm2(dir);
  if (len == 0.0) throw DegenerateDirection("multiplier_probe: y equals nu");
  for (auto& d : dir) d /= len;

  std::vector<std::size_t> cols;  // constraint position per LP column
  std::vector<double> signs;
  for (std::size_t i : active_set(sys, x, y, tol.tol_act)) {
    cols.push_back(i);
    signs.push_back(1.0);
  }
  for (std::size_t i = sys.num_ineq(); i < sys.size(); ++i) {
    cols.push_back(i);
    signs.push_back(1.0);
    cols.push_back(i);
    signs.push_back(-1.0);
  }
  const auto nc = static_cast<Eigen::Index>(cols.size());
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m) + 1, nc + 1);
  Eigen::VectorXd b(static_cast<Eigen::Index>(m) + 1);
  for (Eigen::Index c = 0; c < nc; ++c) {
    Vec g = sys.gradient_y(cols[static_cast<std::size_t>(c)], x, y);
    for (std::size_t j = 0; j < m; ++j) A(static_cast<Eigen::Index>(j), c) = signs[static_cast<std::size_t>(c)] * g[j];
    A(static_cast<Eigen::Index>(m), c) = 1.0;
  }
  A(static_cast<Eigen::Index>(m), nc) = 1.0;  // budget slack
  for (std::size_t j = 0; j < m; ++j) b(static_cast<Eigen::Index>(j)) = -dir[j];
  b(static_cast<Eigen::Index>(m)) = M;

  MultiplierProbe out;
  out.M = M;
  Phase1Result lp = phase1_feasibility(A, b, 1e-7);
  if (!lp.feasible) return out;
  Vec lambda(sys.size(), 0.0);
  for (Eigen::Index c = 0; c < nc; ++c) {
    lambda[cols[static_cast<std::size_t>(c)]] += signs[static_cast<std::size_t>(c)] * lp.z(c);
  }
  Vec r = dir;
  for (std::size_t i = 0; i < sys.size(); ++i) {
    if (lambda[i] == 0.0) continue;
    Vec g = sys.gradient_y(i, x, y);
    for (std::size_t j = 0; j < m; ++j) r[j] += lambda[i] * g[j];
  }
  out.stationarity_residual = norm2(r);
  out.exists = out.stationarity_residual <= 1e-7;
  if (out.exists) out.lambda = std::move(lambda);
  return out;
}

RegularityProbe estimate_rregularity(const ParametricSystem& sys, std::span<const double> x,
                                     std::span<const double> y,
                                     const NeighborhoodSampler& sampler,
                                     const AnalysisConfig& cfg) {
  sampler.validate();
  const int dim = sys.n() + sys.m();
  const Vec center = joint(x, y);
  RegularityProbe probe;
  probe.x_center.assign(x.begin(), x.end());
  probe.y_center.assign(y.begin(), y.end());
  probe.restriction = sampler.restriction;
  if (residual(sys, x, y).value > cfg.tol.tol_feas) {
    probe.notes.push_back("reference point is not feasible within tol_feas");
  }
  if (sampler.restriction == Restriction::dom) {
    probe.notes.push_back("dom membership decided by solver infeasibility detection (heuristic)");
  }
  if (sys.contains_division()) probe.notes.push_back("system contains division");

  const int K = sampler.samples_per_radius;
  std::vector<Vec> dirs(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) dirs[static_cast<std::size_t>(k)] = sampler.unit_direction(dim, k);

  bool any_infinite = false;
  for (double r : sampler.radii) {
    std::vector<RatioEval> evals(static_cast<std::size_t>(K));
    parallel_for(evals.size(), cfg.exec, [&](std::size_t k) {
      evals[k] = ratio_at(sys, on_sphere(center, dirs[k], r), sampler, cfg);
    });
    RadiusRecord rec;
    rec.radius = r;
    rec.samples = K;
    std::vector<std::size_t> order;
    for (std::size_t k = 0; k < evals.size(); ++k) {
      if (evals[k].in_omega) ++rec.omega_hits;
      if (evals[k].eligible) {
        ++rec.eligible;
        order.push_back(k);
      }
    }
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return evals[a].ratio > evals[b].ratio;
    });
    if (!order.empty()) {
      RatioEval best = evals[order.front()];
      if (!std::isinf(best.ratio)) {
        const std::size_t starts = std::min<std::size_t>(3, order.size());
        std::vector<RatioEval> polished(starts);
        parallel_for(starts, cfg.exec, [&](std::size_t s) {
          std::size_t k = order[s];
          polished[s] = compass_ratio(sys, center, dirs[k], evals[k], r, sampler, cfg);
        });
        for (const auto& p : polished) {
          if (p.ratio > best.ratio) best = p;
        }
      }
      rec.kappa_hat = best.ratio;
      rec.argmax = best.point;
      rec.argmax_distance = best.distance;
      rec.argmax_residual = best.residual;
      if (std::isinf(best.ratio)) any_infinite = true;
    }
    probe.radii.push_back(std::move(rec));
  }

  if (any_infinite) {
    probe.verdict = RRegVerdict::likely_not_R_regular;
    probe.notes.push_back("empty image inside the neighbourhood: infinite distance ratio");
    return probe;
  }
  std::vector<const RadiusRecord*> used;
  for (const auto& rec : probe.radii) {
    if (rec.eligible > 0) used.push_back(&rec);
  }
  if (used.empty()) {
    probe.verdict = RRegVerdict::consistent_with_R_regular;
    probe.notes.push_back("no sample with positive residual; ratio bound holds vacuously");
    return probe;
  }
  const double k_small = used.back()->kappa_hat;
  const double k_large = used.front()->kappa_hat;
  double lo = kInf;
  double hi = 0.0;
  for (const auto* rec : used) {
    lo = std::min(lo, rec->kappa_hat);
    hi = std::max(hi, rec->kappa_hat);
  }
  const Tolerances& t = cfg.tol;
  if (lo > 1e6)
    probe.notes.push_back("kappa_hat above 1e6 at every radius; the ratio may be unbounded "
                          "inside each ball");
  if (k_small > t.diverge_factor * k_large && k_small > t.diverge_abs) {
    probe.verdict = RRegVerdict::likely_not_R_regular;
  } else if (hi < t.consistent_spread * lo) {
    probe.verdict = RRegVerdict::consistent_with_R_regular;
  } else {
    probe.verdict = RRegVerdict::inconclusive;
  }
  return probe;
}

IscProbe inner_semicontinuity_probe(const ParametricSystem& sys, std::span<const double> x,
                                    std::span<const double> y,
                                    const NeighborhoodSampler& sampler,
                                    const AnalysisConfig& cfg) {
  sampler.validate();
  const int n = sys.n();
  IscProbe probe;
  probe.x_center.assign(x.begin(), x.end());
  probe.y_center.assign(y.begin(), y.end());
  probe.restriction = sampler.restriction;
  const int K = sampler.samples_per_radius;
  for (std::size_t ri = 0; ri < sampler.radii.size(); ++ri) {
    const double r = sampler.radii[ri];
    struct Eval {
      bool hit = false;
      double d = 0.0;
      Vec x;
    };
    std::vector<Eval> evals(static_cast<std::size_t>(K));
    parallel_for(evals.size(), cfg.exec, [&](std::size_t k) {
      Vec u = sampler.unit_ball(n, ri, static_cast<int>(k));
      Eval ev;
      ev.x.assign(x.begin(), x.end());
      for (std::size_t j = 0; j < ev.x.size(); ++j) ev.x[j] += r * u[j];
      if (sampler.restriction == Restriction::custom && !sampler.omega(ev.x)) {
        evals[k] = std::move(ev);
        return;
      }
      double d = distance_to_image(sys, ev.x, y, cfg.solver);
      if (std::isinf(d) && sampler.restriction == Restriction::dom) {
        evals[k] = std::move(ev);
        return;
      }
      ev.hit = true;
      ev.d = d;
      evals[k] = std::move(ev);
    });
    IscRecord rec;
    rec.radius = r;
    rec.samples = K;
    for (auto& ev : evals) {
      if (!ev.hit) continue;
      ++rec.omega_hits;
      if (rec.argmax_x.empty() || ev.d > rec.d) {
        rec.d = ev.d;
        rec.argmax_x = ev.x;
      }
    }
    probe.radii.push_back(std::move(rec));
  }

  std::vector<const IscRecord*> used;
  for (const auto& rec : probe.radii) {
    if (rec.omega_hits > 0) used.push_back(&rec);
  }
  if (used.empty()) return probe;
  const Tolerances& t = cfg.tol;
  const double d_small = used.back()->d;
  const double d_large = used.front()->d;
  const double r_small = used.back()->radius;
  if (d_small < t.isc_shrink * d_large || d_small < t.isc_radius_factor * r_small) {
    probe.verdict = IscVerdict::likely_inner_semicontinuous;
  } else if (std::all_of(used.begin(), used.end(),
                         [&](const IscRecord* rec) { return rec->d > t.isc_gap; })) {
    probe.verdict = IscVerdict::likely_not;
  }
  return probe;
}

UniformScan uniform_rregularity_scan(const ParametricSystem& sys,
                                     const std::vector<Vec>& graph_points,
                                     const NeighborhoodSampler& sampler,
                                     const AnalysisConfig& cfg) {
  const auto n = static_cast<std::size_t>(sys.n());
  UniformScan out;
  for (std::size_t i = 0; i < graph_points.size(); ++i) {
    const Vec& p = graph_points[i];
    if (p.size() != n + static_cast<std::size_t>(sys.m())) {
      throw DimensionMismatch("graph point has wrong length");
    }
    std::span<const double> ps(p);
    RegularityProbe probe = estimate_rregularity(sys, ps.subspan(0, n), ps.subspan(n), sampler, cfg);
    if (!probe.radii.empty()) out.kappa_uniform = std::max(out.kappa_uniform, probe.radii.front().kappa_hat);
    if (probe.verdict == RRegVerdict::likely_not_R_regular) out.diverging.push_back(i);
    out.probes.push_back(std::move(probe));
  }
  return out;
}

}  // namespace regkit
