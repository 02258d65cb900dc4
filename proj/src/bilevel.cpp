#include "regkit/bilevel.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "regkit/errors.hpp"
#include "regkit/geom.hpp"
#include "regkit/parallel.hpp"

namespace regkit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double norm_diff(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += (a[j] - b[j]) * (a[j] - b[j]);
  return std::sqrt(s);
}

struct CalmSample {
  Vec x;
  Vec y;
  double dF = 0.0;   // F(x,y) - F_ref
  double gap = 0.0;  // f(x,y) - phi(x)
  bool ok = false;
};

}  // namespace

bool Box::contains(std::span<const double> x) const {
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (x[j] < lo[j] || x[j] > hi[j]) return false;
  }
  return true;
}

Vec Box::clip(std::span<const double> x) const {
  Vec out(x.begin(), x.end());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = std::clamp(out[j], lo[j], hi[j]);
  return out;
}

void BilevelProblem::validate() const {
  const int n = lower.sys.n();
  const int m = lower.sys.m();
  if (X.lo.size() != static_cast<std::size_t>(n) || X.hi.size() != static_cast<std::size_t>(n)) {
    throw DimensionMismatch("X has " + std::to_string(X.lo.size()) + " axes, problem has n=" +
                            std::to_string(n));
  }
  for (int j = 0; j < n; ++j) {
    if (!std::isfinite(X.lo[j]) || !std::isfinite(X.hi[j]) || X.lo[j] > X.hi[j]) {
      throw PreconditionViolation("X axis " + std::to_string(j + 1) + " needs finite lo <= hi");
    }
  }
  if (F.max_index(Axis::x) > n) throw IndexError("upper objective references x beyond n");
  if (F.max_index(Axis::y) > m) throw IndexError("upper objective references y beyond m");
}

double BilevelProblem::upper(std::span<const double> x, std::span<const double> y) const {
  return CompiledExpr(F)(x, y);
}

OptPess phi_opt_pess(const BilevelProblem& problem, const LowerSolution& lower) {
  OptPess r;
  if (lower.empty()) return r;
  CompiledExpr F(problem.F);
  r.empty = false;
  for (const auto& y : lower.reps) {
    double v = F(lower.x, y);
    if (v < r.phi_o) {
      r.phi_o = v;
      r.y_o = y;
    }
    if (v > r.phi_p) {
      r.phi_p = v;
      r.y_p = y;
    }
  }
  return r;
}

OptPess phi_opt_pess(const BilevelProblem& problem, std::span<const double> x,
                     const AnalysisConfig& cfg) {
  return phi_opt_pess(problem, solve_lower(problem.lower, x, cfg));
}

GridSpec box_grid(const Box& X, int nodes) {
  GridSpec g;
  for (std::size_t j = 0; j < X.lo.size(); ++j) {
    GridAxis a;
    a.lo = X.lo[j];
    a.hi = X.hi[j];
    a.nodes = X.lo[j] == X.hi[j] ? 1 : nodes;
    g.axes.push_back(a);
  }
  return g;
}

OptimisticSolution solve_optimistic(const BilevelProblem& problem, const GridSpec& grid,
                                    int refine_rounds, const AnalysisConfig& cfg) {
  problem.validate();
  if (refine_rounds < 0) throw PreconditionViolation("refine_rounds must be >= 0");
  if (grid.axes.size() != static_cast<std::size_t>(problem.lower.sys.n())) {
    throw DimensionMismatch("grid has " + std::to_string(grid.axes.size()) +
                            " axes, problem has n=" + std::to_string(problem.lower.sys.n()));
  }
  if (grid.size() > 1000000) throw GridTooLarge("grid exceeds 1e6 nodes");

  OptimisticSolution out;
  GridSpec g = grid;
  for (int round = 0; round <= refine_rounds; ++round) {
    const std::size_t total = g.size();
    std::vector<OptPess> vals(total);
    parallel_for(total, cfg.exec, [&](std::size_t i) {
      vals[i] = phi_opt_pess(problem, g.node(i), cfg);
    });
    OptimisticRound rec;
    rec.grid = g;
    std::size_t best = total;
    for (std::size_t i = 0; i < total; ++i) {
      if (vals[i].empty) continue;
      ++rec.feasible_nodes;
      if (best == total || vals[i].phi_o < vals[best].phi_o) best = i;
    }
    if (round == 0 && best == total) {
      throw AllNodesInfeasible("no grid node has a nonempty lower-level solution set");
    }
    if (best != total && vals[best].phi_o < out.F) {
      out.F = vals[best].phi_o;
      out.x = g.node(best);
      out.y = vals[best].y_o;
    }
    rec.x = out.x;
    rec.y = out.y;
    rec.F = out.F;
    out.rounds.push_back(std::move(rec));

    GridSpec next;
    for (std::size_t a = 0; a < g.axes.size(); ++a) {
      const GridAxis& ax = g.axes[a];
      GridAxis z;
      if (ax.nodes <= 1) {
        z = ax;
      } else {
        double h = (ax.hi - ax.lo) / (ax.nodes - 1);
        z.lo = std::max(problem.X.lo[a], out.x[a] - h);
        z.hi = std::min(problem.X.hi[a], out.x[a] + h);
        z.nodes = z.lo < z.hi ? 21 : 1;
      }
      next.axes.push_back(z);
    }
    g = next;
  }
  return out;
}

std::string to_string(CalmVerdict v) {
  switch (v) {
    case CalmVerdict::calm_on_samples:
      return "calm_on_samples";
    case CalmVerdict::likely_not_calm:
      return "likely_not_calm";
    case CalmVerdict::inconclusive:
      return "inconclusive";
  }
  return "inconclusive";
}

std::vector<double> default_kappa_grid() { return {1.0, 10.0, 1e2, 1e3, 1e4}; }

double calmness_penalty(const BilevelProblem& problem, const ValueFunction& phi, double F_ref,
                        double kappa, std::span<const double> x, std::span<const double> y) {
  double gap = CompiledExpr(problem.lower.f)(x, y) - phi.at(x);
  return problem.upper(x, y) - F_ref + kappa * std::max(0.0, gap);
}

CalmnessReport check_partial_calmness(const BilevelProblem& problem, std::span<const double> xbar,
                                      std::span<const double> ybar,
                                      const NeighborhoodSampler& sampler,
                                      std::vector<double> kappa_grid, const AnalysisConfig& cfg) {
  problem.validate();
  sampler.validate();
  const ParametricSystem& sys = problem.lower.sys;
  const int n = sys.n();
  const int m = sys.m();
  if (xbar.size() != static_cast<std::size_t>(n) || ybar.size() != static_cast<std::size_t>(m)) {
    throw DimensionMismatch("calmness point does not match (n, m)");
  }
  if (kappa_grid.empty()) kappa_grid = default_kappa_grid();
  for (double k : kappa_grid) {
    if (!(k > 0.0) || !std::isfinite(k)) throw PreconditionViolation("kappa values must be positive");
  }
  std::sort(kappa_grid.begin(), kappa_grid.end());

  CalmnessReport rep;
  rep.x.assign(xbar.begin(), xbar.end());
  rep.y.assign(ybar.begin(), ybar.end());
  rep.kappa_grid = kappa_grid;
  rep.tol = cfg.tol;
  rep.F_ref = problem.upper(xbar, ybar);

  auto phi = std::make_shared<MarginalFunction>(problem.lower, cfg);
  CompiledExpr f(problem.lower.f);
  CompiledExpr F(problem.F);
  SolverConfig sc = cfg.solver;
  sc.tol_feas = cfg.tol.tol_feas;

  if (!problem.X.contains(xbar)) rep.notes.push_back("reference x lies outside X");
  {
    double gap = f(xbar, ybar) - phi->at(xbar);
    if (!(gap <= cfg.tol.value_tie)) {
      rep.notes.push_back("reference point is not a lower-level solution: f - phi = " +
                          std::to_string(gap));
    }
  }

  // Feasible point generated from the perturbation (x, nu): x clipped to X,
  // nu projected onto Gamma(x), kept only inside the ball of radius r.
  auto realise = [&](std::span<const double> xs, std::span<const double> nu, double r) {
    CalmSample s;
    s.x = problem.X.clip(xs);
    Projection pr = project(sys, s.x, nu, sc);
    if (pr.empty) return s;
    s.y = pr.y_star;
    if (norm_diff(s.x, xbar) > r || norm_diff(s.y, ybar) > r) return s;
    double ph = phi->at(s.x);
    if (!std::isfinite(ph)) return s;
    s.dF = F(s.x, s.y) - rep.F_ref;
    s.gap = f(s.x, s.y) - ph;
    s.ok = std::isfinite(s.dF) && std::isfinite(s.gap);
    return s;
  };

  const std::size_t R = sampler.radii.size();
  const int K = sampler.samples_per_radius;
  std::vector<CalmSample> samples(R * static_cast<std::size_t>(K));
  parallel_for(samples.size(), cfg.exec, [&](std::size_t idx) {
    const std::size_t ri = idx / static_cast<std::size_t>(K);
    const int k = static_cast<int>(idx % static_cast<std::size_t>(K));
    const double r = sampler.radii[ri];
    Vec u = sampler.unit_ball(n + m, ri, k);
    double un = 0.0;
    for (double v : u) un += v * v;
    un = std::sqrt(un);
    if (!(un > 0.0)) return;
    // Log-uniform radial factor in [1e-3 r, r].
    double rho = r * std::pow(10.0, -3.0 * sampler.unit_scalar(ri, k, 0xca1f));
    Vec xs(static_cast<std::size_t>(n));
    Vec nu(static_cast<std::size_t>(m));
    for (int j = 0; j < n; ++j) xs[j] = xbar[j] + rho * u[j] / un;
    for (int j = 0; j < m; ++j) nu[j] = ybar[j] + rho * u[n + j] / un;
    samples[idx] = realise(xs, nu, r);
  });

  rep.attempted = static_cast<int>(samples.size());
  bool inexact_phi = false;
  bool not_minimal = false;
  std::vector<int> count(R, 0);
  for (std::size_t idx = 0; idx < samples.size(); ++idx) {
    const auto& s = samples[idx];
    if (!s.ok) {
      ++rep.skipped;
      continue;
    }
    ++count[idx / static_cast<std::size_t>(K)];
    if (s.gap < -1e-7) inexact_phi = true;
    LowerSolution low = phi->solution(s.x);
    OptPess op = phi_opt_pess(problem, low);
    if (!op.empty && op.phi_o < rep.F_ref - cfg.tol.delta_viol) not_minimal = true;
  }
  if (inexact_phi) rep.notes.push_back("f - phi below -1e-7 at some sample; phi solve inexact");
  if (not_minimal) {
    rep.notes.push_back("reference point is not a local optimistic minimiser on the samples");
  }

  // Radii used for persistence: the two smallest (or the only one).
  const std::size_t first_persist = R >= 2 ? R - 2 : 0;
  bool have_samples = true;
  for (std::size_t ri = first_persist; ri < R; ++ri) {
    if (count[ri] == 0) have_samples = false;
  }

  for (double kappa : kappa_grid) {
    KappaResult kr;
    kr.kappa = kappa;
    std::size_t worst = samples.size();
    double worst_P = kInf;
    for (std::size_t ri = 0; ri < R; ++ri) {
      CalmRadius cr;
      cr.radius = sampler.radii[ri];
      cr.samples = count[ri];
      for (int k = 0; k < K; ++k) {
        const std::size_t idx = ri * static_cast<std::size_t>(K) + static_cast<std::size_t>(k);
        const auto& s = samples[idx];
        if (!s.ok) continue;
        double P = s.dF + kappa * std::max(0.0, s.gap);
        if (P < cr.min_P) cr.min_P = P;
        if (ri == R - 1 && P < worst_P) {
          worst_P = P;
          worst = idx;
        }
      }
      cr.violated = cr.min_P < -cfg.tol.delta_viol;
      kr.radii.push_back(cr);
    }
    kr.violated = have_samples;
    for (std::size_t ri = first_persist; ri < R; ++ri) kr.violated = kr.violated && kr.radii[ri].violated;

    if (kr.violated && worst < samples.size()) {
      // Compass descent on P_kappa from the worst sample of the smallest
      // ball; every trial is re-projected so the witness stays feasible.
      const double r = sampler.radii[R - 1];
      auto evalP = [&](const Vec& z, CalmSample& out) {
        Vec xs(z.begin(), z.begin() + n);
        Vec nu(z.begin() + n, z.end());
        out = realise(xs, nu, r);
        if (!out.ok) return kInf;
        return out.dF + kappa * std::max(0.0, out.gap);
      };
      CalmSample best = samples[worst];
      Vec z(best.x);
      z.insert(z.end(), best.y.begin(), best.y.end());
      double bestP = evalP(z, best);
      double step = 0.25 * std::max(norm_diff(best.x, xbar) + norm_diff(best.y, ybar), 1e-9 * r);
      for (int it = 0; it < 60 && step > 1e-13; ++it) {
        bool moved = false;
        for (std::size_t j = 0; j < z.size(); ++j) {
          for (double sgn : {1.0, -1.0}) {
            Vec t = z;
            t[j] += sgn * step;
            CalmSample cs;
            double P = evalP(t, cs);
            if (P < bestP) {
              bestP = P;
              best = cs;
              z = t;
              moved = true;
            }
          }
        }
        if (!moved) step *= 0.5;
      }
      if (std::isfinite(bestP)) {
        CalmWitness w;
        w.x = best.x;
        w.y = best.y;
        w.u = std::max(0.0, best.gap);
        w.margin = calmness_penalty(problem, *phi, rep.F_ref, kappa, w.x, w.y);
        w.radius = r;
        kr.witness = w;
      }
    }
    rep.kappas.push_back(std::move(kr));
  }

  if (!have_samples) {
    rep.verdict = CalmVerdict::inconclusive;
    rep.notes.push_back("no feasible samples at the smallest radii");
    return rep;
  }
  for (const auto& kr : rep.kappas) {
    if (!kr.violated) {
      rep.kappa_min = kr.kappa;
      break;
    }
  }
  rep.verdict = rep.kappa_min ? CalmVerdict::calm_on_samples : CalmVerdict::likely_not_calm;
  return rep;
}

ExistenceReport pessimistic_existence_report(const BilevelProblem& problem, const GridSpec& grid,
                                             const NeighborhoodSampler& sampler,
                                             const AnalysisConfig& cfg, int rcpld_nodes) {
  problem.validate();
  if (grid.axes.size() != static_cast<std::size_t>(problem.lower.sys.n())) {
    throw DimensionMismatch("grid has " + std::to_string(grid.axes.size()) +
                            " axes, problem has n=" + std::to_string(problem.lower.sys.n()));
  }
  if (grid.size() > 1000000) throw GridTooLarge("grid exceeds 1e6 nodes");
  ExistenceReport rep;
  rep.locally_bounded = problem.lower.flags.locally_bounded;
  rep.notes.push_back("X is a box, hence compact");
  if (!rep.locally_bounded) rep.notes.push_back("local boundedness of Gamma not asserted by the problem file");

  const std::size_t total = grid.size();
  std::vector<LowerSolution> lows(total);
  parallel_for(total, cfg.exec, [&](std::size_t i) { lows[i] = solve_lower(problem.lower, grid.node(i), cfg); });

  std::vector<std::size_t> feasible;
  std::vector<OptPess> ops(total);
  for (std::size_t i = 0; i < total; ++i) {
    ops[i] = phi_opt_pess(problem, lows[i]);
    ExistenceNode node;
    node.x = lows[i].x;
    node.phi_o = ops[i].phi_o;
    node.phi_p = ops[i].phi_p;
    node.reps = lows[i].reps.size();
    rep.nodes.push_back(node);
    if (ops[i].empty) {
      rep.x_in_dom = false;
      rep.infeasible_nodes.push_back(lows[i].x);
      continue;
    }
    feasible.push_back(i);
    if (ops[i].phi_p < rep.incumbent_phi_p) {
      rep.incumbent_phi_p = ops[i].phi_p;
      rep.incumbent_x = lows[i].x;
      rep.incumbent_y = ops[i].y_p;
    }
  }
  if (feasible.empty()) {
    rep.rcpld_s_all_hold = false;
    rep.notes.push_back("no grid node has a nonempty lower-level solution set");
    return rep;
  }

  std::vector<std::size_t> picks;
  const int K = std::max(1, rcpld_nodes);
  const std::size_t N = feasible.size();
  for (int i = 0; i < K; ++i) {
    std::size_t at = K == 1 ? 0 : static_cast<std::size_t>(std::llround(static_cast<double>(i) * (N - 1) / (K - 1)));
    if (picks.empty() || picks.back() != feasible[at]) picks.push_back(feasible[at]);
  }
  for (std::size_t node : picks) {
    for (const auto& y : lows[node].reps) {
      ExistencePoint pt;
      pt.x = lows[node].x;
      pt.y = y;
      try {
        CQReport r = check_rcpld_S_via_multipliers(problem.lower, pt.x, pt.y, sampler, cfg);
        pt.verdict = r.verdict;
        pt.notes = r.notes;
      } catch (const Error& e) {
        pt.verdict = CQVerdict::inconclusive;
        pt.notes.push_back(e.what());
      }
      if (pt.verdict != CQVerdict::holds_on_samples) rep.rcpld_s_all_hold = false;
      rep.rcpld_s.push_back(std::move(pt));
    }
  }
  return rep;
}

}  // namespace regkit
