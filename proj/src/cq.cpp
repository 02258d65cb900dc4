#include "regkit/cq.hpp"

#include <algorithm>
#include <cmath>

#include "regkit/errors.hpp"
#include "regkit/geom.hpp"
#include "regkit/parallel.hpp"
#include "regkit/parametric.hpp"

namespace regkit {

namespace {

using Positions = std::vector<std::size_t>;

Eigen::MatrixXd columns(const Eigen::MatrixXd& J, const Positions& pos) {
  Eigen::MatrixXd out(J.rows(), static_cast<Eigen::Index>(pos.size()));
  for (std::size_t c = 0; c < pos.size(); ++c) out.col(static_cast<Eigen::Index>(c)) = J.col(static_cast<Eigen::Index>(pos[c]));
  return out;
}

Positions equality_positions(const ParametricSystem& sys) {
  Positions out;
  for (std::size_t i = sys.num_ineq(); i < sys.size(); ++i) out.push_back(i);
  return out;
}

Positions pick(const Positions& from, unsigned long mask) {
  Positions out;
  for (std::size_t i = 0; i < from.size(); ++i) {
    if (mask & (1UL << i)) out.push_back(from[i]);
  }
  return out;
}

Positions join(Positions a, const Positions& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

std::vector<int> labels(const ParametricSystem& sys, const Positions& pos) {
  std::vector<int> out;
  for (auto p : pos) out.push_back(constraint_label(sys, p));
  return out;
}

VecFamily family(const ParametricSystem& sys, const Eigen::MatrixXd& J, const Positions& pos) {
  VecFamily fam(static_cast<int>(J.rows()));
  for (auto p : pos) {
    Vec v(static_cast<std::size_t>(J.rows()));
    for (Eigen::Index j = 0; j < J.rows(); ++j) v[static_cast<std::size_t>(j)] = J(j, static_cast<Eigen::Index>(p));
    fam.add(constraint_label(sys, p), std::move(v));
  }
  return fam;
}

CQReport start_report(const std::string& name, const ParametricSystem& sys,
                      std::span<const double> x, std::span<const double> y,
                      const AnalysisConfig& cfg) {
  if (x.size() != static_cast<std::size_t>(sys.n()) || y.size() != static_cast<std::size_t>(sys.m())) {
    throw DimensionMismatch("point does not match the declared dimensions (n=" +
                            std::to_string(sys.n()) + ", m=" + std::to_string(sys.m()) + ")");
  }
  CQReport r;
  r.cq_name = name;
  r.x.assign(x.begin(), x.end());
  r.y.assign(y.begin(), y.end());
  r.tol = cfg.tol;
  if (residual(sys, x, y).value > cfg.tol.tol_feas) {
    r.notes.push_back("reference point is not feasible within tol_feas");
  }
  return r;
}

Positions checked_active(const ParametricSystem& sys, std::span<const double> x,
                         std::span<const double> y, const AnalysisConfig& cfg) {
  Positions act = active_positions(sys, x, y, cfg.tol.tol_act);
  if (static_cast<int>(act.size()) > cfg.tol.subset_cap) {
    throw SubsetCapExceeded("active set has " + std::to_string(act.size()) +
                            " members, above subset_cap " + std::to_string(cfg.tol.subset_cap));
  }
  return act;
}

// Outcome of one sampled point: in the restriction or not, and the first
// violated family if any.
struct SampleOutcome {
  bool hit = false;
  std::optional<RankViolation> violation;
};

// Evaluates `check` at every sample of every radius and fills the report's
// radius table and verdict. check(x, y) returns a violation or nothing.
template <class Check>
void run_sampled(const ParametricSystem& sys, std::span<const double> x, std::span<const double> y,
                 const NeighborhoodSampler& sampler, const AnalysisConfig& cfg, CQReport& report,
                 Check&& check) {
  sampler.validate();
  const auto n = static_cast<std::size_t>(sys.n());
  const int dim = sys.n() + sys.m();
  Vec center(x.begin(), x.end());
  center.insert(center.end(), y.begin(), y.end());
  std::vector<std::optional<RankViolation>> first(sampler.radii.size());
  for (std::size_t ri = 0; ri < sampler.radii.size(); ++ri) {
    const double r = sampler.radii[ri];
    std::vector<SampleOutcome> out(static_cast<std::size_t>(sampler.samples_per_radius));
    parallel_for(out.size(), cfg.exec, [&](std::size_t k) {
      Vec u = sampler.unit_ball(dim, ri, static_cast<int>(k));
      Vec p = center;
      for (std::size_t j = 0; j < p.size(); ++j) p[j] += r * u[j];
      std::span<const double> ps(p);
      auto px = ps.subspan(0, n);
      auto py = ps.subspan(n);
      if (sampler.restriction == Restriction::custom && !sampler.omega(px)) return;
      if (sampler.restriction == Restriction::dom && project(sys, px, py, cfg.solver).empty) return;
      out[k].hit = true;
      auto v = check(px, py);
      if (v) {
        v->radius = r;
        v->sample = static_cast<int>(k);
        v->point = p;
        out[k].violation = std::move(v);
      }
    });
    RadiusCheck rc;
    rc.radius = r;
    rc.samples = sampler.samples_per_radius;
    for (auto& o : out) {
      if (o.hit) ++rc.omega_hits;
      if (o.violation && rc.passed) {
        rc.passed = false;
        first[ri] = o.violation;
      }
    }
    report.radii.push_back(rc);
  }
  const auto& rs = report.radii;
  if (rs.back().passed) {
    report.verdict = CQVerdict::holds_on_samples;
    std::size_t i = rs.size();
    while (i > 0 && rs[i - 1].passed) --i;
    report.accepted_radius = rs[i].radius;
    if (i > 0) {
      report.notes.push_back("violations only at radius " + std::to_string(rs[i - 1].radius) +
                             "; neighbourhood shrunk");
    }
  } else {
    report.verdict = CQVerdict::fails;
    report.violation = first.back();
  }
}

}  // namespace

std::string to_string(CQVerdict v) {
  switch (v) {
    case CQVerdict::holds_on_samples: return "holds_on_samples";
    case CQVerdict::fails: return "fails";
    case CQVerdict::inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

int constraint_label(const ParametricSystem& sys, std::size_t pos) {
  const long vf = sys.value_function_position();
  if (vf < 0) return static_cast<int>(pos) + 1;
  if (static_cast<long>(pos) == vf) return 0;
  return static_cast<long>(pos) < vf ? static_cast<int>(pos) + 1 : static_cast<int>(pos);
}

std::vector<std::size_t> active_positions(const ParametricSystem& sys, std::span<const double> x,
                                          std::span<const double> y, double tol_act) {
  return active_set(sys, x, y, tol_act);
}

CQReport check_licq(const ParametricSystem& sys, std::span<const double> x,
                    std::span<const double> y, const AnalysisConfig& cfg) {
  CQReport r = start_report("licq", sys, x, y, cfg);
  Positions act = active_positions(sys, x, y, cfg.tol.tol_act);
  r.active = labels(sys, act);
  Positions fam = join(act, equality_positions(sys));
  Eigen::MatrixXd J = sys.jacobian_y(x, y);
  r.rank = num_rank(columns(J, fam), cfg.tol.tol_rank);
  if (r.rank == static_cast<int>(fam.size())) {
    r.verdict = CQVerdict::holds_on_samples;
  } else {
    r.verdict = CQVerdict::fails;
    RankViolation v;
    v.K = labels(sys, fam);
    v.rank_center = r.rank;
    v.rank_sample = r.rank;
    v.point = r.x;
    v.point.insert(v.point.end(), y.begin(), y.end());
    r.violation = v;
  }
  return r;
}

CQReport check_mfcq(const ParametricSystem& sys, std::span<const double> x,
                    std::span<const double> y, const AnalysisConfig& cfg) {
  CQReport r = start_report("mfcq", sys, x, y, cfg);
  Positions act = active_positions(sys, x, y, cfg.tol.tol_act);
  r.active = labels(sys, act);
  Eigen::MatrixXd J = sys.jacobian_y(x, y);
  PLDResult pld = positive_linear_dependent(family(sys, J, act), family(sys, J, equality_positions(sys)),
                                            cfg.tol.tol_lp, cfg.tol.tol_rank);
  if (pld.dependent) {
    r.verdict = CQVerdict::fails;
    r.pld = pld.certificate;
  } else {
    r.verdict = CQVerdict::holds_on_samples;
  }
  return r;
}

CQReport check_rcrcq(const ParametricSystem& sys, std::span<const double> x,
                     std::span<const double> y, const NeighborhoodSampler& sampler,
                     const AnalysisConfig& cfg) {
  CQReport r = start_report("rcrcq", sys, x, y, cfg);
  Positions act = checked_active(sys, x, y, cfg);
  r.active = labels(sys, act);
  const Positions eq = equality_positions(sys);
  const unsigned long subsets = 1UL << act.size();
  std::vector<Positions> fams;
  std::vector<int> rank_center;
  Eigen::MatrixXd J0 = sys.jacobian_y(x, y);
  for (unsigned long mask = 0; mask < subsets; ++mask) {
    fams.push_back(join(pick(act, mask), eq));
    rank_center.push_back(num_rank(columns(J0, fams.back()), cfg.tol.tol_rank));
  }
  run_sampled(sys, x, y, sampler, cfg, r,
              [&](std::span<const double> px, std::span<const double> py) -> std::optional<RankViolation> {
                Eigen::MatrixXd J = sys.jacobian_y(px, py);
                for (std::size_t k = 0; k < fams.size(); ++k) {
                  int rk = num_rank(columns(J, fams[k]), cfg.tol.tol_rank);
                  if (rk != rank_center[k]) {
                    RankViolation v;
                    v.K = labels(sys, fams[k]);
                    v.rank_center = rank_center[k];
                    v.rank_sample = rk;
                    return v;
                  }
                }
                return std::nullopt;
              });
  return r;
}

namespace {

struct RcpldSetup {
  Positions act;
  Positions eq;
  Positions basis;
  int rank_eq = 0;
  std::vector<Positions> dependent;  // K u S families dependent at the center
  std::vector<int> dependent_rank;
};

RcpldSetup rcpld_setup(const ParametricSystem& sys, std::span<const double> x,
                       std::span<const double> y, const AnalysisConfig& cfg) {
  RcpldSetup s;
  s.act = checked_active(sys, x, y, cfg);
  s.eq = equality_positions(sys);
  Eigen::MatrixXd J0 = sys.jacobian_y(x, y);
  Eigen::MatrixXd JE = columns(J0, s.eq);
  for (auto c : greedy_basis(JE, cfg.tol.tol_rank)) s.basis.push_back(s.eq[c]);
  s.rank_eq = num_rank(JE, cfg.tol.tol_rank);
  VecFamily fs = family(sys, J0, s.basis);
  for (unsigned long mask = 1; mask < (1UL << s.act.size()); ++mask) {
    Positions K = pick(s.act, mask);
    if (positive_linear_dependent(family(sys, J0, K), fs, cfg.tol.tol_lp, cfg.tol.tol_rank).dependent) {
      s.dependent.push_back(join(K, s.basis));
      s.dependent_rank.push_back(num_rank(columns(J0, s.dependent.back()), cfg.tol.tol_rank));
    }
  }
  return s;
}

std::optional<RankViolation> rcpld_sample(const ParametricSystem& sys, const RcpldSetup& s,
                                           std::span<const double> px, std::span<const double> py,
                                           const AnalysisConfig& cfg) {
  Eigen::MatrixXd J = sys.jacobian_y(px, py);
  int rk = num_rank(columns(J, s.eq), cfg.tol.tol_rank);
  if (rk != s.rank_eq) {
    RankViolation v;
    v.K = labels(sys, s.eq);
    v.rank_center = s.rank_eq;
    v.rank_sample = rk;
    return v;
  }
  for (std::size_t k = 0; k < s.dependent.size(); ++k) {
    const auto& fam = s.dependent[k];
    int r = num_rank(columns(J, fam), cfg.tol.tol_rank);
    if (r == static_cast<int>(fam.size())) {
      RankViolation v;
      v.K = labels(sys, fam);
      v.rank_center = s.dependent_rank[k];
      v.rank_sample = r;
      return v;
    }
  }
  return std::nullopt;
}

}  // namespace

CQReport check_rcpld(const ParametricSystem& sys, std::span<const double> x,
                     std::span<const double> y, const NeighborhoodSampler& sampler,
                     const AnalysisConfig& cfg) {
  CQReport r = start_report("rcpld", sys, x, y, cfg);
  RcpldSetup s = rcpld_setup(sys, x, y, cfg);
  r.active = labels(sys, s.act);
  r.basis_S = labels(sys, s.basis);
  run_sampled(sys, x, y, sampler, cfg, r,
              [&](std::span<const double> px, std::span<const double> py) {
                return rcpld_sample(sys, s, px, py, cfg);
              });
  return r;
}

ParametricSystem build_solution_system(const ParametricProblem& problem, double phi_hat,
                                       H0Mode mode, std::shared_ptr<const ValueFunction> oracle) {
  if (!oracle && !std::isfinite(phi_hat)) {
    throw LowerLevelUnsolved("optimal value at the reference parameter is not finite");
  }
  const ParametricSystem& sys = problem.sys;
  std::vector<Expr> ineq;
  std::vector<Expr> eq;
  for (std::size_t i = 0; i < sys.size(); ++i) (sys.is_ineq(i) ? ineq : eq).push_back(sys.expr(i));
  std::size_t pos = 0;
  if (mode == H0Mode::h0_as_ineq) {
    pos = ineq.size();
    ineq.push_back(problem.f);
  } else {
    pos = ineq.size() + eq.size();
    eq.push_back(problem.f);
  }
  ParametricSystem out(sys.n(), sys.m(), std::move(ineq), std::move(eq));
  out.set_value_function(pos, std::move(oracle), phi_hat);
  return out;
}

CQReport check_rcpld_S_via_multipliers(const ParametricProblem& problem, std::span<const double> x,
                                       std::span<const double> y,
                                       const NeighborhoodSampler& sampler,
                                       const AnalysisConfig& cfg) {
  const ParametricSystem& sys = problem.sys;
  CQReport r = start_report("rcpld_s", sys, x, y, cfg);
  LowerSolution low = solve_lower(problem, x, cfg);
  if (low.empty()) throw LowerLevelUnsolved("lower-level problem has no feasible point at x");
  const auto m = static_cast<std::size_t>(sys.m());
  CompiledExpr f(problem.f);
  const double gap = f(x, y) - low.phi;
  if (gap > cfg.tol.value_tie) {
    r.notes.push_back("reference y is not a lower-level solution (f - phi = " + std::to_string(gap) + ")");
  }
  r.notes.push_back("supports realizable only with multiplier components in (0, eps_pos) are not detected");

  CQReport base = check_rcpld(sys, x, y, sampler, cfg);
  RcpldSetup s = rcpld_setup(sys, x, y, cfg);
  r.active = labels(sys, s.act);
  r.basis_S = labels(sys, s.basis);
  if (base.verdict == CQVerdict::fails) {
    r.verdict = CQVerdict::fails;
    r.violation = base.violation;
    r.radii = base.radii;
    r.notes.push_back("RCPLD fails for the constraint system itself");
    return r;
  }

  std::vector<CompiledExpr> gf;
  for (const auto& g : grad(problem.f, Axis::y, sys.m())) gf.emplace_back(g);
  auto grad_f = [&](std::span<const double> px, std::span<const double> py) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(m));
    for (std::size_t j = 0; j < m; ++j) v(static_cast<Eigen::Index>(j)) = gf[j](px, py);
    return v;
  };

  Eigen::MatrixXd J0 = sys.jacobian_y(x, y);
  Eigen::VectorXd g0 = grad_f(x, y);
  const double eps = cfg.tol.eps_pos;
  // Families {0} u T u S (as positions; h0 is kept apart) to be re-checked.
  std::vector<Positions> watch;
  std::vector<int> watch_rank;
  for (unsigned long mask = 0; mask < (1UL << s.act.size()); ++mask) {
    Positions T = pick(s.act, mask);
    SupportCheck sc;
    sc.T = labels(sys, T);
    // grad f + sum_T (eps + l_i) g_i + sum_J (mu+ - mu-) g_j = 0, all >= 0
    const auto nT = static_cast<Eigen::Index>(T.size());
    const auto nJ = static_cast<Eigen::Index>(s.eq.size());
    Eigen::MatrixXd A(static_cast<Eigen::Index>(m), nT + 2 * nJ);
    Eigen::VectorXd b = -g0;
    for (Eigen::Index c = 0; c < nT; ++c) {
      A.col(c) = J0.col(static_cast<Eigen::Index>(T[static_cast<std::size_t>(c)]));
      b -= eps * A.col(c);
    }
    for (Eigen::Index c = 0; c < nJ; ++c) {
      A.col(nT + c) = J0.col(static_cast<Eigen::Index>(s.eq[static_cast<std::size_t>(c)]));
      A.col(nT + nJ + c) = -A.col(nT + c);
    }
    Phase1Result lp = phase1_feasibility(A, b, cfg.tol.tol_lp);
    if (lp.feasible) {
      Vec lambda(sys.size(), 0.0);
      for (Eigen::Index c = 0; c < nT; ++c) lambda[T[static_cast<std::size_t>(c)]] = eps + lp.z(c);
      for (Eigen::Index c = 0; c < nJ; ++c) {
        lambda[s.eq[static_cast<std::size_t>(c)]] = lp.z(nT + c) - lp.z(nT + nJ + c);
      }
      Eigen::VectorXd res = g0;
      for (std::size_t i = 0; i < sys.size(); ++i) res += lambda[i] * J0.col(static_cast<Eigen::Index>(i));
      if (res.norm() <= 1e-7 * std::max(1.0, g0.norm())) {
        sc.realizable = true;
        sc.lambda = lambda;
      }
    }
    if (sc.realizable) {
      if (!r.multiplier) r.multiplier = sc.lambda;
      VecFamily pos(static_cast<int>(m));
      pos.add(0, Vec(g0.data(), g0.data() + g0.size()));
      VecFamily tf = family(sys, J0, T);
      for (const auto& mem : tf.members()) pos.add(mem.label, mem.v);
      sc.dependent_at_center =
          positive_linear_dependent(pos, family(sys, J0, s.basis), cfg.tol.tol_lp, cfg.tol.tol_rank).dependent;
      if (sc.dependent_at_center) {
        watch.push_back(join(T, s.basis));
        Eigen::MatrixXd M(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(watch.back().size()) + 1);
        M << g0, columns(J0, watch.back());
        watch_rank.push_back(num_rank(M, cfg.tol.tol_rank));
      }
    }
    r.supports.push_back(std::move(sc));
  }
  if (!r.multiplier) {
    r.verdict = CQVerdict::inconclusive;
    r.notes.push_back("multiplier set is empty at the reference point");
    return r;
  }

  run_sampled(sys, x, y, sampler, cfg, r,
              [&](std::span<const double> px, std::span<const double> py) -> std::optional<RankViolation> {
                if (auto v = rcpld_sample(sys, s, px, py, cfg)) return v;
                Eigen::MatrixXd J = sys.jacobian_y(px, py);
                Eigen::VectorXd g = grad_f(px, py);
                for (std::size_t w = 0; w < watch.size(); ++w) {
                  const auto& fam = watch[w];
                  Eigen::MatrixXd M(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(fam.size()) + 1);
                  M << g, columns(J, fam);
                  int rk = num_rank(M, cfg.tol.tol_rank);
                  if (rk == M.cols()) {
                    RankViolation v;
                    v.K = {0};
                    auto ls = labels(sys, fam);
                    v.K.insert(v.K.end(), ls.begin(), ls.end());
                    v.rank_center = watch_rank[w];
                    v.rank_sample = rk;
                    return v;
                  }
                }
                return std::nullopt;
              });
  // Mark supports whose family broke at the reported sample.
  if (r.violation && !r.violation->K.empty() && r.violation->K.front() == 0) {
    for (auto& sc : r.supports) {
      if (!sc.dependent_at_center) continue;
      std::vector<int> want{0};
      want.insert(want.end(), sc.T.begin(), sc.T.end());
      auto bl = labels(sys, s.basis);
      want.insert(want.end(), bl.begin(), bl.end());
      if (want == r.violation->K) sc.passed = false;
    }
  }
  return r;
}

}  // namespace regkit
