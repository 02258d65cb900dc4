#include "regkit/parametric.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <sstream>

#include "regkit/cq.hpp"
#include "regkit/errors.hpp"
#include "regkit/parallel.hpp"

namespace regkit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kMaxNodes = 1000000;

double dist2(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += (a[j] - b[j]) * (a[j] - b[j]);
  return std::sqrt(s);
}

std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

LowerSolution solve_lower(const ParametricProblem& problem, std::span<const double> x,
                          const AnalysisConfig& cfg) {
  const ParametricSystem& sys = problem.sys;
  if (x.size() != static_cast<std::size_t>(sys.n())) {
    throw DimensionMismatch("solve_lower: x has length " + std::to_string(x.size()) +
                            ", expected " + std::to_string(sys.n()));
  }
  LowerSolution out;
  out.x.assign(x.begin(), x.end());
  Vec sh = sys.shifts(x);
  for (double s : sh) {
    if (!std::isfinite(s)) return out;
  }
  SolverConfig sc = cfg.solver;
  sc.tol_feas = cfg.tol.tol_feas;
  if (sys.m() > 2) sc.restarts = std::min(64, std::max(sc.restarts, 8 * sys.m()));
  ExprObjective obj(problem.f, sys.m(), out.x);
  Vec center(static_cast<std::size_t>(sys.m()), 0.0);
  auto sols = minimize_over_image(sys, x, sh, obj, center, sc, &out.trace);
  for (const auto& s : sols) {
    if (s.residual <= sc.tol_feas && std::isfinite(s.objective)) out.phi = std::min(out.phi, s.objective);
  }
  if (!std::isfinite(out.phi)) return out;
  for (const auto& s : sols) {
    if (!(s.residual <= sc.tol_feas) || !(s.objective <= out.phi + cfg.tol.value_tie)) continue;
    bool dup = false;
    for (const auto& r : out.reps) {
      if (dist2(r, s.y) <= cfg.tol.dedup) {
        dup = true;
        break;
      }
    }
    if (!dup) out.reps.push_back(s.y);
  }
  return out;
}

MarginalFunction::MarginalFunction(ParametricProblem problem, AnalysisConfig cfg)
    : problem_(std::move(problem)), cfg_(cfg) {}

LowerSolution MarginalFunction::solution(std::span<const double> x) const {
  std::vector<long long> key(x.size());
  Vec xq(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    key[j] = std::llround(x[j] * 1e9);
    xq[j] = static_cast<double>(key[j]) / 1e9;
  }
  {
    std::shared_lock lock(mutex_);
    auto it = memo_.find(key);
    if (it != memo_.end()) return *it->second;
  }
  auto sol = std::make_shared<const LowerSolution>(solve_lower(problem_, xq, cfg_));
  std::unique_lock lock(mutex_);
  auto [it, inserted] = memo_.emplace(std::move(key), sol);
  return *it->second;
}

double MarginalFunction::at(std::span<const double> x) const { return solution(x).phi; }

std::size_t MarginalFunction::cache_size() const {
  std::shared_lock lock(mutex_);
  return memo_.size();
}

double GridAxis::at(int k) const {
  if (nodes <= 1) return lo;
  if (k == nodes - 1) return hi;
  return lo + (hi - lo) * k / (nodes - 1);
}

std::size_t GridSpec::size() const {
  std::size_t s = 1;
  for (const auto& a : axes) {
    s *= static_cast<std::size_t>(std::max(a.nodes, 0));
    if (s > kMaxNodes) return kMaxNodes + 1;
  }
  return s;
}

std::vector<int> GridSpec::multi_index(std::size_t index) const {
  std::vector<int> idx(axes.size());
  for (std::size_t a = axes.size(); a-- > 0;) {
    const auto nn = static_cast<std::size_t>(axes[a].nodes);
    idx[a] = static_cast<int>(index % nn);
    index /= nn;
  }
  return idx;
}

Vec GridSpec::node(std::size_t index) const {
  auto idx = multi_index(index);
  Vec x(axes.size());
  for (std::size_t a = 0; a < axes.size(); ++a) x[a] = axes[a].at(idx[a]);
  return x;
}

GridSpec GridSpec::parse(const std::string& text) {
  auto number = [&](const std::string& t, const std::string& part) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(t, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != t.size()) {
      throw PreconditionViolation("grid axis '" + part + "' is not lo:hi:nodes");
    }
    return v;
  };
  GridSpec g;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    std::vector<std::string> f;
    std::stringstream ps(part);
    std::string tok;
    while (std::getline(ps, tok, ':')) f.push_back(tok);
    if (f.size() != 3) throw PreconditionViolation("grid axis '" + part + "' is not lo:hi:nodes");
    GridAxis a;
    a.lo = number(f[0], part);
    a.hi = number(f[1], part);
    double nodes = number(f[2], part);
    if (nodes != std::floor(nodes) || nodes < 1 || nodes > 1e7) {
      throw PreconditionViolation("grid axis '" + part + "' needs a positive integer node count");
    }
    a.nodes = static_cast<int>(nodes);
    if (!std::isfinite(a.lo) || !std::isfinite(a.hi) || a.lo > a.hi) {
      throw PreconditionViolation("grid axis '" + part + "' needs finite lo <= hi");
    }
    g.axes.push_back(a);
  }
  if (g.axes.empty()) throw PreconditionViolation("empty grid specification");
  return g;
}

std::string GridSpec::str() const {
  std::string s;
  for (std::size_t a = 0; a < axes.size(); ++a) {
    if (a) s += ",";
    s += fmt(axes[a].lo) + ":" + fmt(axes[a].hi) + ":" + std::to_string(axes[a].nodes);
  }
  return s;
}

GridScan scan(const ParametricProblem& problem, const GridSpec& grid, const AnalysisConfig& cfg) {
  if (grid.axes.size() != static_cast<std::size_t>(problem.sys.n())) {
    throw DimensionMismatch("grid has " + std::to_string(grid.axes.size()) + " axes, problem has n=" +
                            std::to_string(problem.sys.n()));
  }
  const std::size_t total = grid.size();
  if (total > kMaxNodes) throw GridTooLarge("grid exceeds 1e6 nodes");
  GridScan out;
  out.grid = grid;
  out.nodes.resize(total);
  parallel_for(total, cfg.exec, [&](std::size_t i) {
    Vec x = grid.node(i);
    LowerSolution s = solve_lower(problem, x, cfg);
    out.nodes[i] = ScanNode{std::move(x), s.phi, std::move(s.reps), s.trace};
  });
  return out;
}

std::string scan_csv(const GridScan& s, int m) {
  std::string out;
  const std::size_t n = s.grid.axes.size();
  for (std::size_t a = 0; a < n; ++a) out += "x" + std::to_string(a + 1) + ",";
  out += "phi,n_solutions";
  for (int j = 0; j < m; ++j) out += ",y" + std::to_string(j + 1);
  out += "\n";
  for (const auto& node : s.nodes) {
    for (double v : node.x) out += fmt(v) + ",";
    out += fmt(node.phi) + "," + std::to_string(node.reps.size());
    for (int j = 0; j < m; ++j) {
      out += ",";
      if (!node.reps.empty()) out += fmt(node.reps.front()[static_cast<std::size_t>(j)]);
    }
    out += "\n";
  }
  return out;
}

bool Window::contains(std::span<const double> x) const {
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (j < lo.size() && x[j] < lo[j]) return false;
    if (j < hi.size() && x[j] > hi[j]) return false;
  }
  return true;
}

LipschitzReport lipschitz_scan(const ParametricProblem& problem, const GridScan& s,
                               const Window& window, const AnalysisConfig& cfg) {
  LipschitzReport rep;
  const auto& axes = s.grid.axes;
  struct Pair {
    std::size_t a;
    std::size_t b;
    int axis;
  };
  std::vector<Pair> pairs;
  for (std::size_t i = 0; i < s.nodes.size(); ++i) {
    auto idx = s.grid.multi_index(i);
    std::size_t stride = 1;
    for (std::size_t ax = axes.size(); ax-- > 0;) {
      if (idx[ax] + 1 < axes[ax].nodes) pairs.push_back({i, i + stride, static_cast<int>(ax)});
      stride *= static_cast<std::size_t>(axes[ax].nodes);
    }
  }
  std::stable_sort(pairs.begin(), pairs.end(), [](const Pair& p, const Pair& q) {
    return p.a != q.a ? p.a < q.a : p.axis < q.axis;
  });

  std::vector<std::optional<Discontinuity>> found(pairs.size());
  std::vector<PairSlope> slopes(pairs.size());
  std::vector<bool> finite(pairs.size(), false);
  const double cap = cfg.tol.slope_cap;
  parallel_for(pairs.size(), cfg.exec, [&](std::size_t k) {
    const Pair& pr = pairs[k];
    const ScanNode& na = s.nodes[pr.a];
    const ScanNode& nb = s.nodes[pr.b];
    if (!std::isfinite(na.phi) || !std::isfinite(nb.phi)) return;
    const auto ax = static_cast<std::size_t>(pr.axis);
    finite[k] = true;
    double width = std::abs(nb.x[ax] - na.x[ax]);
    double jump = std::abs(nb.phi - na.phi);
    slopes[k] = PairSlope{pr.a, pr.b, pr.axis, width > 0.0 ? jump / width : 0.0};
    if (jump <= 1e-9) return;

    Vec xa = na.x;
    Vec xb = nb.x;
    double fa = na.phi;
    double fb = nb.phi;
    int over = 0;
    for (int bis = 1; bis <= 60; ++bis) {
      Vec xm = xa;
      xm[ax] = 0.5 * (xa[ax] + xb[ax]);
      double fm = solve_lower(problem, xm, cfg).phi;
      if (!std::isfinite(fm)) return;
      if (std::abs(fm - fa) >= std::abs(fb - fm)) {
        xb = xm;
        fb = fm;
      } else {
        xa = xm;
        fa = fm;
      }
      double nj = std::abs(fb - fa);
      if (nj < 0.8 * jump) return;
      jump = nj;
      double slope = jump / std::abs(xb[ax] - xa[ax]);
      if (slope > cap && ++over >= 3) {
        found[k] = Discontinuity{pr.a, pr.b, pr.axis, xa[ax], xb[ax], fa, fb, slope, bis};
        return;
      }
    }
  });
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    if (!finite[k]) continue;
    rep.slopes.push_back(slopes[k]);
    if (window.contains(s.nodes[pairs[k].a].x) && window.contains(s.nodes[pairs[k].b].x)) {
      rep.modulus = std::max(rep.modulus, slopes[k].slope);
    }
    if (found[k]) rep.flags.push_back(*found[k]);
  }
  if (problem.sys.contains_division()) {
    rep.notes.push_back("system contains division; slopes near poles are unreliable");
  }
  return rep;
}

SMapProbes s_map_probes(const ParametricProblem& problem, std::span<const double> x,
                        std::span<const double> y, const NeighborhoodSampler& sampler,
                        const AnalysisConfig& cfg) {
  SMapProbes out;
  LowerSolution low = solve_lower(problem, x, cfg);
  if (low.empty()) throw LowerLevelUnsolved("lower-level problem has no feasible point at x");
  double best = kInf;
  for (const auto& r : low.reps) best = std::min(best, dist2(r, y));
  if (best > 1e-5) {
    out.notes.push_back("reference y is not within 1e-5 of a computed lower-level solution");
  }
  auto oracle = std::make_shared<MarginalFunction>(problem, cfg);
  ParametricSystem ssys = build_solution_system(problem, low.phi, H0Mode::h0_as_ineq, oracle);
  out.rreg = estimate_rregularity(ssys, x, y, sampler, cfg);
  bool all = true;
  bool any_not = false;
  for (const auto& r : low.reps) {
    out.isc.push_back(inner_semicontinuity_probe(ssys, x, r, sampler, cfg));
    all = all && out.isc.back().verdict == IscVerdict::likely_inner_semicontinuous;
    any_not = any_not || out.isc.back().verdict == IscVerdict::likely_not;
  }
  out.lsc = any_not ? IscVerdict::likely_not
                    : (all ? IscVerdict::likely_inner_semicontinuous : IscVerdict::inconclusive);
  return out;
}

}  // namespace regkit
