#include "regkit/reproduce.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>

#include "regkit/bilevel.hpp"
#include "regkit/cq.hpp"
#include "regkit/errors.hpp"
#include "regkit/geom.hpp"
#include "regkit/parametric.hpp"
#include "regkit/problem_file.hpp"

namespace regkit {

namespace {

std::string fmt(const char* f, double a) {
  char buf[96];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string fmt(const char* f, double a, double b) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

class Recorder {
 public:
  explicit Recorder(ExampleRun& run) : run_(run) {}
  void operator()(const std::string& check, bool ok, const std::string& detail) {
    run_.checks.push_back({run_.example, check, ok, detail});
  }

 private:
  ExampleRun& run_;
};

NeighborhoodSampler sampler_with(std::uint64_t seed, Restriction r) {
  NeighborhoodSampler s;
  s.seed = seed;
  s.restriction = r;
  return s;
}

ProblemFile bundled(const std::string& name) {
  const BundledProblem* b = find_bundled(name);
  if (!b) throw PreconditionViolation("unknown example '" + name + "'");
  return parse_problem(b->text);
}

const ScanNode* node_at(const GridScan& s, double x) {
  for (const auto& n : s.nodes) {
    if (std::abs(n.x[0] - x) < 1e-12) return &n;
  }
  return nullptr;
}

double rep_error(const ScanNode& n, const Vec& want) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& r : n.reps) {
    double e = 0.0;
    for (std::size_t j = 0; j < want.size(); ++j) e = std::max(e, std::abs(r[j] - want[j]));
    best = std::min(best, e);
  }
  return best;
}

void run_ex32(ExampleRun& run, std::uint64_t seed, const AnalysisConfig& cfg) {
  Recorder rec(run);
  ProblemFile pf = bundled("ex32_gamma");
  ParametricProblem pp = pf.lower_problem();
  NeighborhoodSampler dom = sampler_with(seed, Restriction::dom);
  Vec x{0.0};

  Vec y0{0.0};
  RegularityProbe p0 = estimate_rregularity(pp.sys, x, y0, dom, cfg);
  double k_small = p0.radii.back().kappa_hat;
  double k_large = p0.radii.front().kappa_hat;
  rec("probe-rreg (0,0) dom likely_not_R_regular",
      p0.verdict == RRegVerdict::likely_not_R_regular, to_string(p0.verdict));
  rec("kappa(1e-3) >= 100 kappa(1e-1) at (0,0)", k_small >= 100.0 * k_large,
      fmt("ratio %.6g", k_small / k_large));

  Vec y1{1.0};
  RegularityProbe p1 = estimate_rregularity(pp.sys, x, y1, dom, cfg);
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (const auto& r : p1.radii) {
    lo = std::min(lo, r.kappa_hat);
    hi = std::max(hi, r.kappa_hat);
  }
  rec("probe-rreg (0,1) dom consistent_with_R_regular",
      p1.verdict == RRegVerdict::consistent_with_R_regular, to_string(p1.verdict));
  rec("kappa spread < 2 at (0,1)", hi < 2.0 * lo, fmt("spread %.6g", hi / lo));

  CQReport c0 = check_rcpld(pp.sys, x, y0, dom, cfg);
  CQReport c1 = check_rcpld(pp.sys, x, y1, dom, cfg);
  rec("rcpld holds at (0,0)", c0.verdict == CQVerdict::holds_on_samples, to_string(c0.verdict));
  rec("rcpld holds at (0,1)", c1.verdict == CQVerdict::holds_on_samples, to_string(c1.verdict));

  IscProbe i0 = inner_semicontinuity_probe(pp.sys, x, y0, dom, cfg);
  IscProbe i1 = inner_semicontinuity_probe(pp.sys, x, y1, dom, cfg);
  rec("probe-isc (0,0) likely_not", i0.verdict == IscVerdict::likely_not, to_string(i0.verdict));
  rec("probe-isc (0,1) likely_inner_semicontinuous",
      i1.verdict == IscVerdict::likely_inner_semicontinuous, to_string(i1.verdict));

  run.payload = {{"rreg_origin", to_json(p0)}, {"rreg_upper", to_json(p1)},
                 {"rcpld_origin", to_json(c0)}, {"rcpld_upper", to_json(c1)},
                 {"isc_origin", to_json(i0)}, {"isc_upper", to_json(i1)}};
}

// phi = 0 on x >= 0 and +inf on x < 0; shared by the two copies of the
// "0 <= y <= x" system.
void jump_scan(Recorder& rec, const ParametricProblem& pp, const AnalysisConfig& cfg, json& payload) {
  GridScan s = scan(pp, GridSpec::parse("-1:2:61"), cfg);
  int bad = 0;
  for (const auto& n : s.nodes) {
    bool ok = n.x[0] < 0.0 ? std::isinf(n.phi) && n.phi > 0 : std::abs(n.phi) <= 1e-9;
    if (!ok) ++bad;
  }
  rec("scan [-1,2]x61: phi = 0 on x >= 0, +inf on x < 0", bad == 0,
      std::to_string(bad) + " mismatching nodes");
  Window dom{{0.0}, {2.0}};
  LipschitzReport lip = lipschitz_scan(pp, s, dom, cfg);
  int inside = 0;
  for (const auto& f : lip.flags) {
    if (f.lo >= 0.0) ++inside;
  }
  rec("no discontinuity flagged within dom", inside == 0,
      std::to_string(inside) + " flags, modulus " + fmt("%.6g", lip.modulus));
  payload["scan"] = to_json(s, &lip);
}

void run_ex41(ExampleRun& run, std::uint64_t seed, const AnalysisConfig& cfg) {
  Recorder rec(run);
  ProblemFile pf = bundled("ex41_box");
  ParametricProblem pp = pf.lower_problem();
  json payload;
  jump_scan(rec, pp, cfg, payload);

  BilevelProblem bp = pf.bilevel();
  NeighborhoodSampler s = sampler_with(seed, Restriction::full);
  CalmnessReport cr = check_partial_calmness(bp, Vec{1.0}, Vec{0.0}, s, default_kappa_grid(), cfg);
  rec("calmness (1,0) calm_on_samples", cr.verdict == CalmVerdict::calm_on_samples,
      to_string(cr.verdict));

  ExistenceReport er = pessimistic_existence_report(bp, box_grid(bp.X, 61), s, cfg);
  bool inc = er.incumbent_x && std::abs((*er.incumbent_x)[0] - 1.0) <= 1e-9;
  rec("existence hypotheses pass", er.x_in_dom && er.rcpld_s_all_hold,
      std::string("x_in_dom ") + (er.x_in_dom ? "true" : "false") + ", rcpld_s " +
          (er.rcpld_s_all_hold ? "all hold" : "not all hold"));
  rec("pessimistic incumbent x = 1", inc,
      er.incumbent_x ? fmt("x %.9g phi_p %.6g", (*er.incumbent_x)[0], er.incumbent_phi_p) : "none");
  payload["calmness"] = to_json(cr);
  payload["existence"] = to_json(er);
  run.payload = payload;
}

void run_jump(ExampleRun& run, std::uint64_t seed, const AnalysisConfig& cfg) {
  Recorder rec(run);
  ProblemFile pf = bundled("ex_jump");
  ParametricProblem pp = pf.lower_problem();
  json payload;
  jump_scan(rec, pp, cfg, payload);
  Vec x{0.0};
  Vec y{0.0};
  SMapProbes full = s_map_probes(pp, x, y, sampler_with(seed, Restriction::full), cfg);
  SMapProbes dom = s_map_probes(pp, x, y, sampler_with(seed, Restriction::dom), cfg);
  rec("S-map (0,0) full likely_not_R_regular",
      full.rreg.verdict == RRegVerdict::likely_not_R_regular, to_string(full.rreg.verdict));
  rec("S-map (0,0) dom consistent_with_R_regular",
      dom.rreg.verdict == RRegVerdict::consistent_with_R_regular, to_string(dom.rreg.verdict));
  payload["smap_full"] = to_json(full);
  payload["smap_dom"] = to_json(dom);
  run.payload = payload;
}

void run_ex412(ExampleRun& run, std::uint64_t, const AnalysisConfig& cfg) {
  Recorder rec(run);
  ProblemFile pf = bundled("ex412_bilinear");
  ParametricProblem pp = pf.lower_problem();
  GridScan s = scan(pp, GridSpec::parse("-2:3:61"), cfg);

  auto phi_exact = [](double x) { return x < -1.0 ? 1.0 / x : (x <= 0.0 ? -1.0 : 0.0); };
  auto s_exact = [](double x) {
    return x < -1.0 ? Vec{1.0 / x, 1.0} : (x <= 0.0 ? Vec{-1.0, -x} : Vec{0.0, 0.0});
  };
  struct Ref {
    double x;
    double phi;
  };
  for (Ref r : {Ref{-2.0, -0.5}, Ref{-0.5, -1.0}, Ref{0.5, 0.0}}) {
    const ScanNode* n = node_at(s, r.x);
    double err = n ? std::abs(n->phi - r.phi) : std::numeric_limits<double>::infinity();
    rec(fmt("phi(%g) = ", r.x) + fmt("%g within 1e-4", r.phi), err <= 1e-4, fmt("error %.3g", err));
    double rerr = n ? rep_error(*n, s_exact(r.x)) : std::numeric_limits<double>::infinity();
    rec(fmt("S(%g) representative within 1e-3", r.x), rerr <= 1e-3, fmt("error %.3g", rerr));
  }
  double max_phi = 0.0;
  double max_rep = 0.0;
  for (const auto& n : s.nodes) {
    max_phi = std::max(max_phi, std::abs(n.phi - phi_exact(n.x[0])));
    max_rep = std::max(max_rep, rep_error(n, s_exact(n.x[0])));
  }
  rec("3-piece phi at every node within 1e-4", max_phi <= 1e-4, fmt("max error %.3g", max_phi));
  rec("3-piece S at every node within 1e-3", max_rep <= 1e-3, fmt("max error %.3g", max_rep));

  LipschitzReport lip = lipschitz_scan(pp, s, Window{}, cfg);
  bool at_zero = false;
  for (const auto& f : lip.flags) {
    if (f.lo <= 0.0 && 0.0 <= f.hi) at_zero = true;
  }
  rec("discontinuity of phi flagged at x = 0", at_zero, std::to_string(lip.flags.size()) + " flags");
  run.payload = {{"scan", to_json(s, &lip)}};
}

void run_qp(ExampleRun& run, std::uint64_t seed, const AnalysisConfig& cfg) {
  Recorder rec(run);
  ProblemFile pf = bundled("ex_qp");
  ParametricProblem pp = pf.lower_problem();
  NeighborhoodSampler s = sampler_with(seed, Restriction::full);
  json payload;
  struct Case {
    double x;
    Vec y;
    CQVerdict want;
    const char* key;
  };
  for (const Case& c : {Case{1.0, {0.0, 1.0}, CQVerdict::fails, "positive"},
                        Case{-1.0, {0.0, 0.0}, CQVerdict::holds_on_samples, "negative"}}) {
    Vec x{c.x};
    CQReport r = check_rcpld_S_via_multipliers(pp, x, c.y, s, cfg);
    rec(fmt("rcpld_s at x = %g is ", c.x) + to_string(c.want), r.verdict == c.want, to_string(r.verdict));
    Vec want{2.0, std::max(-2.0 * c.x, 0.0)};
    double err = std::numeric_limits<double>::infinity();
    if (r.multiplier) {
      err = 0.0;
      for (std::size_t j = 0; j < 2; ++j) err = std::max(err, std::abs((*r.multiplier)[j] - want[j]));
    }
    rec(fmt("multiplier at x = %g is (2, max(-2x, 0)) within 1e-6", c.x), err <= 1e-6,
        fmt("error %.3g", err));
    payload[c.key] = to_json(r);
  }
  run.payload = payload;
}

void run_ex42(ExampleRun& run, std::uint64_t seed, const AnalysisConfig& cfg) {
  Recorder rec(run);
  ProblemFile pf = bundled("ex42_bilevel");
  BilevelProblem bp = pf.bilevel();
  json payload;

  OptimisticSolution opt = solve_optimistic(bp, box_grid(bp.X, 61), 3, cfg);
  double dx = std::max(std::abs(opt.x[0] - 0.25), std::abs(opt.y[0] - 0.5));
  rec("solve-opt (x*, y*) within 1e-3 of (0.25, 0.5)", dx <= 1e-3,
      fmt("(%.9g, ", opt.x[0]) + fmt("%.9g)", opt.y[0]));
  rec("F* within 1e-3 of 0.5", std::abs(opt.F - 0.5) <= 1e-3, fmt("F* %.9g", opt.F));
  bool mono = true;
  for (std::size_t i = 1; i < opt.rounds.size(); ++i) mono = mono && opt.rounds[i].F <= opt.rounds[i - 1].F;
  rec("incumbent nonincreasing across rounds", mono, std::to_string(opt.rounds.size()) + " rounds");
  payload["optimistic"] = to_json(opt);

  BilevelProblem local = bp;
  local.X = Box{{1.2}, {1.6}};
  OptimisticSolution lopt = solve_optimistic(local, box_grid(local.X, 61), 3, cfg);
  double ldx = std::max(std::abs(lopt.x[0] - 1.375), std::abs(lopt.y[0] - 0.625));
  rec("X = [1.2, 1.6]: incumbent within 1e-3 of (1.375, 0.625)", ldx <= 1e-3,
      fmt("(%.9g, ", lopt.x[0]) + fmt("%.9g)", lopt.y[0]));
  payload["optimistic_local"] = to_json(lopt);

  NeighborhoodSampler s = sampler_with(seed, Restriction::full);
  CalmnessReport cg = check_partial_calmness(bp, Vec{0.25}, Vec{0.5}, s, default_kappa_grid(), cfg);
  rec("calmness (0.25, 0.5) calm_on_samples with kappa_min <= 100",
      cg.verdict == CalmVerdict::calm_on_samples && cg.kappa_min && *cg.kappa_min <= 100.0,
      to_string(cg.verdict) + (cg.kappa_min ? fmt(" kappa_min %g", *cg.kappa_min) : ""));
  CalmnessReport cl = check_partial_calmness(bp, Vec{1.375}, Vec{0.625}, s, default_kappa_grid(), cfg);
  rec("calmness (1.375, 0.625) likely_not_calm", cl.verdict == CalmVerdict::likely_not_calm,
      to_string(cl.verdict));
  payload["calmness_global"] = to_json(cg);
  payload["calmness_local"] = to_json(cl);

  GridScan sc = scan(bp.lower, GridSpec::parse("0:3:61"), cfg);
  double dev = 0.0;
  for (const auto& n : sc.nodes) {
    double x = n.x[0];
    double want = x <= 1.0 ? std::pow(x + std::sqrt(x) - 2.0, 2) : (x <= 2.0 ? 0.0 : std::pow(x - 2.0, 2));
    dev = std::max(dev, std::abs(n.phi - want));
  }
  rec("scan [0,3]x61 matches the 4-piece phi within 1e-4", dev <= 1e-4, fmt("max error %.3g", dev));
  payload["scan"] = to_json(sc, nullptr);

  ExistenceReport er = pessimistic_existence_report(bp, box_grid(bp.X, 61), s, cfg);
  bool some_fail = false;
  for (const auto& p : er.rcpld_s) some_fail = some_fail || p.verdict == CQVerdict::fails;
  rec("existence: X inside dom Gamma", er.x_in_dom, std::to_string(er.infeasible_nodes.size()) + " infeasible nodes");
  rec("existence: RCPLD_S failures reported per point", some_fail,
      std::to_string(er.rcpld_s.size()) + " points checked");
  bool same = er.incumbent_x && std::abs((*er.incumbent_x)[0] - 0.25) <= 1e-9;
  rec("pessimistic incumbent equals the optimistic grid incumbent", same,
      er.incumbent_x ? fmt("x %.9g", (*er.incumbent_x)[0]) : "none");
  payload["existence"] = to_json(er);
  run.payload = payload;
}

const std::map<std::string, std::function<void(ExampleRun&, std::uint64_t, const AnalysisConfig&)>>&
runners() {
  static const std::map<std::string, std::function<void(ExampleRun&, std::uint64_t, const AnalysisConfig&)>> m{
      {"ex32_gamma", run_ex32},  {"ex41_box", run_ex41}, {"ex_jump", run_jump},
      {"ex412_bilinear", run_ex412}, {"ex_qp", run_qp},  {"ex42_bilevel", run_ex42}};
  return m;
}

}  // namespace

bool ExampleRun::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Expectation& e) { return e.passed; });
}

std::vector<std::string> reproducible_examples() {
  return {"ex32_gamma", "ex41_box", "ex_jump", "ex412_bilinear", "ex_qp", "ex42_bilevel"};
}

ExampleRun reproduce_example(const std::string& name, std::uint64_t seed, const AnalysisConfig& cfg) {
  std::string key = name;
  if (runners().find(key) == runners().end()) {
    // Short aliases such as "ex32" or "qp".
    for (const auto& n : reproducible_examples()) {
      if (n.rfind(name + "_", 0) == 0 || n == "ex_" + name) key = n;
    }
  }
  auto it = runners().find(key);
  if (it == runners().end()) throw PreconditionViolation("unknown example '" + name + "'");
  AnalysisConfig c = cfg;
  c.solver.seed = seed;
  ExampleRun run;
  run.example = key;
  auto t0 = std::chrono::steady_clock::now();
  it->second(run, seed, c);
  run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  json checks = json::array();
  for (const auto& e : run.checks) {
    checks.push_back({{"check", e.check}, {"passed", e.passed}, {"detail", e.detail}});
  }
  run.payload["checks"] = checks;
  return run;
}

std::string expectation_table(const std::vector<ExampleRun>& runs) {
  std::size_t w_ex = 7;
  std::size_t w_ck = 5;
  for (const auto& r : runs) {
    w_ex = std::max(w_ex, r.example.size());
    for (const auto& e : r.checks) w_ck = std::max(w_ck, e.check.size());
  }
  auto pad = [](std::string s, std::size_t w) {
    s.resize(std::max(w, s.size()), ' ');
    return s;
  };
  std::string out = pad("example", w_ex) + "  " + pad("check", w_ck) + "  result  detail\n";
  for (const auto& r : runs) {
    for (const auto& e : r.checks) {
      out += pad(e.example, w_ex) + "  " + pad(e.check, w_ck) + "  " + (e.passed ? "PASS  " : "FAIL  ") +
             "  " + e.detail + "\n";
    }
    out += pad(r.example, w_ex) + "  " + pad("(runtime)", w_ck) + "  " + "      " + "  " +
           fmt("%.2f s", r.seconds) + "\n";
  }
  return out;
}

}  // namespace regkit
