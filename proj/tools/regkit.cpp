// regkit command-line driver.
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "regkit/bilevel.hpp"
#include "regkit/cq.hpp"
#include "regkit/errors.hpp"
#include "regkit/geom.hpp"
#include "regkit/parallel.hpp"
#include "regkit/parametric.hpp"
#include "regkit/problem_file.hpp"
#include "regkit/report.hpp"
#include "regkit/reproduce.hpp"

using namespace regkit;

namespace {

constexpr int kOk = 0;
constexpr int kAnalysisFailure = 1;
constexpr int kUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<double> parse_list(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != tok.size()) throw UsageError(std::string("bad number '") + tok + "' in " + what);
    out.push_back(v);
  }
  if (out.empty()) throw UsageError(std::string("empty ") + what);
  return out;
}

// "x..., y..." split by the declared dimensions, or the name of a point in
// the problem file.
void resolve_point(const ProblemFile& pf, const std::string& text, Vec& x, Vec& y) {
  if (const NamedPoint* np = pf.point(text)) {
    x = np->x;
    y = np->y;
    return;
  }
  Vec v = parse_list(text, "--point");
  if (v.size() != static_cast<std::size_t>(pf.n + pf.m)) {
    throw UsageError("--point needs n + m = " + std::to_string(pf.n + pf.m) + " values, got " +
                     std::to_string(v.size()));
  }
  x.assign(v.begin(), v.begin() + pf.n);
  y.assign(v.begin() + pf.n, v.end());
}

struct Common {
  std::uint64_t seed = 42;
  int threads = 0;
  std::string output;
};

struct SamplerFlags {
  std::string radii = "0.1,0.01,0.001";
  int samples = 200;
  std::string omega = "full";

  NeighborhoodSampler make(std::uint64_t seed) const {
    NeighborhoodSampler s;
    s.radii = parse_list(radii, "--radii");
    s.samples_per_radius = samples;
    s.seed = seed;
    try {
      s.restriction = restriction_from_string(omega);
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
    if (s.restriction == Restriction::custom) throw UsageError("--omega must be full or dom");
    s.validate();
    return s;
  }
};

void add_sampler_flags(CLI::App* app, SamplerFlags& f, bool omega) {
  app->add_option("--radii", f.radii, "Comma-separated radii, strictly descending")->capture_default_str();
  app->add_option("--samples", f.samples, "Samples per radius")->capture_default_str();
  if (omega) {
    app->add_option("--omega", f.omega, "Parameter restriction: full or dom")
        ->check(CLI::IsMember({"full", "dom"}))
        ->capture_default_str();
  }
}

AnalysisConfig config_for(const Common& c) {
  AnalysisConfig cfg;
  cfg.solver.seed = c.seed;
  return cfg;
}

void emit(const Common& c, const std::string& text) {
  if (c.output.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(c.output, std::ios::binary);
  if (!out) throw UsageError("cannot write '" + c.output + "'");
  out << text;
}

class Run {
 public:
  Run(const Common& c, std::string path) : c_(c), path_(std::move(path)) {
    pf_ = load_problem(path_, &raw_);
    for (const auto& w : pf_.warnings) std::cerr << "warning: " << w << "\n";
    t0_ = std::chrono::steady_clock::now();
  }
  const ProblemFile& problem() const { return pf_; }

  void finish(const std::string& command, json payload) const {
    RunReport r;
    r.command = command;
    r.seed = c_.seed;
    AnalysisConfig cfg = config_for(c_);
    r.tol = cfg.tol;
    r.solver = cfg.solver;
    r.input_digest = fnv1a64_hex(raw_);
    r.payload = std::move(payload);
    r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
    emit(c_, canonical_dump(r.to_json()));
  }

 private:
  const Common& c_;
  std::string path_;
  std::string raw_;
  ProblemFile pf_;
  std::chrono::steady_clock::time_point t0_;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"regkit: constraint qualifications, R-regularity, marginal functions and partial "
               "calmness for parametric and bilevel problems"};
  app.require_subcommand(1);
  Common common;
  if (const char* env = std::getenv("REGKIT_SEED")) {
    try {
      common.seed = std::stoull(env);
    } catch (const std::exception&) {
      std::cerr << "error: REGKIT_SEED must be an unsigned integer\n";
      return kUsage;
    }
  }
  app.add_option("--seed", common.seed, "Random seed (default 42, or $REGKIT_SEED)");
  app.add_option("--threads", common.threads, "Cap on worker threads (0 = runtime default)")
      ->check(CLI::NonNegativeNumber);
  app.add_option("-o,--output", common.output, "Write the report to this file instead of stdout");

  std::string path;
  std::string point;
  std::string grid;
  std::string out_format = "json";
  std::string cq = "rcpld";
  std::string kappa_grid = "1,10,100,1000,10000";
  std::string example;
  std::string report_path;
  int refine = 3;
  int rcpld_nodes = 7;
  bool all = false;
  bool smap = false;
  SamplerFlags sf;

  auto* validate = app.add_subcommand("validate", "Parse and check a problem file");
  validate->add_option("path", path, "Problem file or bundled name")->required();

  auto* check_cq = app.add_subcommand("check-cq", "Check a constraint qualification at a point");
  check_cq->add_option("path", path, "Problem file or bundled name")->required();
  check_cq->add_option("--point", point, "x and y values, comma-separated, or a named point")->required();
  check_cq->add_option("--cq", cq, "licq, mfcq, rcrcq, rcpld or rcpld_s")
      ->check(CLI::IsMember({"licq", "mfcq", "rcrcq", "rcpld", "rcpld_s"}))
      ->capture_default_str();
  add_sampler_flags(check_cq, sf, true);

  auto* rreg = app.add_subcommand("probe-rreg", "Sampled R-regularity probe");
  rreg->add_option("path", path, "Problem file or bundled name")->required();
  rreg->add_option("--point", point, "x and y values, comma-separated, or a named point")->required();
  rreg->add_flag("--solution-map", smap, "Probe the solution map S instead of Gamma");
  add_sampler_flags(rreg, sf, true);

  auto* isc = app.add_subcommand("probe-isc", "Sampled inner semicontinuity probe");
  isc->add_option("path", path, "Problem file or bundled name")->required();
  isc->add_option("--point", point, "x and y values, comma-separated, or a named point")->required();
  isc->add_flag("--solution-map", smap, "Probe the solution map S instead of Gamma");
  add_sampler_flags(isc, sf, true);

  auto* scan_cmd = app.add_subcommand("scan", "Marginal function and solution map on a grid");
  scan_cmd->add_option("path", path, "Problem file or bundled name")->required();
  scan_cmd->add_option("--grid", grid, "lo:hi:nodes per axis, axes separated by ','")->required();
  scan_cmd->add_option("--out", out_format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();

  auto* opt = app.add_subcommand("solve-opt", "Optimistic bilevel solve by grid and zoom");
  opt->add_option("path", path, "Problem file or bundled name")->required();
  opt->add_option("--grid", grid, "Initial grid (default: 61 nodes per axis of X)");
  opt->add_option("--refine", refine, "Zoom rounds")->capture_default_str()->check(CLI::NonNegativeNumber);

  auto* calm = app.add_subcommand("calmness", "Partial calmness test at a bilevel point");
  calm->add_option("path", path, "Problem file or bundled name")->required();
  calm->add_option("--point", point, "x and y values, comma-separated, or a named point")->required();
  calm->add_option("--kappa-grid", kappa_grid, "Comma-separated penalty parameters")->capture_default_str();
  add_sampler_flags(calm, sf, false);

  auto* exist = app.add_subcommand("existence", "Pessimistic existence hypotheses on a grid");
  exist->add_option("path", path, "Problem file or bundled name")->required();
  exist->add_option("--grid", grid, "Grid over X (default: 61 nodes per axis)");
  exist->add_option("--rcpld-nodes", rcpld_nodes, "Nodes at which RCPLD_S is checked")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  add_sampler_flags(exist, sf, false);

  auto* repro = app.add_subcommand("reproduce", "Run the expectations of bundled examples");
  repro->add_option("example", example, "Bundled example name");
  repro->add_flag("--all", all, "Run every bundled example");
  repro->add_option("--report", report_path, "Write a JSON report of all payloads to this file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  if (common.threads > 0) set_thread_limit(common.threads);
  const AnalysisConfig cfg = config_for(common);

  try {
    if (validate->parsed()) {
      ProblemFile pf = load_problem(path);
      for (const auto& w : pf.warnings) std::cerr << "warning: " << w << "\n";
      std::cout << "ok: " << (pf.name.empty() ? path : pf.name) << " (n=" << pf.n << ", m=" << pf.m
                << ", " << pf.ineq.size() << " inequalities, " << pf.eq.size() << " equalities"
                << (pf.upper ? ", upper level" : "") << ")\n";
      return kOk;
    }

    if (check_cq->parsed()) {
      Run run(common, path);
      Vec x;
      Vec y;
      resolve_point(run.problem(), point, x, y);
      NeighborhoodSampler s = sf.make(common.seed);
      ParametricProblem pp = run.problem().lower_problem();
      CQReport r;
      if (cq == "licq") r = check_licq(pp.sys, x, y, cfg);
      else if (cq == "mfcq") r = check_mfcq(pp.sys, x, y, cfg);
      else if (cq == "rcrcq") r = check_rcrcq(pp.sys, x, y, s, cfg);
      else if (cq == "rcpld") r = check_rcpld(pp.sys, x, y, s, cfg);
      else r = check_rcpld_S_via_multipliers(pp, x, y, s, cfg);
      json payload = to_json(r);
      payload["sampler"] = to_json(s);
      run.finish("check-cq --cq " + cq + " --point " + point, payload);
      return kOk;
    }

    if (rreg->parsed() || isc->parsed()) {
      Run run(common, path);
      Vec x;
      Vec y;
      resolve_point(run.problem(), point, x, y);
      NeighborhoodSampler s = sf.make(common.seed);
      ParametricProblem pp = run.problem().lower_problem();
      json payload;
      const std::string verb = rreg->parsed() ? "probe-rreg" : "probe-isc";
      if (smap) {
        payload = to_json(s_map_probes(pp, x, y, s, cfg));
      } else if (rreg->parsed()) {
        payload = to_json(estimate_rregularity(pp.sys, x, y, s, cfg));
      } else {
        payload = to_json(inner_semicontinuity_probe(pp.sys, x, y, s, cfg));
      }
      payload["sampler"] = to_json(s);
      run.finish(verb + (smap ? " --solution-map" : "") + " --omega " + sf.omega + " --point " + point,
                 payload);
      return kOk;
    }

    if (scan_cmd->parsed()) {
      Run run(common, path);
      ParametricProblem pp = run.problem().lower_problem();
      GridSpec g = GridSpec::parse(grid);
      GridScan s = scan(pp, g, cfg);
      if (out_format == "csv") {
        emit(common, scan_csv(s, pp.sys.m()));
        return kOk;
      }
      LipschitzReport lip = lipschitz_scan(pp, s, Window{}, cfg);
      run.finish("scan --grid " + g.str(), to_json(s, &lip));
      return kOk;
    }

    if (opt->parsed()) {
      Run run(common, path);
      BilevelProblem bp = run.problem().bilevel();
      GridSpec g = grid.empty() ? box_grid(bp.X, 61) : GridSpec::parse(grid);
      OptimisticSolution sol = solve_optimistic(bp, g, refine, cfg);
      run.finish("solve-opt --grid " + g.str() + " --refine " + std::to_string(refine), to_json(sol));
      return kOk;
    }

    if (calm->parsed()) {
      Run run(common, path);
      BilevelProblem bp = run.problem().bilevel();
      Vec x;
      Vec y;
      resolve_point(run.problem(), point, x, y);
      NeighborhoodSampler s = sf.make(common.seed);
      CalmnessReport r = check_partial_calmness(bp, x, y, s, parse_list(kappa_grid, "--kappa-grid"), cfg);
      json payload = to_json(r);
      payload["sampler"] = to_json(s);
      run.finish("calmness --point " + point + " --kappa-grid " + kappa_grid, payload);
      return kOk;
    }

    if (exist->parsed()) {
      Run run(common, path);
      BilevelProblem bp = run.problem().bilevel();
      GridSpec g = grid.empty() ? box_grid(bp.X, 61) : GridSpec::parse(grid);
      NeighborhoodSampler s = sf.make(common.seed);
      ExistenceReport r = pessimistic_existence_report(bp, g, s, cfg, rcpld_nodes);
      run.finish("existence --grid " + g.str(), to_json(r));
      return kOk;
    }

    if (repro->parsed()) {
      std::vector<std::string> names;
      if (all) {
        names = reproducible_examples();
      } else if (!example.empty()) {
        names.push_back(example);
      } else {
        throw UsageError("reproduce needs an example name or --all");
      }
      std::vector<ExampleRun> runs;
      json payload = json::object();
      for (const auto& n : names) {
        ExampleRun r;
        try {
          r = reproduce_example(n, common.seed, cfg);
        } catch (const PreconditionViolation& e) {
          throw UsageError(e.what());
        }
        payload[r.example] = r.payload;
        runs.push_back(std::move(r));
      }
      std::cout << expectation_table(runs);
      bool ok = true;
      for (const auto& r : runs) ok = ok && r.passed();
      std::cout << (ok ? "ALL PASS\n" : "SOME CHECKS FAILED\n");
      if (!report_path.empty()) {
        RunReport rr;
        rr.command = all ? "reproduce --all" : "reproduce " + example;
        rr.seed = common.seed;
        rr.tol = cfg.tol;
        rr.solver = cfg.solver;
        std::string digest_input;
        for (const auto& n : names) {
          if (const BundledProblem* b = find_bundled(runs[&n - names.data()].example)) digest_input += b->text;
        }
        rr.input_digest = fnv1a64_hex(digest_input);
        rr.payload = payload;
        double total = 0.0;
        for (const auto& r : runs) total += r.seconds;
        rr.wall_time = total;
        std::ofstream out(report_path, std::ios::binary);
        if (!out) throw UsageError("cannot write '" + report_path + "'");
        out << canonical_dump(rr.to_json());
      }
      return ok ? kOk : kAnalysisFailure;
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const ProblemFileError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
