// Acceptance runner: one PASS/FAIL line per criterion, exit 0 iff all pass.
//
//   acceptance [path/to/regkit]
//
// With the CLI path the determinism criterion runs the real binary twice;
// without it the same payload is assembled in-process.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "regkit/report.hpp"
#include "regkit/reproduce.hpp"

using namespace regkit;
using namespace testing_support;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void criterion(int id, const std::string& title, double limit_s, const std::function<Outcome()>& body) {
  auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  bool in_time = limit_s <= 0 || secs < limit_s;
  bool pass = o.pass && in_time;
  if (!pass) ++failures;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f s", secs);
  std::cout << (pass ? "PASS" : "FAIL") << "  " << id << ". " << title << " -- " << o.detail << "; " << buf;
  if (!in_time) std::cout << " (limit " << limit_s << " s)";
  std::cout << std::endl;
}

// Every expectation of the named reproductions must hold.
Outcome examples(std::initializer_list<const char*> names) {
  AnalysisConfig cfg;
  Outcome o{true, ""};
  int checks = 0;
  for (const char* n : names) {
    ExampleRun r = reproduce_example(n, 42, cfg);
    for (const Expectation& e : r.checks) {
      ++checks;
      if (!e.passed) {
        o.pass = false;
        o.detail += "[" + r.example + ": " + e.check + " -> " + e.detail + "] ";
      }
    }
  }
  if (o.pass) o.detail = std::to_string(checks) + " expectations met";
  return o;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string payload_via_cli(const std::string& cli, const std::filesystem::path& report) {
  std::string cmd = "\"" + cli + "\" --seed 42 reproduce --all --report \"" + report.string() + "\" > /dev/null";
  int rc = std::system(cmd.c_str());
  if (rc != 0) throw std::runtime_error("'" + cmd + "' exited with " + std::to_string(rc));
  json j = json::parse(slurp(report));
  return canonical_dump(j.at("payload"));
}

std::string payload_in_process() {
  json payload = json::object();
  for (const auto& n : reproducible_examples()) {
    ExampleRun r = reproduce_example(n, 42, AnalysisConfig{});
    payload[r.example] = r.payload;
  }
  return canonical_dump(payload);
}

}  // namespace

int main(int argc, char** argv) {
  const std::string cli = argc > 1 ? argv[1] : "";

  criterion(1, "ex32: R-regularity, RCPLD and ISC at (0,0) and (0,1)", 30, [] { return examples({"ex32"}); });

  criterion(2, "jump example: phi on [-1,2], Lipschitz on dom, S-map probes", 30,
            [] { return examples({"ex_jump", "ex41_box"}); });

  criterion(3, "bilinear example: phi pieces, S representatives, jump at 0", 60,
            [] { return examples({"ex412_bilinear"}); });

  criterion(4, "ex_qp: RCPLD_S verdicts and multipliers", 30, [] { return examples({"ex_qp"}); });

  criterion(5, "ex42 bilevel: optimistic solve and partial calmness", 180, [] { return examples({"ex42_bilevel"}); });

  criterion(6, "kernel: PLD oracle corpus, Caratheodory, rank monotonicity", 120, [] {
    PldTally t = pld_corpus();
    InstanceCount c = caratheodory_suite(1000);
    InstanceCount r = rank_suite(1000);
    Outcome o;
    o.pass = t.cases >= 10000 && t.mismatches == 0 && t.bad_certificates == 0 && c.instances >= 1000 &&
             c.failures == 0 && r.instances >= 1000 && r.failures == 0;
    o.detail = std::to_string(t.cases) + " PLD cases, " + std::to_string(t.mismatches) + " mismatches, " +
               std::to_string(t.bad_certificates) + " bad certificates; Caratheodory " +
               std::to_string(c.failures) + "/" + std::to_string(c.instances) + " failed; rank " +
               std::to_string(r.failures) + "/" + std::to_string(r.instances) + " failed";
    return o;
  });

  criterion(7, "calculus: gradients vs finite differences, print/parse round trip", 0, [] {
    GradientCheck g = gradient_suite(200);
    InstanceCount r = roundtrip_suite(500);
    Outcome o;
    o.pass = g.expressions == 200 && g.worst <= 1e-6 && r.instances == 500 && r.failures == 0;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%d expressions, worst relative error %.3g; %d/%d round trips failed",
                  g.expressions, g.worst, r.failures, r.instances);
    o.detail = buf;
    return o;
  });

  criterion(8, "solver: project and solve_lower vs dense-grid oracles", 0, [] {
    Outcome o{true, ""};
    for (const OracleDeviation& d : solver_oracle_suite(20, AnalysisConfig{})) {
      char buf[200];
      std::snprintf(buf, sizeof buf, "%s %.2g/%.2g/%.2g/%.2g ", d.name.c_str(), d.dist, d.y_star, d.phi, d.reps);
      o.detail += buf;
      if (!d.passed() || d.params != 20) {
        o.pass = false;
        o.detail += "(FAILED) ";
      }
    }
    o.detail += "[dist/y*/phi/reps, tol 2e-3]";
    return o;
  });

  criterion(9, "consistency: CQ implication chain and Fritz-John invariant", 0, [] {
    ChainCount c = chain_suite(50, AnalysisConfig{});
    InstanceCount fj = fritz_john_suite(20, AnalysisConfig{});
    Outcome o;
    o.pass = c.violations == 0 && c.points >= 300 && fj.failures == 0 && fj.instances > 0;
    o.detail = std::to_string(c.points) + " graph points, " + std::to_string(c.violations) +
               " chain violations; " + std::to_string(fj.instances) + " solution-map points, " +
               std::to_string(fj.failures) + " with MFCQ not failing";
    for (const auto& m : c.messages) o.detail += "; " + m;
    return o;
  });

  criterion(10, "determinism: reproduce --all twice gives identical payloads", 0, [&] {
    std::string a, b;
    if (!cli.empty()) {
      auto dir = std::filesystem::temp_directory_path();
      auto pa = dir / "regkit_accept_a.json";
      auto pb = dir / "regkit_accept_b.json";
      a = payload_via_cli(cli, pa);
      b = payload_via_cli(cli, pb);
      std::filesystem::remove(pa);
      std::filesystem::remove(pb);
    } else {
      a = payload_in_process();
      b = payload_in_process();
    }
    Outcome o;
    o.pass = !a.empty() && a == b;
    o.detail = std::string(cli.empty() ? "in-process" : "CLI") + ", payload " + std::to_string(a.size()) +
               " bytes, digest " + fnv1a64_hex(a) + (a == b ? " (identical)" : " vs " + fnv1a64_hex(b));
    return o;
  });

  std::cout << (failures == 0 ? "ALL CRITERIA PASS" : std::to_string(failures) + " CRITERIA FAILED") << std::endl;
  return failures == 0 ? 0 : 1;
}
