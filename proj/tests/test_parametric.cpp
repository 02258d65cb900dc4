#include <doctest.h>

#include <cmath>

#include "regkit/errors.hpp"
#include "regkit/parametric.hpp"
#include "support.hpp"

using namespace regkit;
using testing_support::bundled;

TEST_CASE("grid specification") {
  GridSpec g = GridSpec::parse("-1:2:61");
  REQUIRE(g.axes.size() == 1);
  CHECK(g.size() == 61);
  CHECK(g.node(0)[0] == -1.0);
  CHECK(g.node(60)[0] == 2.0);
  CHECK(g.node(20)[0] == doctest::Approx(0.0));

  GridSpec one = GridSpec::parse("0.5:0.5:1");
  CHECK(one.size() == 1);
  CHECK(one.node(0)[0] == 0.5);

  GridSpec two = GridSpec::parse("0:1:3,10:20:2");
  CHECK(two.size() == 6);
  // Last axis fastest.
  CHECK(two.node(1) == Vec{0.0, 20.0});
  CHECK(two.node(2) == Vec{0.5, 10.0});
  CHECK(two.multi_index(5) == std::vector<int>{2, 1});
  CHECK(GridSpec::parse(two.str()).size() == 6);

  CHECK_THROWS_AS(GridSpec::parse("0:1"), PreconditionViolation);
  CHECK_THROWS_AS(GridSpec::parse("1:0:3"), PreconditionViolation);
  CHECK_THROWS_AS(GridSpec::parse("0:1:0"), PreconditionViolation);
  CHECK_THROWS_AS(GridSpec::parse("0:1:2.5"), PreconditionViolation);
  CHECK_THROWS_AS(GridSpec::parse("a:1:2"), PreconditionViolation);
  CHECK_THROWS_AS(GridSpec::parse(""), PreconditionViolation);
}

TEST_CASE("scan limits") {
  ParametricProblem prob = bundled("ex41_box").lower_problem();
  AnalysisConfig cfg;
  CHECK_THROWS_AS(scan(prob, GridSpec::parse("0:1:1000001"), cfg), GridTooLarge);
  CHECK_THROWS_AS(scan(prob, GridSpec::parse("0:1:3,0:1:3"), cfg), DimensionMismatch);
  GridScan one = scan(prob, GridSpec::parse("1:1:1"), cfg);
  REQUIRE(one.nodes.size() == 1);
  CHECK(std::abs(one.nodes[0].phi) <= 1e-9);
}

TEST_CASE("jump example: phi is 0 on the domain and +inf off it") {
  ParametricProblem prob = bundled("ex_jump").lower_problem();
  AnalysisConfig cfg;
  GridScan s = scan(prob, GridSpec::parse("-1:2:61"), cfg);
  REQUIRE(s.nodes.size() == 61);
  int zero = 0, inf = 0;
  for (const auto& node : s.nodes) {
    if (node.x[0] >= 0) {
      CHECK(std::abs(node.phi) <= 1e-9);
      zero += std::abs(node.phi) <= 1e-9;
    } else {
      CHECK(node.phi == std::numeric_limits<double>::infinity());
      inf += std::isinf(node.phi);
    }
  }
  CHECK(zero == 41);
  CHECK(inf == 20);

  Window dom{Vec{0.0}, Vec{2.0}};
  LipschitzReport lr = lipschitz_scan(prob, s, dom, cfg);
  for (const auto& f : lr.flags) CHECK_FALSE((dom.contains(Vec{f.lo}) && dom.contains(Vec{f.hi})));
  CHECK(lr.modulus <= 1e-6);

  NeighborhoodSampler full;
  SMapProbes pf = s_map_probes(prob, Vec{0.0}, Vec{0.0}, full, cfg);
  CHECK(pf.rreg.verdict == RRegVerdict::likely_not_R_regular);
  NeighborhoodSampler d;
  d.restriction = Restriction::dom;
  SMapProbes pd = s_map_probes(prob, Vec{0.0}, Vec{0.0}, d, cfg);
  CHECK(pd.rreg.verdict == RRegVerdict::consistent_with_R_regular);
}

TEST_CASE("bilinear example: phi pieces, representatives and the jump at 0") {
  ParametricProblem prob = bundled("ex412_bilinear").lower_problem();
  AnalysisConfig cfg;
  GridScan s = scan(prob, GridSpec::parse("-2:0.5:6"), cfg);
  REQUIRE(s.nodes.size() == 6);
  auto node_at = [&](double x) -> const ScanNode& {
    for (const auto& nd : s.nodes) {
      if (std::abs(nd.x[0] - x) < 1e-12) return nd;
    }
    FAIL("missing node");
    return s.nodes.front();
  };
  struct Want {
    double x, phi, y1, y2;
  };
  for (Want w : {Want{-2, -0.5, -0.5, 1}, Want{-0.5, -1, -1, 0.5}, Want{0.5, 0, 0, 0}}) {
    const ScanNode& nd = node_at(w.x);
    CHECK(nd.phi == doctest::Approx(w.phi).epsilon(1e-4));
    REQUIRE_FALSE(nd.reps.empty());
    CHECK(std::abs(nd.reps[0][0] - w.y1) <= 1e-3);
    CHECK(std::abs(nd.reps[0][1] - w.y2) <= 1e-3);
  }
  Window all{Vec{-2.0}, Vec{0.5}};
  LipschitzReport lr = lipschitz_scan(prob, s, all, cfg);
  bool at_zero = false;
  for (const auto& f : lr.flags) at_zero = at_zero || (f.lo <= 1e-3 && f.hi >= -1e-3 && f.hi - f.lo < 1e-2);
  CHECK(at_zero);
}

TEST_CASE("marginal function memo") {
  ParametricProblem prob = bundled("ex42_bilevel").lower_problem();
  AnalysisConfig cfg;
  MarginalFunction phi(prob, cfg);
  CHECK(phi.cache_size() == 0);
  double a = phi.at(Vec{1.0});
  CHECK(phi.cache_size() == 1);
  // Inputs within the rounding unit share an entry.
  double b = phi.at(Vec{1.0 + 1e-11});
  CHECK(phi.cache_size() == 1);
  CHECK(a == b);
  // (x + y - 2)^2 with y <= sqrt(x): phi(1) = 0.
  CHECK(std::abs(a) <= 1e-9);
  CHECK(phi.at(Vec{0.25}) == doctest::Approx(1.5625).epsilon(1e-6));
  CHECK(phi.cache_size() == 2);
  CHECK(std::isinf(phi.at(Vec{-1.0})));
  LowerSolution s = phi.solution(Vec{0.25});
  REQUIRE(s.reps.size() == 1);
  CHECK(s.reps[0][0] == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("scan csv") {
  ParametricProblem prob = bundled("ex_jump").lower_problem();
  GridScan s = scan(prob, GridSpec::parse("-1:1:3"), AnalysisConfig{});
  std::string csv = scan_csv(s, 1);
  CHECK(csv.rfind("x1,", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') >= 4);
  CHECK(csv.find("inf") != std::string::npos);
}
