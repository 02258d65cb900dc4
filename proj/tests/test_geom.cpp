#include <doctest.h>

#include <cmath>

#include "regkit/errors.hpp"
#include "regkit/geom.hpp"
#include "support.hpp"

using namespace regkit;
using testing_support::bundled;

namespace {

ParametricSystem system_of(int n, int m, std::vector<std::string> ineq, std::vector<std::string> eq = {}) {
  std::vector<Expr> a, b;
  for (auto& s : ineq) a.push_back(parse_expr(s, n, m));
  for (auto& s : eq) b.push_back(parse_expr(s, n, m));
  return ParametricSystem(n, m, a, b);
}

}  // namespace

TEST_CASE("halfspace error bound constants") {
  AnalysisConfig cfg;
  NeighborhoodSampler s;
  s.samples_per_radius = 100;
  SUBCASE("y1 <= x1 has kappa 1") {
    auto sys = system_of(1, 1, {"y1 - x1"});
    RegularityProbe p = estimate_rregularity(sys, Vec{0.0}, Vec{0.0}, s, cfg);
    CHECK(p.verdict == RRegVerdict::consistent_with_R_regular);
    for (const auto& r : p.radii) CHECK(r.kappa_hat == doctest::Approx(1.0).epsilon(1e-4));
  }
  SUBCASE("y1 + y2 <= x1 has kappa 1/sqrt(2)") {
    auto sys = system_of(1, 2, {"y1 + y2 - x1"});
    RegularityProbe p = estimate_rregularity(sys, Vec{0.0}, Vec{0.0, 0.0}, s, cfg);
    CHECK(p.verdict == RRegVerdict::consistent_with_R_regular);
    for (const auto& r : p.radii) CHECK(r.kappa_hat == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-4));
  }
  SUBCASE("ISC of a halfspace") {
    auto sys = system_of(1, 1, {"y1 - x1"});
    IscProbe p = inner_semicontinuity_probe(sys, Vec{0.0}, Vec{0.0}, s, cfg);
    CHECK(p.verdict == IscVerdict::likely_inner_semicontinuous);
  }
}

TEST_CASE("ex32 probes distinguish the two reference points") {
  ParametricProblem prob = bundled("ex32_gamma").lower_problem();
  AnalysisConfig cfg;
  NeighborhoodSampler s;
  s.restriction = Restriction::dom;

  RegularityProbe origin = estimate_rregularity(prob.sys, Vec{0.0}, Vec{0.0}, s, cfg);
  CHECK(origin.verdict == RRegVerdict::likely_not_R_regular);
  REQUIRE(origin.radii.size() == 3);
  CHECK(origin.radii.back().kappa_hat >= 100.0 * origin.radii.front().kappa_hat);

  RegularityProbe upper = estimate_rregularity(prob.sys, Vec{0.0}, Vec{1.0}, s, cfg);
  CHECK(upper.verdict == RRegVerdict::consistent_with_R_regular);
  double lo = 1e300, hi = 0.0;
  for (const auto& r : upper.radii) {
    lo = std::min(lo, r.kappa_hat);
    hi = std::max(hi, r.kappa_hat);
  }
  CHECK(hi < 2.0 * lo);

  CHECK(inner_semicontinuity_probe(prob.sys, Vec{0.0}, Vec{0.0}, s, cfg).verdict == IscVerdict::likely_not);
  CHECK(inner_semicontinuity_probe(prob.sys, Vec{0.0}, Vec{1.0}, s, cfg).verdict ==
        IscVerdict::likely_inner_semicontinuous);
}

TEST_CASE("probe results do not depend on the execution mode") {
  ParametricProblem prob = bundled("ex32_gamma").lower_problem();
  AnalysisConfig par, ser;
  ser.exec = Exec::serial;
  NeighborhoodSampler s;
  s.samples_per_radius = 50;
  RegularityProbe a = estimate_rregularity(prob.sys, Vec{0.0}, Vec{0.0}, s, par);
  RegularityProbe b = estimate_rregularity(prob.sys, Vec{0.0}, Vec{0.0}, s, ser);
  REQUIRE(a.radii.size() == b.radii.size());
  for (std::size_t i = 0; i < a.radii.size(); ++i) {
    CHECK(a.radii[i].kappa_hat == b.radii[i].kappa_hat);
    CHECK(a.radii[i].argmax == b.radii[i].argmax);
  }
}

TEST_CASE("multiplier probe") {
  auto sys = system_of(1, 1, {"y1 - x1"});
  Tolerances tol;
  // y = 0 is the projection of nu = 1 onto {y <= 0}; lambda = 1.
  MultiplierProbe p = multiplier_probe(sys, Vec{0.0}, Vec{0.0}, Vec{1.0}, 10.0, tol);
  CHECK(p.exists);
  REQUIRE(p.lambda.size() == 1);
  CHECK(p.lambda[0] == doctest::Approx(1.0));
  CHECK_FALSE(multiplier_probe(sys, Vec{0.0}, Vec{0.0}, Vec{1.0}, 0.5, tol).exists);
  // Wrong side: no nonnegative multiplier.
  CHECK_FALSE(multiplier_probe(sys, Vec{0.0}, Vec{0.0}, Vec{-1.0}, 10.0, tol).exists);
  CHECK_THROWS_AS(multiplier_probe(sys, Vec{0.0}, Vec{0.0}, Vec{0.0}, 10.0, tol), DegenerateDirection);
}

TEST_CASE("sampler") {
  NeighborhoodSampler s;
  CHECK_NOTHROW(s.validate());
  s.radii = {1e-2, 1e-1};
  CHECK_THROWS_AS(s.validate(), PreconditionViolation);
  s.radii = {1e-1, -1.0};
  CHECK_THROWS_AS(s.validate(), PreconditionViolation);
  s.radii = {1e-1};
  s.samples_per_radius = 0;
  CHECK_THROWS_AS(s.validate(), PreconditionViolation);

  NeighborhoodSampler t;
  for (int k = 0; k < 50; ++k) {
    Vec u = t.unit_ball(3, 1, k);
    double r2 = u[0] * u[0] + u[1] * u[1] + u[2] * u[2];
    CHECK(r2 <= 1.0);
    CHECK(u == t.unit_ball(3, 1, k));
    Vec d = t.unit_direction(2, k);
    CHECK(std::hypot(d[0], d[1]) == doctest::Approx(1.0));
  }
  CHECK(t.unit_ball(2, 0, 3) != t.unit_ball(2, 1, 3));
  CHECK(restriction_from_string(to_string(Restriction::dom)) == Restriction::dom);
}

TEST_CASE("uniform scan reports the diverging point") {
  ParametricProblem prob = bundled("ex32_gamma").lower_problem();
  AnalysisConfig cfg;
  NeighborhoodSampler s;
  s.restriction = Restriction::dom;
  s.samples_per_radius = 100;
  UniformScan u = uniform_rregularity_scan(prob.sys, {Vec{0.0, 1.0}, Vec{0.0, 0.0}}, s, cfg);
  REQUIRE(u.probes.size() == 2);
  CHECK(u.diverging == std::vector<std::size_t>{1});
  CHECK(u.kappa_uniform >= u.probes[0].radii.front().kappa_hat);
}
