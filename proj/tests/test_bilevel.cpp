#include <doctest.h>

#include <cmath>

#include "regkit/bilevel.hpp"
#include "regkit/errors.hpp"
#include "support.hpp"

using namespace regkit;
using testing_support::bundled;

namespace {

BilevelProblem with_upper(const char* lower_name, const std::string& F, Box X) {
  BilevelProblem b;
  b.lower = bundled(lower_name).lower_problem();
  b.F = parse_expr(F, b.lower.sys.n(), b.lower.sys.m());
  b.X = std::move(X);
  return b;
}

}  // namespace

TEST_CASE("box") {
  Box b{Vec{0.0, -1.0}, Vec{1.0, 1.0}};
  CHECK(b.contains(Vec{0.5, 0.0}));
  CHECK_FALSE(b.contains(Vec{1.5, 0.0}));
  CHECK(b.clip(Vec{2.0, -3.0}) == Vec{1.0, -1.0});
  GridSpec g = box_grid(b, 5);
  CHECK(g.size() == 25);
}

TEST_CASE("problem validation") {
  BilevelProblem b = bundled("ex42_bilevel").bilevel();
  CHECK_NOTHROW(b.validate());
  b.X = Box{Vec{0.0, 0.0}, Vec{1.0, 1.0}};
  CHECK_THROWS_AS(b.validate(), DimensionMismatch);
  b.X = Box{Vec{1.0}, Vec{0.0}};
  CHECK_THROWS_AS(b.validate(), PreconditionViolation);
  CHECK_THROWS_AS(bundled("ex32_gamma").bilevel(), PreconditionViolation);
}

TEST_CASE("optimistic value never exceeds the pessimistic one") {
  AnalysisConfig cfg;
  // S(x) = {-1, 1} for every x.
  BilevelProblem two;
  two.lower.sys = ParametricSystem(1, 1, {parse_expr("y1 - 2", 1, 1), parse_expr("-2 - y1", 1, 1)}, {});
  two.lower.f = parse_expr("(y1^2 - 1)^2", 1, 1);
  two.F = parse_expr("x1 + y1", 1, 1);
  two.X = Box{Vec{-1.0}, Vec{1.0}};
  OptPess op = phi_opt_pess(two, Vec{0.5}, cfg);
  CHECK_FALSE(op.empty);
  CHECK(op.phi_o == doctest::Approx(-0.5).epsilon(1e-6));
  CHECK(op.phi_p == doctest::Approx(1.5).epsilon(1e-6));
  CHECK(op.y_o[0] == doctest::Approx(-1.0).epsilon(1e-6));

  for (const char* name : {"ex41_box", "ex42_bilevel"}) {
    BilevelProblem b = bundled(name).bilevel();
    GridSpec g = box_grid(b.X, 25);
    for (std::size_t i = 0; i < g.size(); ++i) {
      OptPess r = phi_opt_pess(b, g.node(i), cfg);
      if (r.empty) {
        CHECK(std::isinf(r.phi_o));
        continue;
      }
      CHECK(r.phi_o <= r.phi_p);
      CHECK(b.upper(g.node(i), r.y_o) == doctest::Approx(r.phi_o));
    }
  }
  OptPess e = phi_opt_pess(with_upper("ex41_box", "y1", Box{Vec{-2.0}, Vec{-1.0}}), Vec{-1.5}, cfg);
  CHECK(e.empty);
  CHECK(e.phi_o == std::numeric_limits<double>::infinity());
  CHECK(e.phi_p == -std::numeric_limits<double>::infinity());
}

TEST_CASE("optimistic solve") {
  AnalysisConfig cfg;
  BilevelProblem b = bundled("ex42_bilevel").bilevel();
  OptimisticSolution s = solve_optimistic(b, box_grid(b.X, 31), 4, cfg);
  CHECK(std::abs(s.x[0] - 0.25) <= 1e-3);
  CHECK(std::abs(s.y[0] - 0.5) <= 1e-3);
  CHECK(std::abs(s.F - 0.5) <= 1e-3);
  REQUIRE(s.rounds.size() == 5);
  for (std::size_t k = 1; k < s.rounds.size(); ++k) CHECK(s.rounds[k].F <= s.rounds[k - 1].F);

  BilevelProblem nowhere = with_upper("ex41_box", "y1", Box{Vec{-2.0}, Vec{-1.0}});
  CHECK_THROWS_AS(solve_optimistic(nowhere, box_grid(nowhere.X, 5), 2, cfg), AllNodesInfeasible);
}

TEST_CASE("calmness at the global and local minimisers") {
  AnalysisConfig cfg;
  BilevelProblem b = bundled("ex42_bilevel").bilevel();
  NeighborhoodSampler s;
  CalmnessReport g = check_partial_calmness(b, Vec{0.25}, Vec{0.5}, s, default_kappa_grid(), cfg);
  CHECK(g.verdict == CalmVerdict::calm_on_samples);
  REQUIRE(g.kappa_min.has_value());
  CHECK(*g.kappa_min <= 100.0);
  CHECK(g.F_ref == doctest::Approx(0.5));

  CalmnessReport l = check_partial_calmness(b, Vec{1.375}, Vec{0.625}, s, default_kappa_grid(), cfg);
  CHECK(l.verdict == CalmVerdict::likely_not_calm);
  CHECK_FALSE(l.kappa_min.has_value());

  SUBCASE("violation is monotone in kappa") {
    for (const CalmnessReport* r : {&g, &l}) {
      for (std::size_t i = 1; i < r->kappas.size(); ++i) {
        if (r->kappas[i].violated) CHECK(r->kappas[i - 1].violated);
      }
    }
  }
  SUBCASE("witnesses re-verify") {
    MarginalFunction phi(b.lower, cfg);
    int witnesses = 0;
    for (const auto& k : l.kappas) {
      REQUIRE(k.violated);
      REQUIRE(k.witness.has_value());
      const CalmWitness& w = *k.witness;
      double P = calmness_penalty(b, phi, l.F_ref, k.kappa, w.x, w.y);
      CHECK(std::abs(P - w.margin) <= 1e-9);
      CHECK(P < -cfg.tol.delta_viol);
      CHECK(b.X.contains(w.x));
      ++witnesses;
    }
    CHECK(witnesses == 5);
  }
}

TEST_CASE("a constant upper objective is calm for the smallest kappa") {
  AnalysisConfig cfg;
  BilevelProblem b = with_upper("ex42_bilevel", "3", Box{Vec{0.0}, Vec{3.0}});
  NeighborhoodSampler s;
  s.samples_per_radius = 60;
  CalmnessReport r = check_partial_calmness(b, Vec{1.0}, Vec{1.0}, s, {1.0, 10.0}, cfg);
  CHECK(r.verdict == CalmVerdict::calm_on_samples);
  REQUIRE(r.kappa_min.has_value());
  CHECK(*r.kappa_min == 1.0);
}

TEST_CASE("linear existence example") {
  AnalysisConfig cfg;
  BilevelProblem b = bundled("ex41_box").bilevel();
  NeighborhoodSampler s;
  s.samples_per_radius = 60;
  ExistenceReport e = pessimistic_existence_report(b, box_grid(b.X, 16), s, cfg, 3);
  CHECK(e.x_compact);
  CHECK(e.x_in_dom);
  CHECK(e.locally_bounded);
  CHECK(e.rcpld_s_all_hold);
  REQUIRE(e.incumbent_x.has_value());
  CHECK(std::abs((*e.incumbent_x)[0] - 1.0) <= 0.1);
  CHECK(e.incumbent_phi_p == doctest::Approx(0.0).epsilon(1e-2));

  BilevelProblem off = with_upper("ex41_box", "y1", Box{Vec{-1.0}, Vec{1.0}});
  ExistenceReport o = pessimistic_existence_report(off, box_grid(off.X, 5), s, cfg, 2);
  CHECK_FALSE(o.x_in_dom);
  CHECK(o.infeasible_nodes.size() == 2);
}
