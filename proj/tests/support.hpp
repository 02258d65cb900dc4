#pragma once

#include <cmath>
#include <random>
#include <string>

#include "regkit/expr.hpp"
#include "regkit/problem_file.hpp"
#include "regkit/rng.hpp"

namespace testing_support {

using regkit::Expr;

// Random expression over (n, m). Denominators are kept away from zero as
// c + e^2 with c >= 0.5 so that gradients are finite everywhere.
inline Expr random_expr(std::mt19937_64& rng, int n, int m, int depth, bool safe_div = true) {
  auto pick = [&](int k) { return static_cast<int>(rng() % static_cast<unsigned>(k)); };
  if (depth <= 0 || pick(5) == 0) {
    if (pick(3) == 0) {
      double c = std::round(regkit::uniform(rng, -4.0, 4.0) * 4.0) / 4.0;
      return Expr::constant(c);
    }
    bool use_x = n > 0 && (m == 0 || pick(2) == 0);
    return Expr::variable(use_x ? regkit::Axis::x : regkit::Axis::y, 1 + pick(use_x ? n : m));
  }
  switch (pick(6)) {
    case 0:
      return Expr::negate(random_expr(rng, n, m, depth - 1, safe_div));
    case 1:
      return Expr::binary(Expr::Kind::add, random_expr(rng, n, m, depth - 1, safe_div),
                          random_expr(rng, n, m, depth - 1, safe_div));
    case 2:
      return Expr::binary(Expr::Kind::sub, random_expr(rng, n, m, depth - 1, safe_div),
                          random_expr(rng, n, m, depth - 1, safe_div));
    case 3:
      return Expr::binary(Expr::Kind::mul, random_expr(rng, n, m, depth - 1, safe_div),
                          random_expr(rng, n, m, depth - 1, safe_div));
    case 4: {
      Expr num = random_expr(rng, n, m, depth - 1, safe_div);
      Expr den = random_expr(rng, n, m, depth - 1, safe_div);
      if (safe_div) {
        den = Expr::binary(Expr::Kind::add, Expr::constant(0.5 + pick(4) * 0.5), Expr::power(den, 2));
      }
      return Expr::binary(Expr::Kind::div, num, den);
    }
    default:
      return Expr::power(random_expr(rng, n, m, depth - 1, safe_div), pick(4));
  }
}

inline regkit::ProblemFile bundled(const std::string& name) {
  return regkit::parse_problem(regkit::find_bundled(name)->text);
}

}  // namespace testing_support
