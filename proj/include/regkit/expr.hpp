#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace regkit {

enum class Axis : std::uint8_t { x, y };

/// Immutable scalar expression over parameters x1..xn and decision
/// variables y1..ym. Polynomial/rational only: constants, variables,
/// negation, + - * / and integer powers.
///
/// Nodes are shared; copying an Expr is a pointer copy, and concurrent
/// evaluation from several threads is safe.
class Expr {
 public:
  enum class Kind : std::uint8_t {
    constant,
    variable,
    negate,
    add,
    sub,
    mul,
    div,
    pow
  };

  Expr();  // constant 0
  static Expr constant(double value);
  static Expr variable(Axis axis, int index);

  // Raw constructors: build exactly the requested node.
  static Expr negate(Expr operand);
  static Expr binary(Kind kind, Expr lhs, Expr rhs);
  static Expr power(Expr base, int exponent);

  Kind kind() const;
  double value() const;  // constant
  Axis axis() const;     // variable
  int index() const;     // variable, 1-based
  int exponent() const;  // pow
  const Expr& lhs() const;      // binary ops, pow base, negate operand
  const Expr& rhs() const;      // binary ops
  const Expr& operand() const;  // negate, pow

  bool is_constant(double v) const;
  bool contains_division() const;
  int max_index(Axis axis) const;  // 0 when the axis does not occur

  /// Reference evaluator. Throws DivisionByZero when a denominator (or the
  /// base of a negative power) is exactly zero.
  double eval(std::span<const double> x, std::span<const double> y) const;

  /// Canonical text; parse_expr(str()) reproduces the same tree.
  std::string str() const;

  friend bool operator==(const Expr& a, const Expr& b);
  friend bool operator!=(const Expr& a, const Expr& b) { return !(a == b); }

 private:
  struct Node;
  explicit Expr(std::shared_ptr<const Node> node);
  std::shared_ptr<const Node> node_;
};

/// Parses the expression grammar
///   expr := term (("+"|"-") term)* ; term := factor (("*"|"/") factor)* ;
///   factor := ("-")* power ; power := atom ("^" sint)? ;
///   atom := number | var | "(" expr ")" ; var := ("x"|"y") uint.
/// A unary minus applied directly to a bare numeric literal folds into a
/// negative constant. Exponents are integers in [-9, 9].
Expr parse_expr(std::string_view text, int n, int m);

// Smart constructors applying 0*a->0, 1*a->a, a+0->a, a-0->a, 0-a->-a,
// a/1->a, 0/a->0, a^1->a, a^0->1 and constant folding.
Expr make_add(const Expr& a, const Expr& b);
Expr make_sub(const Expr& a, const Expr& b);
Expr make_mul(const Expr& a, const Expr& b);
Expr make_div(const Expr& a, const Expr& b);
Expr make_neg(const Expr& a);
Expr make_pow(const Expr& a, int k);

/// Rebuilds `e` bottom-up through the smart constructors.
Expr simplify(const Expr& e);

/// Exact partial derivative with respect to axis variable `index` (1-based).
Expr derivative(const Expr& e, Axis axis, int index);

/// Gradient with respect to all `dim` variables of one axis.
std::vector<Expr> grad(const Expr& e, Axis axis, int dim);

/// Flat postfix program for hot loops. Division by zero follows IEEE
/// semantics (inf/nan) instead of throwing.
class CompiledExpr {
 public:
  CompiledExpr() = default;
  explicit CompiledExpr(const Expr& e);

  double operator()(std::span<const double> x,
                    std::span<const double> y) const;

 private:
  enum class Op : std::uint8_t { cnst, xvar, yvar, neg, add, sub, mul, div, pow };
  struct Instr {
    Op op;
    int arg;
    double value;
  };
  void emit(const Expr& e, int depth);

  std::vector<Instr> code_;
  int max_depth_ = 0;
};

double int_pow(double base, int k);

}  // namespace regkit
