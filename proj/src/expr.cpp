#include "regkit/expr.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <sstream>

#include "regkit/errors.hpp"

namespace regkit {

SyntaxError::SyntaxError(std::size_t position, std::vector<std::string> expected,
                         const std::string& what)
    : Error(what), position_(position), expected_(std::move(expected)) {}

struct Expr::Node {
  Kind kind = Kind::constant;
  double value = 0.0;
  Axis axis = Axis::x;
  int index = 0;  // variable index or exponent
  Expr a;
  Expr b;
};

Expr::Expr() : node_(nullptr) {}
Expr::Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

Expr Expr::constant(double value) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::constant;
  n->value = value;
  return Expr(std::move(n));
}

Expr Expr::variable(Axis axis, int index) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::variable;
  n->axis = axis;
  n->index = index;
  return Expr(std::move(n));
}

Expr Expr::negate(Expr operand) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::negate;
  n->a = std::move(operand);
  return Expr(std::move(n));
}

Expr Expr::binary(Kind kind, Expr lhs, Expr rhs) {
  auto n = std::make_shared<Node>();
  n->kind = kind;
  n->a = std::move(lhs);
  n->b = std::move(rhs);
  return Expr(std::move(n));
}

Expr Expr::power(Expr base, int exponent) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::pow;
  n->a = std::move(base);
  n->index = exponent;
  return Expr(std::move(n));
}

// A default-constructed Expr is the constant 0; node_ == nullptr encodes it.
Expr::Kind Expr::kind() const { return node_ ? node_->kind : Kind::constant; }
double Expr::value() const { return node_ ? node_->value : 0.0; }
Axis Expr::axis() const { return node_->axis; }
int Expr::index() const { return node_->index; }
int Expr::exponent() const { return node_->index; }
const Expr& Expr::lhs() const { return node_->a; }
const Expr& Expr::rhs() const { return node_->b; }
const Expr& Expr::operand() const { return node_->a; }

bool Expr::is_constant(double v) const {
  return kind() == Kind::constant && value() == v;
}

bool Expr::contains_division() const {
  switch (kind()) {
    case Kind::constant:
    case Kind::variable:
      return false;
    case Kind::negate:
      return operand().contains_division();
    case Kind::pow:
      return exponent() < 0 || operand().contains_division();
    case Kind::div:
      return true;
    default:
      return lhs().contains_division() || rhs().contains_division();
  }
}

int Expr::max_index(Axis ax) const {
  switch (kind()) {
    case Kind::constant:
      return 0;
    case Kind::variable:
      return axis() == ax ? index() : 0;
    case Kind::negate:
    case Kind::pow:
      return operand().max_index(ax);
    default:
      return std::max(lhs().max_index(ax), rhs().max_index(ax));
  }
}

double int_pow(double base, int k) {
  bool invert = k < 0;
  unsigned e = static_cast<unsigned>(invert ? -k : k);
  double result = 1.0;
  double b = base;
  while (e != 0) {
    if (e & 1U) result *= b;
    b *= b;
    e >>= 1U;
  }
  return invert ? 1.0 / result : result;
}

double Expr::eval(std::span<const double> x, std::span<const double> y) const {
  switch (kind()) {
    case Kind::constant:
      return value();
    case Kind::variable: {
      auto v = axis() == Axis::x ? x : y;
      if (index() < 1 || static_cast<std::size_t>(index()) > v.size())
        throw DimensionMismatch("variable " + str() + " outside evaluation point");
      return v[static_cast<std::size_t>(index() - 1)];
    }
    case Kind::negate:
      return -operand().eval(x, y);
    case Kind::add:
      return lhs().eval(x, y) + rhs().eval(x, y);
    case Kind::sub:
      return lhs().eval(x, y) - rhs().eval(x, y);
    case Kind::mul:
      return lhs().eval(x, y) * rhs().eval(x, y);
    case Kind::div: {
      double den = rhs().eval(x, y);
      if (den == 0.0) throw DivisionByZero("division by zero at node " + str());
      return lhs().eval(x, y) / den;
    }
    case Kind::pow: {
      double base = operand().eval(x, y);
      if (base == 0.0 && exponent() < 0)
        throw DivisionByZero("negative power of zero at node " + str());
      return int_pow(base, exponent());
    }
  }
  return 0.0;
}

bool operator==(const Expr& a, const Expr& b) {
  if (a.node_ == b.node_) return true;
  if (a.kind() != b.kind()) return false;
  switch (a.kind()) {
    case Expr::Kind::constant:
      return a.value() == b.value();
    case Expr::Kind::variable:
      return a.axis() == b.axis() && a.index() == b.index();
    case Expr::Kind::negate:
      return a.operand() == b.operand();
    case Expr::Kind::pow:
      return a.exponent() == b.exponent() && a.operand() == b.operand();
    default:
      return a.lhs() == b.lhs() && a.rhs() == b.rhs();
  }
}

// ---------------------------------------------------------------- printing

namespace {

std::string format_number(double v) {
  std::array<char, 64> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

// 1: sum, 2: product, 3: unary, 4: power, 5: atom
int precedence(const Expr& e) {
  switch (e.kind()) {
    case Expr::Kind::constant:
      return std::signbit(e.value()) ? 3 : 5;
    case Expr::Kind::variable:
      return 5;
    case Expr::Kind::negate:
      return 3;
    case Expr::Kind::add:
    case Expr::Kind::sub:
      return 1;
    case Expr::Kind::mul:
    case Expr::Kind::div:
      return 2;
    case Expr::Kind::pow:
      return 4;
  }
  return 5;
}

void print(const Expr& e, std::string& out);

void print_child(const Expr& e, int min_prec, std::string& out) {
  if (precedence(e) < min_prec) {
    out += '(';
    print(e, out);
    out += ')';
  } else {
    print(e, out);
  }
}

void print(const Expr& e, std::string& out) {
  switch (e.kind()) {
    case Expr::Kind::constant:
      out += format_number(e.value());
      return;
    case Expr::Kind::variable:
      out += e.axis() == Axis::x ? 'x' : 'y';
      out += std::to_string(e.index());
      return;
    case Expr::Kind::negate: {
      out += '-';
      const Expr& c = e.operand();
      // "-2" would re-parse as a folded negative constant
      bool bare_literal = c.kind() == Expr::Kind::constant && !std::signbit(c.value());
      if (bare_literal) {
        out += '(';
        print(c, out);
        out += ')';
      } else {
        print_child(c, 3, out);
      }
      return;
    }
    case Expr::Kind::add:
    case Expr::Kind::sub:
      print_child(e.lhs(), 1, out);
      out += e.kind() == Expr::Kind::add ? " + " : " - ";
      print_child(e.rhs(), 2, out);
      return;
    case Expr::Kind::mul:
    case Expr::Kind::div:
      print_child(e.lhs(), 2, out);
      out += e.kind() == Expr::Kind::mul ? '*' : '/';
      print_child(e.rhs(), 3, out);
      return;
    case Expr::Kind::pow:
      print_child(e.operand(), 5, out);
      out += '^';
      out += std::to_string(e.exponent());
      return;
  }
}

}  // namespace

std::string Expr::str() const {
  std::string out;
  print(*this, out);
  return out;
}

// ----------------------------------------------------------------- parsing

namespace {

class Parser {
 public:
  Parser(std::string_view text, int n, int m) : text_(text), n_(n), m_(m) {}

  Expr parse() {
    Expr e = expr();
    skip_ws();
    if (pos_ != text_.size()) {
      fail({"+", "-", "*", "/", "end of input"});
    }
    return e;
  }

 private:
  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  char peek() {
    skip_ws();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  [[noreturn]] void fail(std::vector<std::string> expected) {
    std::ostringstream msg;
    msg << "syntax error at position " << pos_ << ": expected ";
    for (std::size_t i = 0; i < expected.size(); ++i) {
      if (i) msg << (i + 1 == expected.size() ? " or " : ", ");
      msg << '\'' << expected[i] << '\'';
    }
    if (pos_ < text_.size()) {
      msg << ", found '" << text_[pos_] << '\'';
    } else {
      msg << ", found end of input";
    }
    throw SyntaxError(pos_, std::move(expected), msg.str());
  }

  Expr expr() {
    Expr lhs = term();
    for (;;) {
      char c = peek();
      if (c != '+' && c != '-') return lhs;
      ++pos_;
      Expr rhs = term();
      lhs = Expr::binary(c == '+' ? Expr::Kind::add : Expr::Kind::sub, lhs, rhs);
    }
  }

  Expr term() {
    Expr lhs = factor();
    for (;;) {
      char c = peek();
      if (c != '*' && c != '/') return lhs;
      ++pos_;
      Expr rhs = factor();
      lhs = Expr::binary(c == '*' ? Expr::Kind::mul : Expr::Kind::div, lhs, rhs);
    }
  }

  Expr factor() {
    int minus = 0;
    while (peek() == '-') {
      ++pos_;
      ++minus;
    }
    bool bare_literal = false;
    Expr e = power(bare_literal);
    if (minus > 0 && bare_literal) {
      e = Expr::constant(-e.value());
      --minus;
    }
    for (int i = 0; i < minus; ++i) e = Expr::negate(e);
    return e;
  }

  Expr power(bool& bare_literal) {
    char c = peek();
    bool literal = std::isdigit(static_cast<unsigned char>(c)) || c == '.';
    Expr base = atom();
    if (peek() != '^') {
      bare_literal = literal;
      return base;
    }
    ++pos_;
    int k = signed_int();
    if (peek() == '^') {
      fail({"+", "-", "*", "/", ")", "end of input"});
    }
    bare_literal = false;
    return Expr::power(base, k);
  }

  int signed_int() {
    bool neg = false;
    if (peek() == '-') {
      neg = true;
      ++pos_;
    }
    skip_ws();
    std::size_t start = pos_;
    if (pos_ >= text_.size() || !std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
      fail({"integer exponent"});
    }
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (pos_ < text_.size() && (text_[pos_] == '.' || text_[pos_] == 'e' || text_[pos_] == 'E')) {
      throw ExponentError("non-integer exponent at position " + std::to_string(start));
    }
    std::string digits(text_.substr(start, pos_ - start));
    long k = digits.size() > 3 ? 1000 : std::strtol(digits.c_str(), nullptr, 10);
    if (k > 9) {
      throw ExponentError("exponent " + std::string(neg ? "-" : "") + digits +
                          " outside [-9, 9] at position " + std::to_string(start));
    }
    return static_cast<int>(neg ? -k : k);
  }

  Expr atom() {
    char c = peek();
    if (c == '(') {
      ++pos_;
      Expr e = expr();
      if (peek() != ')') fail({")"});
      ++pos_;
      return e;
    }
    if (c == 'x' || c == 'y') {
      std::size_t start = pos_;
      ++pos_;
      std::size_t dstart = pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      if (dstart == pos_) fail({"variable index"});
      long idx = std::strtol(std::string(text_.substr(dstart, pos_ - dstart)).c_str(), nullptr, 10);
      int limit = c == 'x' ? n_ : m_;
      if (idx < 1 || idx > limit) {
        throw IndexError("variable " + std::string(text_.substr(start, pos_ - start)) +
                         " at position " + std::to_string(start) + " outside declared range " +
                         (c == 'x' ? "n=" : "m=") + std::to_string(limit));
      }
      return Expr::variable(c == 'x' ? Axis::x : Axis::y, static_cast<int>(idx));
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    fail({"number", "variable", "("});
  }

  Expr number() {
    std::size_t start = pos_;
    auto digits = [&] {
      std::size_t s = pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      return pos_ - s;
    };
    std::size_t intd = digits();
    std::size_t fracd = 0;
    if (pos_ < text_.size() && text_[pos_] == '.') {
      ++pos_;
      fracd = digits();
    }
    if (intd + fracd == 0) fail({"number"});
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      ++pos_;
      if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
      if (digits() == 0) fail({"exponent digits"});
    }
    double v = 0.0;
    auto res = std::from_chars(text_.data() + start, text_.data() + pos_, v);
    if (res.ec != std::errc()) {
      // from_chars rejects a leading '.'; strtod accepts it
      v = std::strtod(std::string(text_.substr(start, pos_ - start)).c_str(), nullptr);
    }
    return Expr::constant(v);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  int n_;
  int m_;
};

}  // namespace

Expr parse_expr(std::string_view text, int n, int m) {
  return Parser(text, n, m).parse();
}

// -------------------------------------------------------- simplification

namespace {

bool is_const(const Expr& e) { return e.kind() == Expr::Kind::constant; }

Expr folded(double v, const Expr& fallback) {
  return std::isfinite(v) ? Expr::constant(v) : fallback;
}

}  // namespace

Expr make_add(const Expr& a, const Expr& b) {
  if (is_const(a) && is_const(b))
    return folded(a.value() + b.value(), Expr::binary(Expr::Kind::add, a, b));
  if (a.is_constant(0.0)) return b;
  if (b.is_constant(0.0)) return a;
  return Expr::binary(Expr::Kind::add, a, b);
}

Expr make_sub(const Expr& a, const Expr& b) {
  if (is_const(a) && is_const(b))
    return folded(a.value() - b.value(), Expr::binary(Expr::Kind::sub, a, b));
  if (b.is_constant(0.0)) return a;
  if (a.is_constant(0.0)) return make_neg(b);
  return Expr::binary(Expr::Kind::sub, a, b);
}

Expr make_mul(const Expr& a, const Expr& b) {
  if (is_const(a) && is_const(b))
    return folded(a.value() * b.value(), Expr::binary(Expr::Kind::mul, a, b));
  if (a.is_constant(0.0) || b.is_constant(0.0)) return Expr::constant(0.0);
  if (a.is_constant(1.0)) return b;
  if (b.is_constant(1.0)) return a;
  return Expr::binary(Expr::Kind::mul, a, b);
}

Expr make_div(const Expr& a, const Expr& b) {
  if (is_const(a) && is_const(b) && b.value() != 0.0)
    return folded(a.value() / b.value(), Expr::binary(Expr::Kind::div, a, b));
  if (a.is_constant(0.0) && !is_const(b)) return Expr::constant(0.0);
  if (b.is_constant(1.0)) return a;
  return Expr::binary(Expr::Kind::div, a, b);
}

Expr make_neg(const Expr& a) {
  if (is_const(a)) return Expr::constant(-a.value());
  return Expr::negate(a);
}

Expr make_pow(const Expr& a, int k) {
  if (k == 0) return Expr::constant(1.0);
  if (k == 1) return a;
  if (is_const(a) && (a.value() != 0.0 || k > 0))
    return folded(int_pow(a.value(), k), Expr::power(a, k));
  return Expr::power(a, k);
}

Expr simplify(const Expr& e) {
  switch (e.kind()) {
    case Expr::Kind::constant:
    case Expr::Kind::variable:
      return e;
    case Expr::Kind::negate:
      return make_neg(simplify(e.operand()));
    case Expr::Kind::add:
      return make_add(simplify(e.lhs()), simplify(e.rhs()));
    case Expr::Kind::sub:
      return make_sub(simplify(e.lhs()), simplify(e.rhs()));
    case Expr::Kind::mul:
      return make_mul(simplify(e.lhs()), simplify(e.rhs()));
    case Expr::Kind::div:
      return make_div(simplify(e.lhs()), simplify(e.rhs()));
    case Expr::Kind::pow:
      return make_pow(simplify(e.operand()), e.exponent());
  }
  return e;
}

// --------------------------------------------------------- differentiation

namespace {

// u^k with |k| possibly outside the grammar range, split into in-range factors.
Expr pow_in_range(const Expr& u, int k) {
  if (k >= -9 && k <= 9) return make_pow(u, k);
  int head = k > 0 ? 9 : -9;
  return make_mul(make_pow(u, head), pow_in_range(u, k - head));
}

}  // namespace

Expr derivative(const Expr& e, Axis axis, int index) {
  switch (e.kind()) {
    case Expr::Kind::constant:
      return Expr::constant(0.0);
    case Expr::Kind::variable:
      return Expr::constant(e.axis() == axis && e.index() == index ? 1.0 : 0.0);
    case Expr::Kind::negate:
      return make_neg(derivative(e.operand(), axis, index));
    case Expr::Kind::add:
      return make_add(derivative(e.lhs(), axis, index), derivative(e.rhs(), axis, index));
    case Expr::Kind::sub:
      return make_sub(derivative(e.lhs(), axis, index), derivative(e.rhs(), axis, index));
    case Expr::Kind::mul: {
      Expr du = derivative(e.lhs(), axis, index);
      Expr dv = derivative(e.rhs(), axis, index);
      return make_add(make_mul(du, e.rhs()), make_mul(e.lhs(), dv));
    }
    case Expr::Kind::div: {
      Expr du = derivative(e.lhs(), axis, index);
      Expr dv = derivative(e.rhs(), axis, index);
      Expr num = make_sub(make_mul(du, e.rhs()), make_mul(e.lhs(), dv));
      return make_div(num, make_pow(e.rhs(), 2));
    }
    case Expr::Kind::pow: {
      int k = e.exponent();
      if (k == 0) return Expr::constant(0.0);
      Expr du = derivative(e.operand(), axis, index);
      if (du.is_constant(0.0)) return du;
      Expr outer = make_mul(Expr::constant(static_cast<double>(k)),
                            pow_in_range(e.operand(), k - 1));
      return make_mul(outer, du);
    }
  }
  return Expr::constant(0.0);
}

std::vector<Expr> grad(const Expr& e, Axis axis, int dim) {
  std::vector<Expr> g;
  g.reserve(static_cast<std::size_t>(dim));
  for (int j = 1; j <= dim; ++j) g.push_back(derivative(e, axis, j));
  return g;
}

// ----------------------------------------------------------- compilation

CompiledExpr::CompiledExpr(const Expr& e) { emit(e, 1); }

void CompiledExpr::emit(const Expr& e, int depth) {
  max_depth_ = std::max(max_depth_, depth);
  switch (e.kind()) {
    case Expr::Kind::constant:
      code_.push_back({Op::cnst, 0, e.value()});
      return;
    case Expr::Kind::variable:
      code_.push_back({e.axis() == Axis::x ? Op::xvar : Op::yvar, e.index() - 1, 0.0});
      return;
    case Expr::Kind::negate:
      emit(e.operand(), depth);
      code_.push_back({Op::neg, 0, 0.0});
      return;
    case Expr::Kind::pow:
      emit(e.operand(), depth);
      code_.push_back({Op::pow, e.exponent(), 0.0});
      return;
    default: {
      emit(e.lhs(), depth);
      emit(e.rhs(), depth + 1);
      Op op = Op::add;
      if (e.kind() == Expr::Kind::sub) op = Op::sub;
      if (e.kind() == Expr::Kind::mul) op = Op::mul;
      if (e.kind() == Expr::Kind::div) op = Op::div;
      code_.push_back({op, 0, 0.0});
      return;
    }
  }
}

double CompiledExpr::operator()(std::span<const double> x,
                                std::span<const double> y) const {
  if (code_.empty()) return 0.0;
  std::array<double, 32> small{};
  std::vector<double> large;
  double* stack = small.data();
  if (max_depth_ > static_cast<int>(small.size())) {
    large.resize(static_cast<std::size_t>(max_depth_));
    stack = large.data();
  }
  int top = -1;
  for (const Instr& in : code_) {
    switch (in.op) {
      case Op::cnst:
        stack[++top] = in.value;
        break;
      case Op::xvar:
        stack[++top] = x[static_cast<std::size_t>(in.arg)];
        break;
      case Op::yvar:
        stack[++top] = y[static_cast<std::size_t>(in.arg)];
        break;
      case Op::neg:
        stack[top] = -stack[top];
        break;
      case Op::pow:
        stack[top] = int_pow(stack[top], in.arg);
        break;
      case Op::add:
        stack[top - 1] += stack[top];
        --top;
        break;
      case Op::sub:
        stack[top - 1] -= stack[top];
        --top;
        break;
      case Op::mul:
        stack[top - 1] *= stack[top];
        --top;
        break;
      case Op::div:
        stack[top - 1] /= stack[top];
        --top;
        break;
    }
  }
  return stack[0];
}

}  // namespace regkit
