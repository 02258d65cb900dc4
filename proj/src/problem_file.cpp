#include "regkit/problem_file.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "regkit/errors.hpp"
#include "regkit/report.hpp"

namespace regkit {

namespace {

#include "bundled_problems.inc"

int line_at(const std::string& text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<long>(byte), '\n'));
}

// Line of the first occurrence of the JSON string literal `s`, 0 if absent.
int line_of(const std::string& text, const std::string& s) {
  std::string needle = json(s).dump();
  auto at = text.find(needle);
  return at == std::string::npos ? 0 : line_at(text, at);
}

[[noreturn]] void fail(int line, const std::string& kind, const std::string& msg) {
  std::string where = line > 0 ? "line " + std::to_string(line) + ": " : "";
  throw ProblemFileError(line, kind + ": " + where + msg);
}

class Reader {
 public:
  explicit Reader(const std::string& text) : text_(text) {}

  const json& member(const json& obj, const std::string& key, const std::string& ctx) const {
    if (!obj.contains(key)) fail(line_of(text_, ctx), "SchemaError", "missing key '" + key + "'");
    return obj.at(key);
  }

  std::string string(const json& j, const std::string& key) const {
    if (!j.is_string()) fail(line_of(text_, key), "SchemaError", "'" + key + "' must be a string");
    return j.get<std::string>();
  }

  double number(const json& j, const std::string& key) const {
    if (!j.is_number()) fail(line_of(text_, key), "SchemaError", "'" + key + "' must hold numbers");
    double v = j.get<double>();
    if (!std::isfinite(v)) fail(line_of(text_, key), "SchemaError", "'" + key + "' must be finite");
    return v;
  }

  int integer(const json& j, const std::string& key) const {
    if (!j.is_number_integer()) fail(line_of(text_, key), "SchemaError", "'" + key + "' must be an integer");
    return j.get<int>();
  }

  std::vector<std::string> strings(const json& j, const std::string& key) const {
    if (!j.is_array()) fail(line_of(text_, key), "SchemaError", "'" + key + "' must be a list of strings");
    std::vector<std::string> out;
    for (const auto& e : j) out.push_back(string(e, key));
    return out;
  }

  Vec numbers(const json& j, const std::string& key, int expected) const {
    if (!j.is_array()) fail(line_of(text_, key), "SchemaError", "'" + key + "' must be a list of numbers");
    Vec out;
    for (const auto& e : j) out.push_back(number(e, key));
    if (static_cast<int>(out.size()) != expected) {
      fail(line_of(text_, key), "DimensionMismatch",
           "'" + key + "' has " + std::to_string(out.size()) + " entries, expected " + std::to_string(expected));
    }
    return out;
  }

  void expression(const std::string& e, int n, int m) const {
    try {
      parse_expr(e, n, m);
    } catch (const SyntaxError& err) {
      fail(line_of(text_, e), "SyntaxError", "'" + e + "': " + err.what());
    } catch (const IndexError& err) {
      fail(line_of(text_, e), "IndexError", "'" + e + "': " + err.what());
    } catch (const ExponentError& err) {
      fail(line_of(text_, e), "ExponentError", "'" + e + "': " + err.what());
    }
  }

  void known_keys(const json& obj, std::initializer_list<const char*> keys, const std::string& ctx,
                  std::vector<std::string>& warnings) const {
    for (const auto& [k, v] : obj.items()) {
      (void)v;
      if (std::find_if(keys.begin(), keys.end(), [&](const char* s) { return k == s; }) == keys.end()) {
        warnings.push_back("line " + std::to_string(line_of(text_, k)) + ": unknown key '" + k +
                           "' in " + ctx + " ignored");
      }
    }
  }

 private:
  const std::string& text_;
};

}  // namespace

ParametricProblem ProblemFile::lower_problem() const {
  std::vector<Expr> a;
  std::vector<Expr> b;
  for (const auto& s : ineq) a.push_back(parse_expr(s, n, m));
  for (const auto& s : eq) b.push_back(parse_expr(s, n, m));
  return ParametricProblem{ParametricSystem(n, m, std::move(a), std::move(b)),
                           parse_expr(objective, n, m), flags};
}

BilevelProblem ProblemFile::bilevel() const {
  if (!upper) throw PreconditionViolation("problem '" + name + "' has no upper level");
  return BilevelProblem{parse_expr(upper->F, n, m), upper->X, lower_problem()};
}

const NamedPoint* ProblemFile::point(const std::string& key) const {
  for (const auto& p : points) {
    if (p.name == key) return &p;
  }
  return nullptr;
}

ProblemFile parse_problem(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    int line = line_at(text, e.byte > 0 ? e.byte - 1 : 0);
    fail(line, "ParseError", e.what());
  }
  Reader rd(text);
  if (!root.is_object()) fail(1, "SchemaError", "top level must be an object");
  ProblemFile p;
  rd.known_keys(root, {"name", "description", "dims", "lower", "flags", "upper", "points"}, "file",
                p.warnings);
  if (root.contains("name")) p.name = rd.string(root["name"], "name");
  if (root.contains("description")) p.description = rd.string(root["description"], "description");

  const json& dims = rd.member(root, "dims", "name");
  if (!dims.is_object()) fail(line_of(text, "dims"), "SchemaError", "'dims' must be an object");
  p.n = rd.integer(rd.member(dims, "n", "dims"), "n");
  p.m = rd.integer(rd.member(dims, "m", "dims"), "m");
  if (p.n < 1 || p.m < 1) fail(line_of(text, "dims"), "SchemaError", "dims n and m must be >= 1");

  const json& lower = rd.member(root, "lower", "dims");
  if (!lower.is_object()) fail(line_of(text, "lower"), "SchemaError", "'lower' must be an object");
  rd.known_keys(lower, {"ineq", "eq", "objective"}, "lower", p.warnings);
  if (lower.contains("ineq")) p.ineq = rd.strings(lower["ineq"], "ineq");
  if (lower.contains("eq")) p.eq = rd.strings(lower["eq"], "eq");
  if (lower.contains("objective")) p.objective = rd.string(lower["objective"], "objective");
  for (const auto& e : p.ineq) rd.expression(e, p.n, p.m);
  for (const auto& e : p.eq) rd.expression(e, p.n, p.m);
  rd.expression(p.objective, p.n, p.m);
  if (p.ineq.empty() && p.eq.empty()) {
    p.warnings.push_back("line " + std::to_string(line_of(text, "lower")) +
                         ": empty constraint list; Gamma(x) is all of R^m");
  }

  if (root.contains("flags")) {
    const json& fl = root["flags"];
    if (!fl.is_object()) fail(line_of(text, "flags"), "SchemaError", "'flags' must be an object");
    rd.known_keys(fl, {"convex_in_y", "locally_bounded"}, "flags", p.warnings);
    for (const char* key : {"convex_in_y", "locally_bounded"}) {
      if (!fl.contains(key)) continue;
      if (!fl[key].is_boolean()) fail(line_of(text, key), "SchemaError", std::string("'") + key + "' must be a boolean");
    }
    p.flags.convex_in_y = fl.value("convex_in_y", false);
    p.flags.locally_bounded = fl.value("locally_bounded", false);
  }

  if (root.contains("upper")) {
    const json& up = root["upper"];
    if (!up.is_object()) fail(line_of(text, "upper"), "SchemaError", "'upper' must be an object");
    rd.known_keys(up, {"F", "X"}, "upper", p.warnings);
    UpperSpec u;
    u.F = rd.string(rd.member(up, "F", "upper"), "F");
    rd.expression(u.F, p.n, p.m);
    const json& X = rd.member(up, "X", "upper");
    if (!X.is_array() || static_cast<int>(X.size()) != p.n) {
      fail(line_of(text, "X"), "DimensionMismatch", "'X' must list n = " + std::to_string(p.n) + " [lo, hi] pairs");
    }
    for (const auto& ax : X) {
      Vec b = rd.numbers(ax, "X", 2);
      if (b[0] > b[1]) fail(line_of(text, "X"), "SchemaError", "'X' needs lo <= hi on every axis");
      u.X.lo.push_back(b[0]);
      u.X.hi.push_back(b[1]);
    }
    p.upper = u;
  }

  if (root.contains("points")) {
    const json& pts = root["points"];
    if (!pts.is_object()) fail(line_of(text, "points"), "SchemaError", "'points' must be an object");
    for (const auto& [key, val] : pts.items()) {
      if (!val.is_object()) fail(line_of(text, key), "SchemaError", "point '" + key + "' must be an object");
      NamedPoint np;
      np.name = key;
      np.x = rd.numbers(rd.member(val, "x", key), "x", p.n);
      np.y = rd.numbers(rd.member(val, "y", key), "y", p.m);
      p.points.push_back(std::move(np));
    }
  }
  return p;
}

ProblemFile load_problem(const std::string& path, std::string* raw_text) {
  std::string text;
  if (std::filesystem::exists(path)) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ProblemFileError(0, "IOError: cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  } else if (const BundledProblem* b = find_bundled(path)) {
    text = b->text;
  } else {
    throw ProblemFileError(0, "IOError: no such file or bundled problem '" + path + "'");
  }
  if (raw_text) *raw_text = text;
  return parse_problem(text);
}

std::string dump_problem(const ProblemFile& p) {
  json j;
  j["name"] = p.name;
  if (!p.description.empty()) j["description"] = p.description;
  j["dims"] = {{"n", p.n}, {"m", p.m}};
  j["lower"] = {{"ineq", p.ineq}, {"eq", p.eq}, {"objective", p.objective}};
  j["flags"] = {{"convex_in_y", p.flags.convex_in_y}, {"locally_bounded", p.flags.locally_bounded}};
  if (p.upper) {
    json X = json::array();
    for (std::size_t a = 0; a < p.upper->X.lo.size(); ++a) X.push_back({p.upper->X.lo[a], p.upper->X.hi[a]});
    j["upper"] = {{"F", p.upper->F}, {"X", X}};
  }
  if (!p.points.empty()) {
    json pts = json::object();
    for (const auto& np : p.points) pts[np.name] = {{"x", np.x}, {"y", np.y}};
    j["points"] = pts;
  }
  return canonical_dump(j);
}

const std::vector<BundledProblem>& bundled_problems() {
  static const std::vector<BundledProblem> all = [] {
    std::vector<BundledProblem> v;
    for (const auto& e : kBundled) v.push_back({e.name, e.text});
    return v;
  }();
  return all;
}

const BundledProblem* find_bundled(const std::string& name) {
  if (name.find('/') != std::string::npos) return nullptr;
  std::string key = name;
  if (key.size() > 5 && key.ends_with(".json")) key.resize(key.size() - 5);
  for (const auto& b : bundled_problems()) {
    if (b.name == key) return &b;
  }
  return nullptr;
}

}  // namespace regkit
