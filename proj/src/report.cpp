#include "regkit/report.hpp"

#include <cmath>
#include <cstdio>

namespace regkit {

namespace {

void dump(const json& j, int indent, std::string& out) {
  const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
  const std::string pad_in(static_cast<std::size_t>(indent + 1) * 2, ' ');
  switch (j.type()) {
    case json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {  // std::map: keys sorted
        if (!first) out += ",\n";
        first = false;
        out += pad_in + json(it.key()).dump() + ": ";
        dump(it.value(), indent + 1, out);
      }
      out += "\n" + pad + "}";
      return;
    }
    case json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      bool scalars = true;
      for (const auto& e : j) scalars = scalars && !e.is_structured();
      if (scalars) {
        out += "[";
        for (std::size_t i = 0; i < j.size(); ++i) {
          if (i) out += ", ";
          dump(j[i], indent + 1, out);
        }
        out += "]";
        return;
      }
      out += "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out += ",\n";
        out += pad_in;
        dump(j[i], indent + 1, out);
      }
      out += "\n" + pad + "]";
      return;
    }
    case json::value_t::number_float: {
      double v = j.get<double>();
      if (!std::isfinite(v)) {
        out += std::isnan(v) ? "\"nan\"" : (v > 0 ? "\"inf\"" : "\"-inf\"");
        return;
      }
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out += buf;
      return;
    }
    default:
      out += j.dump();
  }
}

json strings(const std::vector<std::string>& v) { return json(v); }

json labels(const std::vector<int>& v) { return json(v); }

}  // namespace

json num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

json vec(const Vec& v) {
  json a = json::array();
  for (double d : v) a.push_back(num(d));
  return a;
}

std::string canonical_dump(const json& j) {
  std::string out;
  dump(j, 0, out);
  out += "\n";
  return out;
}

std::string fnv1a64_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

json to_json(const Tolerances& t) {
  return {{"tol_feas", num(t.tol_feas)},
          {"tol_act", num(t.tol_act)},
          {"tol_rank", num(t.tol_rank)},
          {"tol_lp", num(t.tol_lp)},
          {"eps_pos", num(t.eps_pos)},
          {"dist_tol", num(t.dist_tol)},
          {"delta_viol", num(t.delta_viol)},
          {"slope_cap", num(t.slope_cap)},
          {"dedup", num(t.dedup)},
          {"value_tie", num(t.value_tie)},
          {"subset_cap", t.subset_cap},
          {"diverge_factor", num(t.diverge_factor)},
          {"diverge_abs", num(t.diverge_abs)},
          {"consistent_spread", num(t.consistent_spread)},
          {"isc_shrink", num(t.isc_shrink)},
          {"isc_radius_factor", num(t.isc_radius_factor)},
          {"isc_gap", num(t.isc_gap)}};
}

json to_json(const SolverConfig& s) {
  return {{"box", num(s.box)},
          {"grid_levels", s.grid_levels},
          {"candidates", s.candidates},
          {"restarts", s.restarts},
          {"tol_feas", num(s.tol_feas)},
          {"stationarity", num(s.stationarity)},
          {"seed", s.seed}};
}

json to_json(const NeighborhoodSampler& s) {
  return {{"radii", vec(s.radii)},
          {"samples_per_radius", s.samples_per_radius},
          {"seed", s.seed},
          {"restriction", to_string(s.restriction)}};
}

json to_json(const CQReport& r) {
  json j;
  j["cq"] = r.cq_name;
  j["x"] = vec(r.x);
  j["y"] = vec(r.y);
  j["verdict"] = to_string(r.verdict);
  j["active"] = labels(r.active);
  j["notes"] = strings(r.notes);
  j["tolerances"] = to_json(r.tol);
  if (r.cq_name == "licq") j["rank"] = r.rank;
  if (r.cq_name == "rcpld" || r.cq_name == "rcpld_s") j["basis_S"] = labels(r.basis_S);
  if (r.pld) {
    json a = json::object();
    for (auto [k, v] : r.pld->alphas) a[std::to_string(k)] = num(v);
    json b = json::object();
    for (auto [k, v] : r.pld->betas) b[std::to_string(k)] = num(v);
    j["pld_certificate"] = {{"alphas", a}, {"betas", b}, {"norm", num(r.pld->norm)},
                            {"residual", num(r.pld->residual)}};
  }
  if (r.violation) {
    const auto& v = *r.violation;
    j["violation"] = {{"K", labels(v.K)},           {"radius", num(v.radius)},
                      {"sample", v.sample},         {"point", vec(v.point)},
                      {"rank_center", v.rank_center}, {"rank_sample", v.rank_sample}};
  }
  if (!r.radii.empty()) {
    json rs = json::array();
    for (const auto& c : r.radii) {
      rs.push_back({{"radius", num(c.radius)}, {"samples", c.samples},
                    {"omega_hits", c.omega_hits}, {"passed", c.passed}});
    }
    j["radii"] = rs;
    j["accepted_radius"] = num(r.accepted_radius);
  }
  if (r.cq_name == "rcpld_s") {
    json sup = json::array();
    for (const auto& s : r.supports) {
      json e = {{"T", labels(s.T)}, {"realizable", s.realizable},
                {"dependent_at_center", s.dependent_at_center}, {"passed", s.passed}};
      if (s.realizable) e["lambda"] = vec(s.lambda);
      sup.push_back(e);
    }
    j["supports"] = sup;
    j["multiplier"] = r.multiplier ? vec(*r.multiplier) : json(nullptr);
  }
  return j;
}

json to_json(const RegularityProbe& p) {
  json rs = json::array();
  for (const auto& r : p.radii) {
    rs.push_back({{"radius", num(r.radius)},
                  {"samples", r.samples},
                  {"omega_hits", r.omega_hits},
                  {"eligible", r.eligible},
                  {"kappa_hat", num(r.kappa_hat)},
                  {"argmax", vec(r.argmax)},
                  {"argmax_distance", num(r.argmax_distance)},
                  {"argmax_residual", num(r.argmax_residual)}});
  }
  return {{"x", vec(p.x_center)},
          {"y", vec(p.y_center)},
          {"restriction", to_string(p.restriction)},
          {"radii", rs},
          {"verdict", to_string(p.verdict)},
          {"notes", strings(p.notes)}};
}

json to_json(const IscProbe& p) {
  json rs = json::array();
  for (const auto& r : p.radii) {
    rs.push_back({{"radius", num(r.radius)},
                  {"samples", r.samples},
                  {"omega_hits", r.omega_hits},
                  {"d", num(r.d)},
                  {"argmax_x", vec(r.argmax_x)}});
  }
  return {{"x", vec(p.x_center)},
          {"y", vec(p.y_center)},
          {"restriction", to_string(p.restriction)},
          {"radii", rs},
          {"verdict", to_string(p.verdict)}};
}

json to_json(const SMapProbes& p) {
  json isc = json::array();
  for (const auto& q : p.isc) isc.push_back(to_json(q));
  return {{"rreg", to_json(p.rreg)},
          {"isc", isc},
          {"lsc", to_string(p.lsc)},
          {"notes", strings(p.notes)}};
}

json to_json(const GridScan& s, const LipschitzReport* lip) {
  json nodes = json::array();
  for (const auto& n : s.nodes) {
    json reps = json::array();
    for (const auto& r : n.reps) reps.push_back(vec(r));
    nodes.push_back({{"x", vec(n.x)},
                     {"phi", num(n.phi)},
                     {"reps", reps},
                     {"starts", n.trace.starts},
                     {"evaluations", n.trace.evaluations}});
  }
  json j = {{"grid", s.grid.str()}, {"nodes", nodes}};
  if (lip) {
    json flags = json::array();
    for (const auto& f : lip->flags) {
      flags.push_back({{"node_a", f.node_a}, {"node_b", f.node_b}, {"axis", f.axis},
                       {"lo", num(f.lo)},    {"hi", num(f.hi)},     {"phi_lo", num(f.phi_lo)},
                       {"phi_hi", num(f.phi_hi)}, {"slope", num(f.slope)},
                       {"bisections", f.bisections}});
    }
    j["lipschitz"] = {{"modulus", num(lip->modulus)},
                      {"pairs", lip->slopes.size()},
                      {"discontinuities", flags},
                      {"notes", strings(lip->notes)}};
  }
  return j;
}

json to_json(const OptimisticSolution& s) {
  json rounds = json::array();
  for (const auto& r : s.rounds) {
    rounds.push_back({{"grid", r.grid.str()}, {"x", vec(r.x)}, {"y", vec(r.y)},
                      {"F", num(r.F)}, {"feasible_nodes", r.feasible_nodes}});
  }
  return {{"x", vec(s.x)}, {"y", vec(s.y)}, {"F", num(s.F)}, {"rounds", rounds}};
}

json to_json(const CalmnessReport& r) {
  json ks = json::array();
  for (const auto& k : r.kappas) {
    json rs = json::array();
    for (const auto& c : k.radii) {
      rs.push_back({{"radius", num(c.radius)}, {"samples", c.samples}, {"min_P", num(c.min_P)},
                    {"violated", c.violated}});
    }
    json e = {{"kappa", num(k.kappa)},
              {"verdict", k.violated ? "violation" : "no_violation_on_samples"},
              {"radii", rs}};
    if (k.witness) {
      e["witness"] = {{"x", vec(k.witness->x)}, {"y", vec(k.witness->y)}, {"u", num(k.witness->u)},
                      {"margin", num(k.witness->margin)}, {"radius", num(k.witness->radius)}};
    }
    ks.push_back(e);
  }
  return {{"x", vec(r.x)},
          {"y", vec(r.y)},
          {"F_ref", num(r.F_ref)},
          {"kappa_grid", vec(r.kappa_grid)},
          {"kappas", ks},
          {"verdict", to_string(r.verdict)},
          {"kappa_min", r.kappa_min ? num(*r.kappa_min) : json(nullptr)},
          {"attempted", r.attempted},
          {"skipped", r.skipped},
          {"notes", strings(r.notes)},
          {"tolerances", to_json(r.tol)}};
}

json to_json(const ExistenceReport& r) {
  json inf = json::array();
  for (const auto& x : r.infeasible_nodes) inf.push_back(vec(x));
  json pts = json::array();
  for (const auto& p : r.rcpld_s) {
    pts.push_back({{"x", vec(p.x)}, {"y", vec(p.y)}, {"verdict", to_string(p.verdict)},
                   {"notes", strings(p.notes)}});
  }
  json nodes = json::array();
  for (const auto& n : r.nodes) {
    nodes.push_back({{"x", vec(n.x)}, {"phi_o", num(n.phi_o)}, {"phi_p", num(n.phi_p)},
                     {"reps", n.reps}});
  }
  json j = {{"x_compact", r.x_compact},
            {"x_in_dom", r.x_in_dom},
            {"infeasible_nodes", inf},
            {"locally_bounded", r.locally_bounded},
            {"rcpld_s", pts},
            {"rcpld_s_all_hold", r.rcpld_s_all_hold},
            {"nodes", nodes},
            {"notes", strings(r.notes)}};
  if (r.incumbent_x) {
    j["incumbent"] = {{"x", vec(*r.incumbent_x)}, {"y", vec(*r.incumbent_y)},
                      {"phi_p", num(r.incumbent_phi_p)}};
  } else {
    j["incumbent"] = nullptr;
  }
  return j;
}

json RunReport::to_json() const {
  return {{"tool", "regkit"},
          {"version", kToolVersion},
          {"seed", seed},
          {"tolerances", regkit::to_json(tol)},
          {"solver", regkit::to_json(solver)},
          {"command", command},
          {"input_digest", input_digest},
          {"payload", payload},
          {"wall_time_s", num(wall_time)}};
}

}  // namespace regkit
