#include "htail/report.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace htail {

using nlohmann::json;

json log_json(double v) {
  if (std::isnan(v)) return nullptr;
  if (v == kLogZero) return "-inf";
  if (v == std::numeric_limits<double>::infinity()) return "inf";
  return v;
}

double log_from_json(const json& j) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "-inf") return kLogZero;
    if (s == "inf") return std::numeric_limits<double>::infinity();
    throw ParameterError("value", "unexpected string '" + s + "'");
  }
  return j.get<double>();
}

json to_json(const Verdict& v) {
  json j{{"kind", to_string(v.kind)}};
  if (v.kind == VerdictKind::ConvergesTo) j["c"] = v.value;
  if (v.kind == VerdictKind::Bounded) j["M"] = v.value;
  return j;
}

json to_json(const RatioDiagnostic& d) {
  json lr = json::array();
  for (double v : d.log_ratio) lr.push_back(log_json(v));
  json dropped = json::array();
  for (std::size_t i = 0; i < d.dropped.size(); ++i) {
    if (d.dropped[i]) dropped.push_back(i);
  }
  return {{"x", d.x},
          {"log_ratio", lr},
          {"dropped", dropped},
          {"verdict", to_json(d.verdict)},
          {"window_stats",
           {{"points", d.window.points},
            {"mean", d.window.mean},
            {"median", d.window.median},
            {"max", d.window.max},
            {"min", d.window.min},
            {"rel_slope", d.window.rel_slope}}},
          {"note", d.note}};
}

RatioDiagnostic ratio_diagnostic_from_json(const json& j) {
  RatioDiagnostic d;
  d.x = j.at("x").get<std::vector<double>>();
  for (const auto& v : j.at("log_ratio")) d.log_ratio.push_back(log_from_json(v));
  if (d.x.size() != d.log_ratio.size()) throw ParameterError("log_ratio", "length differs from x");
  d.dropped.assign(d.x.size(), false);
  for (const auto& i : j.at("dropped")) d.dropped.at(i.get<std::size_t>()) = true;
  const auto& v = j.at("verdict");
  const auto kind = v.at("kind").get<std::string>();
  for (auto k : {VerdictKind::ConvergesTo, VerdictKind::Bounded, VerdictKind::Diverges, VerdictKind::Vanishes,
                 VerdictKind::Inconclusive}) {
    if (to_string(k) == kind) d.verdict.kind = k;
  }
  if (v.contains("c")) d.verdict.value = v.at("c").get<double>();
  if (v.contains("M")) d.verdict.value = v.at("M").get<double>();
  const auto& w = j.at("window_stats");
  d.window.points = w.at("points").get<int>();
  d.window.mean = w.at("mean").get<double>();
  d.window.median = w.at("median").get<double>();
  d.window.max = w.at("max").get<double>();
  d.window.min = w.at("min").get<double>();
  d.window.rel_slope = w.at("rel_slope").get<double>();
  d.note = j.at("note").get<std::string>();
  return d;
}

json to_json(const ClassVerdict& v) {
  json ev = json::array();
  for (const auto& [label, d] : v.evidence) ev.push_back({{"label", label}, {"diagnostic", to_json(d)}});
  json est = json::object();
  for (const auto& [k, x] : v.estimates) est[k] = x;
  return {{"class", to_string(v.class_id)},
          {"membership", to_string(v.membership)},
          {"estimates", est},
          {"evidence", ev},
          {"note", v.note}};
}

json to_json(const ConditionReport& r) {
  json ev = json::array();
  for (const auto& e : r.parameter_evidence) {
    ev.push_back({{"label", e.label},
                  {"value", std::isnan(e.value) ? json(nullptr) : json(e.value)},
                  {"required", e.required},
                  {"status", to_string(e.status)},
                  {"diagnostic", to_json(e.diagnostic)}});
  }
  return {{"schema_version", kReportSchemaVersion},
          {"condition_id", to_string(r.condition_id)},
          {"overall", to_string(r.overall)},
          {"existential", r.existential},
          {"vacuous", r.vacuous},
          {"note", r.note},
          {"parameter_evidence", ev}};
}

json to_json(const Theorem11Verdict& v) {
  return {{"schema_version", kReportSchemaVersion},
          {"premise", to_json(v.premise)},
          {"df_empty", v.df_empty},
          {"df_probe", v.df_probe},
          {"eq12", v.eq12 ? to_json(*v.eq12) : json(nullptr)},
          {"branch", v.branch},
          {"predicted", to_string(v.predicted)},
          {"cross_check", to_json(v.cross_check)},
          {"agree", v.agree}};
}

json to_json(const InsensitivityFunction& a) {
  return {{"delta", a.delta()}, {"x", a.nodes()}, {"a", a.values()}};
}

json to_json(const TailResult& t) {
  return {{"log_value", log_json(t.value.log_p())},
          {"value", t.value.probability()},
          {"rel_error", t.rel_error},
          {"truncation_bound", t.truncation_bound},
          {"panels", t.panels}};
}

json to_json(const McEstimate& m) {
  return {{"estimate", m.estimate}, {"ci_halfwidth", m.ci_halfwidth}, {"upper_bound", m.upper_bound},
          {"hits", m.hits},         {"n", m.n},                       {"seed", m.seed}};
}

json to_json(const RuinEstimate& r) {
  return {{"point", r.point}, {"ci_halfwidth", r.ci_halfwidth}, {"hits", r.hits}, {"paths", r.paths},
          {"seed", r.seed}};
}

json to_json(const GuardResult& g) { return {{"pass", g.pass}, {"reason", g.reason}}; }

json to_json(const LowerBoundResult& r) {
  json checks = json::array();
  for (const auto& c : r.checks) {
    checks.push_back({{"i", c.i}, {"x", c.x}, {"log_lhs", log_json(c.log_lhs)}, {"log_rhs", log_json(c.log_rhs)},
                      {"holds", c.holds}});
  }
  return {{"schema_version", kReportSchemaVersion},
          {"series_log_value", log_json(r.series.log_p())},
          {"series_value", r.series.probability()},
          {"remainder_bound", r.remainder_bound},
          {"remainder_relative", r.remainder_relative},
          {"n_star", r.n_star},
          {"a", r.a},
          {"p", r.p},
          {"q", r.q},
          {"epsilon", r.epsilon},
          {"lambda", r.lambda},
          {"factor", r.factor},
          {"x0", r.x0},
          {"all_checks_hold", r.all_checks_hold},
          {"checks", checks},
          {"premise", r.premise ? to_json(*r.premise) : json(nullptr)}};
}

json to_json(const QuadratureSpec& q) {
  return {{"rel_tol", q.rel_tol}, {"max_panels", q.max_panels}, {"truncation_tail", q.truncation_tail}};
}

json to_json(const GridSpec& g) {
  return {{"nodes", g.nodes}, {"lo", g.lo}, {"hi", g.hi}, {"eps_lo", g.eps_lo}, {"eps_hi", g.eps_hi},
          {"workers", g.workers}};
}

json to_json(const GeometricGrid& g) { return {{"x0", g.x0}, {"rho", g.rho}, {"K", g.K}}; }

json to_json(const VerdictThresholds& t) {
  return {{"window", t.window},
          {"min_points", t.min_points},
          {"tol_c", t.tol_c},
          {"tol_s", t.tol_s},
          {"vanish_floor", t.vanish_floor},
          {"bounded_factor", t.bounded_factor},
          {"max_dropped", t.max_dropped}};
}

json defaults_table() {
  const ClassifyOptions co;
  const ConditionParams cp;
  const RiskModelSpec rm;
  const LowerBoundOptions lb;
  return {{"schema_version", kReportSchemaVersion},
          {"quadrature", to_json(QuadratureSpec{})},
          {"product_grid", to_json(GridSpec{})},
          {"x_grid", to_json(GeometricGrid{})},
          {"thresholds", to_json(VerdictThresholds{})},
          {"thresholds_short_grid", to_json(VerdictThresholds::short_grid())},
          {"classify", {{"margin", co.margin}, {"r_agree", co.r_agree}}},
          {"conditions",
           {{"b", cp.b},
            {"t", cp.t},
            {"atom_mass_floor", cp.atom_mass_floor},
            {"atom_loc_ceiling", cp.atom_loc_ceiling},
            {"delta", cp.delta},
            {"a_T31_T32", "sqrt(x)"}}},
          {"monte_carlo", {{"batch", kMcBatch}, {"paths", rm.paths}, {"seed", rm.seed}}},
          {"risk_model",
           {{"lambda", rm.lambda},
            {"epsilon", rm.epsilon},
            {"x0_index", lb.x0_index},
            {"check_max_i", lb.check_max_i},
            {"remainder_target", lb.remainder_target},
            {"max_terms", lb.max_terms}}},
          {"threads", "HTAIL_THREADS, else hardware concurrency"}};
}

void write_curve_csv(std::ostream& os, const std::vector<double>& x, const std::vector<double>& value) {
  if (x.size() != value.size()) throw std::invalid_argument("write_curve_csv: size mismatch");
  os << "x,value\n";
  char buf[64];
  bool first = true;
  double last = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double v = value[i];
    if (std::isnan(v)) continue;
    if (!std::isfinite(x[i])) throw std::invalid_argument("write_curve_csv: non-finite x");
    if (!first && !(x[i] > last)) throw std::invalid_argument("write_curve_csv: x must be strictly increasing");
    if (std::isinf(v)) v = v > 0 ? std::numeric_limits<double>::max() : std::numeric_limits<double>::lowest();
    std::snprintf(buf, sizeof buf, "%.17g,", x[i]);
    os << buf;
    std::snprintf(buf, sizeof buf, "%.17g\n", v);
    os << buf;
    first = false;
    last = x[i];
  }
}

void write_curve_csv(std::ostream& os, const RatioDiagnostic& d) {
  std::vector<double> r(d.x.size());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = d.dropped[i] ? std::nan("") : std::exp(d.log_ratio[i]);
  write_curve_csv(os, d.x, r);
}

}  // namespace htail
