#include "htail/conditions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace htail {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

struct Probe {
  std::string label;
  double value;
  std::vector<double> num;  // log numerator per grid point
  std::vector<double> den;  // log denominator per grid point
  VerdictKind required;
};

std::string requirement_name(VerdictKind k) {
  return k == VerdictKind::ConvergesTo ? "CONVERGES_TO(1)" : to_string(k);
}

// Atom locations of V used as probes, merged with user values.
std::vector<double> probe_atoms(const Distribution& V, const ConditionParams& p) {
  std::vector<double> out;
  for (const Atom& a : V.atoms(p.atom_mass_floor, p.atom_loc_ceiling)) out.push_back(a.location);
  for (double d : p.extra_d) {
    if (!(std::isfinite(d) && d > 0.0)) throw ParameterError("d", "probe values must be positive and finite");
    out.push_back(d);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

class Evaluator {
 public:
  Evaluator(const Distribution& F, const Distribution& G, const std::vector<double>& grid, const ConditionParams& p)
      : F_(F), G_(G), grid_(grid), p_(p) {}

  std::vector<double> at(const LogTailFn& f) const { return evaluate_log_tails(f, grid_, p_.options.workers); }

  const std::vector<double>& h() {
    if (h_.empty()) h_ = at([this](double x) { return H(x); });
    return h_;
  }

  double H(double x) const { return product_tail(F_, G_, x, p_.options.quadrature).log_p(); }

 private:
  const Distribution& F_;
  const Distribution& G_;
  const std::vector<double>& grid_;
  const ConditionParams& p_;
  std::vector<double> h_;
};

Overall aggregate(const std::vector<ParameterEvidence>& ev, bool existential) {
  bool any_hold = false, any_fail = false, all_hold = true, all_fail = true;
  for (const auto& e : ev) {
    any_hold |= e.status == Overall::HoldsEvidence;
    any_fail |= e.status == Overall::FailsEvidence;
    all_hold &= e.status == Overall::HoldsEvidence;
    all_fail &= e.status == Overall::FailsEvidence;
  }
  if (existential) {
    if (any_hold) return Overall::HoldsEvidence;
    if (all_fail) return Overall::FailsEvidence;
    return Overall::Inconclusive;
  }
  if (all_hold) return Overall::HoldsEvidence;
  if (any_fail) return Overall::FailsEvidence;
  return Overall::Inconclusive;
}

std::function<double(double)> sqrt_a() {
  return [](double x) { return std::sqrt(x); };
}

}  // namespace

std::string to_string(ConditionId id) {
  switch (id) {
    case ConditionId::EQ11: return "EQ11";
    case ConditionId::EQ12: return "EQ12";
    case ConditionId::EQ13: return "EQ13";
    case ConditionId::EQ14: return "EQ14";
    case ConditionId::T1A_D: return "T1A_D";
    case ConditionId::T31: return "T31";
    case ConditionId::T32: return "T32";
  }
  return "EQ11";
}

std::string to_string(Overall o) {
  switch (o) {
    case Overall::HoldsEvidence: return "HOLDS_EVIDENCE";
    case Overall::FailsEvidence: return "FAILS_EVIDENCE";
    case Overall::Inconclusive: return "INCONCLUSIVE";
  }
  return "INCONCLUSIVE";
}

ConditionId parse_condition_id(const std::string& s) {
  for (auto id : {ConditionId::EQ11, ConditionId::EQ12, ConditionId::EQ13, ConditionId::EQ14, ConditionId::T1A_D,
                  ConditionId::T31, ConditionId::T32}) {
    if (to_string(id) == s) return id;
  }
  throw ParameterError("cond", "unknown condition '" + s + "' (expected EQ11, EQ12, EQ13, EQ14, T1A_D, T31 or T32)");
}

Overall grade_requirement(const RatioDiagnostic& d, VerdictKind required, const VerdictThresholds& th) {
  const VerdictKind k = d.verdict.kind;
  if (k == VerdictKind::Inconclusive) return Overall::Inconclusive;
  switch (required) {
    case VerdictKind::Vanishes:
      if (k == VerdictKind::Vanishes) return Overall::HoldsEvidence;
      if (k == VerdictKind::ConvergesTo && d.window.max <= th.vanish_floor) return Overall::HoldsEvidence;
      if (k == VerdictKind::Bounded && d.window.rel_slope < 0.0) return Overall::Inconclusive;
      return Overall::FailsEvidence;
    case VerdictKind::Bounded:
      return k == VerdictKind::Diverges ? Overall::FailsEvidence : Overall::HoldsEvidence;
    case VerdictKind::ConvergesTo:
      if (k == VerdictKind::ConvergesTo)
        return std::abs(d.verdict.value - 1.0) <= th.tol_c ? Overall::HoldsEvidence : Overall::FailsEvidence;
      if (k == VerdictKind::Bounded) return Overall::Inconclusive;
      return Overall::FailsEvidence;
    default:
      throw std::invalid_argument("grade_requirement: unsupported requirement");
  }
}

ConditionReport check_condition(ConditionId id, const Distribution& F, const Distribution& G,
                                const std::vector<double>& grid, const ConditionParams& params) {
  params.options.thresholds.validate();
  params.options.quadrature.validate();
  if (grid.empty()) throw ParameterError("grid", "must not be empty");
  if (!std::is_sorted(grid.begin(), grid.end())) throw ParameterError("grid", "must be increasing");

  ConditionReport report;
  report.condition_id = id;
  Evaluator ev(F, G, grid, params);
  std::vector<Probe> probes;

  switch (id) {
    case ConditionId::EQ11: {
      const auto g = ev.at([&](double x) { return G.log_sf(x); });
      for (double b : params.b) {
        if (!(std::isfinite(b) && b > 0.0)) throw ParameterError("b", "must be positive and finite");
        auto h = ev.at([&](double x) { return ev.H(b * x); });
        probes.push_back({"b=" + fmt(b), b, g, std::move(h), VerdictKind::Vanishes});
      }
      break;
    }
    case ConditionId::EQ12: {
      const auto ds = probe_atoms(F, params);
      if (ds.empty()) {
        report.vacuous = true;
        report.overall = Overall::HoldsEvidence;
        report.note = "D[F] is empty: the condition holds vacuously";
        return report;
      }
      for (double d : ds) {
        auto num = ev.at([&](double x) {
          const double a = G.log_sf(x / d);
          const double b = G.log_sf((x + 1.0) / d);
          return a <= b ? kLogZero : log_sub(a, b);
        });
        probes.push_back({"d=" + fmt(d), d, std::move(num), ev.h(), VerdictKind::Vanishes});
      }
      break;
    }
    case ConditionId::EQ13: {
      report.existential = true;
      for (double t : params.t) {
        if (!(std::isfinite(t) && t >= 1.0)) throw ParameterError("t", "must be at least 1");
        auto f = ev.at([&](double x) { return F.log_sf(x / t); });
        probes.push_back({"t=" + fmt(t), t, ev.h(), std::move(f), VerdictKind::Bounded});
      }
      break;
    }
    case ConditionId::EQ14: {
      report.existential = true;
      const auto ds = probe_atoms(G, params);
      if (ds.empty()) {
        report.vacuous = true;
        report.overall = Overall::FailsEvidence;
        report.note = "D[G] is empty: no atom d can witness the condition";
        return report;
      }
      for (double d : ds) {
        auto f = ev.at([&](double x) { return F.log_sf(x / d); });
        probes.push_back({"d=" + fmt(d), d, ev.h(), std::move(f), VerdictKind::Bounded});
      }
      break;
    }
    case ConditionId::T1A_D: {
      std::function<double(double)> a = params.a;
      std::string label = params.a_label;
      if (!a) {
        auto ins = build_insensitivity(F, params.delta, grid, params.options);
        a = [ins](double x) { return ins(x); };
        label = "a=insensitivity(delta=" + fmt(params.delta) + ")";
      }
      auto num = ev.at([&](double x) { return G.log_sf(a(x)); });
      probes.push_back({label, kNaN, std::move(num), ev.h(), VerdictKind::Vanishes});
      break;
    }
    case ConditionId::T31:
    case ConditionId::T32: {
      const auto a = params.a ? params.a : sqrt_a();
      const std::string label = params.a ? params.a_label : "a=sqrt";
      if (id == ConditionId::T32) {
        auto ff = ev.at([&](double x) { return F.log_sf_shifted(x, 1.0 / x); });
        auto f = ev.at([&](double x) { return F.log_sf(x); });
        probes.push_back({"F(x-1/x)/F(x)", kNaN, std::move(ff), std::move(f), VerdictKind::ConvergesTo});
        auto gg = ev.at([&](double x) { return G.log_sf_shifted(x, 1.0 / x); });
        auto g = ev.at([&](double x) { return G.log_sf(x); });
        probes.push_back({"G(x-1/x)/G(x)", kNaN, std::move(gg), std::move(g), VerdictKind::ConvergesTo});
      }
      auto ga = ev.at([&](double x) { return G.log_sf(a(x)); });
      probes.push_back({"G(a(x))/H(x), " + label, kNaN, std::move(ga), ev.h(), VerdictKind::Bounded});
      auto fa = id == ConditionId::T31 ? ev.at([&](double x) { return F.log_sf(x / a(x)); })
                                       : ev.at([&](double x) { return F.log_sf(a(x)); });
      const std::string fl = id == ConditionId::T31 ? "F(x/a(x))/H(x), " : "F(a(x))/H(x), ";
      probes.push_back({fl + label, kNaN, std::move(fa), ev.h(), VerdictKind::Bounded});
      break;
    }
  }

  for (auto& p : probes) {
    ParameterEvidence e;
    e.label = p.label;
    e.value = p.value;
    e.required = requirement_name(p.required);
    e.diagnostic = grade_ratios(grid, log_ratios(p.num, p.den), params.options.thresholds);
    e.status = grade_requirement(e.diagnostic, p.required, params.options.thresholds);
    report.parameter_evidence.push_back(std::move(e));
  }
  std::stable_sort(report.parameter_evidence.begin(), report.parameter_evidence.end(),
                   [](const ParameterEvidence& a, const ParameterEvidence& b) {
                     const bool an = std::isnan(a.value), bn = std::isnan(b.value);
                     if (an != bn) return bn;
                     return !an && a.value < b.value;
                   });
  report.overall = aggregate(report.parameter_evidence, report.existential);
  return report;
}

std::pair<std::vector<double>, VerdictThresholds> default_grid_for(const Distribution& F, const Distribution& G) {
  for (const Distribution* d : {&G, &F}) {
    if (d->family() != "example31_G") continue;
    const auto p = d->to_json().at("params");
    return {example31_knot_grid(p.at("alpha").get<double>(), p.at("x1").get<double>()),
            VerdictThresholds::short_grid()};
  }
  return {GeometricGrid{}.points(), VerdictThresholds{}};
}

Theorem11Verdict theorem11_verdict(const Distribution& F, const Distribution& G, const std::vector<double>& grid,
                                   const ConditionParams& params) {
  Theorem11Verdict out;
  out.premise = classify(F, ClassId::S, grid, params.options);
  if (out.premise.membership != Membership::Member) {
    throw PremiseRefused("F is not subexponential in evidence (" + to_string(out.premise.membership) +
                             (out.premise.note.empty() ? "" : ": " + out.premise.note) + ")",
                         out.premise);
  }

  out.df_empty = !F.has_atoms();
  if (out.df_empty) {
    out.branch = "D[F] empty";
    out.predicted = Membership::Member;
  } else {
    out.df_probe = probe_atoms(F, params);
    out.eq12 = check_condition(ConditionId::EQ12, F, G, grid, params);
    out.branch = "D[F] nonempty, EQ12 " + to_string(out.eq12->overall);
    switch (out.eq12->overall) {
      case Overall::HoldsEvidence: out.predicted = Membership::Member; break;
      case Overall::FailsEvidence: out.predicted = Membership::NonMember; break;
      case Overall::Inconclusive: out.predicted = Membership::Inconclusive; break;
    }
  }

  GridSpec gs = params.product_grid;
  gs.hi = std::max(gs.hi, 4.0 * grid.back());
  if (gs.workers == 0) gs.workers = params.options.workers;
  const Distribution H = product_dist(F, G, gs, params.options.quadrature);
  out.cross_check = classify(H, ClassId::S, grid, params.options);
  out.agree = out.cross_check.membership == out.predicted;
  return out;
}

}  // namespace htail
