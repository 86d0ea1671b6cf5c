#include "htail/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "htail/parallel.hpp"
#include "htail/quadrature.hpp"

namespace htail {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Partial quadrature results are accepted when they are still this good.
constexpr double kPartialAccept = 1e-3;

double guarded(const LogTailFn& f, double x) {
  try {
    return f(x);
  } catch (const QuadratureError& e) {
    if (e.achieved_rel_error() < kPartialAccept) return e.partial_log_value();
    return kNaN;
  }
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Mean log-increment over a run of log-ratios.
double mean_increment(const std::vector<double>& lr, std::size_t from, std::size_t to) {
  if (to <= from) return 0.0;
  return (lr[to] - lr[from]) / static_cast<double>(to - from);
}

bool in_band(double v, double target, double tol) { return std::abs(v - target) <= tol * std::abs(target); }

}  // namespace

std::vector<double> evaluate_log_tails(const LogTailFn& f, const std::vector<double>& x, int workers) {
  std::vector<double> out(x.size(), kNaN);
  parallel_for(x.size(), [&](std::size_t i) { out[i] = guarded(f, x[i]); }, workers);
  return out;
}

std::vector<double> log_ratios(const std::vector<double>& num, const std::vector<double>& den) {
  if (num.size() != den.size()) throw std::invalid_argument("log_ratios: size mismatch");
  std::vector<double> lr(num.size(), kNaN);
  for (std::size_t i = 0; i < num.size(); ++i) {
    if (std::isnan(num[i]) || std::isnan(den[i]) || den[i] == kLogZero) continue;
    lr[i] = num[i] == kLogZero ? kLogZero : num[i] - den[i];
  }
  return lr;
}

std::vector<double> GeometricGrid::points() const {
  validate();
  std::vector<double> out(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) out[static_cast<std::size_t>(k)] = x0 * std::pow(rho, k);
  return out;
}

void GeometricGrid::validate() const {
  if (!(std::isfinite(x0) && x0 > 0.0)) throw ParameterError("x0", "must be positive and finite");
  if (!(std::isfinite(rho) && rho > 1.0)) throw ParameterError("rho", "must exceed 1");
  if (K < 2) throw ParameterError("K", "must be at least 2");
}

VerdictThresholds VerdictThresholds::short_grid() {
  VerdictThresholds th;
  th.window = 4;
  th.min_points = 6;
  return th;
}

void VerdictThresholds::validate() const {
  if (window < 3) throw ParameterError("window", "must be at least 3");
  if (min_points < window) throw ParameterError("min_points", "must be at least the window");
  if (!(tol_c > 0.0)) throw ParameterError("tol_c", "must be positive");
  if (!(tol_s > 0.0)) throw ParameterError("tol_s", "must be positive");
  if (!(vanish_floor > 0.0)) throw ParameterError("vanish_floor", "must be positive");
  if (!(bounded_factor > 1.0)) throw ParameterError("bounded_factor", "must exceed 1");
  if (!(max_dropped >= 0.0 && max_dropped < 1.0)) throw ParameterError("max_dropped", "must lie in [0, 1)");
}

std::string to_string(VerdictKind kind) {
  switch (kind) {
    case VerdictKind::ConvergesTo: return "CONVERGES_TO";
    case VerdictKind::Bounded: return "BOUNDED";
    case VerdictKind::Diverges: return "DIVERGES";
    case VerdictKind::Vanishes: return "VANISHES";
    case VerdictKind::Inconclusive: return "INCONCLUSIVE";
  }
  return "INCONCLUSIVE";
}

double RatioDiagnostic::ratio(std::size_t i) const { return std::exp(log_ratio.at(i)); }

std::size_t RatioDiagnostic::dropped_count() const {
  return static_cast<std::size_t>(std::count(dropped.begin(), dropped.end(), true));
}

RatioDiagnostic grade_ratios(std::vector<double> x, std::vector<double> log_ratio, const VerdictThresholds& th) {
  th.validate();
  if (x.size() != log_ratio.size()) throw std::invalid_argument("grade_ratios: size mismatch");
  RatioDiagnostic d;
  d.x = std::move(x);
  d.log_ratio = std::move(log_ratio);
  d.dropped.resize(d.x.size());
  std::vector<double> lr;
  for (std::size_t i = 0; i < d.x.size(); ++i) {
    d.dropped[i] = std::isnan(d.log_ratio[i]);
    if (!d.dropped[i]) lr.push_back(d.log_ratio[i]);
  }
  const std::size_t n = d.x.size();
  if (n == 0) {
    d.note = "empty grid";
    return d;
  }
  if (static_cast<double>(d.dropped_count()) > th.max_dropped * static_cast<double>(n)) {
    d.note = std::to_string(d.dropped_count()) + " of " + std::to_string(n) + " points dropped";
    return d;
  }
  if (static_cast<int>(lr.size()) < th.min_points) {
    d.note = "only " + std::to_string(lr.size()) + " usable points, need " + std::to_string(th.min_points);
    return d;
  }

  const std::size_t w = static_cast<std::size_t>(th.window);
  std::vector<double> tail_lr(lr.end() - static_cast<std::ptrdiff_t>(w), lr.end());
  std::vector<double> r(w);
  for (std::size_t i = 0; i < w; ++i) r[i] = std::exp(tail_lr[i]);

  WindowStats& s = d.window;
  s.points = static_cast<int>(w);
  s.mean = std::accumulate(r.begin(), r.end(), 0.0) / static_cast<double>(w);
  s.median = median_of(r);
  s.max = *std::max_element(r.begin(), r.end());
  s.min = *std::min_element(r.begin(), r.end());
  {
    const double im = 0.5 * static_cast<double>(w - 1);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < w; ++i) {
      const double di = static_cast<double>(i) - im;
      sxy += di * (r[i] - s.mean);
      sxx += di * di;
    }
    const double slope = sxy / sxx;
    s.rel_slope = s.mean != 0.0 && std::isfinite(slope) ? slope / std::abs(s.mean) : 0.0;
  }

  bool strictly_decreasing = true;
  bool strictly_increasing = true;
  for (std::size_t i = 1; i < w; ++i) {
    if (!(tail_lr[i] < tail_lr[i - 1] || tail_lr[i] == kLogZero)) strictly_decreasing = false;
    if (!(tail_lr[i] > tail_lr[i - 1])) strictly_increasing = false;
  }

  if (!std::isfinite(s.max) || !std::isfinite(s.mean)) {
    d.verdict = {strictly_decreasing ? VerdictKind::Vanishes : VerdictKind::Diverges, 0.0};
    d.note = "ratio outside double range";
    return d;
  }
  if (s.max <= th.vanish_floor && strictly_decreasing) {
    d.verdict = {VerdictKind::Vanishes, 0.0};
    return d;
  }
  const double spread = s.max - s.min;
  const double as = std::abs(s.rel_slope);
  if (as <= th.tol_s && spread <= 2.0 * th.tol_c * std::abs(s.mean)) {
    d.verdict = {VerdictKind::ConvergesTo, s.mean};
    return d;
  }
  if (as <= 2.0 * th.tol_s) {
    d.note = "slope inside the hysteresis band";
    return d;
  }
  if (s.rel_slope > 0.0) {
    // Growth that does not decelerate over the window counts as divergence,
    // as does a trailing max far above the median.
    const std::size_t half = w / 2;
    const double early = mean_increment(tail_lr, 0, half);
    const double late = mean_increment(tail_lr, half, w - 1);
    const bool sustained = strictly_increasing && late >= 0.5 * early && late > std::log1p(th.tol_s);
    if (s.max > th.bounded_factor * s.median || sustained) {
      d.verdict = {VerdictKind::Diverges, 0.0};
      return d;
    }
  }
  d.verdict = {VerdictKind::Bounded, s.max};
  return d;
}

RatioDiagnostic ratio_curve(const LogTailFn& numerator, const LogTailFn& denominator, const std::vector<double>& x,
                            const VerdictThresholds& th) {
  std::vector<double> num(x.size()), den(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    num[i] = guarded(numerator, x[i]);
    den[i] = guarded(denominator, x[i]);
  }
  return grade_ratios(x, log_ratios(num, den), th);
}

std::string to_string(ClassId id) {
  switch (id) {
    case ClassId::L_gamma: return "L_gamma";
    case ClassId::S: return "S";
    case ClassId::D: return "D";
    case ClassId::R: return "R";
    case ClassId::A: return "A";
  }
  return "S";
}

std::string to_string(Membership m) {
  switch (m) {
    case Membership::Member: return "member";
    case Membership::NonMember: return "non-member";
    case Membership::Inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

ClassId parse_class_id(const std::string& s) {
  if (s == "L_gamma" || s == "L") return ClassId::L_gamma;
  if (s == "S") return ClassId::S;
  if (s == "D") return ClassId::D;
  if (s == "R") return ClassId::R;
  if (s == "A") return ClassId::A;
  throw ParameterError("class", "unknown class '" + s + "' (expected L_gamma, S, D, R or A)");
}

namespace {

bool converges(const RatioDiagnostic& d) { return d.verdict.kind == VerdictKind::ConvergesTo; }

ClassVerdict classify_l_gamma(const Distribution& V, const std::vector<double>& grid, const ClassifyOptions& opt) {
  ClassVerdict out;
  out.class_id = ClassId::L_gamma;
  double t = 1.0;
  bool lattice = false;
  if (auto view = V.lattice()) {
    t = view->span;
    lattice = true;
  } else if (V.has_atoms() && V.continuous_mass() == 0.0) {
    auto span = detect_span(V);
    if (!span) {
      out.note = "lattice span could not be detected";
      return out;
    }
    t = *span;
    lattice = true;
  }
  std::vector<double> xs = grid;
  if (lattice) {
    for (double& x : xs) x = std::max(t, std::floor(x / t) * t);
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  }
  auto num = evaluate_log_tails([&](double x) { return V.log_sf_shifted(x, t); }, xs, opt.workers);
  auto den = evaluate_log_tails([&](double x) { return V.log_sf(x); }, xs, opt.workers);
  auto d = grade_ratios(xs, log_ratios(num, den), opt.thresholds);
  out.estimates["shift"] = t;
  if (converges(d)) {
    out.membership = Membership::Member;
    out.estimates["gamma"] = std::log(d.verdict.value) / t;
  } else if (d.verdict.kind == VerdictKind::Diverges) {
    out.membership = Membership::NonMember;
    out.note = "tail(x - t) / tail(x) diverges";
  } else {
    out.note = d.note.empty() ? "shift ratio did not settle" : d.note;
  }
  out.evidence.emplace_back("t=" + fmt(t), std::move(d));
  return out;
}

RatioDiagnostic self_sum_ratio(const Distribution& V, const std::vector<double>& grid, const ClassifyOptions& opt) {
  auto num = evaluate_log_tails([&](double x) { return sum_self_tail(V, 2, x, opt.quadrature).log_p(); }, grid, opt.workers);
  auto den = evaluate_log_tails([&](double x) { return V.log_sf(x); }, grid, opt.workers);
  return grade_ratios(grid, log_ratios(num, den), opt.thresholds);
}

RatioDiagnostic scaled_ratio(const Distribution& V, double t, const std::vector<double>& grid,
                             const ClassifyOptions& opt) {
  auto num = evaluate_log_tails([&](double x) { return V.log_sf(t * x); }, grid, opt.workers);
  auto den = evaluate_log_tails([&](double x) { return V.log_sf(x); }, grid, opt.workers);
  return grade_ratios(grid, log_ratios(num, den), opt.thresholds);
}

ClassVerdict classify_s(const Distribution& V, const std::vector<double>& grid, const ClassifyOptions& opt) {
  if (V.support_lo() < 0.0) throw ParameterError("V", "class S diagnostics need a law on [0, inf)");
  ClassVerdict out;
  out.class_id = ClassId::S;
  auto d = self_sum_ratio(V, grid, opt);
  const double band = 2.0 * opt.thresholds.tol_c;
  if (converges(d)) {
    out.estimates["limit"] = d.verdict.value;
    if (in_band(d.verdict.value, 2.0, band)) {
      out.membership = Membership::Member;
    } else {
      out.membership = Membership::NonMember;
      out.note = "self-convolution ratio settles away from 2";
    }
  } else if (d.verdict.kind == VerdictKind::Diverges || d.verdict.kind == VerdictKind::Vanishes) {
    out.membership = Membership::NonMember;
    out.note = "self-convolution ratio " + to_string(d.verdict.kind);
  } else {
    out.note = d.note.empty() ? "self-convolution ratio did not settle" : d.note;
  }
  out.evidence.emplace_back("k=2", std::move(d));
  return out;
}

ClassVerdict classify_d(const Distribution& V, const std::vector<double>& grid, const ClassifyOptions& opt) {
  ClassVerdict out;
  out.class_id = ClassId::D;
  auto d = scaled_ratio(V, 0.5, grid, opt);
  const auto kind = d.verdict.kind;
  if (kind == VerdictKind::Bounded || kind == VerdictKind::ConvergesTo) {
    out.membership = Membership::Member;
    out.estimates["M"] = d.window.max;
  } else if (kind == VerdictKind::Diverges) {
    out.membership = Membership::NonMember;
    out.note = "tail(x / 2) / tail(x) diverges";
  } else {
    out.note = d.note.empty() ? "halving ratio did not settle" : d.note;
  }
  out.evidence.emplace_back("t=1/2", std::move(d));
  return out;
}

ClassVerdict classify_r(const Distribution& V, const std::vector<double>& grid, const ClassifyOptions& opt) {
  ClassVerdict out;
  out.class_id = ClassId::R;
  auto d2 = scaled_ratio(V, 2.0, grid, opt);
  auto d4 = scaled_ratio(V, 4.0, grid, opt);
  auto rapid = [](const RatioDiagnostic& d) {
    return d.verdict.kind == VerdictKind::Vanishes || d.verdict.kind == VerdictKind::Diverges;
  };
  if (converges(d2) && converges(d4) && d2.verdict.value > 0.0 && d4.verdict.value > 0.0) {
    const double a2 = -std::log(d2.verdict.value) / std::log(2.0);
    const double a4 = -std::log(d4.verdict.value) / std::log(4.0);
    out.estimates["alpha_t2"] = a2;
    out.estimates["alpha_t4"] = a4;
    const double scale = std::max({std::abs(a2), std::abs(a4), 1e-300});
    if (std::abs(a2 - a4) <= opt.r_agree * scale || (a2 == 0.0 && a4 == 0.0)) {
      out.membership = Membership::Member;
      out.estimates["alpha"] = 0.5 * (a2 + a4);
    } else {
      out.membership = Membership::NonMember;
      out.note = "indices from t = 2 and t = 4 disagree";
    }
  } else if (rapid(d2) || rapid(d4)) {
    out.membership = Membership::NonMember;
    out.note = "scaling ratio vanishes or diverges";
  } else {
    out.note = "scaling ratios did not settle";
  }
  out.evidence.emplace_back("t=2", std::move(d2));
  out.evidence.emplace_back("t=4", std::move(d4));
  return out;
}

ClassVerdict classify_a(const Distribution& V, const std::vector<double>& grid, const ClassifyOptions& opt) {
  ClassVerdict out;
  out.class_id = ClassId::A;
  auto s = classify_s(V, grid, opt);
  auto d = scaled_ratio(V, 2.0, grid, opt);
  const auto kind = d.verdict.kind;
  const bool settled = kind == VerdictKind::Bounded || kind == VerdictKind::ConvergesTo ||
                       kind == VerdictKind::Vanishes;
  const double limsup = d.window.max;
  if (settled) out.estimates["limsup"] = limsup;
  const bool below = settled && limsup <= 1.0 - opt.margin;
  if (s.membership == Membership::Member && below) {
    out.membership = Membership::Member;
  } else if (s.membership == Membership::NonMember) {
    out.membership = Membership::NonMember;
    out.note = "not subexponential: " + s.note;
  } else if (settled && !below) {
    out.membership = Membership::NonMember;
    out.note = "limsup tail(2x) / tail(x) = " + fmt(limsup) + " exceeds 1 - margin";
  } else {
    out.note = s.membership == Membership::Inconclusive ? "subexponential evidence inconclusive"
                                                        : "doubling ratio did not settle";
  }
  for (auto& e : s.evidence) out.evidence.emplace_back("S:" + e.first, std::move(e.second));
  out.evidence.emplace_back("t=2", std::move(d));
  return out;
}

}  // namespace

ClassVerdict classify(const Distribution& V, ClassId id, const std::vector<double>& grid,
                      const ClassifyOptions& opt) {
  opt.thresholds.validate();
  opt.quadrature.validate();
  if (grid.empty()) throw ParameterError("grid", "must not be empty");
  if (!std::is_sorted(grid.begin(), grid.end())) throw ParameterError("grid", "must be increasing");
  switch (id) {
    case ClassId::L_gamma: return classify_l_gamma(V, grid, opt);
    case ClassId::S: return classify_s(V, grid, opt);
    case ClassId::D: return classify_d(V, grid, opt);
    case ClassId::R: return classify_r(V, grid, opt);
    case ClassId::A: return classify_a(V, grid, opt);
  }
  throw ParameterError("class", "unknown class");
}

InsensitivityFunction::InsensitivityFunction(std::vector<double> x, std::vector<double> a, double delta)
    : x_(std::move(x)), a_(std::move(a)), delta_(delta) {
  if (x_.empty() || x_.size() != a_.size()) throw std::invalid_argument("InsensitivityFunction: bad nodes");
  for (std::size_t i = 0; i < x_.size(); ++i) {
    if (!(a_[i] > 0.0) || !(x_[i] > 0.0)) throw std::invalid_argument("InsensitivityFunction: values must be positive");
    if (i > 0 && !(x_[i] > x_[i - 1])) throw std::invalid_argument("InsensitivityFunction: nodes must increase");
  }
}

double InsensitivityFunction::operator()(double x) const {
  if (x <= x_.front()) return a_.front() * x / x_.front();
  if (x >= x_.back()) return a_.back() * std::sqrt(x / x_.back());
  const auto it = std::upper_bound(x_.begin(), x_.end(), x);
  const std::size_t i = static_cast<std::size_t>(it - x_.begin()) - 1;
  const double w = (x - x_[i]) / (x_[i + 1] - x_[i]);
  return a_[i] + w * (a_[i + 1] - a_[i]);
}

InsensitivityFunction build_insensitivity(const Distribution& F, double delta, const std::vector<double>& grid,
                                          const ClassifyOptions& opt) {
  if (!(delta > 0.0 && delta <= 0.5)) throw ParameterError("delta", "must lie in (0, 0.5]");
  auto lt = classify(F, ClassId::L_gamma, grid, opt);
  const auto g = lt.estimates.find("gamma");
  const bool long_tailed = lt.membership == Membership::Member && g != lt.estimates.end() &&
                           std::abs(std::expm1(g->second * lt.estimates["shift"])) <= opt.thresholds.tol_c;
  if (!long_tailed) {
    std::string what = "F is not long-tailed in evidence: ";
    what += g != lt.estimates.end() ? "gamma estimate " + fmt(g->second) : "shift ratio " + lt.note;
    throw NotLongTailed(what, std::move(lt));
  }

  const double target = std::log1p(delta);
  std::vector<double> raw(grid.size(), 0.0);
  parallel_for(grid.size(), [&](std::size_t i) {
    const double x = grid[i];
    const double base = F.log_sf(x);
    if (base == kLogZero) return;
    auto excess = [&](double a) { return F.log_sf_shifted(x, a) - base; };
    const double cap = std::sqrt(x);
    if (excess(cap) <= target) {
      raw[i] = cap;
      return;
    }
    double lo = 0.0, hi = cap;
    for (int it = 0; it < 200 && hi - lo > 1e-13 * cap; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (excess(mid) <= target) lo = mid; else hi = mid;
    }
    raw[i] = lo;
  }, opt.workers);

  // Largest non-decreasing minorant (suffix minimum), then a / x non-increasing.
  // Both steps only lower a, so the node inequality is kept.
  for (std::size_t i = raw.size(); i-- > 1;) raw[i - 1] = std::min(raw[i - 1], raw[i]);
  std::vector<double> xs, as;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (!(raw[i] > 0.0)) continue;
    double a = raw[i];
    if (!as.empty()) a = std::min(a, as.back() * grid[i] / xs.back());
    xs.push_back(grid[i]);
    as.push_back(a);
  }
  if (xs.empty()) throw std::runtime_error("build_insensitivity: no grid node admits a positive shift");
  return InsensitivityFunction(std::move(xs), std::move(as), delta);
}

std::vector<double> example31_knot_grid(double alpha, double x1, double factor, double x_max) {
  if (!(factor > 0.0)) throw ParameterError("factor", "must be positive");
  std::vector<double> out;
  const auto logs = example31_log_knots(alpha, x1);
  for (std::size_t i = 0; i < logs.size(); ++i) {
    const double x = (i == 0 ? x1 : std::exp(logs[i])) * factor;
    if (!(x <= x_max)) break;
    out.push_back(x);
  }
  return out;
}

}  // namespace htail
