#include "htail/convolve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "htail/gridded.hpp"
#include "htail/parallel.hpp"

namespace htail {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kDirectTerms = 2000.0;
constexpr double kDirectMiddle = 20000.0;
constexpr double kTiny = 1e-300;

enum class Mode { kTail, kCdf };

double outer_log(const Distribution& a, Mode mode, double z) {
  return mode == Mode::kTail ? a.log_sf(z) : a.log_cdf(z);
}

// log P(0 < Y <= y) restricted to the continuous part plus positive atoms.
double log_cdf_positive(const Distribution& b, double y) {
  const double lc = b.log_cdf(y);
  const double m0 = b.mass_at_zero();
  if (m0 <= 0.0) return lc;
  const double l0 = std::log(m0);
  return lc > l0 ? log_sub(lc, l0) : kLogZero;
}

// Bisection on ln y over [la, lb] for a predicate false at la and true at lb.
// Returns {last false, first true} in ln units.
template <typename Pred>
std::pair<double, double> bisect_ln(double la, double lb, Pred pred) {
  for (int i = 0; i < 200 && lb - la > 1e-14 * std::max(1.0, std::fabs(lb)); ++i) {
    const double m = 0.5 * (la + lb);
    if (pred(std::exp(m))) lb = m; else la = m;
  }
  return {la, lb};
}

std::vector<double> make_breaks(double t_lo, double t_hi, std::vector<double> pts, double max_width) {
  std::vector<double> out{t_lo};
  std::sort(pts.begin(), pts.end());
  for (double p : pts) {
    if (std::isfinite(p) && p > out.back() + 1e-12 * (1.0 + std::fabs(p)) && p < t_hi - 1e-12 * (1.0 + std::fabs(t_hi))) {
      out.push_back(p);
    }
  }
  out.push_back(t_hi);
  std::vector<double> fine{out.front()};
  for (std::size_t i = 1; i < out.size(); ++i) {
    const double gap = out[i] - out[i - 1];
    const int pieces = static_cast<int>(std::ceil(gap / max_width));
    for (int j = 1; j < pieces; ++j) fine.push_back(out[i - 1] + gap * j / pieces);
    fine.push_back(out[i]);
  }
  return fine;
}

struct Budget {
  LogAccumulator value;
  LogAccumulator error;
  LogAccumulator trunc;
  int panels = 0;
};

TailResult finish(const Budget& b) {
  TailResult r;
  const double v = b.value.value();
  r.value = LogTailValue(std::min(v, 0.0));
  r.panels = b.panels;
  if (v == kLogZero) return r;
  r.rel_error = b.error.empty() ? 0.0 : std::exp(b.error.value() - v);
  r.truncation_bound = b.trunc.empty() ? 0.0 : std::exp(b.trunc.value() - v);
  return r;
}

void check_converged(const QuadResult& r, const char* what) {
  if (!r.converged) {
    throw QuadratureError(std::string(what) + ": no convergence within max_panels", r.log_value, r.rel_error());
  }
}

bool finite_atomic(const Distribution& d) { return d.continuous_mass() <= 0.0 && !d.has_infinite_atoms(); }

void require_nonnegative(const Distribution& d, const char* name) {
  if (d.support_lo() < 0.0) throw std::invalid_argument(std::string(name) + ": law must be supported on [0, inf)");
}

struct SeriesResult {
  double log_value = kLogZero;
  double log_error = kLogZero;
  double log_trunc = kLogZero;
  int panels = 0;
};

// Sum of exp(log_f(n)) over integers n in [a, b], b possibly infinite.
// The first and last kDirectTerms terms are added directly; a long middle
// stretch is replaced by the integral of the smooth interpolant over
// [n - 1/2, n + 1/2] cells (midpoint rule). For infinite b the range is cut
// where log_tail(u), a bound on the sum beyond u, drops below log_cut.
SeriesResult lattice_series(const std::function<double(double)>& log_f, double a, double b,
                            const std::function<double(double)>& log_tail, double log_cut,
                            const std::vector<double>& u_breaks, const QuadratureSpec& q) {
  SeriesResult out;
  LogAccumulator val;
  const double direct_hi = std::min(b, a + kDirectTerms - 1.0);
  for (double n = a; n <= direct_hi; n += 1.0) val.add(log_f(n));
  if (direct_hi >= b) {
    out.log_value = val.value();
    return out;
  }
  double top_lo = kInf;
  if (std::isfinite(b)) {
    top_lo = std::max(direct_hi + 1.0, b - kDirectTerms + 1.0);
    for (double n = top_lo; n <= b; n += 1.0) val.add(log_f(n));
  }
  const double m_a = direct_hi + 1.0;
  const double m_b = top_lo - 1.0;
  if (m_b < m_a) {
    out.log_value = val.value();
    return out;
  }
  if (std::isfinite(m_b) && m_b - m_a < kDirectMiddle) {
    for (double n = m_a; n <= m_b; n += 1.0) val.add(log_f(n));
    out.log_value = val.value();
    return out;
  }
  const double u_a = m_a - 0.5;
  double u_b = m_b + 0.5;
  if (!std::isfinite(m_b)) {
    const double cut = std::isfinite(log_cut) ? log_cut : std::log(q.truncation_tail) + val.value();
    double u = 2.0 * m_a;
    while (log_tail(u) > cut && u < 1e300) u *= 2.0;
    u = std::floor(u);
    u_b = u + 0.5;
    out.log_trunc = log_tail(u);
  }
  const double log_abs_tol = std::log(q.rel_tol) + val.value();
  const double mid = std::isfinite(b) ? 0.5 * (u_a + u_b) : u_b;
  const double edge = b + 1.0;
  // Integrates h(u) over [u_a, u_b]: ln u below mid, ln(b + 1 - u) above it.
  auto integrate = [&](const std::function<double(double)>& h, double rel_tol, bool strict, LogAccumulator& value,
                       LogAccumulator* error) {
    std::vector<double> pts;
    for (double u : u_breaks) {
      if (u > u_a && u < mid) pts.push_back(std::log(u));
    }
    auto lower = [&](double t) { return h(std::exp(t)) + t; };
    auto r = integrate_log(lower, make_breaks(std::log(u_a), std::log(mid), pts, 1.0), rel_tol, q.max_panels,
                           log_abs_tol);
    if (strict) check_converged(r, "lattice series");
    value.add(r.log_value);
    if (error) error->add(r.log_abs_error);
    out.panels += r.panels;
    if (!std::isfinite(b)) return;
    pts.clear();
    for (double u : u_breaks) {
      if (u > mid && u < u_b) pts.push_back(std::log(edge - u));
    }
    auto upper = [&](double t) { return h(edge - std::exp(t)) + t; };
    r = integrate_log(upper, make_breaks(std::log(edge - u_b), std::log(edge - mid), pts, 1.0), rel_tol,
                      q.max_panels, log_abs_tol);
    if (strict) check_converged(r, "lattice series");
    value.add(r.log_value);
    if (error) error->add(r.log_abs_error);
    out.panels += r.panels;
  };
  LogAccumulator integral;
  LogAccumulator err;
  integrate(log_f, q.rel_tol, true, integral, &err);
  // Midpoint-rule error: each cell is off by about f''(n) / 24, with
  // f'' = f (g'' + g'^2) for g = log f.
  auto midpoint_error = [&](double u) {
    const double h = 0.25 * std::max(1.0, 1e-3 * u);
    const double g0 = log_f(u);
    const double gp = log_f(u + h);
    const double gm = log_f(u - h);
    if (g0 == kLogZero || gp == kLogZero || gm == kLogZero) return g0;
    const double d1 = (gp - gm) / (2.0 * h);
    const double d2 = (gp - 2.0 * g0 + gm) / (h * h);
    const double c = std::fabs(d2 + d1 * d1) / 24.0;
    return c > 0.0 ? g0 + std::log(c) : kLogZero;
  };
  integrate(midpoint_error, 1e-2, false, err, nullptr);
  const double iv = integral.value();
  val.add(iv);
  out.log_value = val.value();
  out.log_error = err.value();
  return out;
}

// P(AB > x) or P(AB <= x), with B the mixing measure.
void mix_lattice(const Distribution& a, const LatticeView& lv, double x, const QuadratureSpec& q, Budget& out) {
  const double s = lv.span;
  const double a_lo = a.support_lo();
  // beyond n1 every term has A-tail equal to 1 and the remainder is exact
  const double n1 = a_lo > 0.0 ? std::floor(x / (s * a_lo)) : kInf;
  auto log_f = [&](double n) { return lv.log_mass(n) + a.log_sf(x / (n * s)); };
  std::vector<double> u_breaks;
  for (double k : a.kinks(0.0, kInf)) {
    if (k > 0.0) u_breaks.push_back(x / (s * k));
  }
  if (n1 >= 1.0) {
    const auto r = lattice_series(log_f, 1.0, n1, lv.log_sf_index, kLogZero, u_breaks, q);
    out.value.add(r.log_value);
    out.error.add(r.log_error);
    out.trunc.add(r.log_trunc);
    out.panels += r.panels;
  }
  if (std::isfinite(n1)) out.value.add(lv.log_sf_index(std::max(n1, 0.0)));
}

void mix_continuous(const Distribution& a, const Distribution& b, double x, Mode mode, const QuadratureSpec& q,
                    double log_known, Budget& out) {
  if (b.continuous_mass() <= 0.0) return;
  const double a_hi = a.support_hi();
  const double a_lo = a.support_lo();
  const double b_lo = std::max(b.support_lo(), kTiny);
  const double b_hi = b.support_hi();
  double yl0 = b.support_lo() > 0.0 ? b.support_lo() : std::max(b.lower_quantile(-700.0), kTiny);
  double yh0 = std::isfinite(b_hi) ? b_hi : b.upper_quantile(-700.0);
  if (mode == Mode::kTail && std::isfinite(a_hi)) yl0 = std::max(yl0, x / a_hi);
  if (mode == Mode::kCdf && a_lo > 0.0 && a.mass_at_zero() == 0.0) yh0 = std::min(yh0, x / a_lo);
  if (!(yl0 < yh0)) return;

  auto probe = [&](double t) {
    const double y = std::exp(t);
    return outer_log(a, mode, x / y) + (mode == Mode::kTail ? b.log_sf(y) : b.log_cdf(y));
  };
  auto scan = [&](double ta, double tb, double& best, double& t_star) {
    best = kLogZero;
    t_star = 0.5 * (ta + tb);
    double lo = ta;
    double hi = tb;
    int n = 512;
    for (int pass = 0; pass < 3; ++pass) {
      const double step = (hi - lo) / n;
      for (int i = 0; i <= n; ++i) {
        const double t = lo + step * i;
        const double v = probe(t);
        if (v > best) {
          best = v;
          t_star = t;
        }
      }
      lo = std::max(ta, t_star - step);
      hi = std::min(tb, t_star + step);
      n = 64;
    }
  };
  double best = kLogZero;
  double t_star = 0.0;
  scan(std::log(yl0), std::log(yh0), best, t_star);
  const double lb = std::max(best, log_known);
  const double ltt = (q.truncation_tail > 0.0 && lb > kLogZero) ? std::log(q.truncation_tail) + lb : kLogZero;

  double y_lo = yl0;
  double y_hi = yh0;
  double trunc = kLogZero;
  if (ltt > kLogZero) {
    if (mode == Mode::kTail) {
      y_hi = std::min(b_hi, b.upper_quantile(ltt));
      const double z = std::isfinite(a_hi) ? a_hi : a.upper_quantile(ltt);
      y_lo = std::max(b_lo, x / z);
      trunc = log_add(b.log_sf(y_hi), a.log_sf(x / y_lo) + b.log_cdf(y_lo));
    } else {
      double la = std::log(yl0);
      while (log_cdf_positive(b, std::exp(la)) > ltt && la > std::log(kTiny) + 8.0) la -= 8.0;
      if (log_cdf_positive(b, std::exp(la)) <= ltt) {
        y_lo = std::exp(bisect_ln(la, std::log(yh0), [&](double y) { return log_cdf_positive(b, y) > ltt; }).first);
      } else {
        y_lo = std::exp(la);
      }
      y_hi = std::min(b_hi, b.upper_quantile(ltt));
      const double z = a.lower_quantile(ltt);
      if (a.log_cdf(z) <= ltt) y_hi = std::min(y_hi, x / z);
      trunc = log_add(log_cdf_positive(b, y_lo), std::min(b.log_sf(y_hi), a.log_cdf(x / y_hi)));
    }
  }
  out.trunc.add(trunc);
  if (!(y_lo < y_hi)) return;
  // the peak may sit outside the first scan range
  scan(std::log(y_lo), std::log(y_hi), best, t_star);

  std::vector<double> pts;
  for (double k : b.kinks(y_lo, y_hi)) pts.push_back(std::log(k));
  for (double k : a.kinks(x / y_hi, x / y_lo)) {
    if (k > 0.0) pts.push_back(std::log(x / k));
  }
  if (best > kLogZero) {
    pts.push_back(t_star);
    for (double d : {1e-3, 3e-3, 1e-2, 3e-2, 0.1, 0.3}) {
      pts.push_back(t_star - d);
      pts.push_back(t_star + d);
    }
  }
  const auto breaks = make_breaks(std::log(y_lo), std::log(y_hi), pts, 1.0);
  auto integrand = [&](double t) {
    const double y = std::exp(t);
    const double lp = b.log_pdf(y);
    if (lp == kLogZero) return kLogZero;
    return outer_log(a, mode, x / y) + lp + t;
  };
  const double log_abs_tol = std::max(lb, best) > kLogZero ? std::log(q.rel_tol) + std::max(lb, best) : kLogZero;
  const auto r = integrate_log(integrand, breaks, q.rel_tol, q.max_panels, log_abs_tol);
  out.value.add(r.log_value);
  out.error.add(r.log_abs_error);
  out.panels += r.panels;
  if (!r.converged) {
    throw QuadratureError("product quadrature: no convergence within max_panels", out.value.value(),
                          r.rel_error());
  }
}

TailResult mix(const Distribution& a, const Distribution& b, double x, Mode mode, const QuadratureSpec& q) {
  Budget out;
  if (mode == Mode::kCdf && b.mass_at_zero() > 0.0) out.value.add(std::log(b.mass_at_zero()));
  if (b.has_infinite_atoms()) {
    const auto lv = b.lattice();
    if (!lv) throw std::invalid_argument("product: infinite atom set without a lattice description");
    mix_lattice(a, *lv, x, q, out);
  } else {
    for (const Atom& atom : b.atoms(0.0, kInf)) {
      out.value.add(std::log(atom.mass) + outer_log(a, mode, x / atom.location));
    }
  }
  mix_continuous(a, b, x, mode, q, out.value.value(), out);
  return finish(out);
}

// Pick the factor whose law is summed or integrated against.
bool mix_over_second(const Distribution& f, const Distribution& g) {
  if (finite_atomic(g)) return true;
  if (finite_atomic(f)) return false;
  if (g.has_infinite_atoms()) return true;
  if (f.has_infinite_atoms()) return false;
  return true;
}

}  // namespace

void QuadratureSpec::validate() const {
  if (!(rel_tol > 0.0 && rel_tol < 1.0)) throw ParameterError("rel_tol", "must lie in (0, 1)");
  if (max_panels < 1) throw ParameterError("max_panels", "must be positive");
  if (!(truncation_tail >= 0.0 && truncation_tail < 1.0)) throw ParameterError("truncation_tail", "must lie in [0, 1)");
}

TailResult product_tail_detailed(const Distribution& F, const Distribution& G, double x, const QuadratureSpec& q) {
  q.validate();
  require_nonnegative(F, "F");
  require_nonnegative(G, "G");
  if (std::isnan(x)) throw std::invalid_argument("product_tail: x is NaN");
  TailResult r;
  if (x < 0.0) {
    r.value = LogTailValue::one();
    return r;
  }
  if (x == 0.0) {
    r.value = LogTailValue(std::log1p(-F.mass_at_zero()) + std::log1p(-G.mass_at_zero()));
    return r;
  }
  return mix_over_second(F, G) ? mix(F, G, x, Mode::kTail, q) : mix(G, F, x, Mode::kTail, q);
}

LogTailValue product_tail(const Distribution& F, const Distribution& G, double x, const QuadratureSpec& q) {
  return product_tail_detailed(F, G, x, q).value;
}

double product_log_cdf(const Distribution& F, const Distribution& G, double x, const QuadratureSpec& q) {
  q.validate();
  require_nonnegative(F, "F");
  require_nonnegative(G, "G");
  if (x < 0.0) return kLogZero;
  if (x == 0.0) return log1m_exp(std::log1p(-F.mass_at_zero()) + std::log1p(-G.mass_at_zero()));
  const bool second = mix_over_second(F, G);
  const Distribution& a = second ? F : G;
  const Distribution& b = second ? G : F;
  // lattice sums are only set up for tails; complement them
  if (b.has_infinite_atoms()) return log1m_exp(mix(a, b, x, Mode::kTail, q).value.log_p());
  return mix(a, b, x, Mode::kCdf, q).value.log_p();
}

namespace {

bool is_degenerate(const Distribution& d, double& c) {
  if (!finite_atomic(d)) return false;
  const auto atoms = d.atoms(0.0, kInf);
  const double m0 = d.mass_at_zero();
  if (atoms.empty() && m0 > 0.0) {
    c = 0.0;
    return true;
  }
  if (atoms.size() == 1 && m0 == 0.0) {
    c = atoms.front().location;
    return true;
  }
  return false;
}

std::vector<Atom> all_atoms(const Distribution& d) {
  auto atoms = d.atoms(0.0, kInf);
  if (d.mass_at_zero() > 0.0) atoms.insert(atoms.begin(), Atom{0.0, d.mass_at_zero()});
  return atoms;
}

// Merge atoms at (numerically) equal locations and renormalize rounding.
Distribution discrete_from_products(std::vector<Atom> atoms) {
  std::sort(atoms.begin(), atoms.end(), [](const Atom& a, const Atom& b) { return a.location < b.location; });
  std::vector<Atom> merged;
  for (const Atom& a : atoms) {
    if (!merged.empty() && std::fabs(a.location - merged.back().location) <= 1e-12 * std::fabs(a.location)) {
      merged.back().mass += a.mass;
    } else {
      merged.push_back(a);
    }
  }
  double total = 0.0;
  for (const Atom& a : merged) total += a.mass;
  for (Atom& a : merged) a.mass /= total;
  if (merged.size() == 1) return degenerate(merged.front().location);
  return discrete(std::move(merged));
}

struct Coord {
  double hi;
  double to_s(double x) const { return std::isfinite(hi) ? std::log(x) - std::log(hi - x) : std::log(x); }
  double from_s(double s) const { return std::isfinite(hi) ? hi / (1.0 + std::exp(-s)) : std::exp(s); }
};

}  // namespace

Distribution product_dist(const Distribution& F, const Distribution& G, const GridSpec& grid,
                          const QuadratureSpec& q) {
  q.validate();
  require_nonnegative(F, "F");
  require_nonnegative(G, "G");
  if (grid.nodes < 8) throw ParameterError("nodes", "must be at least 8");
  double c = 0.0;
  if (is_degenerate(G, c)) return c == 0.0 ? degenerate(0.0) : scale(F, c);
  if (is_degenerate(F, c)) return c == 0.0 ? degenerate(0.0) : scale(G, c);
  if (finite_atomic(F) && finite_atomic(G)) {
    std::vector<Atom> out;
    for (const Atom& a : all_atoms(F)) {
      for (const Atom& b : all_atoms(G)) out.push_back({a.location * b.location, a.mass * b.mass});
    }
    return discrete_from_products(std::move(out));
  }
  auto positive_atoms = [](const Distribution& d) { return d.has_infinite_atoms() || !d.atoms(0.0, kInf).empty(); };
  if (positive_atoms(F) && positive_atoms(G)) {
    throw std::invalid_argument("product_dist: both factors have positive atoms and one has a continuous part");
  }
  const double m0 = 1.0 - (1.0 - F.mass_at_zero()) * (1.0 - G.mass_at_zero());
  const double hi_f = F.support_hi();
  const double hi_g = G.support_hi();
  const double upper = (std::isfinite(hi_f) && std::isfinite(hi_g)) ? hi_f * hi_g : kInf;
  const Coord coord{upper};

  double x_lo = grid.lo;
  if (x_lo <= 0.0) {
    const double target = std::log(grid.eps_lo);
    const double l0 = m0 > 0.0 ? std::log(m0) : kLogZero;
    auto cdf_pos = [&](double x) {
      const double lc = product_log_cdf(F, G, x, q);
      if (l0 == kLogZero) return lc;
      return lc > l0 ? log_sub(lc, l0) : kLogZero;
    };
    const double floor_x = F.support_lo() * G.support_lo();
    double la = std::isfinite(upper) ? std::log(0.5 * upper) : 0.0;
    if (floor_x > 0.0) la = std::max(std::log(floor_x), std::min(la, std::log(floor_x) + 1.0));
    double lb = la;
    if (cdf_pos(std::exp(la)) <= target) {
      while (cdf_pos(std::exp(lb)) <= target) {
        la = lb;
        lb += 4.0;
      }
    } else {
      while (cdf_pos(std::exp(la)) > target && la > std::log(kTiny) + 4.0) {
        lb = la;
        la -= 4.0;
      }
    }
    x_lo = std::exp(bisect_ln(la, lb, [&](double x) { return cdf_pos(x) > target; }).first);
    if (floor_x > 0.0) x_lo = std::max(x_lo, floor_x);
  }
  double x_hi = grid.hi;
  if (x_hi <= 0.0) {
    const double target = std::log(grid.eps_hi);
    auto tail = [&](double x) {
      try {
        return product_tail(F, G, x, q).log_p();
      } catch (const QuadratureError& e) {
        return std::min(0.0, e.partial_log_value());
      }
    };
    if (std::isfinite(upper)) {
      // bisect in the bounded coordinate to resolve the approach to the upper end
      double sa = coord.to_s(x_lo);
      double sb = coord.to_s(upper * (1.0 - 1e-15));
      if (tail(coord.from_s(sb)) > target) {
        x_hi = coord.from_s(sb);
      } else {
        for (int i = 0; i < 100 && sb - sa > 1e-10; ++i) {
          const double m = 0.5 * (sa + sb);
          if (tail(coord.from_s(m)) <= target) sb = m; else sa = m;
        }
        x_hi = coord.from_s(sb);
      }
    } else {
      double lb = std::log(std::max(x_lo, 1.0)) + 4.0;
      while (tail(std::exp(lb)) > target && lb < 690.0) lb += 4.0;
      const double la = std::max(std::log(x_lo), lb - 4.0);
      x_hi = std::exp(bisect_ln(la, lb, [&](double x) { return tail(x) <= target; }).second);
    }
  }
  if (!(x_hi > x_lo)) throw std::invalid_argument("product_dist: empty grid range");

  const int n = grid.nodes;
  const double s_lo = coord.to_s(x_lo);
  const double s_hi = coord.to_s(x_hi);
  std::vector<double> xs(n);
  std::vector<double> vals(n);
  for (int i = 0; i < n; ++i) xs[i] = coord.from_s(s_lo + (s_hi - s_lo) * i / (n - 1));
  // Next to a bounded upper end, x / y loses digits and the quadrature can
  // stall at a noise floor; such nodes keep their partial value and the
  // achieved error widens the declared tolerance.
  std::vector<double> noisy(n, 0.0);
  parallel_for(
      static_cast<std::size_t>(n),
      [&](std::size_t i) {
        try {
          vals[i] = product_tail(F, G, xs[i], q).log_p();
        } catch (const QuadratureError& e) {
          if (!(e.achieved_rel_error() < 1e-3)) throw;
          vals[i] = std::min(0.0, e.partial_log_value());
          noisy[i] = e.achieved_rel_error();
        }
      },
      grid.workers);
  // keep strictly increasing nodes (bounded coordinate can collapse near the top)
  std::vector<double> gx;
  std::vector<double> gv;
  for (int i = 0; i < n; ++i) {
    if (gx.empty() || xs[i] > gx.back()) {
      gx.push_back(xs[i]);
      gv.push_back(vals[i]);
    }
  }
  // declared tolerance from exact values at cell midpoints
  auto probe = make_gridded(gx, gv, m0, upper);
  const int checks = 16;
  std::vector<double> rel(checks, 0.0);
  parallel_for(
      static_cast<std::size_t>(checks),
      [&](std::size_t j) {
        const std::size_t cell = (gx.size() - 2) * (2 * j + 1) / (2 * checks);
        const double xm = coord.from_s(0.5 * (coord.to_s(gx[cell]) + coord.to_s(gx[cell + 1])));
        double exact = kLogZero;
        try {
          exact = product_tail(F, G, xm, q).log_p();
        } catch (const QuadratureError& e) {
          exact = e.partial_log_value();
        }
        const double approx = probe.log_sf(xm);
        if (exact > kLogZero && approx > kLogZero) rel[j] = std::fabs(std::expm1(approx - exact));
      },
      grid.workers);
  const double declared = 2.0 * *std::max_element(rel.begin(), rel.end()) + 10.0 * q.rel_tol +
                          *std::max_element(noisy.begin(), noisy.end());
  return make_gridded(std::move(gx), std::move(gv), m0, upper, declared);
}

namespace {

TailResult sum_tail_lattice(const Distribution& v, const LatticeView& lv, double x, const QuadratureSpec& q) {
  const double s = lv.span;
  const double m = std::floor(x / s * (1.0 + 1e-15));
  Budget out;
  out.value.add(lv.log_sf_index(m));
  if (v.mass_at_zero() > 0.0) out.value.add(std::log(v.mass_at_zero()) + lv.log_sf_index(m));
  if (m >= 1.0) {
    auto log_f = [&](double n) { return lv.log_mass(n) + lv.log_sf_index(m - n); };
    const auto r = lattice_series(log_f, 1.0, m, lv.log_sf_index, kLogZero, {}, q);
    out.value.add(r.log_value);
    out.error.add(r.log_error);
    out.panels += r.panels;
  }
  return finish(out);
}

// tail(V) at x plus int_[0,x] tail(W)(x - y) V(dy).
TailResult sum_tail_general(const Distribution& w, const Distribution& v, double x, const QuadratureSpec& q) {
  Budget out;
  const double lv_x = v.log_sf(x);
  out.value.add(lv_x);
  if (v.mass_at_zero() > 0.0) out.value.add(std::log(v.mass_at_zero()) + w.log_sf(x));
  for (const Atom& a : v.atoms(0.0, x)) out.value.add(std::log(a.mass) + w.log_sf(x - a.location));
  if (v.continuous_mass() > 0.0 && x > 0.0) {
    const double lb = out.value.value();
    const double log_abs_tol = std::log(q.rel_tol) + lb;
    const double h = 0.5 * x;
    // lower half in t = ln y
    double y_lo = v.support_lo();
    if (y_lo >= h) {
      y_lo = h;
    } else if (y_lo <= 0.0) {
      const double ltt = std::log(q.truncation_tail) + lb;
      double la = std::log(h);
      while (log_cdf_positive(v, std::exp(la)) > ltt && la > std::log(kTiny) + 8.0) la -= 8.0;
      y_lo = std::exp(la);
      if (log_cdf_positive(v, y_lo) <= ltt) {
        y_lo = std::exp(bisect_ln(la, std::log(h), [&](double y) { return log_cdf_positive(v, y) > ltt; }).first);
      }
      out.trunc.add(log_cdf_positive(v, y_lo) + w.log_sf(x - y_lo));
    }
    if (y_lo < h) {
      std::vector<double> pts;
      for (double k : v.kinks(y_lo, h)) pts.push_back(std::log(k));
      for (double k : w.kinks(x - h, x - y_lo)) pts.push_back(std::log(x - k));
      auto f = [&](double t) {
        const double y = std::exp(t);
        const double lp = v.log_pdf(y);
        return lp == kLogZero ? kLogZero : lp + w.log_sf(x - y) + t;
      };
      const auto r = integrate_log(f, make_breaks(std::log(y_lo), std::log(h), pts, 1.0), q.rel_tol, q.max_panels,
                                   log_abs_tol);
      check_converged(r, "sum convolution");
      out.value.add(r.log_value);
      out.error.add(r.log_abs_error);
      out.panels += r.panels;
    }
    // upper half in t = ln u, u = x - y; the sliver u < u_lo is a rectangle
    const double u_lo = h * 1e-12;
    {
      std::vector<double> pts;
      for (double k : w.kinks(u_lo, h)) pts.push_back(std::log(k));
      for (double k : v.kinks(x - h, x - u_lo)) pts.push_back(std::log(x - k));
      auto f = [&](double t) {
        const double u = std::exp(t);
        const double lp = v.log_pdf(x - u);
        return lp == kLogZero ? kLogZero : lp + w.log_sf(u) + t;
      };
      const auto r = integrate_log(f, make_breaks(std::log(u_lo), std::log(h), pts, 1.0), q.rel_tol, q.max_panels,
                                   log_abs_tol);
      check_converged(r, "sum convolution");
      out.value.add(r.log_value);
      out.error.add(r.log_abs_error);
      out.panels += r.panels;
      const double sliver = std::log(u_lo) + v.log_pdf(x - 0.5 * u_lo) + w.log_sf(0.5 * u_lo);
      out.value.add(sliver);
      out.error.add(sliver);
    }
  }
  return finish(out);
}

std::vector<Atom> convolve_atoms(const std::vector<Atom>& a, const std::vector<Atom>& b) {
  std::map<double, double> acc;
  for (const Atom& p : a) {
    for (const Atom& r : b) acc[p.location + r.location] += p.mass * r.mass;
  }
  std::vector<Atom> out;
  for (const auto& [loc, mass] : acc) {
    if (!out.empty() && std::fabs(loc - out.back().location) <= 1e-12 * std::max(1.0, std::fabs(loc))) {
      out.back().mass += mass;
    } else {
      out.push_back({loc, mass});
    }
  }
  return out;
}

// V*j gridded over [0, x_max] on a merged geometric and uniform node set,
// given prev = V*(j-1) (V itself for j = 2).
Distribution grid_sum_law(const Distribution& v, const Distribution& prev, int j, double x_max,
                          const QuadratureSpec& q) {
  std::vector<double> nodes;
  const int half = 512;
  const double lo = std::max(x_max * 1e-9, v.support_lo() > 0.0 ? j * v.support_lo() * 0.5 : 0.0);
  for (int i = 0; i < half; ++i) {
    nodes.push_back(lo * std::pow(x_max / lo, static_cast<double>(i) / (half - 1)));
    nodes.push_back(x_max * (i + 1) / half);
  }
  if (v.support_lo() > 0.0) nodes.push_back(j * v.support_lo());
  const double upper = std::isfinite(v.support_hi()) ? j * v.support_hi() : kInf;
  std::sort(nodes.begin(), nodes.end());
  std::vector<double> xs;
  for (double n : nodes) {
    if (n < upper && (xs.empty() || n > xs.back() * (1.0 + 1e-12))) xs.push_back(n);
  }
  std::vector<double> vals(xs.size());
  parallel_for(xs.size(), [&](std::size_t i) { vals[i] = sum_tail_general(prev, v, xs[i], q).value.log_p(); });
  while (vals.size() > 2 && vals.back() == kLogZero) {
    vals.pop_back();
    xs.pop_back();
  }
  return make_gridded(std::move(xs), std::move(vals), std::pow(v.mass_at_zero(), j), upper);
}

}  // namespace

TailResult sum_self_tail_detailed(const Distribution& V, int k, double x, const QuadratureSpec& q) {
  q.validate();
  require_nonnegative(V, "V");
  if (k < 1 || k > 8) throw ParameterError("k", "must lie in [1, 8]");
  if (std::isnan(x)) throw std::invalid_argument("sum_self_tail: x is NaN");
  TailResult r;
  if (k == 1) {
    r.value = V.tail(x);
    return r;
  }
  if (x < 0.0) {
    r.value = LogTailValue::one();
    return r;
  }
  if (finite_atomic(V)) {
    const auto base = all_atoms(V);
    auto acc = base;
    for (int j = 1; j < k; ++j) acc = convolve_atoms(acc, base);
    LogAccumulator above;
    for (const Atom& a : acc) {
      if (a.location > x) above.add(std::log(a.mass));
    }
    r.value = LogTailValue(std::min(0.0, above.value()));
    return r;
  }
  if (V.has_infinite_atoms()) {
    const auto lv = V.lattice();
    if (!lv || V.continuous_mass() > 0.0) {
      throw std::invalid_argument("sum_self_tail: infinite atom sets need a pure lattice law");
    }
    if (k > 2) throw std::invalid_argument("sum_self_tail: lattice laws are supported for k <= 2");
    return sum_tail_lattice(V, *lv, x, q);
  }
  Distribution w = V;
  for (int j = 2; j < k; ++j) w = grid_sum_law(V, w, j, x, q);
  return sum_tail_general(w, V, x, q);
}

LogTailValue sum_self_tail(const Distribution& V, int k, double x, const QuadratureSpec& q) {
  return sum_self_tail_detailed(V, k, x, q).value;
}

McEstimate mc_product_tail(const Distribution& F, const Distribution& G, double x, std::uint64_t n,
                           std::uint64_t seed, int workers) {
  if (n == 0) throw ParameterError("n", "must be positive");
  const std::uint64_t batches = (n + kMcBatch - 1) / kMcBatch;
  std::vector<std::uint64_t> hits(batches, 0);
  parallel_for(
      batches,
      [&](std::size_t b) {
        Rng rng(mix_seed(seed, b));
        const std::uint64_t count = std::min<std::uint64_t>(kMcBatch, n - b * kMcBatch);
        std::uint64_t h = 0;
        for (std::uint64_t i = 0; i < count; ++i) {
          const double xv = F.sample(rng);
          const double yv = G.sample(rng);
          if (xv * yv > x) ++h;
        }
        hits[b] = h;
      },
      workers);
  McEstimate out;
  out.n = n;
  out.seed = seed;
  for (std::uint64_t h : hits) out.hits += h;
  const double nn = static_cast<double>(n);
  out.estimate = static_cast<double>(out.hits) / nn;
  out.ci_halfwidth = 1.959963984540054 * std::sqrt(out.estimate * (1.0 - out.estimate) / nn);
  // exact one-sided bound for zero hits, normal bound otherwise
  if (out.hits == 0) {
    out.upper_bound = -std::expm1(std::log(0.025) / nn);
  } else {
    out.upper_bound = std::min(1.0, out.estimate + out.ci_halfwidth);
  }
  return out;
}

}  // namespace htail
