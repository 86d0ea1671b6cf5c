#include "htail/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <queue>

#include "htail/log_space.hpp"

namespace htail {

namespace {

// Kronrod 15-point abscissae (non-negative half) and weights; every other
// abscissa from index 1 belongs to the embedded 7-point Gauss rule.
constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467768523783,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
  double a;
  double b;
  double log_value;
  double log_error;
};

struct ByError {
  bool operator()(const Panel& p, const Panel& q) const { return p.log_error < q.log_error; }
};

Panel gk15(const std::function<double(double)>& log_f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  std::array<double, 15> lv;
  for (int j = 0; j < 7; ++j) {
    lv[2 * j] = log_f(c - h * kXgk[j]);
    lv[2 * j + 1] = log_f(c + h * kXgk[j]);
  }
  lv[14] = log_f(c);
  double m = kLogZero;
  for (double v : lv) {
    if (!std::isnan(v)) m = std::max(m, v);
  }
  Panel p{a, b, kLogZero, kLogZero};
  if (m == kLogZero || std::isnan(m)) return p;
  auto val = [&](int i) { return std::isnan(lv[i]) ? 0.0 : std::exp(lv[i] - m); };
  double k = kWgk[7] * val(14);
  double g = kWg[3] * val(14);
  for (int j = 0; j < 7; ++j) {
    const double pair = val(2 * j) + val(2 * j + 1);
    k += kWgk[j] * pair;
    if (j % 2 == 1) g += kWg[j / 2] * pair;
  }
  k *= h;
  g *= h;
  p.log_value = k > 0.0 ? m + std::log(k) : kLogZero;
  const double err = std::fabs(k - g);
  p.log_error = err > 0.0 ? m + std::log(err) : kLogZero;
  return p;
}

}  // namespace

double QuadResult::rel_error() const {
  if (log_abs_error == kLogZero) return 0.0;
  if (log_value == kLogZero) return std::numeric_limits<double>::infinity();
  return std::exp(log_abs_error - log_value);
}

QuadResult integrate_log(const std::function<double(double)>& log_f, const std::vector<double>& breaks,
                         double rel_tol, int max_panels, double log_abs_tol) {
  QuadResult out;
  if (breaks.size() < 2) {
    out.log_value = kLogZero;
    out.log_abs_error = kLogZero;
    out.converged = true;
    return out;
  }
  std::priority_queue<Panel, std::vector<Panel>, ByError> heap;
  std::vector<Panel> done;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    if (breaks[i + 1] > breaks[i]) heap.push(gk15(log_f, breaks[i], breaks[i + 1]));
  }
  int panels = static_cast<int>(heap.size());

  // Running sums relative to a reference exponent, refreshed exactly when
  // the cheap estimate says we are done.
  auto totals = [&](double& log_value, double& log_error) {
    LogAccumulator v;
    LogAccumulator e;
    for (const Panel& p : done) {
      v.add(p.log_value);
      e.add(p.log_error);
    }
    auto copy = heap;
    while (!copy.empty()) {
      v.add(copy.top().log_value);
      e.add(copy.top().log_error);
      copy.pop();
    }
    log_value = v.value();
    log_error = e.value();
  };
  double ref = kLogZero;
  double sum_v = 0.0;
  double sum_e = 0.0;
  auto rebase = [&](double new_ref) {
    if (ref != kLogZero) {
      const double f = std::exp(ref - new_ref);
      sum_v *= f;
      sum_e *= f;
    }
    ref = new_ref;
  };
  auto account = [&](const Panel& p, double sign) {
    const double top = std::max(p.log_value, p.log_error);
    if (top == kLogZero) return;
    if (top > ref) rebase(top);
    sum_v += sign * std::exp(p.log_value - ref);
    sum_e += sign * std::exp(p.log_error - ref);
  };
  {
    auto copy = heap;
    while (!copy.empty()) {
      account(copy.top(), 1.0);
      copy.pop();
    }
  }
  const double log_tol = std::log(rel_tol);
  auto satisfied = [&](double log_value, double log_error) {
    if (log_error == kLogZero) return true;
    return log_error <= std::max(log_tol + log_value, log_abs_tol);
  };
  while (true) {
    const double est_v = sum_v > 0.0 ? ref + std::log(sum_v) : kLogZero;
    const double est_e = sum_e > 0.0 ? ref + std::log(sum_e) : kLogZero;
    if (heap.empty() || satisfied(est_v, est_e) || panels >= max_panels) {
      double lv = 0.0;
      double le = 0.0;
      totals(lv, le);
      if (heap.empty() || satisfied(lv, le) || panels >= max_panels) {
        out.log_value = lv;
        out.log_abs_error = le;
        out.panels = panels;
        out.converged = satisfied(lv, le);
        return out;
      }
      // cheap sums drifted; restart them from the exact totals
      ref = std::max(lv, le);
      sum_v = lv == kLogZero ? 0.0 : std::exp(lv - ref);
      sum_e = le == kLogZero ? 0.0 : std::exp(le - ref);
    }
    Panel worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      // cannot split further in floating point
      done.push_back(worst);
      continue;
    }
    account(worst, -1.0);
    Panel left = gk15(log_f, worst.a, mid);
    Panel right = gk15(log_f, mid, worst.b);
    account(left, 1.0);
    account(right, 1.0);
    heap.push(left);
    heap.push(right);
    ++panels;
  }
}

}  // namespace htail
