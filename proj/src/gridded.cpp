#include "htail/gridded.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace htail {

namespace {

// Hermite basis evaluation on [s0, s1].
void hermite(double s0, double s1, double v0, double v1, double d0, double d1, double s, double& value,
             double& slope) {
  const double h = s1 - s0;
  const double t = (s - s0) / h;
  const double t2 = t * t;
  const double t3 = t2 * t;
  value = (2 * t3 - 3 * t2 + 1) * v0 + (t3 - 2 * t2 + t) * h * d0 + (-2 * t3 + 3 * t2) * v1 + (t3 - t2) * h * d1;
  slope = ((6 * t2 - 6 * t) * v0 + (3 * t2 - 4 * t + 1) * h * d0 + (-6 * t2 + 6 * t) * v1 + (3 * t2 - 2 * t) * h * d1) / h;
}

}  // namespace

GriddedDistribution::GriddedDistribution(std::vector<double> x, std::vector<double> log_sf, double mass_at_zero,
                                         double upper_support, double declared_tolerance)
    : mass_at_zero_(mass_at_zero), upper_support_(upper_support), declared_tolerance_(declared_tolerance) {
  if (x.size() != log_sf.size()) throw std::invalid_argument("gridded: x and log_sf sizes differ");
  if (!(mass_at_zero >= 0.0 && mass_at_zero < 1.0)) throw ParameterError("mass_at_zero", "must lie in [0, 1)");
  // drop trailing zero-probability nodes
  while (!log_sf.empty() && log_sf.back() == kLogZero) {
    log_sf.pop_back();
    x.pop_back();
  }
  if (x.size() < 2) throw std::invalid_argument("gridded: need at least two nodes with positive tail");
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || (i > 0 && !(x[i] > x[i - 1]))) {
      throw std::invalid_argument("gridded: x must be positive and strictly increasing");
    }
    if (std::isfinite(upper_support) && !(x[i] < upper_support)) {
      throw std::invalid_argument("gridded: nodes must lie below the upper support");
    }
    if (std::isnan(log_sf[i]) || log_sf[i] == kLogZero) throw std::invalid_argument("gridded: bad log_sf value");
  }
  const double top = std::log1p(-mass_at_zero);
  double running = top;
  for (double& v : log_sf) {
    const double repaired = std::min(v, running);
    max_repair_ = std::max(max_repair_, v - repaired);
    v = repaired;
    running = v;
  }
  log_x_.resize(x.size());
  s_.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    log_x_[i] = std::log(x[i]);
    s_[i] = to_s(x[i]);
  }
  log_sf_ = std::move(log_sf);
  x0_ = x.front();

  const std::size_t n = s_.size();
  std::vector<double> secant(n - 1);
  for (std::size_t k = 0; k + 1 < n; ++k) secant[k] = (log_sf_[k + 1] - log_sf_[k]) / (s_[k + 1] - s_[k]);
  const double h0 = s_[1] - s_[0];
  bool uniform = true;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    if (std::fabs((s_[k + 1] - s_[k]) - h0) > 1e-9 * std::fabs(h0)) uniform = false;
  }
  slope_.assign(n, 0.0);
  const auto& v = log_sf_;
  for (std::size_t i = 0; i < n; ++i) {
    if (n == 2) {
      slope_[i] = secant[0];
    } else if (uniform && i >= 2 && i + 2 < n) {
      slope_[i] = (v[i - 2] - 8 * v[i - 1] + 8 * v[i + 1] - v[i + 2]) / (12 * h0);
    } else if (i == 0) {
      slope_[i] = uniform ? (-3 * v[0] + 4 * v[1] - v[2]) / (2 * h0) : secant[0];
    } else if (i == n - 1) {
      slope_[i] = uniform ? (3 * v[n - 1] - 4 * v[n - 2] + v[n - 3]) / (2 * h0) : secant[n - 2];
    } else {
      const double hl = s_[i] - s_[i - 1];
      const double hr = s_[i + 1] - s_[i];
      slope_[i] = (hr * secant[i - 1] + hl * secant[i]) / (hl + hr);
    }
    slope_[i] = std::min(slope_[i], 0.0);
  }
  // Fritsch-Carlson limiter keeps each cell monotone.
  for (std::size_t k = 0; k + 1 < n; ++k) {
    if (secant[k] == 0.0) {
      slope_[k] = 0.0;
      slope_[k + 1] = 0.0;
      continue;
    }
    const double a = slope_[k] / secant[k];
    const double b = slope_[k + 1] / secant[k];
    const double r = a * a + b * b;
    if (r > 9.0) {
      const double tau = 3.0 / std::sqrt(r);
      slope_[k] = tau * a * secant[k];
      slope_[k + 1] = tau * b * secant[k];
    }
  }
  tail_slope_ = slope_.back();
  if (tail_slope_ >= 0.0) tail_slope_ = secant.back();
  if (tail_slope_ >= 0.0) tail_slope_ = -1.0;
}

double GriddedDistribution::to_s(double x) const {
  if (std::isfinite(upper_support_)) return std::log(x) - std::log(upper_support_ - x);
  return std::log(x);
}

double GriddedDistribution::from_s(double s) const {
  if (std::isfinite(upper_support_)) return upper_support_ / (1.0 + std::exp(-s));
  return std::exp(s);
}

double GriddedDistribution::ds_dx(double x) const {
  if (std::isfinite(upper_support_)) return 1.0 / x + 1.0 / (upper_support_ - x);
  return 1.0 / x;
}

void GriddedDistribution::eval_s(double s, double& value, double& slope) const {
  const std::size_t n = s_.size();
  if (s >= s_.back()) {
    slope = tail_slope_;
    value = log_sf_.back() + tail_slope_ * (s - s_.back());
    return;
  }
  auto it = std::upper_bound(s_.begin(), s_.end(), s);
  std::size_t k = static_cast<std::size_t>(it - s_.begin());
  k = std::clamp<std::size_t>(k, 1, n - 1) - 1;
  hermite(s_[k], s_[k + 1], log_sf_[k], log_sf_[k + 1], slope_[k], slope_[k + 1], s, value, slope);
  // keep inside the cell's bracket; guards rounding at the ends
  value = std::clamp(value, log_sf_[k + 1], log_sf_[k]);
  slope = std::min(slope, 0.0);
}

double GriddedDistribution::log_sf(double x) const {
  if (x < 0.0) return 0.0;
  if (x >= upper_support_) return kLogZero;
  const double top = 1.0 - mass_at_zero_;
  if (x < x0_) {
    const double sf0 = std::exp(log_sf_.front());
    return std::log(top - (top - sf0) * (x / x0_));
  }
  double value = 0.0;
  double slope = 0.0;
  eval_s(to_s(x), value, slope);
  return value;
}

double GriddedDistribution::log_cdf(double x) const {
  if (x < 0.0) return kLogZero;
  if (x < x0_) {
    const double top = 1.0 - mass_at_zero_;
    const double sf0 = std::exp(log_sf_.front());
    const double cdf = mass_at_zero_ + (top - sf0) * (x / x0_);
    return cdf > 0.0 ? std::log(cdf) : kLogZero;
  }
  return log1m_exp(log_sf(x));
}

double GriddedDistribution::log_pdf(double x) const {
  if (x <= 0.0 || x >= upper_support_) return kLogZero;
  if (x < x0_) {
    const double top = 1.0 - mass_at_zero_;
    const double drop = top - std::exp(log_sf_.front());
    return drop > 0.0 ? std::log(drop / x0_) : kLogZero;
  }
  double value = 0.0;
  double slope = 0.0;
  eval_s(to_s(x), value, slope);
  if (slope >= 0.0) return kLogZero;
  return value + std::log(-slope) + std::log(ds_dx(x));
}

double GriddedDistribution::log_sf_continuous(double x) const {
  if (x < 0.0) return std::log1p(-mass_at_zero_);
  return log_sf(x);
}

double GriddedDistribution::support_lo() const { return 0.0; }

std::vector<double> GriddedDistribution::kinks(double lo, double hi) const {
  std::vector<double> out;
  for (double k : {x0_, std::exp(log_x_.back())}) {
    if (k > lo && k < hi) out.push_back(k);
  }
  return out;
}

double GriddedDistribution::sample(Rng& rng) const {
  const double u = uniform_open01(rng);
  const double top = 1.0 - mass_at_zero_;
  if (u >= top) return 0.0;
  const double sf0 = std::exp(log_sf_.front());
  if (u > sf0) return x0_ * (top - u) / (top - sf0);
  const double lu = std::log(u);
  if (lu <= log_sf_.back()) return from_s(s_.back() + (lu - log_sf_.back()) / tail_slope_);
  // last node with log_sf >= lu
  auto it = std::lower_bound(log_sf_.begin(), log_sf_.end(), lu, [](double a, double b) { return a > b; });
  std::size_t k = static_cast<std::size_t>(it - log_sf_.begin());
  if (k == 0) k = 1;
  double a = s_[k - 1];
  double b = s_[k];
  for (int i = 0; i < 100 && b - a > 1e-14 * std::max(1.0, std::fabs(a)); ++i) {
    const double m = 0.5 * (a + b);
    double value = 0.0;
    double slope = 0.0;
    eval_s(m, value, slope);
    if (value > lu) a = m; else b = m;
  }
  return from_s(0.5 * (a + b));
}

nlohmann::json GriddedDistribution::to_json() const {
  nlohmann::json params = {{"log_x", log_x_},
                           {"log_sf", log_sf_},
                           {"mass_at_zero", mass_at_zero_},
                           {"declared_tolerance", declared_tolerance_}};
  if (std::isfinite(upper_support_)) params["upper_support"] = upper_support_;
  return {{"family", "gridded"}, {"params", params}};
}

Distribution make_gridded(std::vector<double> x, std::vector<double> log_sf, double mass_at_zero,
                          double upper_support, double declared_tolerance) {
  return Distribution(std::make_shared<GriddedDistribution>(std::move(x), std::move(log_sf), mass_at_zero,
                                                            upper_support, declared_tolerance));
}

const GriddedDistribution* as_gridded(const Distribution& dist) {
  return dynamic_cast<const GriddedDistribution*>(&dist.impl());
}

}  // namespace htail
