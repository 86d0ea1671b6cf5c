#include "htail/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "htail/special.hpp"

namespace htail {

double uniform_open01(Rng& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over a combined state.
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double DistributionImpl::log_cdf(double x) const { return log1m_exp(log_sf(x)); }

double DistributionImpl::log_sf_continuous(double x) const {
  const double cm = continuous_mass();
  if (cm <= 0.0) return kLogZero;
  if (cm >= 1.0) return log_sf(x);
  LogAccumulator above;
  for (const Atom& a : atoms(0.0, std::numeric_limits<double>::infinity())) {
    if (a.location > x) above.add(std::log(a.mass));
  }
  if (x < 0.0 && mass_at_zero() > 0.0) above.add(std::log(mass_at_zero()));
  const double total = log_sf(x);
  const double atom_part = above.value();
  if (atom_part >= total) return kLogZero;
  return log_sub(total, atom_part);
}

std::vector<Atom> DistributionImpl::atoms(double, double) const { return {}; }

std::vector<double> DistributionImpl::kinks(double, double) const { return {}; }

Distribution::Distribution(std::shared_ptr<const DistributionImpl> impl) : impl_(std::move(impl)) {
  if (!impl_) throw std::invalid_argument("Distribution: null implementation");
}

double Distribution::sf(double x) const { return std::exp(impl_->log_sf(x)); }

bool Distribution::has_atoms() const {
  if (impl_->has_infinite_atoms() || impl_->mass_at_zero() > 0.0) return true;
  return !impl_->atoms(0.0, std::numeric_limits<double>::infinity()).empty();
}

std::vector<double> Distribution::sample(std::uint64_t seed, std::size_t n) const {
  Rng rng(mix_seed(seed, 0));
  std::vector<double> out(n);
  for (double& v : out) v = impl_->sample(rng);
  return out;
}

namespace {

// Bisection on u = ln x over [lo, hi] for a monotone predicate that is false
// at lo and true at hi; returns the boundary.
template <typename Pred>
double bisect_log(double lo, double hi, Pred pred) {
  double a = std::log(lo);
  double b = std::log(hi);
  for (int i = 0; i < 200 && b - a > 1e-15 * std::max(1.0, std::fabs(b)); ++i) {
    const double m = 0.5 * (a + b);
    if (pred(std::exp(m))) b = m; else a = m;
  }
  return std::exp(b);
}

}  // namespace

double Distribution::upper_quantile(double log_p) const {
  double lo = std::max(support_lo(), 1e-300);
  if (log_sf(lo) <= log_p) return lo;
  double hi = support_hi();
  if (!std::isfinite(hi)) {
    hi = std::max(2.0 * lo, 1.0);
    while (log_sf(hi) > log_p && hi < 1e300) hi *= 16.0;
  }
  return bisect_log(lo, hi, [&](double x) { return log_sf(x) <= log_p; });
}

double Distribution::lower_quantile(double log_p) const {
  double hi = support_hi();
  if (!std::isfinite(hi)) hi = upper_quantile(log1m_exp(log_p));
  double lo = std::max(support_lo(), 1e-300);
  if (log_cdf(lo) > log_p) return lo;
  // largest x with cdf <= p: predicate "cdf > p" flips from false to true.
  return bisect_log(lo, hi, [&](double x) { return log_cdf(x) > log_p; });
}

std::optional<double> detect_span(const Distribution& dist, double mass_floor, double loc_ceiling) {
  const auto atoms = dist.atoms(mass_floor, loc_ceiling);
  if (atoms.empty()) return std::nullopt;
  if (atoms.size() == 1) return atoms.front().location;
  double span = 0.0;
  for (std::size_t i = 1; i < atoms.size(); ++i) {
    const double gap = atoms[i].location - atoms[i - 1].location;
    span = span == 0.0 ? gap : real_gcd(span, gap, 1e-9);
    if (span == 0.0) return std::nullopt;
  }
  // every location must sit on the lattice generated by the span
  for (const Atom& a : atoms) {
    const double k = a.location / span;
    if (std::fabs(k - std::round(k)) > 1e-9 * std::max(1.0, k)) return std::nullopt;
  }
  return span;
}

}  // namespace htail
