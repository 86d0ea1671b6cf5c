#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "htail/log_space.hpp"
#include "json.hpp"

namespace htail {

using Rng = std::mt19937_64;

/// Uniform draw on the open interval (0, 1) using the top 53 bits.
double uniform_open01(Rng& rng);

/// Derive a well-mixed 64-bit seed from (seed, stream) so batches are independent.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

/// Invalid family parameter; carries the offending parameter name.
class ParameterError : public std::invalid_argument {
 public:
  ParameterError(std::string parameter, const std::string& message)
      : std::invalid_argument(parameter + ": " + message), parameter_(std::move(parameter)) {}
  const std::string& parameter() const { return parameter_; }

 private:
  std::string parameter_;
};

struct Atom {
  double location;
  double mass;
};

/// Smooth view of a lattice law with infinitely many atoms at index * span,
/// index = 1, 2, ...
///
/// log_mass and log_sf_index are defined for real arguments and agree with
/// the law at integers, so sums over atoms can be approximated by integrals
/// in the far range.
struct LatticeView {
  double span = 1.0;
  std::function<double(double)> log_mass;      // log P(X = n * span)
  std::function<double(double)> log_sf_index;  // log P(X > m * span)
};

/// Implementation interface for a law on the real line, usually [0, inf).
///
/// Every survival evaluation is carried in log-space. Values are immutable
/// after construction, so a distribution can be shared across threads.
class DistributionImpl {
 public:
  virtual ~DistributionImpl() = default;

  virtual std::string family() const = 0;

  /// log P(X > x).
  virtual double log_sf(double x) const = 0;

  /// log P(X <= x). Default derives it from log_sf.
  virtual double log_cdf(double x) const;

  /// log P(X > x - t), for callers whose x is too large to subtract t exactly.
  virtual double log_sf_shifted(double x, double t) const { return log_sf(x - t); }

  /// log density of the absolutely continuous part; kLogZero where there is none.
  virtual double log_pdf(double x) const = 0;

  /// Total mass of the absolutely continuous part.
  virtual double continuous_mass() const { return 1.0; }

  /// log of the tail of the continuous sub-measure at x.
  virtual double log_sf_continuous(double x) const;

  virtual double support_lo() const = 0;
  virtual double support_hi() const = 0;

  /// P(X = 0), kept apart from the positive atoms D[V].
  virtual double mass_at_zero() const { return 0.0; }

  /// Positive atoms with mass >= mass_floor and location <= loc_ceiling, ascending.
  virtual std::vector<Atom> atoms(double mass_floor, double loc_ceiling) const;

  virtual bool has_infinite_atoms() const { return false; }
  virtual std::optional<LatticeView> lattice() const { return std::nullopt; }

  /// Points in (lo, hi) where the survival function is not smooth.
  virtual std::vector<double> kinks(double lo, double hi) const;

  virtual double sample(Rng& rng) const = 0;

  virtual nlohmann::json to_json() const = 0;
};

/// A distribution handle with value semantics over a shared immutable implementation.
class Distribution {
 public:
  explicit Distribution(std::shared_ptr<const DistributionImpl> impl);

  std::string family() const { return impl_->family(); }
  double log_sf(double x) const { return impl_->log_sf(x); }
  LogTailValue tail(double x) const { return LogTailValue(impl_->log_sf(x)); }
  double sf(double x) const;
  double log_cdf(double x) const { return impl_->log_cdf(x); }
  double log_sf_shifted(double x, double t) const { return impl_->log_sf_shifted(x, t); }
  double log_pdf(double x) const { return impl_->log_pdf(x); }
  double continuous_mass() const { return impl_->continuous_mass(); }
  double log_sf_continuous(double x) const { return impl_->log_sf_continuous(x); }
  double support_lo() const { return impl_->support_lo(); }
  double support_hi() const { return impl_->support_hi(); }
  double mass_at_zero() const { return impl_->mass_at_zero(); }
  std::vector<Atom> atoms(double mass_floor, double loc_ceiling) const {
    return impl_->atoms(mass_floor, loc_ceiling);
  }
  bool has_infinite_atoms() const { return impl_->has_infinite_atoms(); }
  bool has_atoms() const;
  std::optional<LatticeView> lattice() const { return impl_->lattice(); }
  std::vector<double> kinks(double lo, double hi) const { return impl_->kinks(lo, hi); }
  double sample(Rng& rng) const { return impl_->sample(rng); }
  std::vector<double> sample(std::uint64_t seed, std::size_t n) const;
  nlohmann::json to_json() const { return impl_->to_json(); }

  /// Generic quantile search: smallest x with log_sf(x) <= log_p, by bisection on ln x.
  double upper_quantile(double log_p) const;
  /// Largest x with log_cdf(x) <= log_p, by bisection on ln x.
  double lower_quantile(double log_p) const;

  const DistributionImpl& impl() const { return *impl_; }
  std::shared_ptr<const DistributionImpl> shared_impl() const { return impl_; }

 private:
  std::shared_ptr<const DistributionImpl> impl_;
};

// Parametric families.
Distribution regvar(double beta, double x_min = 1.0);
Distribution weibull_type(double alpha);
Distribution exponential(double rate = 1.0);
Distribution uniform(double lo, double hi);
Distribution degenerate(double c);
Distribution lattice_power(double beta);
Distribution discrete(std::vector<Atom> atoms);
Distribution example31_g(double alpha, double x1);
Distribution example31_f(double alpha);

// Composites.
Distribution scale(const Distribution& base, double c);
Distribution positive_part(const Distribution& base);
Distribution shifted(const Distribution& base, double shift);

/// Knots x_n of the example31_G law, as natural logs, generated by
/// ln x_{n+1} = (1 + 1/alpha) ln x_n until ln x_n exceeds 600.
std::vector<double> example31_log_knots(double alpha, double x1);

/// Build a distribution from a JSON family descriptor
/// {"family": <tag>, "params": {...}, "base": {...}}.
Distribution make_family(const nlohmann::json& spec);

/// Lattice span of a law: gcd of the gaps between its positive atoms (mass >=
/// floor, location <= ceiling) within 1e-9; a single atom is its own span.
/// nullopt when there are no atoms or Euclid does not settle.
std::optional<double> detect_span(const Distribution& dist, double mass_floor = 1e-6,
                                  double loc_ceiling = 20.0);

}  // namespace htail
