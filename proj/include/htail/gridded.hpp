#pragma once

#include <limits>
#include <vector>

#include "htail/distribution.hpp"

namespace htail {

/// A law known through its log-tail at a set of grid nodes.
///
/// Interpolation is a monotone cubic Hermite curve (Fritsch-Carlson limited)
/// in the coordinates (s, log sf), where s = ln x for unbounded support and
/// s = ln(x / (hi - x)) when the support ends at a finite hi. The second form
/// turns power-like behaviour at both ends of (0, hi) into straight lines.
///
/// Outside the nodes: below the first node the remaining mass is spread
/// uniformly down to 0 (after any atom at 0); above the last node the
/// curve continues with its final slope in s.
class GriddedDistribution : public DistributionImpl {
 public:
  /// x must be positive and strictly increasing. Non-monotone log_sf values
  /// are repaired by a running minimum; trailing -inf values are dropped.
  GriddedDistribution(std::vector<double> x, std::vector<double> log_sf, double mass_at_zero = 0.0,
                      double upper_support = std::numeric_limits<double>::infinity(),
                      double declared_tolerance = 0.0);

  std::string family() const override { return "gridded"; }
  double log_sf(double x) const override;
  double log_cdf(double x) const override;
  double log_pdf(double x) const override;
  double continuous_mass() const override { return 1.0 - mass_at_zero_; }
  double log_sf_continuous(double x) const override;
  double support_lo() const override;
  double support_hi() const override { return upper_support_; }
  double mass_at_zero() const override { return mass_at_zero_; }
  std::vector<double> kinks(double lo, double hi) const override;
  double sample(Rng& rng) const override;
  nlohmann::json to_json() const override;

  const std::vector<double>& log_x_grid() const { return log_x_; }
  const std::vector<double>& log_sf_values() const { return log_sf_; }
  /// Largest change made by the monotone repair, in log units.
  double max_repair() const { return max_repair_; }
  /// Interpolation tolerance declared by whoever built the grid (relative, linear space).
  double declared_tolerance() const { return declared_tolerance_; }

 private:
  double to_s(double x) const;
  double from_s(double s) const;
  double ds_dx(double x) const;
  // log sf and its s-derivative inside or beyond the grid, for x >= first node.
  void eval_s(double s, double& value, double& slope) const;

  std::vector<double> log_x_;
  std::vector<double> log_sf_;
  std::vector<double> s_;
  std::vector<double> slope_;
  double mass_at_zero_;
  double upper_support_;
  double declared_tolerance_;
  double max_repair_ = 0.0;
  double x0_;
  double tail_slope_;
};

Distribution make_gridded(std::vector<double> x, std::vector<double> log_sf, double mass_at_zero = 0.0,
                          double upper_support = std::numeric_limits<double>::infinity(),
                          double declared_tolerance = 0.0);

/// Downcast helper; nullptr when the distribution is not gridded.
const GriddedDistribution* as_gridded(const Distribution& dist);

}  // namespace htail
