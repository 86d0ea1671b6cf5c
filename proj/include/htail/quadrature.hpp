#pragma once

#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace htail {

struct QuadResult {
  double log_value = 0.0;      // log of the integral
  double log_abs_error = 0.0;  // log of the summed Kronrod-Gauss differences
  int panels = 0;
  bool converged = false;

  /// Achieved relative error, exp(log_abs_error - log_value).
  double rel_error() const;
};

/// Adaptive Gauss-Kronrod (7/15) integration of a positive integrand given
/// by its logarithm.
///
/// Panel sums are formed relative to each panel's largest log-value, so the
/// integrand may span hundreds of orders of magnitude. `breaks` must be
/// sorted and contain both end points; every interval between consecutive
/// breaks starts as its own panel. The worst panel is bisected until the
/// summed error falls below max(rel_tol * value, exp(log_abs_tol)) or the
/// panel budget is spent (converged = false, partial result kept).
QuadResult integrate_log(const std::function<double(double)>& log_f, const std::vector<double>& breaks,
                         double rel_tol, int max_panels, double log_abs_tol = -std::numeric_limits<double>::infinity());

/// Quadrature failed to reach the requested tolerance.
class QuadratureError : public std::runtime_error {
 public:
  QuadratureError(const std::string& what, double partial_log_value, double achieved_rel_error)
      : std::runtime_error(what), partial_log_value_(partial_log_value), achieved_rel_error_(achieved_rel_error) {}
  double partial_log_value() const { return partial_log_value_; }
  double achieved_rel_error() const { return achieved_rel_error_; }

 private:
  double partial_log_value_;
  double achieved_rel_error_;
};

}  // namespace htail
