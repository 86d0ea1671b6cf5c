#pragma once

#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "htail/convolve.hpp"
#include "htail/distribution.hpp"

namespace htail {

/// x0, x0 rho, ..., x0 rho^(K-1).
struct GeometricGrid {
  double x0 = 10.0;
  double rho = 1.5;
  int K = 40;

  std::vector<double> points() const;
  void validate() const;
};

/// Finite-grid proxies for limit statements. All values are configurable.
struct VerdictThresholds {
  int window = 8;             // trailing points examined
  int min_points = 32;        // usable points required
  double tol_c = 0.05;        // relative tolerance on a limit value
  double tol_s = 0.01;        // relative least-squares slope per grid step
  double vanish_floor = 1e-6;
  double bounded_factor = 10.0;  // bounded: trailing max <= factor * trailing median
  double max_dropped = 0.25;     // fraction of points that may be dropped

  /// Looser settings for short grids such as a knot subsequence.
  static VerdictThresholds short_grid();
  void validate() const;
};

enum class VerdictKind { ConvergesTo, Bounded, Diverges, Vanishes, Inconclusive };

std::string to_string(VerdictKind kind);

struct Verdict {
  VerdictKind kind = VerdictKind::Inconclusive;
  double value = 0.0;  // limit c for ConvergesTo, bound M for Bounded
};

struct WindowStats {
  double mean = 0.0;
  double median = 0.0;
  double max = 0.0;
  double min = 0.0;
  double rel_slope = 0.0;  // least-squares slope per step divided by |mean|
  int points = 0;
};

/// A ratio curve over an x-grid and its graded limit verdict.
struct RatioDiagnostic {
  std::vector<double> x;
  std::vector<double> log_ratio;  // NaN where the point was dropped
  std::vector<bool> dropped;
  Verdict verdict;
  WindowStats window;
  std::string note;

  double ratio(std::size_t i) const;
  std::size_t dropped_count() const;
};

/// A log-tail evaluator, x -> log P(... > x).
using LogTailFn = std::function<double(double)>;

/// Ratio num(x) / den(x) over the grid, formed in log-space. Points where the
/// denominator is zero (log = -inf) or either side is NaN are dropped.
RatioDiagnostic ratio_curve(const LogTailFn& numerator, const LogTailFn& denominator, const std::vector<double>& x,
                            const VerdictThresholds& th = {});

/// f at every grid point, in parallel. A quadrature failure keeps its partial
/// value when that is accurate to 1e-3 and gives NaN otherwise.
std::vector<double> evaluate_log_tails(const LogTailFn& f, const std::vector<double>& x, int workers = 0);

/// Pointwise num - den, NaN where either is NaN or den is -inf.
std::vector<double> log_ratios(const std::vector<double>& num, const std::vector<double>& den);

/// Grade precomputed log-ratios (NaN marks a dropped point).
RatioDiagnostic grade_ratios(std::vector<double> x, std::vector<double> log_ratio, const VerdictThresholds& th = {});

enum class ClassId { L_gamma, S, D, R, A };
enum class Membership { Member, NonMember, Inconclusive };

std::string to_string(ClassId id);
std::string to_string(Membership m);
ClassId parse_class_id(const std::string& s);

struct ClassVerdict {
  ClassId class_id = ClassId::S;
  Membership membership = Membership::Inconclusive;
  std::vector<std::pair<std::string, RatioDiagnostic>> evidence;
  std::map<std::string, double> estimates;
  std::string note;
};

struct ClassifyOptions {
  VerdictThresholds thresholds;
  QuadratureSpec quadrature;
  double margin = 0.05;   // class A: trailing max of tail(2x)/tail(x) must stay below 1 - margin
  double r_agree = 0.02;  // class R: relative agreement of the t = 2 and t = 4 indices
  int workers = 0;
};

/// Numerical evidence for membership of V in a heavy-tail class.
///
/// L_gamma: tail(x - t) / tail(x) with t = 1, or the lattice span for lattice
///          laws (x is then rounded down to the lattice); gamma = ln(limit) / t.
/// S:       sum_self_tail(V, 2, x) / tail(x) must converge to 2.
/// D:       tail(x / 2) / tail(x) must stay bounded.
/// R:       -ln(tail(t x) / tail(x)) / ln t for t = 2, 4 must agree.
/// A:       S membership plus trailing max of tail(2x) / tail(x) <= 1 - margin.
ClassVerdict classify(const Distribution& V, ClassId id, const std::vector<double>& grid,
                      const ClassifyOptions& opt = {});

/// a(x) with a non-decreasing, a(x) / x non-increasing and a(x) <= sqrt(x),
/// built so that tail(x - a(x)) / tail(x) <= 1 + delta at the nodes.
class InsensitivityFunction {
 public:
  InsensitivityFunction(std::vector<double> x, std::vector<double> a, double delta);

  /// Linear between nodes; a0 x / x0 below the first node; a_last sqrt(x / x_last) beyond the last.
  double operator()(double x) const;
  const std::vector<double>& nodes() const { return x_; }
  const std::vector<double>& values() const { return a_; }
  double delta() const { return delta_; }

 private:
  std::vector<double> x_;
  std::vector<double> a_;
  double delta_;
};

/// Raised when F shows no evidence of being long-tailed.
class NotLongTailed : public std::runtime_error {
 public:
  NotLongTailed(const std::string& what, ClassVerdict evidence)
      : std::runtime_error(what), evidence_(std::move(evidence)) {}
  const ClassVerdict& evidence() const { return evidence_; }

 private:
  ClassVerdict evidence_;
};

/// Largest a <= sqrt(x) with tail(x - a) / tail(x) <= 1 + delta at each
/// node (bisection), then running max on a and running min on a / x.
InsensitivityFunction build_insensitivity(const Distribution& F, double delta, const std::vector<double>& grid,
                                          const ClassifyOptions& opt = {});

/// Knots x_n of example31_G(alpha, x1), times `factor`, with x_n <= x_max.
std::vector<double> example31_knot_grid(double alpha, double x1, double factor = 1.0, double x_max = 1e150);

}  // namespace htail
