#pragma once

#include <cstdint>

#include "htail/distribution.hpp"
#include "htail/quadrature.hpp"

namespace htail {

struct QuadratureSpec {
  double rel_tol = 1e-8;          // relative, linear probability space
  int max_panels = 1 << 16;
  double truncation_tail = 1e-16;  // neglected mass, relative to a lower bound of the result

  /// Throws ParameterError when a field is out of range.
  void validate() const;
};

/// A tail value with its error budget.
struct TailResult {
  LogTailValue value;
  double rel_error = 0.0;         // quadrature and series error estimate, relative
  double truncation_bound = 0.0;  // neglected mass from domain cuts, relative
  int panels = 0;
};

/// log P(XY > x) for independent nonnegative X ~ F and Y ~ G.
///
/// One factor acts as the mixing measure: its atoms are summed exactly,
/// infinite lattices are summed directly near the origin and by a midpoint
/// integral further out, and the continuous part is integrated over ln y.
/// Throws QuadratureError when the panel budget is exhausted.
TailResult product_tail_detailed(const Distribution& F, const Distribution& G, double x,
                                 const QuadratureSpec& q = {});
LogTailValue product_tail(const Distribution& F, const Distribution& G, double x, const QuadratureSpec& q = {});

/// log P(XY <= x), computed directly so that it stays accurate when tiny.
double product_log_cdf(const Distribution& F, const Distribution& G, double x, const QuadratureSpec& q = {});

struct GridSpec {
  int nodes = 512;
  double lo = 0.0;   // first node; 0 picks the eps_lo lower quantile of the product
  double hi = 0.0;   // last node; 0 picks the eps_hi upper quantile
  double eps_lo = 1e-14;
  double eps_hi = 1e-16;
  int workers = 0;
};

/// Law of XY. Exact when a factor is degenerate or both are finitely
/// atomic; otherwise a GriddedDistribution whose nodes are product_tail values.
Distribution product_dist(const Distribution& F, const Distribution& G, const GridSpec& grid = {},
                          const QuadratureSpec& q = {});

/// log P(X_1 + ... + X_k > x) for i.i.d. X_i ~ V on [0, inf), 1 <= k <= 8.
///
/// Built from V*(j+1)(x) tail = V(x) tail + int_[0,x] V*j(x - y) tail V(dy).
/// For k >= 3 the intermediate law is gridded on 1024 nodes over [0, x].
TailResult sum_self_tail_detailed(const Distribution& V, int k, double x, const QuadratureSpec& q = {});
LogTailValue sum_self_tail(const Distribution& V, int k, double x, const QuadratureSpec& q = {});

struct McEstimate {
  double estimate = 0.0;
  double ci_halfwidth = 0.0;  // normal approximation, 95%
  double upper_bound = 0.0;   // one-sided 97.5% bound; meaningful when no hits were seen
  std::uint64_t hits = 0;
  std::uint64_t n = 0;
  std::uint64_t seed = 0;
};

/// Number of draws per seeded batch in every Monte Carlo routine.
inline constexpr std::uint64_t kMcBatch = 1 << 16;

/// Plain Monte Carlo estimate of P(XY > x). Batches of kMcBatch draws are
/// seeded by (seed, batch index), so the result does not depend on workers.
McEstimate mc_product_tail(const Distribution& F, const Distribution& G, double x, std::uint64_t n,
                           std::uint64_t seed, int workers = 0);

}  // namespace htail
