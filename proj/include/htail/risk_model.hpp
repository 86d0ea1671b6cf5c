#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "htail/conditions.hpp"
#include "htail/convolve.hpp"
#include "htail/diagnostics.hpp"

namespace htail {

/// Discrete-time model S_k = sum_{i<=k} Z_i * Y_1 ... Y_i with i.i.d. net
/// losses Z_i and i.i.d. discount factors Y_j, mutually independent.
struct RiskModelSpec {
  Distribution Z = degenerate(1.0);  // net loss, may take negative values
  Distribution Y = degenerate(1.0);  // discount factor, no mass at 0
  std::optional<int> horizon;        // nullopt for the infinite horizon
  std::uint64_t paths = 1'000'000;
  std::uint64_t seed = 0;
  double lambda = 2.0;    // scaling used by the infinite-horizon bound
  double epsilon = 0.05;

  /// Law of Z+ (Z itself when Z >= 0).
  Distribution F() const;
  void validate() const;
};

/// {"schema_version": 1, "Z": {...}, "Y": {...}, "horizon": n | "infinite",
///  "paths": ..., "seed": ..., "lambda": ..., "epsilon": ...}
RiskModelSpec load_risk_model(const nlohmann::json& j);
nlohmann::json to_json(const RiskModelSpec& m);

/// A gridded product law stopped tracking the chain accurately.
class GridExhausted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Laws W_i of Y_1 ... Y_i, built by iterated product_dist and cached.
class DiscountChain {
 public:
  DiscountChain(Distribution Y, GridSpec grid = {}, QuadratureSpec q = {}, double max_tolerance = 1e-4);

  /// W_i for i >= 1. Not thread-safe while the chain grows; call prepare() first
  /// before sharing across threads.
  const Distribution& W(int i);
  void prepare(int i) { (void)W(i); }
  int built() const { return static_cast<int>(laws_.size()); }

 private:
  Distribution Y_;
  GridSpec grid_;
  QuadratureSpec q_;
  double max_tolerance_;
  std::vector<Distribution> laws_;
};

/// log P(Z_i+ Y_1 ... Y_i > x), computed as product_tail(F, W_i, x).
LogTailValue discounted_loss_tail(const RiskModelSpec& model, int i, double x, const QuadratureSpec& q = {});
LogTailValue discounted_loss_tail(const Distribution& F, DiscountChain& chain, int i, double x,
                                  const QuadratureSpec& q = {});

struct RuinEstimate {
  double point = 0.0;
  double ci_halfwidth = 0.0;  // 95%, normal approximation
  std::uint64_t hits = 0;
  std::uint64_t paths = 0;
  std::uint64_t seed = 0;
};

/// Hit counts on a common set of simulated paths: ruin[a][b] counts paths
/// with max_{k<=ns[a]} S_k > xs[b] and terminal[a][b] those with S_ns[a] > xs[b].
struct RuinTable {
  std::vector<int> ns;
  std::vector<double> xs;
  std::vector<std::vector<std::uint64_t>> ruin;
  std::vector<std::vector<std::uint64_t>> terminal;
  std::uint64_t paths = 0;
  std::uint64_t seed = 0;

  RuinEstimate ruin_estimate(std::size_t a, std::size_t b) const;
  RuinEstimate terminal_estimate(std::size_t a, std::size_t b) const;
};

/// Plain Monte Carlo over fixed batches of kMcBatch paths, batch b seeded by
/// mix_seed(seed, b). Z is drawn from its own law, not its positive part.
RuinTable finite_ruin_table(const RiskModelSpec& model, std::vector<int> ns, std::vector<double> xs,
                            std::uint64_t paths, std::uint64_t seed, int workers = 0);

/// P(max_{1<=k<=n} S_k > x).
RuinEstimate finite_ruin_mc(const RiskModelSpec& model, int n, double x, std::uint64_t paths, std::uint64_t seed,
                            int workers = 0);

/// log sum_{i=1}^n P(Z_i+ Y_1 ... Y_i > x).
LogTailValue finite_ruin_asymptotic(const RiskModelSpec& model, int n, double x, const QuadratureSpec& q = {});

struct GuardResult {
  bool pass = true;
  std::string reason;
};

/// Refuses the infinite-horizon series when Y >= s1 >= 1 almost surely.
GuardResult divergence_guard(const RiskModelSpec& model);

/// The infinite-horizon series was refused.
class SeriesRefused : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct StepCheck {
  int i = 0;
  double x = 0.0;
  double log_lhs = 0.0;  // log H_{i+1}(x) tail
  double log_rhs = 0.0;  // log(factor * H_i(x) tail)
  bool holds = false;
};

struct LowerBoundOptions {
  std::vector<double> grid;       // empty: default geometric grid
  int x0_index = 9;               // first checked node (the 10th)
  double x0 = 0.0;                // positive value overrides x0_index
  int check_max_i = 10;
  double remainder_target = 0.01; // relative to the partial series
  int max_terms = 200;
  ClassifyOptions classify;
  GridSpec chain_grid;
  QuadratureSpec quadrature;
  bool check_premise = true;
};

struct LowerBoundResult {
  LogTailValue series;             // sum_{i=1}^{n_star} H_i(x) tail
  double remainder_bound = 0.0;    // absolute bound on sum_{i>n_star}
  double remainder_relative = 0.0; // remainder_bound / series
  int n_star = 0;
  double a = 0.0;                  // trailing max of F(lambda x) / F(x) tails
  double p = 0.0;                  // P(Y <= 1/lambda)
  double q = 0.0;
  double epsilon = 0.0;
  double lambda = 0.0;
  double factor = 0.0;             // p a + p epsilon + q
  double x0 = 0.0;
  std::vector<StepCheck> checks;
  bool all_checks_hold = true;
  std::optional<ClassVerdict> premise;
};

/// Partial series with a geometric bound on the remainder, plus the per-step
/// evidence H_{i+1}(x) <= factor * H_i(x) for x >= x0.
LowerBoundResult infinite_lower_bound(const RiskModelSpec& model, double x, const LowerBoundOptions& opt = {});

}  // namespace htail
