#include "htail/risk_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "htail/gridded.hpp"
#include "htail/parallel.hpp"

namespace htail {

using nlohmann::json;

namespace {

constexpr double kZ975 = 1.959963984540054;

RuinEstimate estimate(std::uint64_t hits, std::uint64_t paths, std::uint64_t seed) {
  RuinEstimate e;
  e.hits = hits;
  e.paths = paths;
  e.seed = seed;
  const double n = static_cast<double>(paths);
  e.point = static_cast<double>(hits) / n;
  e.ci_halfwidth = kZ975 * std::sqrt(e.point * (1.0 - e.point) / n);
  return e;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

void require_x(double x) {
  if (!std::isfinite(x)) throw ParameterError("x", "must be finite");
}

}  // namespace

Distribution RiskModelSpec::F() const { return Z.support_lo() >= 0.0 ? Z : positive_part(Z); }

void RiskModelSpec::validate() const {
  if (Y.support_lo() < 0.0) throw ParameterError("Y", "must be supported on (0, inf)");
  if (Y.mass_at_zero() > 0.0) throw ParameterError("Y", "must put no mass at 0");
  if (horizon && *horizon < 1) throw ParameterError("horizon", "must be at least 1");
  if (paths == 0) throw ParameterError("paths", "must be positive");
  if (!(std::isfinite(lambda) && lambda > 1.0)) throw ParameterError("lambda", "must exceed 1");
  if (!(std::isfinite(epsilon) && epsilon > 0.0)) throw ParameterError("epsilon", "must be positive");
}

RiskModelSpec load_risk_model(const json& j) {
  if (!j.is_object()) throw ParameterError("model", "must be a JSON object");
  if (j.contains("schema_version") && j.at("schema_version") != 1)
    throw ParameterError("schema_version", "unsupported version (expected 1)");
  RiskModelSpec m;
  auto law = [&](const char* key) {
    if (!j.contains(key)) throw ParameterError(key, "missing");
    try {
      return make_family(j.at(key));
    } catch (const ParameterError& e) {
      throw ParameterError(std::string(key) + "." + e.parameter(), e.what());
    }
  };
  m.Z = law("Z");
  m.Y = law("Y");
  auto number = [&](const char* key, auto& out) {
    if (!j.contains(key)) return;
    const auto& v = j.at(key);
    if (!v.is_number()) throw ParameterError(key, "must be a number");
    using T = std::decay_t<decltype(out)>;
    if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer() || v.get<double>() < 0) throw ParameterError(key, "must be a nonnegative integer");
    }
    out = v.get<T>();
  };
  if (j.contains("horizon")) {
    const auto& h = j.at("horizon");
    if (h.is_string() && h.get<std::string>() == "infinite") {
      m.horizon.reset();
    } else if (h.is_number_integer()) {
      m.horizon = h.get<int>();
    } else {
      throw ParameterError("horizon", "must be a positive integer or \"infinite\"");
    }
  }
  number("paths", m.paths);
  number("seed", m.seed);
  number("lambda", m.lambda);
  number("epsilon", m.epsilon);
  m.validate();
  return m;
}

json to_json(const RiskModelSpec& m) {
  json j{{"schema_version", 1}, {"Z", m.Z.to_json()}, {"Y", m.Y.to_json()}, {"paths", m.paths},
         {"seed", m.seed},      {"lambda", m.lambda}, {"epsilon", m.epsilon}};
  if (m.horizon) j["horizon"] = *m.horizon; else j["horizon"] = "infinite";
  return j;
}

DiscountChain::DiscountChain(Distribution Y, GridSpec grid, QuadratureSpec q, double max_tolerance)
    : Y_(std::move(Y)), grid_(grid), q_(q), max_tolerance_(max_tolerance) {
  q_.validate();
  laws_.push_back(Y_);
}

const Distribution& DiscountChain::W(int i) {
  if (i < 1) throw ParameterError("i", "must be at least 1");
  while (static_cast<int>(laws_.size()) < i) {
    const int next = static_cast<int>(laws_.size()) + 1;
    Distribution w = product_dist(laws_.back(), Y_, grid_, q_);
    if (const auto* g = as_gridded(w); g && g->declared_tolerance() > max_tolerance_) {
      throw GridExhausted("discount law W_" + std::to_string(next) + " has declared tolerance " +
                          fmt(g->declared_tolerance()) + "; use a wider grid (more nodes or a larger range)");
    }
    laws_.push_back(std::move(w));
  }
  return laws_[static_cast<std::size_t>(i - 1)];
}

LogTailValue discounted_loss_tail(const Distribution& F, DiscountChain& chain, int i, double x,
                                  const QuadratureSpec& q) {
  require_x(x);
  return product_tail(F, chain.W(i), x, q);
}

LogTailValue discounted_loss_tail(const RiskModelSpec& model, int i, double x, const QuadratureSpec& q) {
  DiscountChain chain(model.Y, {}, q);
  return discounted_loss_tail(model.F(), chain, i, x, q);
}

RuinEstimate RuinTable::ruin_estimate(std::size_t a, std::size_t b) const {
  return estimate(ruin.at(a).at(b), paths, seed);
}

RuinEstimate RuinTable::terminal_estimate(std::size_t a, std::size_t b) const {
  return estimate(terminal.at(a).at(b), paths, seed);
}

RuinTable finite_ruin_table(const RiskModelSpec& model, std::vector<int> ns, std::vector<double> xs,
                            std::uint64_t paths, std::uint64_t seed, int workers) {
  if (paths == 0) throw ParameterError("paths", "must be positive");
  if (ns.empty() || xs.empty()) throw ParameterError("ns", "horizons and levels must be nonempty");
  for (int n : ns) {
    if (n < 1) throw ParameterError("n", "must be at least 1");
  }
  for (double x : xs) require_x(x);
  const int n_max = *std::max_element(ns.begin(), ns.end());
  const std::size_t A = ns.size(), B = xs.size();
  const std::uint64_t batches = (paths + kMcBatch - 1) / kMcBatch;

  using Counts = std::vector<std::uint64_t>;
  std::vector<Counts> ruin_b(batches), term_b(batches);
  parallel_for(
      batches,
      [&](std::size_t b) {
        Rng rng(mix_seed(seed, b));
        const std::uint64_t count = std::min<std::uint64_t>(kMcBatch, paths - b * kMcBatch);
        Counts ruin(A * B, 0), term(A * B, 0);
        std::vector<double> run_max(static_cast<std::size_t>(n_max)), sums(static_cast<std::size_t>(n_max));
        for (std::uint64_t p = 0; p < count; ++p) {
          double s = 0.0, discount = 1.0, m = -std::numeric_limits<double>::infinity();
          for (int k = 0; k < n_max; ++k) {
            discount *= model.Y.sample(rng);
            s += model.Z.sample(rng) * discount;
            m = std::max(m, s);
            run_max[static_cast<std::size_t>(k)] = m;
            sums[static_cast<std::size_t>(k)] = s;
          }
          for (std::size_t a = 0; a < A; ++a) {
            const std::size_t k = static_cast<std::size_t>(ns[a] - 1);
            for (std::size_t c = 0; c < B; ++c) {
              if (run_max[k] > xs[c]) ++ruin[a * B + c];
              if (sums[k] > xs[c]) ++term[a * B + c];
            }
          }
        }
        ruin_b[b] = std::move(ruin);
        term_b[b] = std::move(term);
      },
      workers);

  RuinTable t;
  t.ns = std::move(ns);
  t.xs = std::move(xs);
  t.paths = paths;
  t.seed = seed;
  t.ruin.assign(A, std::vector<std::uint64_t>(B, 0));
  t.terminal.assign(A, std::vector<std::uint64_t>(B, 0));
  for (std::uint64_t b = 0; b < batches; ++b) {
    for (std::size_t a = 0; a < A; ++a) {
      for (std::size_t c = 0; c < B; ++c) {
        t.ruin[a][c] += ruin_b[b][a * B + c];
        t.terminal[a][c] += term_b[b][a * B + c];
      }
    }
  }
  return t;
}

RuinEstimate finite_ruin_mc(const RiskModelSpec& model, int n, double x, std::uint64_t paths, std::uint64_t seed,
                            int workers) {
  return finite_ruin_table(model, {n}, {x}, paths, seed, workers).ruin_estimate(0, 0);
}

LogTailValue finite_ruin_asymptotic(const RiskModelSpec& model, int n, double x, const QuadratureSpec& q) {
  if (n < 1) throw ParameterError("n", "must be at least 1");
  require_x(x);
  const Distribution F = model.F();
  DiscountChain chain(model.Y, {}, q);
  LogAccumulator acc;
  for (int i = 1; i <= n; ++i) acc.add(discounted_loss_tail(F, chain, i, x, q).log_p());
  return LogTailValue(acc.value());
}

GuardResult divergence_guard(const RiskModelSpec& model) {
  const double s1 = model.Y.support_lo();
  if (s1 >= 1.0) {
    return {false, "Y >= s1 = " + fmt(s1) + " >= 1 almost surely, so sum_i H_i(x) tail >= sum_{i<=n} F(x / s1^i) tail"
                   " >= n F(x) tail -> inf as n -> inf; the infinite-horizon series diverges"};
  }
  return {true, "Y has support starting at " + fmt(s1) + " < 1"};
}

LowerBoundResult infinite_lower_bound(const RiskModelSpec& model, double x, const LowerBoundOptions& opt) {
  require_x(x);
  model.validate();
  const auto guard = divergence_guard(model);
  if (!guard.pass) throw SeriesRefused(guard.reason);
  if (model.Y.support_hi() > 1.0) throw ParameterError("Y", "must be supported on (0, 1]");
  if (opt.remainder_target <= 0.0) throw ParameterError("remainder_target", "must be positive");

  const Distribution F = model.F();
  const std::vector<double> grid = opt.grid.empty() ? GeometricGrid{}.points() : opt.grid;
  LowerBoundResult r;
  r.lambda = model.lambda;
  r.epsilon = model.epsilon;

  if (opt.check_premise) {
    r.premise = classify(F, ClassId::A, grid, opt.classify);
    if (r.premise->membership != Membership::Member) {
      throw PremiseRefused("F is not in class A in evidence (" + to_string(r.premise->membership) +
                               (r.premise->note.empty() ? "" : ": " + r.premise->note) + ")",
                           *r.premise);
    }
  }

  const double lambda = model.lambda;
  auto ratio = grade_ratios(grid,
                            log_ratios(evaluate_log_tails([&](double v) { return F.log_sf(lambda * v); }, grid,
                                                          opt.classify.workers),
                                       evaluate_log_tails([&](double v) { return F.log_sf(v); }, grid,
                                                          opt.classify.workers)),
                            opt.classify.thresholds);
  if (ratio.window.points == 0) throw std::runtime_error("infinite_lower_bound: F(lambda x) / F(x) is unusable: " + ratio.note);
  r.a = ratio.window.max;
  if (!(model.epsilon < 1.0 - r.a))
    throw ParameterError("epsilon", "must lie in (0, 1 - a) with a = " + fmt(r.a));
  r.p = std::exp(model.Y.log_cdf(1.0 / lambda));
  r.q = 1.0 - r.p;
  r.factor = r.p * r.a + r.p * model.epsilon + r.q;
  if (!(r.factor < 1.0)) throw SeriesRefused("p a + p epsilon + q = " + fmt(r.factor) + " >= 1; the bound is vacuous");

  DiscountChain chain(model.Y, opt.chain_grid, opt.quadrature);
  const double log_h1 = discounted_loss_tail(F, chain, 1, x, opt.quadrature).log_p();
  LogAccumulator series;
  series.add(log_h1);
  const double log_geo = -std::log1p(-r.factor);
  int n = 1;
  while (true) {
    // sum_{i > n} factor^{i-1} H_1 = factor^n / (1 - factor) H_1
    const double log_rem = n * std::log(r.factor) + log_geo + log_h1;
    if (log_rem - series.value() < std::log(opt.remainder_target)) {
      r.remainder_bound = std::exp(log_rem);
      r.remainder_relative = std::exp(log_rem - series.value());
      break;
    }
    if (n >= opt.max_terms) throw SeriesRefused("remainder bound did not reach the target within max_terms");
    ++n;
    series.add(discounted_loss_tail(F, chain, n, x, opt.quadrature).log_p());
  }
  r.n_star = n;
  r.series = LogTailValue(series.value());

  // per-step evidence on the grid
  r.x0 = opt.x0 > 0.0 ? opt.x0 : grid.at(std::min<std::size_t>(static_cast<std::size_t>(opt.x0_index), grid.size() - 1));
  std::vector<double> xs;
  for (double v : grid) {
    if (v >= r.x0) xs.push_back(v);
  }
  chain.prepare(opt.check_max_i + 1);
  const int I = opt.check_max_i + 1;
  std::vector<double> logs(static_cast<std::size_t>(I) * xs.size());
  parallel_for(
      logs.size(),
      [&](std::size_t k) {
        const int i = static_cast<int>(k / xs.size()) + 1;
        logs[k] = product_tail(F, chain.W(i), xs[k % xs.size()], opt.quadrature).log_p();
      },
      opt.classify.workers);
  const double log_factor = std::log(r.factor);
  for (int i = 1; i <= opt.check_max_i; ++i) {
    for (std::size_t c = 0; c < xs.size(); ++c) {
      StepCheck s;
      s.i = i;
      s.x = xs[c];
      s.log_lhs = logs[static_cast<std::size_t>(i) * xs.size() + c];
      s.log_rhs = log_factor + logs[static_cast<std::size_t>(i - 1) * xs.size() + c];
      s.holds = s.log_lhs <= s.log_rhs;
      r.all_checks_hold &= s.holds;
      r.checks.push_back(s);
    }
  }
  return r;
}

}  // namespace htail
