// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "htail/conditions.hpp"
#include "htail/convolve.hpp"
#include "htail/diagnostics.hpp"
#include "htail/report.hpp"
#include "htail/risk_model.hpp"
#include "oracles.hpp"

using namespace htail;

namespace {

// Pinned tolerances.
constexpr double kDegenerateTol = 1e-12;
constexpr double kDegenerateSeconds = 1.0;
constexpr double kParetoUniformTol = 1e-8;
constexpr double kChainTol = 1e-6;
constexpr double kWeibull2Lo = 0.95, kWeibull2Hi = 1.05;
constexpr double kWeibull15Tol = 0.10;
constexpr double kWeibullSeconds = 5.0;
constexpr double kSubexpTol = 0.05;
constexpr std::uint64_t kSubexpMcPairs = 100'000'000;
constexpr double kSubexpMcSigmas = 5.0;
constexpr double kKnotRatioTol = 1e-9;
constexpr double kKnotDominance = 0.9;
constexpr double kEq12Ceiling = 1e-10;
constexpr double kEq12OracleTol = 1e-6;
constexpr std::uint64_t kRuinPaths = 10'000'000;
constexpr double kRuinLo = 0.9, kRuinHi = 1.1;
constexpr double kRuinSeconds = 60.0;
constexpr double kSeriesTol = 1e-6;
constexpr double kRemainderTol = 0.01;
constexpr double kStepFactor = 0.775;
constexpr double kPsiFloor = 0.8;
constexpr std::uint64_t kPsiPaths = 1'000'000;

int failures = 0;

void report(int id, const char* name, bool pass, const std::string& detail) {
  std::printf("%s [%d] %s: %s\n", pass ? "PASS" : "FAIL", id, name, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Runs a criterion, turning an exception into a failure line.
void criterion(int id, const char* name, const std::function<void()>& body) {
  try {
    body();
  } catch (const std::exception& e) {
    report(id, name, false, std::string("exception: ") + e.what());
  }
}

RiskModelSpec pareto_uniform_model() {
  RiskModelSpec m;
  m.Z = regvar(1.0);
  m.Y = uniform(0.0, 1.0);
  m.horizon = 3;
  return m;
}

void degenerate_exactness() {
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto log_uniform = [&](double lo, double hi) { return lo * std::pow(hi / lo, u(rng)); };
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    Distribution F = degenerate(1.0);
    switch (i % 4) {
      case 0: F = regvar(0.5 + 4.0 * u(rng), 0.5 + 2.0 * u(rng)); break;
      case 1: F = weibull_type(0.2 + 2.0 * u(rng)); break;
      case 2: F = exponential(0.1 + 3.0 * u(rng)); break;
      default: F = uniform(0.0, 0.5 + 5.0 * u(rng)); break;
    }
    const double c = log_uniform(1e-3, 1e3), x = log_uniform(1e-3, 1e6);
    const double got = product_tail(F, degenerate(c), x).log_p();
    const double want = F.log_sf(x / c);
    if (got == want) continue;
    worst = std::max(worst, std::abs(got - want) / std::max(1.0, std::abs(want)));
  }
  const double secs = seconds_since(t0);
  report(1, "degenerate exactness", worst <= kDegenerateTol && secs < kDegenerateSeconds,
         fmt("max log error %.3g (tol %.0e), %.3f s (limit %.0f s)", worst, kDegenerateTol, secs, kDegenerateSeconds));
}

void pareto_uniform() {
  auto X = regvar(1.0);
  auto Y = uniform(0.0, 1.0);
  double worst = 0.0;
  for (int k = 0; k <= 200; ++k) {
    const double x = std::pow(1e4, k / 200.0);
    const double got = product_tail(X, Y, x).probability();
    worst = std::max(worst, std::abs(got / oracle::pareto_uniform_tail(x) - 1.0));
  }
  DiscountChain chain(Y);
  double worst_chain = 0.0;
  for (int i = 1; i <= 5; ++i) {
    for (double x : {1.0, 3.0, 10.0, 100.0, 1e3, 1e4}) {
      const double got = discounted_loss_tail(X, chain, i, x).probability();
      worst_chain = std::max(worst_chain, std::abs(got / oracle::pareto_uniform_chain_tail(i, x) - 1.0));
    }
  }
  report(2, "Pareto x Uniform closed form", worst <= kParetoUniformTol && worst_chain <= kChainTol,
         fmt("single product rel err %.3g (tol %.0e); chain i<=5 rel err %.3g (tol %.0e)", worst, kParetoUniformTol,
             worst_chain, kChainTol));
}

void weibull_products() {
  const auto t0 = std::chrono::steady_clock::now();
  auto W2 = weibull_type(2.0);
  const double r2 = std::exp(product_tail(W2, W2, 100.0).log_p() - oracle::log_weibull_product_asymptotic(2.0, 100.0));
  auto W15 = weibull_type(1.5);
  const double r15 = std::exp(product_tail(W15, W15, 1e4).log_p() - oracle::log_weibull_product_asymptotic(1.5, 1e4));
  // the finite-x Simpson oracle on the first case
  const double simpson = oracle::weibull_product_tail(2.0, 100.0, 400000);
  const double r_simpson = std::exp(product_tail(W2, W2, 100.0).log_p()) / simpson;
  const double secs = seconds_since(t0);
  const bool pass = r2 >= kWeibull2Lo && r2 <= kWeibull2Hi && std::abs(r15 - 1.0) <= kWeibull15Tol &&
                    std::abs(r_simpson - 1.0) <= 1e-6 && secs < kWeibullSeconds;
  report(3, "Weibull product asymptotic", pass,
         fmt("alpha=2,x=100 ratio %.6f in [%.2f, %.2f]; alpha=1.5,x=1e4 ratio %.6f (tol %.0f%%); "
             "vs Simpson %.3g; %.2f s (limit %.0f s)",
             r2, kWeibull2Lo, kWeibull2Hi, r15, 100 * kWeibull15Tol, r_simpson - 1.0, secs, kWeibullSeconds));
}

void subexponential_ratio() {
  GeometricGrid gg{1e3 / std::pow(1.15, 31), 1.15, 32};
  auto grid = gg.points();
  auto V = regvar(2.0, 1.0);
  auto c = classify(V, ClassId::S, grid);
  const RatioDiagnostic& d = c.evidence.at(0).second;
  const std::size_t n = d.x.size();
  const double last = d.ratio(n - 1);
  bool monotone = true;
  for (std::size_t i = n - 7; i < n; ++i) {
    if (!(std::abs(d.ratio(i) - 2.0) < std::abs(d.ratio(i - 1) - 2.0))) monotone = false;
  }
  const bool near = std::abs(last - 2.0) <= kSubexpTol && std::abs(d.x[n - 1] - 1e3) < 1e-6;
  const bool member = c.membership == Membership::Member;
  const bool expo = classify(exponential(1.0), ClassId::S, GeometricGrid{}.points()).membership == Membership::NonMember;

  // independent Monte Carlo: pairs of Pareto(2) draws by inversion
  std::mt19937_64 rng(7);
  const std::vector<double> xs{10.0, 30.0, 100.0};
  std::vector<std::uint64_t> hits(xs.size(), 0);
  for (std::uint64_t k = 0; k < kSubexpMcPairs; ++k) {
    const double u1 = (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
    const double u2 = (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
    const double s = 1.0 / std::sqrt(u1) + 1.0 / std::sqrt(u2);
    for (std::size_t j = 0; j < xs.size(); ++j) hits[j] += s > xs[j];
  }
  double worst_z = 0.0;
  for (std::size_t j = 0; j < xs.size(); ++j) {
    const double p = static_cast<double>(hits[j]) / kSubexpMcPairs;
    const double se = std::sqrt(p * (1 - p) / kSubexpMcPairs);
    worst_z = std::max(worst_z, std::abs(sum_self_tail(V, 2, xs[j]).probability() - p) / se);
  }
  report(4, "subexponential ratio", near && monotone && member && expo && worst_z <= kSubexpMcSigmas,
         fmt("ratio at x=%.0f is %.6f (tol %.2f); monotone over last 8: %s; S member: %s; exponential non-member: %s; "
             "MC (1e8 pairs) max |z| %.2f (limit %.0f)",
             d.x[n - 1], last, kSubexpTol, monotone ? "yes" : "no", member ? "yes" : "no", expo ? "yes" : "no",
             worst_z, kSubexpMcSigmas));
}

void example31_suite() {
  const double alpha = 1.0, x1 = 5.0;
  auto F = example31_f(alpha);
  auto G = example31_g(alpha, x1);
  auto knots = oracle::example31_knots(alpha, x1, 8);

  // (a)
  double worst_a = 0.0;
  for (int n = 0; n < 6; ++n) {
    const double xn = knots[n];
    const double r = std::exp(G.log_sf_shifted(2.0 * xn, 1.0) - G.log_sf(2.0 * xn));
    worst_a = std::max(worst_a, std::abs(r - (2.0 - 1.0 / xn)));
  }
  // (b), knots indexed from 1
  double min_b = INFINITY;
  for (int n = 4; n <= 8; ++n) {
    const double xn = knots[n - 1];
    min_b = std::min(min_b, std::exp(G.log_sf(xn) - product_tail(F, G, xn).log_p()));
  }
  // (c)
  const double bound_c = std::pow(2.0, alpha + 1.0) + 1.0;
  double max_c = 0.0;
  for (int n = 0; n + 1 < 8; ++n) {
    const double lo = 4.0 * knots[n], hi = knots[n + 1];
    if (!(lo < hi)) continue;
    for (int k = 0; k < 16; ++k) {
      const double x = lo * std::pow(hi / lo, k / 16.0);
      const double r = std::exp(product_tail(F, G, 0.5 * x).log_p() - product_tail(F, G, x).log_p());
      max_c = std::max(max_c, r);
    }
  }
  // (d)
  auto [grid, th] = default_grid_for(F, G);
  ConditionParams p;
  p.b = {0.5, 1.0, 2.0};
  p.options.thresholds = th;
  auto eq11 = check_condition(ConditionId::EQ11, F, G, grid, p);
  bool all_fail = eq11.overall == Overall::FailsEvidence && eq11.parameter_evidence.size() == 3;
  for (const auto& e : eq11.parameter_evidence) all_fail = all_fail && e.status == Overall::FailsEvidence;

  const bool pass = worst_a <= kKnotRatioTol && min_b >= kKnotDominance && max_c <= bound_c && all_fail;
  report(5, "knot example suite", pass,
         fmt("(a) max |ratio-(2-1/x_n)| %.3g (tol %.0e); (b) min G/H %.6f (floor %.1f); (c) max H(x/2)/H(x) %.4f "
             "(bound %.0f); (d) EQ11 %s for b in {1/2,1,2}",
             worst_a, kKnotRatioTol, min_b, kKnotDominance, max_c, bound_c, to_string(eq11.overall).c_str()));
}

void product_verdict() {
  struct Case {
    const char* name;
    Distribution F, G;
  };
  std::vector<Case> cases{{"continuous F", regvar(2.0), example31_g(1.0, 5.0)},
                          {"lattice F", lattice_power(3.0), exponential(1.0)},
                          {"degenerate G", regvar(2.0), degenerate(1.0)}};
  bool all = true;
  std::string detail;
  for (const auto& c : cases) {
    auto [grid, th] = default_grid_for(c.F, c.G);
    ConditionParams p;
    p.options.thresholds = th;
    auto v = theorem11_verdict(c.F, c.G, grid, p);
    all = all && v.agree && v.predicted == v.cross_check.membership;
    detail += fmt("%s: predicted %s, cross-check %s; ", c.name, to_string(v.predicted).c_str(),
                  to_string(v.cross_check.membership).c_str());
  }
  // EQ12 at d = 1, x = 50
  auto L = lattice_power(3.0);
  auto E = exponential(1.0);
  GeometricGrid gg{50.0, 1.5, 40};
  auto rep = check_condition(ConditionId::EQ12, L, E, gg.points());
  double ratio = NAN;
  for (const auto& e : rep.parameter_evidence) {
    if (e.value == 1.0) ratio = e.diagnostic.ratio(0);
  }
  const double h_oracle = oracle::lattice3_exp_tail(50.0);
  const double oracle_ratio = (std::exp(-50.0) - std::exp(-51.0)) / h_oracle;
  const double h_lib = product_tail(L, E, 50.0).probability();
  const bool eq12 = ratio <= kEq12Ceiling && std::abs(ratio / oracle_ratio - 1.0) <= kEq12OracleTol &&
                    std::abs(h_lib / h_oracle - 1.0) <= kEq12OracleTol;
  detail += fmt("EQ12 ratio at d=1,x=50 %.4g (ceiling %.0e), oracle %.4g", ratio, kEq12Ceiling, oracle_ratio);
  report(6, "product subexponentiality verdict", all && eq12, detail);
}

std::string risk_model_finite(int workers, bool emit) {
  auto m = pareto_uniform_model();
  const auto t0 = std::chrono::steady_clock::now();
  auto mc = finite_ruin_mc(m, 3, 50.0, kRuinPaths, 2024, workers);
  const double secs = seconds_since(t0);
  const double asym = finite_ruin_asymptotic(m, 3, 50.0).probability();
  const double ratio = mc.point / asym;
  if (emit) {
    report(7, "finite-horizon ruin", ratio >= kRuinLo && ratio <= kRuinHi && secs < kRuinSeconds &&
                                         std::abs(asym - 0.875 / 50.0) <= 1e-6 * asym,
           fmt("MC %.6g +- %.2g over asymptotic %.6g (analytic %.6g): ratio %.4f in [%.1f, %.1f]; %.1f s (limit %.0f s)",
               mc.point, mc.ci_halfwidth, asym, 0.875 / 50.0, ratio, kRuinLo, kRuinHi, secs, kRuinSeconds));
  }
  return to_json(mc).dump();
}

std::string lower_bound_check(int workers, bool emit) {
  auto m = pareto_uniform_model();
  m.horizon.reset();
  LowerBoundOptions opt;
  opt.x0 = 10.0;
  auto lb = infinite_lower_bound(m, 50.0, opt);
  const double series = lb.series.probability();
  const double rel = std::abs(series * 50.0 - 1.0);
  bool steps = lb.all_checks_hold && !lb.checks.empty();
  double worst_step = -INFINITY;
  for (const auto& c : lb.checks) {
    steps = steps && c.i <= 10 && c.x >= 10.0;
    // H_{i+1}(x) <= 0.775 H_i(x)
    const double log_hi = c.log_rhs - std::log(lb.factor);
    const double excess = c.log_lhs - (std::log(kStepFactor) + log_hi);
    worst_step = std::max(worst_step, excess);
  }
  steps = steps && worst_step <= 1e-12 && std::abs(lb.factor - kStepFactor) <= 1e-9;
  auto psi = finite_ruin_mc(m, lb.n_star, 50.0, kPsiPaths, 4048, workers);
  const double psi_scaled = psi.point * 50.0;
  if (emit) {
    report(8, "infinite-horizon lower bound",
           rel <= kSeriesTol && lb.remainder_relative < kRemainderTol && steps && psi_scaled >= kPsiFloor,
           fmt("series %.10g vs 1/50 rel err %.3g (tol %.0e); remainder %.3g%% (limit 1%%); n*=%d; %zu step checks, "
               "max log excess over 0.775 %.3g; psi(50; n*) * 50 = %.4f (floor %.1f)",
               series, rel, kSeriesTol, 100.0 * lb.remainder_relative, lb.n_star, lb.checks.size(), worst_step,
               psi_scaled, kPsiFloor));
  }
  return to_json(psi).dump();
}

void divergence() {
  auto m = pareto_uniform_model();
  m.horizon.reset();
  m.Y = uniform(1.0, 2.0);
  auto g = divergence_guard(m);
  bool refused = false;
  std::string why;
  try {
    infinite_lower_bound(m, 10.0);
  } catch (const SeriesRefused& e) {
    refused = true;
    why = e.what();
  }
  const bool cites = g.reason.find(">= n F(x) tail -> inf") != std::string::npos;
  report(9, "divergence guard", !g.pass && refused && cites, "refused: " + why);
}

}  // namespace

int main() {
  criterion(1, "degenerate exactness", degenerate_exactness);
  criterion(2, "Pareto x Uniform closed form", pareto_uniform);
  criterion(3, "Weibull product asymptotic", weibull_products);
  criterion(4, "subexponential ratio", subexponential_ratio);
  criterion(5, "knot example suite", example31_suite);
  criterion(6, "product subexponentiality verdict", product_verdict);
  std::string r7_1, r7_8, r8_1, r8_8;
  criterion(7, "finite-horizon ruin", [&] { r7_1 = risk_model_finite(1, true); });
  criterion(8, "infinite-horizon lower bound", [&] { r8_1 = lower_bound_check(1, true); });
  criterion(9, "divergence guard", divergence);
  criterion(10, "determinism", [&] {
    r7_8 = risk_model_finite(8, false);
    r8_8 = lower_bound_check(8, false);
    // the plain product estimator as well
    auto a = to_json(mc_product_tail(regvar(1.0), uniform(0.0, 1.0), 10.0, 1'000'000, 99, 1)).dump();
    auto b = to_json(mc_product_tail(regvar(1.0), uniform(0.0, 1.0), 10.0, 1'000'000, 99, 8)).dump();
    const bool same = !r7_1.empty() && !r8_1.empty() && r7_1 == r7_8 && r8_1 == r8_8 && a == b;
    report(10, "determinism", same, same ? "criteria 7 and 8 and a product estimate identical across 1 and 8 workers"
                                         : "outputs differ between 1 and 8 workers");
  });
  std::printf("%d of 10 criteria failed\n", failures);
  return failures ? 1 : 0;
}
