#include <cmath>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "htail/conditions.hpp"
#include "htail/convolve.hpp"
#include "htail/diagnostics.hpp"
#include "htail/report.hpp"
#include "htail/risk_model.hpp"

using namespace htail;
using nlohmann::json;

namespace {

struct Gen {
  std::mt19937_64 rng;
  explicit Gen(std::uint64_t seed) : rng(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
  double log_uniform(double lo, double hi) { return std::exp(uniform(std::log(lo), std::log(hi))); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

  // A random law from the continuous families, on [0, inf).
  Distribution law() {
    switch (integer(0, 4)) {
      case 0: return regvar(uniform(0.5, 4.0), uniform(0.5, 3.0));
      case 1: return weibull_type(uniform(0.3, 2.0));
      case 2: return exponential(uniform(0.2, 3.0));
      case 3: return htail::uniform(0.0, uniform(0.5, 5.0));
      default: return scale(regvar(uniform(1.0, 3.0)), uniform(0.2, 5.0));
    }
  }
};

constexpr int kCases = 100;

// Equal log-values, where two -inf values count as equal.
bool same_log(double a, double b, double rel) {
  if (a == b) return true;
  return std::abs(a - b) <= rel * std::max(1.0, std::abs(b));
}

}  // namespace

TEST_SUITE("properties") {
  TEST_CASE("log-space identities") {
    Gen g(1);
    for (int i = 0; i < 1000; ++i) {
      const double a = g.uniform(-800.0, 5.0), b = g.uniform(-800.0, 5.0);
      const double s = log_add(a, b);
      CHECK(s >= std::max(a, b));
      CHECK(log_add(b, a) == s);
      const double hi = std::max(a, b), lo = std::min(a, b);
      if (hi - lo > 1e-6) CHECK(log_add(log_sub(hi, lo), lo) == doctest::Approx(hi).epsilon(1e-10));
      const double t = -g.log_uniform(1e-12, 50.0);
      CHECK(log_add(t, log1m_exp(t)) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    }
  }

  TEST_CASE("tails are monotone and complement the distribution function") {
    Gen g(2);
    for (int i = 0; i < kCases; ++i) {
      auto d = g.law();
      double prev = 0.0;
      for (int j = 0; j < 30; ++j) {
        const double x = 0.05 * std::pow(1.6, j);
        const double s = d.log_sf(x);
        CHECK(s <= prev);
        prev = s;
        if (s > -30.0) CHECK(d.sf(x) + std::exp(d.log_cdf(x)) == doctest::Approx(1.0).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("a degenerate factor is an exact rescaling") {
    Gen g(3);
    for (int i = 0; i < kCases; ++i) {
      auto F = g.law();
      const double c = g.log_uniform(0.01, 100.0);
      const double x = g.log_uniform(0.01, 1e4);
      CHECK(same_log(product_tail(F, degenerate(c), x).log_p(), F.log_sf(x / c), 1e-12));
    }
  }

  TEST_CASE("product tails are symmetric in their factors") {
    Gen g(4);
    for (int i = 0; i < 30; ++i) {
      auto F = g.law(), G = g.law();
      const double x = g.log_uniform(0.1, 1e3);
      const double a = product_tail(F, G, x).log_p(), b = product_tail(G, F, x).log_p();
      if (a == kLogZero || b == kLogZero) {
        CHECK(a == b);
        continue;
      }
      CHECK(std::exp(a - b) == doctest::Approx(1.0).epsilon(1e-6));
    }
  }

  TEST_CASE("scaling a factor scales the argument") {
    Gen g(5);
    for (int i = 0; i < 30; ++i) {
      auto F = g.law(), G = g.law();
      const double c = g.log_uniform(0.1, 10.0), x = g.log_uniform(0.1, 1e3);
      const double a = product_tail(scale(F, c), G, x).log_p(), b = product_tail(F, G, x / c).log_p();
      if (b < -600.0) continue;
      CHECK(std::exp(a - b) == doctest::Approx(1.0).epsilon(1e-6));
    }
  }

  TEST_CASE("independence lower bound") {
    // P(XY > x) >= P(X > x / y0) P(Y > y0) for every y0
    Gen g(6);
    for (int i = 0; i < 30; ++i) {
      auto F = g.law(), G = g.law();
      const double x = g.log_uniform(0.1, 1e3);
      const double h = product_tail(F, G, x).log_p();
      for (double y0 : {0.1, 0.5, 1.0, 2.0}) {
        CHECK(h >= F.log_sf(x / y0) + G.log_sf(y0) - 1e-9);
      }
    }
  }

  TEST_CASE("self-convolution tails grow with k") {
    Gen g(7);
    for (int i = 0; i < 6; ++i) {
      auto V = regvar(g.uniform(0.5, 3.0));
      const double x = g.log_uniform(2.0, 100.0);
      double prev = kLogZero;
      for (int k = 1; k <= 3; ++k) {
        const double v = sum_self_tail(V, k, x).log_p();
        CHECK(v >= prev);
        prev = v;
      }
    }
  }

  TEST_CASE("class verdicts are invariant under scaling") {
    Gen g(8);
    auto grid = GeometricGrid{}.points();
    for (int i = 0; i < 4; ++i) {
      auto V = i % 2 ? weibull_type(g.uniform(0.3, 0.7)) : regvar(g.uniform(0.8, 3.0));
      const auto base = classify(V, ClassId::S, grid).membership;
      for (double c : {0.5, 2.0}) CHECK(classify(scale(V, c), ClassId::S, grid).membership == base);
    }
  }

  TEST_CASE("index and dominated-variation bound of Pareto laws") {
    Gen g(9);
    auto grid = GeometricGrid{}.points();
    for (int i = 0; i < 20; ++i) {
      const double beta = g.uniform(0.3, 5.0);
      auto V = regvar(beta, g.uniform(0.5, 2.0));
      auto r = classify(V, ClassId::R, grid);
      CHECK(r.membership == Membership::Member);
      CHECK(r.estimates.at("alpha") == doctest::Approx(beta).epsilon(0.01));
      auto d = classify(V, ClassId::D, grid);
      CHECK(d.estimates.at("M") == doctest::Approx(std::pow(2.0, beta)).epsilon(0.05));
    }
  }

  TEST_CASE("insensitivity function invariants") {
    Gen g(10);
    auto grid = GeometricGrid{}.points();
    for (int i = 0; i < 20; ++i) {
      auto F = i % 2 ? weibull_type(g.uniform(0.2, 0.8)) : regvar(g.uniform(0.5, 4.0));
      const double delta = g.uniform(0.01, 0.2);
      auto a = build_insensitivity(F, delta, grid);
      double prev_a = 0.0, prev_ratio = INFINITY;
      for (std::size_t j = 0; j < a.nodes().size(); ++j) {
        const double x = a.nodes()[j], v = a.values()[j];
        CHECK(v <= std::sqrt(x) * (1 + 1e-12));
        CHECK(v >= prev_a);
        CHECK(v / x <= prev_ratio * (1 + 1e-12));
        CHECK(F.log_sf(x - v) - F.log_sf(x) <= std::log1p(delta) + 1e-9);
        prev_a = v;
        prev_ratio = v / x;
      }
      // interpolation keeps monotonicity between nodes
      double last = 0.0;
      for (int j = 0; j <= 400; ++j) {
        const double x = grid.front() * std::pow(grid.back() / grid.front(), j / 400.0);
        const double v = a(x);
        CHECK(v >= last - 1e-12 * x);
        last = v;
      }
    }
  }

  TEST_CASE("verdicts do not flip inside the hysteresis band") {
    // a slope between tol_s and 2 tol_s is neither a limit nor growth
    Gen g(11);
    VerdictThresholds th;
    for (int i = 0; i < kCases; ++i) {
      const double level = g.log_uniform(0.1, 10.0);
      const double s = g.uniform(1.2 * th.tol_s, 1.8 * th.tol_s);
      std::vector<double> x, lr;
      const int n = 40;
      // linear in k with relative slope s about the window centre
      const double centre = n - 0.5 * (th.window + 1);
      for (int k = 0; k < n; ++k) {
        x.push_back(10.0 * std::pow(1.5, k));
        lr.push_back(std::log(level * (1.0 + s * (k - centre))));
      }
      auto d = grade_ratios(x, lr, th);
      CHECK(d.window.rel_slope == doctest::Approx(s).epsilon(1e-6));
      CHECK(d.verdict.kind == VerdictKind::Inconclusive);
    }
  }

  TEST_CASE("Monte Carlo results do not depend on the worker count") {
    Gen g(12);
    for (int i = 0; i < 5; ++i) {
      auto F = g.law(), G = g.law();
      const std::uint64_t seed = g.rng();
      const double x = g.log_uniform(0.5, 20.0);
      auto a = mc_product_tail(F, G, x, 300000, seed, 1);
      auto b = mc_product_tail(F, G, x, 300000, seed, 8);
      CHECK(a.hits == b.hits);
    }
    RiskModelSpec m;
    m.Z = regvar(1.0);
    m.Y = uniform(0.0, 1.0);
    auto t1 = finite_ruin_table(m, {1, 3}, {5.0, 20.0}, 200000, 77, 1);
    auto t8 = finite_ruin_table(m, {1, 3}, {5.0, 20.0}, 200000, 77, 8);
    CHECK(t1.ruin == t8.ruin);
    CHECK(t1.terminal == t8.terminal);
  }

  TEST_CASE("ruin tables are pathwise monotone and dominate terminal tails") {
    Gen g(13);
    for (int i = 0; i < 5; ++i) {
      RiskModelSpec m;
      m.Z = shifted(regvar(g.uniform(0.8, 2.5)), -g.uniform(0.0, 1.0));
      m.Y = uniform(0.0, g.uniform(0.5, 1.0));
      std::vector<int> ns{1, 2, 4, 8};
      std::vector<double> xs{1.0, 3.0, 10.0, 30.0};
      auto t = finite_ruin_table(m, ns, xs, 100000, g.rng());
      for (std::size_t a = 0; a < ns.size(); ++a) {
        for (std::size_t b = 0; b < xs.size(); ++b) {
          CHECK(t.ruin[a][b] >= t.terminal[a][b]);
          if (a) CHECK(t.ruin[a][b] >= t.ruin[a - 1][b]);
          if (b) CHECK(t.ruin[a][b] <= t.ruin[a][b - 1]);
        }
      }
    }
  }

  TEST_CASE("CSV output is valid for random curves") {
    Gen g(14);
    for (int i = 0; i < kCases; ++i) {
      std::vector<double> x, v;
      double cur = g.log_uniform(1e-3, 10.0);
      const int n = g.integer(1, 50);
      for (int k = 0; k < n; ++k) {
        cur *= g.uniform(1.001, 3.0);
        x.push_back(cur);
        const int kind = g.integer(0, 9);
        v.push_back(kind == 0 ? std::nan("") : kind == 1 ? INFINITY : kind == 2 ? -INFINITY : g.uniform(-1e3, 1e3));
      }
      std::ostringstream os;
      write_curve_csv(os, x, v);
      std::istringstream in(os.str());
      std::string line;
      REQUIRE(std::getline(in, line));
      CHECK(line == "x,value");
      double last = -INFINITY;
      while (std::getline(in, line)) {
        const auto comma = line.find(',');
        REQUIRE(comma != std::string::npos);
        const double xv = std::stod(line.substr(0, comma));
        const double vv = std::stod(line.substr(comma + 1));
        CHECK(xv > last);
        CHECK(std::isfinite(vv));
        last = xv;
      }
    }
  }

  TEST_CASE("diagnostics survive a JSON round-trip") {
    Gen g(15);
    for (int i = 0; i < kCases; ++i) {
      std::vector<double> x, lr;
      const int n = g.integer(5, 60);
      for (int k = 0; k < n; ++k) {
        x.push_back(std::pow(1.3, k));
        const int kind = g.integer(0, 9);
        lr.push_back(kind == 0 ? std::nan("") : kind == 1 ? -INFINITY : g.uniform(-50.0, 5.0));
      }
      auto d = grade_ratios(x, lr);
      auto back = ratio_diagnostic_from_json(json::parse(to_json(d).dump()));
      CHECK(to_json(back) == to_json(d));
    }
  }
}
