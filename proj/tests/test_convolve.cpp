#include <cmath>

#include "doctest.h"
#include "htail/convolve.hpp"
#include "htail/gridded.hpp"
#include "oracles.hpp"

using namespace htail;

TEST_SUITE("convolve") {
  TEST_CASE("degenerate factor gives an exact scale") {
    auto F = regvar(2.0);
    CHECK(product_tail(F, degenerate(3.0), 30.0).log_p() == doctest::Approx(F.log_sf(10.0)).epsilon(1e-14));
    CHECK(product_tail(degenerate(0.5), exponential(1.0), 2.0).log_p() == doctest::Approx(-4.0).epsilon(1e-14));
  }

  TEST_CASE("product of two uniforms") {
    auto U = uniform(0.0, 1.0);
    CHECK(product_tail(U, U, 0.25).probability() == doctest::Approx(oracle::uniform_product_sf(0.25)).epsilon(1e-9));
    CHECK(std::exp(product_log_cdf(U, U, 0.25)) == doctest::Approx(oracle::uniform_product_cdf(0.25)).epsilon(1e-9));
    // tiny lower tail stays accurate
    CHECK(product_log_cdf(U, U, 1e-12) == doctest::Approx(std::log(oracle::uniform_product_cdf(1e-12))).epsilon(1e-9));
  }

  TEST_CASE("Pareto against uniform") {
    auto X = regvar(1.0);
    auto Y = uniform(0.0, 1.0);
    for (double x : {0.3, 1.0, 7.0, 1e3, 1e4}) {
      CHECK(product_tail(X, Y, x).probability() == doctest::Approx(oracle::pareto_uniform_tail(x)).epsilon(1e-8));
    }
  }

  TEST_CASE("lattice factor against an exponential") {
    auto L = lattice_power(3.0);
    auto E = exponential(1.0);
    for (double x : {1.0, 10.0, 100.0}) {
      const double ref = oracle::lattice3_exp_tail(x);
      CHECK(product_tail(L, E, x).probability() == doctest::Approx(ref).epsilon(1e-7));
      CHECK(product_tail(E, L, x).probability() == doctest::Approx(ref).epsilon(1e-7));
    }
  }

  TEST_CASE("Weibull product against Simpson") {
    auto W = weibull_type(2.0);
    for (double x : {1.0, 4.0, 25.0}) {
      CHECK(product_tail(W, W, x).probability() == doctest::Approx(oracle::weibull_product_tail(2.0, x)).epsilon(1e-7));
    }
  }

  TEST_CASE("detailed results carry error budgets") {
    auto r = product_tail_detailed(regvar(2.0), exponential(1.0), 50.0);
    CHECK(r.rel_error <= 1e-8);
    CHECK(r.truncation_bound <= 1e-15);
    CHECK(r.panels > 0);
  }

  TEST_CASE("an exhausted panel budget throws with a partial value") {
    QuadratureSpec q;
    q.rel_tol = 1e-15;
    q.max_panels = 1;
    bool thrown = false;
    try {
      product_tail(weibull_type(0.5), exponential(1.0), 1000.0, q);
    } catch (const QuadratureError& e) {
      thrown = true;
      CHECK(std::isfinite(e.partial_log_value()));
      CHECK(e.achieved_rel_error() > 1e-15);
    }
    CHECK(thrown);
  }

  TEST_CASE("invalid quadrature settings") {
    QuadratureSpec q;
    q.rel_tol = 0.0;
    CHECK_THROWS_AS(q.validate(), ParameterError);
    q = {};
    q.max_panels = 0;
    CHECK_THROWS_AS(q.validate(), ParameterError);
  }

  TEST_CASE("self-convolution of exponentials is Erlang") {
    auto E = exponential(1.0);
    for (int k = 1; k <= 4; ++k) {
      for (double x : {0.5, 5.0, 30.0}) {
        CHECK(sum_self_tail(E, k, x).probability() == doctest::Approx(oracle::erlang_tail(k, x)).epsilon(1e-6));
      }
    }
  }

  TEST_CASE("two Pareto summands") {
    CHECK(sum_self_tail(regvar(1.0), 2, 10.0).probability() == doctest::Approx(oracle::pareto1_sum2_tail(10.0)).epsilon(1e-8));
    CHECK(sum_self_tail(regvar(1.0), 2, 1e4).probability() == doctest::Approx(oracle::pareto1_sum2_tail(1e4)).epsilon(1e-8));
    for (double beta : {0.5, 2.0, 3.5}) {
      for (double x : {3.0, 50.0, 1e3}) {
        CHECK(sum_self_tail(regvar(beta), 2, x).probability() ==
              doctest::Approx(oracle::pareto_sum2_tail(beta, x)).epsilon(1e-7));
      }
    }
  }

  TEST_CASE("self-convolution bounds") {
    CHECK_THROWS_AS(sum_self_tail(exponential(1.0), 0, 1.0), ParameterError);
    CHECK_THROWS_AS(sum_self_tail(exponential(1.0), 9, 1.0), ParameterError);
  }

  TEST_CASE("gridded products") {
    auto U = uniform(0.0, 1.0);
    auto H = product_dist(U, U);
    REQUIRE(as_gridded(H) != nullptr);
    CHECK(H.sf(0.25) == doctest::Approx(oracle::uniform_product_sf(0.25)).epsilon(1e-6));
    auto P = product_dist(regvar(1.0), U);
    for (double x : {2.0, 40.0, 900.0}) CHECK(P.sf(x) == doctest::Approx(oracle::pareto_uniform_tail(x)).epsilon(1e-6));
  }

  TEST_CASE("exact products for atomic factors") {
    auto A = discrete({{1.0, 0.5}, {2.0, 0.5}});
    auto B = discrete({{3.0, 0.25}, {5.0, 0.75}});
    auto H = product_dist(A, B);
    CHECK(as_gridded(H) == nullptr);
    // products 3, 5, 6, 10 with masses 1/8, 3/8, 1/8, 3/8
    CHECK(H.sf(5.5) == doctest::Approx(0.5));
    CHECK(H.sf(9.0) == doctest::Approx(0.375));
    auto S = product_dist(regvar(2.0), degenerate(2.0));
    CHECK(S.log_sf(20.0) == doctest::Approx(-2.0 * std::log(10.0)).epsilon(1e-14));
  }

  TEST_CASE("Monte Carlo product tail") {
    auto X = regvar(1.0);
    auto Y = uniform(0.0, 1.0);
    auto m = mc_product_tail(X, Y, 10.0, 1 << 20, 42);
    CHECK(m.n == (1u << 20));
    CHECK(std::abs(m.estimate - 0.05) <= 3.0 * m.ci_halfwidth);
    auto m2 = mc_product_tail(X, Y, 10.0, 1 << 20, 42, 4);
    CHECK(m2.hits == m.hits);
    auto none = mc_product_tail(uniform(0.0, 1.0), Y, 2.0, 1000, 1);
    CHECK(none.hits == 0);
    CHECK(none.upper_bound == doctest::Approx(-std::expm1(std::log(0.025) / 1000.0)).epsilon(1e-12));
  }
}
