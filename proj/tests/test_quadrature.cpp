#include <cmath>

#include "doctest.h"
#include "htail/quadrature.hpp"

using namespace htail;

TEST_SUITE("quadrature") {
  TEST_CASE("polynomials and exponentials") {
    auto r = integrate_log([](double t) { return 2.0 * std::log(t); }, {0.0, 3.0}, 1e-12, 100);
    CHECK(r.converged);
    CHECK(std::exp(r.log_value) == doctest::Approx(9.0).epsilon(1e-13));
    auto e = integrate_log([](double t) { return -t; }, {0.0, 40.0}, 1e-12, 1000);
    CHECK(std::exp(e.log_value) == doctest::Approx(-std::expm1(-40.0)).epsilon(1e-12));
  }

  TEST_CASE("integrands far below double range") {
    // int_0^1 e^{-2000 + t} dt = e^{-2000} (e - 1)
    auto r = integrate_log([](double t) { return -2000.0 + t; }, {0.0, 1.0}, 1e-12, 100);
    CHECK(r.log_value == doctest::Approx(-2000.0 + std::log(std::exp(1.0) - 1.0)).epsilon(1e-14));
  }

  TEST_CASE("breaks handle kinks") {
    auto f = [](double t) { return t < 1.0 ? 0.0 : -50.0 * (t - 1.0); };
    auto r = integrate_log(f, {0.0, 1.0, 5.0}, 1e-10, 200);
    CHECK(std::exp(r.log_value) == doctest::Approx(1.0 + (1.0 - std::exp(-200.0)) / 50.0).epsilon(1e-10));
    CHECK(r.rel_error() < 1e-10);
  }

  TEST_CASE("an exhausted budget is reported, not hidden") {
    auto f = [](double t) { return 0.5 * std::log(std::abs(std::sin(40.0 * t)) + 1e-300); };
    auto r = integrate_log(f, {0.0, 3.0}, 1e-14, 2);
    CHECK_FALSE(r.converged);
    CHECK(std::isfinite(r.log_value));
  }

  TEST_CASE("zero integrand") {
    auto r = integrate_log([](double) { return -INFINITY; }, {0.0, 1.0}, 1e-10, 10);
    CHECK(r.log_value == -INFINITY);
  }
}
