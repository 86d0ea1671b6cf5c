#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "htail/log_space.hpp"
#include "htail/special.hpp"

using namespace htail;

TEST_SUITE("log_space") {
  TEST_CASE("log_add and log_sub agree with direct arithmetic") {
    CHECK(log_add(std::log(2.0), std::log(3.0)) == doctest::Approx(std::log(5.0)).epsilon(1e-15));
    CHECK(log_sub(std::log(5.0), std::log(3.0)) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(log_add(kLogZero, -3.0) == -3.0);
    CHECK(log_add(kLogZero, kLogZero) == kLogZero);
    CHECK(log_sub(-1.0, -1.0) == kLogZero);
    CHECK(log_sub(-2.0, kLogZero) == -2.0);
  }

  TEST_CASE("log_add stays finite far outside double range") {
    CHECK(log_add(-2000.0, -2000.0) == doctest::Approx(-2000.0 + std::log(2.0)).epsilon(1e-15));
    CHECK(log_add(1000.0, 0.0) == doctest::Approx(1000.0));
  }

  TEST_CASE("log1m_exp is accurate at both ends") {
    CHECK(log1m_exp(-1e-20) == doctest::Approx(std::log(1e-20)).epsilon(1e-12));
    CHECK(log1m_exp(-50.0) == doctest::Approx(-std::exp(-50.0)).epsilon(1e-12));
    CHECK(log1m_exp(0.0) == kLogZero);
    CHECK(log1m_exp(-std::log(2.0)) == doctest::Approx(-std::log(2.0)).epsilon(1e-15));
  }

  TEST_CASE("log_sum and the accumulator match") {
    std::vector<double> v{-1000.0, -1001.0, -999.5, kLogZero};
    LogAccumulator acc;
    for (double x : v) acc.add(x);
    const double direct = -999.5 + std::log(std::exp(-0.5) + std::exp(-1.5) + 1.0);
    CHECK(log_sum(v) == doctest::Approx(direct).epsilon(1e-14));
    CHECK(acc.value() == doctest::Approx(direct).epsilon(1e-14));
    LogAccumulator empty;
    CHECK(empty.empty());
    CHECK(empty.value() == kLogZero);
  }

  TEST_CASE("LogTailValue keeps an exact zero and orders by probability") {
    CHECK(LogTailValue::zero().is_zero());
    CHECK(LogTailValue::zero().probability() == 0.0);
    CHECK(LogTailValue::one().probability() == 1.0);
    CHECK(LogTailValue(-3.0) < LogTailValue(-2.0));
    CHECK(LogTailValue::from_probability(0.25).log_p() == doctest::Approx(std::log(0.25)));
    CHECK(LogTailValue(0.5).log_p() == 0.0);
    CHECK_THROWS(LogTailValue(std::nan("")));
  }

  TEST_CASE("Hurwitz zeta at known values") {
    // zeta(2) = pi^2 / 6, zeta(3) = Apery's constant
    CHECK(std::exp(log_hurwitz_zeta(2.0, 1.0)) == doctest::Approx(M_PI * M_PI / 6.0).epsilon(1e-13));
    CHECK(std::exp(log_hurwitz_zeta(3.0, 1.0)) == doctest::Approx(1.2020569031595942).epsilon(1e-13));
    // zeta(2, 1/2) = 3 zeta(2)
    CHECK(std::exp(log_hurwitz_zeta(2.0, 0.5)) == doctest::Approx(M_PI * M_PI / 2.0).epsilon(1e-13));
    // large a: sum_{k>=0} (a+k)^-3 ~ a^-2 / 2 + a^-3 / 2
    const double a = 1e12;
    CHECK(log_hurwitz_zeta(3.0, a) == doctest::Approx(std::log(0.5 / (a * a) + 0.5 / (a * a * a))).epsilon(1e-14));
  }

  TEST_CASE("real_gcd") {
    CHECK(real_gcd(0.75, 0.5, 1e-9) == doctest::Approx(0.25));
    CHECK(real_gcd(6.0, 4.0, 1e-9) == doctest::Approx(2.0));
  }
}
