#include "htail/special.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

namespace htail {

double log_hurwitz_zeta(double s, double a) {
  if (!(s > 1.0) || !(a > 0.0)) throw std::domain_error("log_hurwitz_zeta: need s > 1 and a > 0");
  constexpr double kShift = 16.0;
  // B_{2j} / (2j)!
  constexpr std::array<double, 7> kBernoulliOverFactorial = {
      1.0 / 6.0 / 2.0,
      -1.0 / 30.0 / 24.0,
      1.0 / 42.0 / 720.0,
      -1.0 / 30.0 / 40320.0,
      5.0 / 66.0 / 3628800.0,
      -691.0 / 2730.0 / 479001600.0,
      7.0 / 6.0 / 87178291200.0,
  };
  const double n = a < kShift ? std::ceil(kShift - a) : 0.0;
  const double b = a + n;
  // Everything below is scaled by b^{-s}.
  double scaled = 0.0;
  for (double k = 0.0; k < n; k += 1.0) scaled += std::pow(b / (a + k), s);
  scaled += b / (s - 1.0) + 0.5;
  double rising = s;  // s (s+1) ... (s+2j-2)
  double b_pow = 1.0 / b;  // b^{1-2j}
  for (std::size_t j = 0; j < kBernoulliOverFactorial.size(); ++j) {
    scaled += kBernoulliOverFactorial[j] * rising * b_pow;
    const double m = 2.0 * static_cast<double>(j + 1);
    rising *= (s + m - 1.0) * (s + m);
    b_pow /= b * b;
  }
  return -s * std::log(b) + std::log(scaled);
}

double real_gcd(double a, double b, double tol) {
  a = std::fabs(a);
  b = std::fabs(b);
  if (a < b) std::swap(a, b);
  const double scale = a;
  for (int iter = 0; iter < 200; ++iter) {
    if (b <= tol * scale) return a;
    const double r = std::fmod(a, b);
    // Treat remainders within tolerance of b as zero.
    if (r <= tol * scale || b - r <= tol * scale) return b;
    a = b;
    b = r;
  }
  return 0.0;
}

}  // namespace htail
