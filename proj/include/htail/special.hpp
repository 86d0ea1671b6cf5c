#pragma once

namespace htail {

/// Natural log of the Hurwitz zeta function sum_{k>=0} (a+k)^{-s}, for s > 1, a > 0.
///
/// Euler-Maclaurin with the first terms summed directly until the shifted
/// argument reaches 16. Stable for very large a since the result is formed in
/// log-space relative to a^{-s}.
double log_hurwitz_zeta(double s, double a);

/// Greatest common divisor of two positive reals, with remainders below
/// tol * max(a, b) treated as zero. Returns 0 when Euclid does not settle.
double real_gcd(double a, double b, double tol);

}  // namespace htail
