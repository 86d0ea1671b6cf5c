#pragma once

// Independent reference values for the tests. Nothing here calls the library.

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

namespace oracle {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kZeta3 = 1.2020569031595942854;

// Composite Simpson on [a, b] with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n) {
  if (n % 2) ++n;
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

// P(XY > x) with P(X > z) = min(1, 1/z) and Y uniform on (0, 1].
inline double pareto_uniform_tail(double x) { return x < 1.0 ? 1.0 - 0.5 * x : 0.5 / x; }

// Same X against a product of i independent uniforms: E[U_1...U_i] / x for x >= 1.
inline double pareto_uniform_chain_tail(int i, double x) { return std::pow(2.0, -i) / x; }

// Tail of a sum of k standard exponentials.
inline double erlang_tail(int k, double x) {
  double term = 1.0, sum = 1.0;
  for (int j = 1; j < k; ++j) {
    term *= x / j;
    sum += term;
  }
  return std::exp(-x) * sum;
}

// U1 U2 for independent uniforms on (0, 1]: P(U1 U2 <= t) = t (1 - ln t).
inline double uniform_product_cdf(double t) { return t * (1.0 - std::log(t)); }
inline double uniform_product_sf(double t) { return 1.0 - t + t * std::log(t); }

// Two-fold sum of Pareto laws with P(X > z) = z^-1 on z >= 1, for x >= 2.
inline double pareto1_sum2_tail(double x) { return 2.0 / x + 2.0 * std::log(x - 1.0) / (x * x); }

// Two-fold sum of Pareto(beta) laws with x_min = 1, x >= 2, by splitting the
// convolution integral at x / 2 and integrating each half in the log of the
// distance to its end point.
inline double pareto_sum2_tail(double beta, double x, int panels = 40000) {
  auto sf = [beta](double z) { return z <= 1.0 ? 1.0 : std::pow(z, -beta); };
  auto pdf = [beta](double y) { return y < 1.0 ? 0.0 : beta * std::pow(y, -beta - 1.0); };
  const double half = 0.5 * x;
  // y in [1, x/2], y = e^u
  const double lower = simpson([&](double u) {
    const double y = std::exp(u);
    return sf(x - y) * pdf(y) * y;
  }, 0.0, std::log(half), panels);
  // y in [x/2, x - 1], x - y = e^w
  const double upper = simpson([&](double w) {
    const double v = std::exp(w);
    return sf(v) * pdf(x - v) * v;
  }, 0.0, std::log(half), panels);
  return sf(x - 1.0) + lower + upper;
}

// P(XY > x) for X lattice with P(X = n) = n^-3 / zeta(3) and Y standard
// exponential: the sum over n of P(X = n) exp(-x / n), summed directly to N
// and closed with the integral of the remainder.
inline double lattice3_exp_tail(double x, long N = 2000000) {
  long double s = 0.0L;
  for (long n = N; n >= 1; --n) {
    const long double nn = static_cast<long double>(n);
    s += std::exp(-static_cast<long double>(x) / nn) / (nn * nn * nn);
  }
  const double Nd = static_cast<double>(N);
  // int_N^inf n^-3 e^{-x/n} dn = (1 - (1 + x/N) e^{-x/N}) / x^2, minus half the first term
  const double tail = -std::expm1(-x / Nd) / (x * x) - (x / Nd) * std::exp(-x / Nd) / (x * x) -
                      0.5 * std::exp(-x / Nd) / (Nd * Nd * Nd);
  return static_cast<double>(s + tail) / kZeta3;
}

// Asymptotic tail of a product of two Weibull-type factors with log tail -x^alpha:
// sqrt(pi) x^{alpha/4} exp(-2 x^{alpha/2}).
inline double weibull_product_asymptotic(double alpha, double x) {
  return std::sqrt(kPi) * std::pow(x, alpha / 4.0) * std::exp(-2.0 * std::pow(x, alpha / 2.0));
}

// Log of the same, for tails far below double range.
inline double log_weibull_product_asymptotic(double alpha, double x) {
  return 0.5 * std::log(kPi) + alpha / 4.0 * std::log(x) - 2.0 * std::pow(x, alpha / 2.0);
}

// P(XY > x) for two Weibull-type factors, by Simpson in t = ln y over a wide window.
inline double weibull_product_tail(double alpha, double x, int panels = 200000) {
  const double lx = std::log(x);
  auto f = [&](double t) {
    const double y = std::exp(t);
    const double ya = std::pow(y, alpha);
    const double za = std::exp(alpha * (lx - t));
    // F(x/y) tail times density of Y times dy/dt
    return std::exp(-za - ya) * alpha * ya;
  };
  const double mid = 0.5 * lx;
  return simpson(f, mid - 30.0 / alpha, mid + 30.0 / alpha, panels);
}

// Knots of the example law: ln x_{n+1} = (1 + 1/alpha) ln x_n.
inline std::vector<double> example31_knots(double alpha, double x1, int count) {
  std::vector<double> out{x1};
  double lx = std::log(x1);
  for (int i = 1; i < count; ++i) {
    lx *= 1.0 + 1.0 / alpha;
    out.push_back(std::exp(lx));
  }
  return out;
}

// Closed-form insensitivity shift for a Pareto(beta) tail: (x / (x - a))^beta = 1 + delta.
inline double pareto_insensitivity(double beta, double delta, double x) {
  return x * (1.0 - std::pow(1.0 + delta, -1.0 / beta));
}

}  // namespace oracle
