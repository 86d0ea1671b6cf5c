#pragma once

#include <compare>
#include <cstddef>
#include <limits>
#include <span>

namespace htail {

inline constexpr double kLogZero = -std::numeric_limits<double>::infinity();

/// log(e^a + e^b) without overflow or underflow.
double log_add(double a, double b);

/// log(e^a - e^b) for a >= b. Returns kLogZero when a == b.
double log_sub(double a, double b);

/// log(sum_i e^{v_i}).
double log_sum(std::span<const double> values);

/// log(1 - e^a) for a <= 0, accurate on both ends.
double log1m_exp(double a);

/// Log-sum-exp accumulator with a running maximum.
///
/// Terms are stored relative to the largest exponent seen so far, so the
/// running sum never exponentiates anything far below it.
class LogAccumulator {
 public:
  void add(double log_term);
  void add_weighted(double log_term, double weight);
  double value() const;
  bool empty() const { return max_ == kLogZero; }

 private:
  double max_ = kLogZero;
  double scaled_sum_ = 0.0;
};

/// A probability stored as its natural logarithm.
///
/// The exact zero probability is the distinguished value log_p = -inf.
/// Ordering follows the probabilities encoded.
class LogTailValue {
 public:
  constexpr LogTailValue() = default;
  explicit LogTailValue(double log_p);

  static LogTailValue zero() { return LogTailValue(kLogZero); }
  static LogTailValue one() { return LogTailValue(0.0); }
  static LogTailValue from_probability(double p);

  double log_p() const { return log_p_; }
  bool is_zero() const { return log_p_ == kLogZero; }

  /// exp(log_p). Lossy below roughly e^-745 where doubles underflow.
  double probability() const;

  auto operator<=>(const LogTailValue&) const = default;

 private:
  double log_p_ = 0.0;
};

}  // namespace htail
