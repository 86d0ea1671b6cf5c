#include "htail/log_space.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace htail {

double log_add(double a, double b) {
  if (a < b) std::swap(a, b);
  if (b == kLogZero) return a;
  if (a == std::numeric_limits<double>::infinity()) return a;
  return a + std::log1p(std::exp(b - a));
}

double log1m_exp(double a) {
  if (a > 0.0) return std::numeric_limits<double>::quiet_NaN();
  if (a == 0.0) return kLogZero;
  // Maechler's switch point between the two accurate branches.
  if (a > -0.6931471805599453) return std::log(-std::expm1(a));
  return std::log1p(-std::exp(a));
}

double log_sub(double a, double b) {
  if (b == kLogZero) return a;
  if (b > a) return std::numeric_limits<double>::quiet_NaN();
  if (a == b) return kLogZero;
  return a + log1m_exp(b - a);
}

double log_sum(std::span<const double> values) {
  LogAccumulator acc;
  for (double v : values) acc.add(v);
  return acc.value();
}

void LogAccumulator::add(double log_term) { add_weighted(log_term, 1.0); }

void LogAccumulator::add_weighted(double log_term, double weight) {
  if (log_term == kLogZero || weight == 0.0) return;
  if (log_term > max_) {
    scaled_sum_ = (max_ == kLogZero) ? 0.0 : scaled_sum_ * std::exp(max_ - log_term);
    max_ = log_term;
  }
  scaled_sum_ += weight * std::exp(log_term - max_);
}

double LogAccumulator::value() const {
  if (max_ == kLogZero || scaled_sum_ <= 0.0) return kLogZero;
  return max_ + std::log(scaled_sum_);
}

LogTailValue::LogTailValue(double log_p) : log_p_(log_p) {
  if (std::isnan(log_p)) throw std::domain_error("LogTailValue: NaN log-probability");
  if (log_p > 0.0) log_p_ = 0.0;
}

LogTailValue LogTailValue::from_probability(double p) {
  if (!(p >= 0.0) || p > 1.0) throw std::domain_error("LogTailValue: probability outside [0,1]");
  return LogTailValue(p == 0.0 ? kLogZero : std::log(p));
}

double LogTailValue::probability() const { return std::exp(log_p_); }

}  // namespace htail
