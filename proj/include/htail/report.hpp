#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "htail/conditions.hpp"
#include "htail/convolve.hpp"
#include "htail/diagnostics.hpp"
#include "htail/risk_model.hpp"
#include "json.hpp"

namespace htail {

inline constexpr int kReportSchemaVersion = 1;

/// A log-space value as JSON: a number when finite, "-inf" / "inf" strings
/// for the sentinels, null for NaN.
nlohmann::json log_json(double v);

/// Inverse of log_json.
double log_from_json(const nlohmann::json& j);

nlohmann::json to_json(const Verdict& v);
nlohmann::json to_json(const RatioDiagnostic& d);
nlohmann::json to_json(const ClassVerdict& v);
nlohmann::json to_json(const ConditionReport& r);
nlohmann::json to_json(const Theorem11Verdict& v);
nlohmann::json to_json(const InsensitivityFunction& a);
nlohmann::json to_json(const TailResult& t);
nlohmann::json to_json(const McEstimate& m);
nlohmann::json to_json(const RuinEstimate& r);
nlohmann::json to_json(const GuardResult& g);
nlohmann::json to_json(const LowerBoundResult& r);
nlohmann::json to_json(const QuadratureSpec& q);
nlohmann::json to_json(const GridSpec& g);
nlohmann::json to_json(const GeometricGrid& g);
nlohmann::json to_json(const VerdictThresholds& t);

/// Rebuild a RatioDiagnostic from its JSON form.
RatioDiagnostic ratio_diagnostic_from_json(const nlohmann::json& j);

/// Every default used by the library and the command-line tool.
nlohmann::json defaults_table();

/// "x,value" rows with %.17g. Rows with NaN values are skipped; infinite
/// values are written as the largest finite double of the same sign.
/// Throws std::invalid_argument unless x is strictly increasing.
void write_curve_csv(std::ostream& os, const std::vector<double>& x, const std::vector<double>& value);

/// The ratio curve of a diagnostic, dropped points omitted.
void write_curve_csv(std::ostream& os, const RatioDiagnostic& d);

}  // namespace htail
