#include <cmath>
#include <limits>
#include <sstream>

#include "doctest.h"
#include "htail/report.hpp"

using namespace htail;
using nlohmann::json;

TEST_SUITE("report") {
  TEST_CASE("log sentinels") {
    CHECK(log_json(-1.5) == json(-1.5));
    CHECK(log_json(kLogZero) == json("-inf"));
    CHECK(log_json(INFINITY) == json("inf"));
    CHECK(log_json(std::nan("")).is_null());
    CHECK(log_from_json(json("-inf")) == kLogZero);
    CHECK(log_from_json(json("inf")) == INFINITY);
    CHECK(std::isnan(log_from_json(json(nullptr))));
    CHECK(log_from_json(json(-3.25)) == -3.25);
    CHECK_THROWS(log_from_json(json("minus infinity")));
  }

  TEST_CASE("ratio diagnostics round-trip through JSON") {
    std::vector<double> x, lr;
    for (int i = 0; i < 40; ++i) {
      x.push_back(10.0 * std::pow(1.5, i));
      lr.push_back(i == 3 ? std::nan("") : std::log(2.0) - 1.0 / (i + 1));
    }
    auto d = grade_ratios(x, lr);
    auto text = to_json(d).dump();
    auto back = ratio_diagnostic_from_json(json::parse(text));
    REQUIRE(back.x.size() == d.x.size());
    CHECK(back.verdict.kind == d.verdict.kind);
    CHECK(back.verdict.value == d.verdict.value);
    CHECK(back.dropped == d.dropped);
    for (std::size_t i = 0; i < d.x.size(); ++i) {
      CHECK(back.x[i] == d.x[i]);
      if (std::isnan(d.log_ratio[i]))
        CHECK(std::isnan(back.log_ratio[i]));
      else
        CHECK(back.log_ratio[i] == d.log_ratio[i]);
    }
  }

  TEST_CASE("report objects carry their fields") {
    auto c = classify(regvar(2.0), ClassId::R, GeometricGrid{}.points());
    auto j = to_json(c);
    CHECK(j["class"] == "R");
    CHECK(j["membership"] == "member");
    CHECK(j.contains("evidence"));
    auto r = check_condition(ConditionId::EQ13, regvar(2.0), degenerate(1.0), GeometricGrid{}.points());
    auto jr = to_json(r);
    CHECK(jr["condition_id"] == "EQ13");
    CHECK(jr["overall"] == "HOLDS_EVIDENCE");
    CHECK(jr["parameter_evidence"].size() == 4);
    McEstimate m;
    m.hits = 3;
    m.n = 10;
    CHECK(to_json(m)["hits"] == 3);
  }

  TEST_CASE("defaults table") {
    auto d = defaults_table();
    CHECK(d["schema_version"] == kReportSchemaVersion);
    CHECK(d["thresholds"]["window"] == 8);
    CHECK(d["thresholds"]["min_points"] == 32);
    CHECK(d["thresholds_short_grid"]["window"] == 4);
    CHECK(d["x_grid"]["K"] == 40);
    CHECK(d["quadrature"]["rel_tol"] == 1e-8);
  }

  TEST_CASE("CSV output") {
    std::ostringstream os;
    write_curve_csv(os, {1.0, 2.0, 3.0, 4.0}, {0.5, std::nan(""), INFINITY, -INFINITY});
    std::istringstream in(os.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "x,value");
    std::getline(in, line);
    CHECK(line == "1,0.5");
    std::getline(in, line);
    CHECK(line == "3,1.7976931348623157e+308");
    std::getline(in, line);
    CHECK(line == "4,-1.7976931348623157e+308");
    CHECK_FALSE(std::getline(in, line));
    std::ostringstream bad;
    CHECK_THROWS_AS(write_curve_csv(bad, {2.0, 1.0}, {0.0, 0.0}), std::invalid_argument);
  }

  TEST_CASE("CSV round-trips doubles exactly") {
    std::ostringstream os;
    const double v = 0.1 + 0.2;
    write_curve_csv(os, {1.0 / 3.0}, {v});
    auto s = os.str();
    auto comma = s.find(',', s.find('\n'));
    CHECK(std::stod(s.substr(comma + 1)) == v);
  }
}
