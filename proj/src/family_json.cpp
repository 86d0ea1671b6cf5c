#include <cmath>
#include <limits>
#include <string>

#include "htail/distribution.hpp"
#include "htail/gridded.hpp"

namespace htail {

namespace {

using nlohmann::json;

double number(const json& params, const char* key, const std::string& path) {
  if (!params.contains(key)) throw ParameterError(path + "params." + key, "missing");
  const json& v = params.at(key);
  if (!v.is_number()) throw ParameterError(path + "params." + key, "must be a number");
  return v.get<double>();
}

double number_or(const json& params, const char* key, double fallback, const std::string& path) {
  if (!params.contains(key)) return fallback;
  return number(params, key, path);
}

std::vector<double> number_list(const json& params, const char* key, const std::string& path) {
  if (!params.contains(key) || !params.at(key).is_array()) {
    throw ParameterError(path + "params." + key, "must be an array of numbers");
  }
  std::vector<double> out;
  for (const json& v : params.at(key)) {
    if (!v.is_number()) throw ParameterError(path + "params." + key, "must be an array of numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

Distribution build(const json& spec, const std::string& path) {
  if (!spec.is_object()) throw ParameterError(path.empty() ? "spec" : path, "must be a JSON object");
  if (spec.contains("schema_version")) {
    const json& v = spec.at("schema_version");
    if (!v.is_number_integer() || v.get<int>() != 1) {
      throw ParameterError(path + "schema_version", "unsupported (expected 1)");
    }
  }
  if (!spec.contains("family") || !spec.at("family").is_string()) {
    throw ParameterError(path + "family", "missing or not a string");
  }
  const std::string tag = spec.at("family").get<std::string>();
  const json params = spec.value("params", json::object());
  if (!params.is_object()) throw ParameterError(path + "params", "must be an object");

  auto base = [&]() {
    if (!spec.contains("base")) throw ParameterError(path + "base", "missing for composite family " + tag);
    return build(spec.at("base"), path + "base.");
  };

  // Re-tag parameter errors raised by the constructors with the JSON path.
  try {
    if (tag == "regvar") return regvar(number(params, "beta", path), number_or(params, "x_min", 1.0, path));
    if (tag == "weibull_type") return weibull_type(number(params, "alpha", path));
    if (tag == "exponential") return exponential(number_or(params, "rate", 1.0, path));
    if (tag == "uniform") return uniform(number_or(params, "lo", 0.0, path), number(params, "hi", path));
    if (tag == "degenerate") return degenerate(number(params, "c", path));
    if (tag == "lattice_power") return lattice_power(number(params, "beta", path));
    if (tag == "example31_G") return example31_g(number(params, "alpha", path), number(params, "x1", path));
    if (tag == "example31_F") return example31_f(number(params, "alpha", path));
    if (tag == "discrete") {
      if (!params.contains("atoms") || !params.at("atoms").is_array()) {
        throw ParameterError(path + "params.atoms", "must be an array of [location, mass] pairs");
      }
      std::vector<Atom> atoms;
      for (const json& pair : params.at("atoms")) {
        if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number() || !pair[1].is_number()) {
          throw ParameterError(path + "params.atoms", "must be an array of [location, mass] pairs");
        }
        atoms.push_back({pair[0].get<double>(), pair[1].get<double>()});
      }
      return discrete(std::move(atoms));
    }
    if (tag == "scale") return scale(base(), number(params, "c", path));
    if (tag == "positive_part") return positive_part(base());
    if (tag == "shifted") return shifted(base(), number(params, "shift", path));
    if (tag == "gridded") {
      auto log_x = number_list(params, "log_x", path);
      auto log_sf = number_list(params, "log_sf", path);
      std::vector<double> x(log_x.size());
      for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::exp(log_x[i]);
      return make_gridded(std::move(x), std::move(log_sf), number_or(params, "mass_at_zero", 0.0, path),
                          number_or(params, "upper_support", std::numeric_limits<double>::infinity(), path),
                          number_or(params, "declared_tolerance", 0.0, path));
    }
  } catch (const ParameterError& e) {
    if (e.parameter().find('.') != std::string::npos) throw;
    throw ParameterError(path + "params." + e.parameter(), std::string(e.what()).substr(e.parameter().size() + 2));
  } catch (const std::invalid_argument& e) {
    throw ParameterError(path + "params", e.what());
  }
  throw ParameterError(path + "family", "unknown family tag '" + tag + "'");
}

}  // namespace

Distribution make_family(const nlohmann::json& spec) { return build(spec, ""); }

}  // namespace htail
