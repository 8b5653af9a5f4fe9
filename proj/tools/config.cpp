#include "config.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>

namespace netlasso::cli {

using nlohmann::json;

namespace {

json leaf(const char* type, json def, json allowed = nullptr) {
  json s = {{"type", type}, {"default", std::move(def)}};
  if (!allowed.is_null()) s["enum"] = std::move(allowed);
  return s;
}

json build_schema() {
  json s;
  s["task"] = leaf("string", "solve-ntl", task_names());
  s["seed"] = leaf("integer", 1);
  s["merge_tol"] = leaf("number", 1e-6);

  s["data"]["kind"] = leaf("string", "half-moons", {"two-lines", "half-moons", "piecewise", "csv"});
  s["data"]["n"] = leaf("integer", 100);
  s["data"]["noise_sd"] = leaf("number", 0.1);
  s["data"]["slopes"] = leaf("number-array", {1.0, -1.0});
  s["data"]["intercepts"] = leaf("number-array", {0.0, 0.0});
  s["data"]["x_range"] = leaf("number-array", {-1.0, 1.0});
  s["data"]["levels"] = leaf("levels?", nullptr);
  s["data"]["path"] = leaf("string", "");
  s["data"]["has_labels"] = leaf("bool", false);
  s["data"]["resample"] = leaf("integer?", nullptr);

  s["loss"]["kind"] = leaf("string", "auto", {"auto", "squared-distance", "ridge-regression"});
  s["loss"]["epsilon"] = leaf("number", 1e-2);

  s["graph"]["kind"] = leaf("string", "complete", {"complete", "knn", "path", "edge-list"});
  s["graph"]["weights"] = leaf("string", "uniform", {"uniform", "gaussian"});
  s["graph"]["k"] = leaf("integer", 20);
  s["graph"]["alpha"] = leaf("number", 0.5);
  s["graph"]["file"] = leaf("string", "");

  s["solver"]["gamma"] = leaf("number", 1.0);
  s["solver"]["gamma_preset"] = leaf("string", "none", {"none", "exact-penalty"});
  s["solver"]["K"] = leaf("integer", 0);
  s["solver"]["rho"] = leaf("number?", nullptr);
  s["solver"]["x_update"] = leaf("string", "exact", {"exact", "linearized"});
  s["solver"]["bregman_L"] = leaf("number?", nullptr);
  s["solver"]["max_iters"] = leaf("integer", 1000);
  s["solver"]["eps_abs"] = leaf("number", 1e-5);
  s["solver"]["eps_rel"] = leaf("number", 1e-5);
  s["solver"]["rho_schedule"] = leaf("string", "none", {"none", "preset", "custom"});
  s["solver"]["multiplier"] = leaf("number", 10.0);
  s["solver"]["cap"] = leaf("number?", nullptr);
  s["solver"]["period"] = leaf("integer", 100);
  s["solver"]["lyapunov_r"] = leaf("number", 0.9);

  s["path"]["k_sequence"] = leaf("integer-array?", nullptr);
  s["path"]["k_start"] = leaf("integer?", nullptr);
  s["path"]["k_step"] = leaf("integer?", nullptr);
  s["path"]["k_stop"] = leaf("integer", 0);
  s["path"]["gammas"] = leaf("number-array?", nullptr);
  s["path"]["gamma_start"] = leaf("number", 1e-3);
  s["path"]["gamma_ratio"] = leaf("number", 1.2);
  s["path"]["gamma_steps"] = leaf("integer", 50);
  s["path"]["warm_start"] = leaf("bool", true);
  s["path"]["stop_when_merged"] = leaf("bool", true);

  s["init"]["policy"] = leaf("string", "per-node-minimizer", {"per-node-minimizer", "from-file", "nl-midpoint"});
  s["init"]["file"] = leaf("string", "");

  s["stationarity"]["random_directions"] = leaf("integer", 100);
  s["stationarity"]["tolerance"] = leaf("number", 1e-6);

  s["thresholds"]["C"] = leaf("number?", nullptr);
  s["thresholds"]["alpha"] = leaf("number-array?", nullptr);

  s["metrics"]["truth"] = leaf("string", "");
  s["metrics"]["estimate"] = leaf("string", "");

  s["piecewise"]["K"] = leaf("integer", 5);
  s["piecewise"]["gamma_start"] = leaf("number", 1e-3);
  s["piecewise"]["gamma_ratio"] = leaf("number", 1.2);
  s["piecewise"]["gamma_steps"] = leaf("integer", 100);
  s["piecewise"]["gamma"] = leaf("number?", nullptr);
  s["piecewise"]["rho0"] = leaf("number", 1.0);
  s["piecewise"]["max_iters"] = leaf("integer", 5000);

  s["output"]["dir"] = leaf("string", "out");
  return s;
}

bool is_leaf(const json& node) { return node.is_object() && node.contains("type") && node.contains("default"); }

bool is_integral(const json& v) {
  if (v.is_number_integer()) return true;
  if (!v.is_number_float()) return false;
  const double d = v.get<double>();
  return std::isfinite(d) && d == std::floor(d) && std::abs(d) < 9.0e15;
}

void check_type(const std::string& key, const json& spec, json& v) {
  std::string type = spec["type"];
  const bool nullable = !type.empty() && type.back() == '?';
  if (nullable) type.pop_back();
  if (v.is_null()) {
    if (nullable) return;
    throw ConfigError(key + ": value must not be null");
  }
  auto fail = [&](const std::string& what) { throw ConfigError(key + ": expected " + what + ", got " + v.dump()); };
  if (type == "string") {
    if (!v.is_string()) fail("a string");
    if (spec.contains("enum")) {
      for (const auto& ok : spec["enum"])
        if (ok == v) return;
      throw ConfigError(key + ": '" + v.get<std::string>() + "' is not one of " + spec["enum"].dump());
    }
  } else if (type == "bool") {
    if (!v.is_boolean()) fail("true or false");
  } else if (type == "integer") {
    if (!is_integral(v)) fail("an integer");
    v = static_cast<std::int64_t>(v.get<double>());
  } else if (type == "number") {
    if (!v.is_number()) fail("a number");
    v = v.get<double>();
  } else if (type == "number-array" || type == "integer-array") {
    if (!v.is_array()) fail("an array");
    for (auto& x : v) {
      if (type == "integer-array") {
        if (!is_integral(x)) fail("an array of integers");
        x = static_cast<std::int64_t>(x.get<double>());
      } else {
        if (!x.is_number()) fail("an array of numbers");
        x = x.get<double>();
      }
    }
  } else if (type == "levels") {
    if (!v.is_array() || v.empty()) fail("a non-empty array of [length, value] pairs");
    for (auto& pair : v) {
      if (!pair.is_array() || pair.size() != 2 || !is_integral(pair[0]) || !pair[1].is_number())
        fail("[length, value] pairs");
      pair[0] = static_cast<std::int64_t>(pair[0].get<double>());
      pair[1] = pair[1].get<double>();
    }
  }
}

// Overlays `user` onto `cfg` following `schema`.
void overlay(const json& schema, json& cfg, const json& user, const std::string& prefix) {
  if (!user.is_object()) throw ConfigError((prefix.empty() ? "config" : prefix) + ": expected an object");
  for (const auto& [key, value] : user.items()) {
    const std::string full = prefix.empty() ? key : prefix + "." + key;
    if (!schema.contains(key)) throw ConfigError("unknown config key '" + full + "'");
    const json& spec = schema[key];
    if (is_leaf(spec)) {
      json v = value;
      check_type(full, spec, v);
      cfg[key] = v;
    } else {
      overlay(spec, cfg[key], value, full);
    }
  }
}

json defaults_of(const json& schema) {
  json out = json::object();
  for (const auto& [key, spec] : schema.items()) {
    if (is_leaf(spec)) {
      json v = spec["default"];
      if (!v.is_null() && spec["type"] == "number") v = v.get<double>();
      out[key] = v;
    } else {
      out[key] = defaults_of(spec);
    }
  }
  return out;
}

}  // namespace

const json& config_schema() {
  static const json schema = build_schema();
  return schema;
}

json default_config() { return defaults_of(config_schema()); }

json resolve_config(const json& user, const std::vector<std::string>& overrides) {
  json cfg = default_config();
  overlay(config_schema(), cfg, user, "");
  for (const auto& item : overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + item + "'");
    const std::string path = item.substr(0, eq), text = item.substr(eq + 1);
    json value = json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;
    // Build {"a": {"b": value}} from "a.b".
    json nested = value;
    std::string rest = path;
    std::vector<std::string> parts;
    for (std::size_t start = 0;;) {
      const auto dot = rest.find('.', start);
      parts.push_back(rest.substr(start, dot == std::string::npos ? std::string::npos : dot - start));
      if (dot == std::string::npos) break;
      start = dot + 1;
    }
    for (auto it = parts.rbegin(); it != parts.rend(); ++it) {
      if (it->empty()) throw ConfigError("--set: empty key segment in '" + path + "'");
      nested = json{{*it, nested}};
    }
    overlay(config_schema(), cfg, nested, "");
  }
  return cfg;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ConfigError(path + ": not valid JSON");
  return j;
}

}  // namespace netlasso::cli
