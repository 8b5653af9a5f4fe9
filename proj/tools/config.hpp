#pragma once

#include <json.hpp>

#include <stdexcept>
#include <string>
#include <vector>

namespace netlasso::cli {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline const std::vector<std::string>& task_names() {
  static const std::vector<std::string> names = {"gen-data", "solve-nl",       "solve-ntl", "k-path",   "gamma-path",
                                                 "thresholds", "recovery-check", "metrics",   "piecewise"};
  return names;
}

/// Every accepted key with its type, default and allowed values.
const nlohmann::json& config_schema();

/// The schema's defaults as a plain config document.
nlohmann::json default_config();

/// Defaults overlaid with `user` and then with "a.b.c=value" overrides.
/// Unknown keys, wrong types and values outside an enum throw ConfigError.
nlohmann::json resolve_config(const nlohmann::json& user, const std::vector<std::string>& overrides);

nlohmann::json read_json_file(const std::string& path);

}  // namespace netlasso::cli
