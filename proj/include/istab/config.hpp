#pragma once

#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "istab/convergence.hpp"

namespace istab {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void require_type(const nlohmann::json& j, const std::string& key, const char* what,
                         bool ok) {
  if (!ok) throw ConfigError("config field '" + key + "' must be " + what);
}

}  // namespace detail

/// Parse and validate a RunConfig from JSON. Unknown keys are errors; all
/// diagnostics name the offending field.
inline RunConfig parse_run_config(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config root must be an object");
  static const std::set<std::string> allowed = {
      "preset", "k_list", "n_list",     "l",        "alpha_rule", "kappa",   "mu",
      "advection", "exact_poly", "boundary", "diagonal", "threads",    "out"};
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (!allowed.count(key)) throw ConfigError("unknown config key '" + key + "'");
  }
  RunConfig cfg;

  if (!j.contains("preset")) throw ConfigError("config field 'preset' is required");
  detail::require_type(j, "preset", "a string", j["preset"].is_string());
  cfg.preset = j["preset"].get<std::string>();
  static const std::set<std::string> presets = {"hyperbolic_bey", "elliptic_sine", "advdiff_exp",
                                                "custom"};
  if (!presets.count(cfg.preset))
    throw ConfigError("config field 'preset': unknown preset '" + cfg.preset + "'");

  auto int_list = [&](const std::string& key, int lo, int hi) {
    detail::require_type(j, key, "a non-empty array of integers",
                         j[key].is_array() && !j[key].empty());
    std::vector<int> out;
    for (const auto& e : j[key]) {
      detail::require_type(j, key, "a non-empty array of integers", e.is_number_integer());
      const int v = e.get<int>();
      if (v < lo || v > hi)
        throw ConfigError("config field '" + key + "': value " + std::to_string(v) +
                          " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
      out.push_back(v);
    }
    return out;
  };
  if (!j.contains("k_list")) throw ConfigError("config field 'k_list' is required");
  cfg.k_list = int_list("k_list", 1, 9);
  if (!j.contains("n_list")) throw ConfigError("config field 'n_list' is required");
  cfg.n_list = int_list("n_list", 1, 256);

  if (j.contains("l")) {
    detail::require_type(j, "l", "0 or 1",
                         j["l"].is_number_integer() &&
                             (j["l"].get<int>() == 0 || j["l"].get<int>() == 1));
    cfg.l = j["l"].get<int>();
  }
  if (j.contains("alpha_rule")) {
    const auto& ar = j["alpha_rule"];
    detail::require_type(j, "alpha_rule", "an object with 'type'",
                         ar.is_object() && ar.contains("type") && ar["type"].is_string());
    const std::string type = ar["type"].get<std::string>();
    for (const auto& [key, value] : ar.items()) {
      (void)value;
      if (key != "type" && key != "value")
        throw ConfigError("unknown config key 'alpha_rule." + key + "'");
    }
    if (type == "const") {
      detail::require_type(j, "alpha_rule.value", "a number >= 0",
                           ar.contains("value") && ar["value"].is_number() &&
                               ar["value"].get<double>() >= 0.0);
      cfg.alpha_rule = AlphaRule::Const;
      cfg.alpha_value = ar["value"].get<double>();
    } else if (type == "four_k_squared") {
      if (ar.contains("value"))
        throw ConfigError("config field 'alpha_rule.value' is not allowed for four_k_squared");
      cfg.alpha_rule = AlphaRule::FourKSquared;
    } else {
      throw ConfigError("config field 'alpha_rule.type': unknown rule '" + type + "'");
    }
  }
  if (j.contains("kappa")) {
    detail::require_type(j, "kappa", "a number >= 0",
                         j["kappa"].is_number() && j["kappa"].get<double>() >= 0.0);
    cfg.kappa = j["kappa"].get<double>();
  }
  if (j.contains("mu")) {
    detail::require_type(j, "mu", "a number >= 0",
                         j["mu"].is_number() && j["mu"].get<double>() >= 0.0);
    cfg.mu = j["mu"].get<double>();
  }
  if (j.contains("advection")) {
    const auto& a = j["advection"];
    detail::require_type(j, "advection", "an array of two numbers",
                         a.is_array() && a.size() == 2 && a[0].is_number() && a[1].is_number());
    cfg.advection = {a[0].get<double>(), a[1].get<double>()};
  }
  if (j.contains("exact_poly")) {
    const auto& p = j["exact_poly"];
    detail::require_type(j, "exact_poly", "an array of arrays of numbers", p.is_array());
    for (const auto& row : p) {
      detail::require_type(j, "exact_poly", "an array of arrays of numbers", row.is_array());
      std::vector<double> r;
      for (const auto& e : row) {
        detail::require_type(j, "exact_poly", "an array of arrays of numbers", e.is_number());
        r.push_back(e.get<double>());
      }
      cfg.exact_poly.c.push_back(std::move(r));
    }
  }
  if (j.contains("boundary")) {
    detail::require_type(j, "boundary", "'neumann' or 'dirichlet'",
                         j["boundary"].is_string() &&
                             (j["boundary"] == "neumann" || j["boundary"] == "dirichlet"));
    cfg.boundary = j["boundary"].get<std::string>();
  }
  if (j.contains("diagonal")) {
    detail::require_type(j, "diagonal", "'RIGHT' or 'LEFT'",
                         j["diagonal"].is_string() &&
                             (j["diagonal"] == "RIGHT" || j["diagonal"] == "LEFT"));
    cfg.diagonal = j["diagonal"] == "RIGHT" ? Diagonal::Right : Diagonal::Left;
  }
  if (j.contains("threads")) {
    detail::require_type(j, "threads", "an integer >= 0",
                         j["threads"].is_number_integer() && j["threads"].get<int>() >= 0);
    cfg.threads = j["threads"].get<int>();
  }
  if (j.contains("out")) {
    detail::require_type(j, "out", "a string", j["out"].is_string());
    cfg.out = j["out"].get<std::string>();
  }

  if (cfg.preset == "custom") {
    for (const char* key : {"mu", "kappa", "alpha_rule", "advection", "exact_poly", "boundary"})
      if (!j.contains(key))
        throw ConfigError(std::string("config field '") + key + "' is required for preset custom");
    if (cfg.exact_poly.c.empty())
      throw ConfigError("config field 'exact_poly' must not be empty for preset custom");
  }
  // Cross-field consistency mirrored from ProblemSpec::validate, surfaced as
  // config errors with field names.
  for (int k : cfg.k_list) {
    try {
      make_problem(cfg, k).validate();
    } catch (const std::invalid_argument& ex) {
      throw ConfigError(std::string("invalid configuration: ") + ex.what());
    }
  }
  return cfg;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& ex) {
    throw ConfigError("config parse error in " + path + ": " + ex.what());
  }
  return parse_run_config(j);
}

}  // namespace istab
