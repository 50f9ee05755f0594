#pragma once

#include <initializer_list>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "graphlim/grid.hpp"
#include "graphlim/model.hpp"

namespace graphlim {

/// Invalid configuration; `key()` is the dotted path of the offending entry.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& what) : std::runtime_error(what), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

/// Throws ConfigError for the first key of `obj` not in `allowed`.
void reject_unknown_keys(const nlohmann::json& obj, std::initializer_list<const char*> allowed,
                         const std::string& path);

/// Built-in models by name, e.g. {"model": "kuramoto_adaptive", "omega": 0.5,
/// "alpha": 0.3, "beta": 0.2, "epsilon": 0.5}. Also accepted: "hnp_model",
/// "opinion_model" and "riccati_blowup" (f = u^2, blows up at t = 1/u0).
ModelSpec model_from_json(const nlohmann::json& j, const std::string& path = "model");

/// Initial profiles: constant, linear, smooth_ramp A (x - sin(2 pi x) / (2 pi)).
AnalyticField1D profile_from_json(const nlohmann::json& j, std::size_t dim, const std::string& path = "u0");

/// Graphons: constant, exp_sq_diff a exp(-b (x-y)^2), product s x y, sum s (x+y).
Graphon graphon_from_json(const nlohmann::json& j, const std::string& path = "W");

/// Scalar Riccati model u' = u^2 with infinite growth constants; used to
/// exercise the abort path.
ModelSpec riccati_blowup();

}  // namespace graphlim
