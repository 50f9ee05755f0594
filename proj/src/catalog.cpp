#include "graphlim/catalog.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

namespace graphlim {

using nlohmann::json;

void reject_unknown_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& path) {
  if (!obj.is_object()) throw ConfigError(path, path + ": expected an object");
  for (const auto& [key, value] : obj.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; });
    if (!known) throw ConfigError(path + "." + key, "unknown key '" + path + "." + key + "'");
  }
}

namespace {

double number(const json& obj, const char* key, const std::string& path, std::optional<double> fallback = {}) {
  const std::string where = path + "." + key;
  if (!obj.contains(key)) {
    if (fallback) return *fallback;
    throw ConfigError(where, "missing key '" + where + "'");
  }
  const auto& v = obj.at(key);
  if (!v.is_number()) throw ConfigError(where, "'" + where + "' must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ConfigError(where, "'" + where + "' must be finite");
  return d;
}

std::string string_field(const json& obj, const char* key, const std::string& path) {
  const std::string where = path + "." + key;
  if (!obj.contains(key)) throw ConfigError(where, "missing key '" + where + "'");
  if (!obj.at(key).is_string()) throw ConfigError(where, "'" + where + "' must be a string");
  return obj.at(key).get<std::string>();
}

/// A number broadcast to `dim` entries, or an array of exactly `dim` numbers.
std::vector<double> vector_field(const json& obj, const char* key, const std::string& path, std::size_t dim,
                                 std::optional<double> fallback = {}) {
  const std::string where = path + "." + key;
  if (!obj.contains(key) || obj.at(key).is_number()) return std::vector<double>(dim, number(obj, key, path, fallback));
  const auto& v = obj.at(key);
  if (!v.is_array() || v.size() != dim)
    throw ConfigError(where, "'" + where + "' must be a number or an array of " + std::to_string(dim) + " numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < dim; ++i) {
    if (!v[i].is_number()) throw ConfigError(where, "'" + where + "' entries must be numbers");
    out.push_back(v[i].get<double>());
  }
  return out;
}

struct ScalarMap {
  std::function<double(double)> fn;
  double bound = 0.0;
  double lipschitz = 0.0;
};

/// {"type": "sin"|"cos"|"tanh", "scale": a, "shift": p} -> a fn(s + p), or
/// {"type": "constant", "value": c}.
ScalarMap scalar_map(const json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path, path + ": expected an object");
  const auto type = string_field(j, "type", path);
  if (type == "constant") {
    reject_unknown_keys(j, {"type", "value"}, path);
    const double c = number(j, "value", path);
    return {[c](double) { return c; }, std::abs(c), 0.0};
  }
  reject_unknown_keys(j, {"type", "scale", "shift"}, path);
  const double a = number(j, "scale", path, 1.0);
  const double p = number(j, "shift", path, 0.0);
  if (type == "sin") return {[a, p](double s) { return a * std::sin(s + p); }, std::abs(a), std::abs(a)};
  if (type == "cos") return {[a, p](double s) { return a * std::cos(s + p); }, std::abs(a), std::abs(a)};
  if (type == "tanh") return {[a, p](double s) { return a * std::tanh(s + p); }, std::abs(a), std::abs(a)};
  throw ConfigError(path + ".type", "unknown function type '" + type + "' at " + path + ".type");
}

ModelSpec hnp_from_json(const json& j, const std::string& path) {
  reject_unknown_keys(j, {"model", "Gamma", "gamma", "omega", "coupling"}, path);
  if (!j.contains("Gamma")) throw ConfigError(path + ".Gamma", "missing key '" + path + ".Gamma'");
  const auto G = scalar_map(j.at("Gamma"), path + ".Gamma");
  const double gamma = number(j, "gamma", path);
  if (!(gamma > 0.0)) throw ConfigError(path + ".gamma", "'" + path + ".gamma' must be > 0");

  std::vector<double> omega{0.0};
  if (j.contains("omega")) {
    const auto& w = j.at("omega");
    if (w.is_array() && !w.empty())
      omega = vector_field(j, "omega", path, w.size());
    else
      omega = vector_field(j, "omega", path, 1);
  }
  ScalarMap c{[](double s) { return std::sin(s); }, 1.0, 1.0};
  if (j.contains("coupling")) c = scalar_map(j.at("coupling"), path + ".coupling");

  const std::size_t cells = omega.size();
  return hnp_model(BoundedScalarFn{G.fn, G.bound, G.lipschitz}, gamma,
                   StepFunction1D(UnitGrid(cells), 1, std::move(omega)),
                   PhaseCoupling{[f = c.fn](double, double s) { return f(s); }, c.bound, c.lipschitz});
}

ModelSpec opinion_from_json(const json& j, const std::string& path) {
  reject_unknown_keys(j, {"model", "dim", "psi", "drift"}, path);
  const double dim_raw = number(j, "dim", path, 1.0);
  if (dim_raw < 1.0 || dim_raw != std::floor(dim_raw)) throw ConfigError(path + ".dim", "'" + path + ".dim' must be a positive integer");
  const auto d = static_cast<std::size_t>(dim_raw);

  const std::string ppath = path + ".psi";
  if (!j.contains("psi")) throw ConfigError(ppath, "missing key '" + ppath + "'");
  const auto& pj = j.at("psi");
  reject_unknown_keys(pj, {"type", "scale"}, ppath);
  const auto ptype = string_field(pj, "type", ppath);
  const double a = number(pj, "scale", ppath, 1.0);
  OpinionInteraction psi;
  psi.dim = d;
  psi.lipschitz = std::abs(a);
  if (ptype == "tanh") {
    psi.fn = [a](std::span<const double> s, std::span<double> out) {
      for (std::size_t c = 0; c < s.size(); ++c) out[c] = a * std::tanh(s[c]);
    };
    psi.bound = std::abs(a) * std::sqrt(static_cast<double>(d));
  } else if (ptype == "linear") {
    psi.fn = [a](std::span<const double> s, std::span<double> out) {
      for (std::size_t c = 0; c < s.size(); ++c) out[c] = a * s[c];
    };
    psi.bound = a == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  } else {
    throw ConfigError(ppath + ".type", "unknown interaction type '" + ptype + "' at " + ppath + ".type");
  }

  const std::string dpath = path + ".drift";
  WeightDrift drift;
  if (!j.contains("drift")) {
    drift.fn = [](double, double, const StepFunction1D&, std::span<const double>) { return 0.0; };
    drift.bound = 0.0;
    drift.lipschitz = 0.0;
  } else {
    const auto& dj = j.at("drift");
    reject_unknown_keys(dj, {"type", "rate", "target"}, dpath);
    const auto dtype = string_field(dj, "type", dpath);
    if (dtype != "relax") throw ConfigError(dpath + ".type", "unknown drift type '" + dtype + "' at " + dpath + ".type");
    const double r = number(dj, "rate", dpath);
    const double target = number(dj, "target", dpath, 0.0);
    if (r < 0.0) throw ConfigError(dpath + ".rate", "'" + dpath + ".rate' must be >= 0");
    drift.fn = [r, target](double, double y, const StepFunction1D&, std::span<const double> m) {
      const auto n = m.size();
      const auto k = std::min(n - 1, static_cast<std::size_t>(y * static_cast<double>(n)));
      return r * (target - m[k]);
    };
    drift.bound = std::max(r * std::abs(target), r);
    drift.lipschitz = r;
  }
  return opinion_model(std::move(psi), std::move(drift));
}

}  // namespace

ModelSpec riccati_blowup() {
  constexpr double inf = std::numeric_limits<double>::infinity();
  ModelSpec m;
  m.name = "riccati_blowup";
  m.family = "riccati_blowup";
  m.dim = 1;
  m.g.eval = [](double, std::span<const double>, std::span<const double>, std::span<double> out) { out[0] = 0.0; };
  m.f.eval = [](double, double x, const StepFunction1D& u, std::span<double> out) {
    const double v = u.at(x)[0];
    out[0] = v * v;
  };
  m.f.bound = inf;
  m.f.lipschitz = inf;
  m.lambda.eval = [](double, double, double, const StepFunction2D&, const StepFunction1D&) { return 0.0; };
  return m;
}

ModelSpec model_from_json(const json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path, path + ": expected an object");
  const auto name = string_field(j, "model", path);
  if (name == "kuramoto_adaptive") {
    reject_unknown_keys(j, {"model", "omega", "alpha", "beta", "epsilon"}, path);
    const double eps = number(j, "epsilon", path);
    if (eps < 0.0) throw ConfigError(path + ".epsilon", "'" + path + ".epsilon' must be >= 0");
    return kuramoto_adaptive(number(j, "omega", path, 0.0), number(j, "alpha", path, 0.0),
                             number(j, "beta", path, 0.0), eps);
  }
  if (name == "hnp_model") return hnp_from_json(j, path);
  if (name == "opinion_model") return opinion_from_json(j, path);
  if (name == "riccati_blowup") {
    reject_unknown_keys(j, {"model"}, path);
    return riccati_blowup();
  }
  throw ConfigError(path + ".model", "unknown model '" + name + "' at " + path + ".model");
}

AnalyticField1D profile_from_json(const json& j, std::size_t dim, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path, path + ": expected an object");
  const auto type = string_field(j, "type", path);
  if (type == "constant") {
    reject_unknown_keys(j, {"type", "value"}, path);
    auto v = vector_field(j, "value", path, dim);
    return {[v](double, std::span<double> out) { std::copy(v.begin(), v.end(), out.begin()); }, dim};
  }
  if (type == "linear") {
    reject_unknown_keys(j, {"type", "slope", "intercept"}, path);
    auto a = vector_field(j, "slope", path, dim);
    auto b = vector_field(j, "intercept", path, dim, 0.0);
    return {[a, b](double x, std::span<double> out) {
              for (std::size_t c = 0; c < a.size(); ++c) out[c] = a[c] * x + b[c];
            },
            dim};
  }
  if (type == "smooth_ramp") {
    reject_unknown_keys(j, {"type", "amplitude"}, path);
    auto A = vector_field(j, "amplitude", path, dim, 2.0 * std::numbers::pi);
    return {[A](double x, std::span<double> out) {
              const double s = x - std::sin(2.0 * std::numbers::pi * x) / (2.0 * std::numbers::pi);
              for (std::size_t c = 0; c < A.size(); ++c) out[c] = A[c] * s;
            },
            dim};
  }
  throw ConfigError(path + ".type", "unknown profile type '" + type + "' at " + path + ".type");
}

Graphon graphon_from_json(const json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path, path + ": expected an object");
  const auto type = string_field(j, "type", path);
  if (type == "constant") {
    reject_unknown_keys(j, {"type", "value"}, path);
    const double c = number(j, "value", path);
    return Graphon::analytic([c](double, double) { return c; }, std::abs(c));
  }
  if (type == "exp_sq_diff") {
    reject_unknown_keys(j, {"type", "a", "b"}, path);
    const double a = number(j, "a", path, 1.0);
    const double b = number(j, "b", path, 1.0);
    if (b < 0.0) throw ConfigError(path + ".b", "'" + path + ".b' must be >= 0");
    return Graphon::analytic([a, b](double x, double y) { return a * std::exp(-b * (x - y) * (x - y)); }, std::abs(a));
  }
  if (type == "product") {
    reject_unknown_keys(j, {"type", "scale"}, path);
    const double s = number(j, "scale", path, 1.0);
    return Graphon::analytic([s](double x, double y) { return s * x * y; }, std::abs(s));
  }
  if (type == "sum") {
    reject_unknown_keys(j, {"type", "scale"}, path);
    const double s = number(j, "scale", path, 1.0);
    return Graphon::analytic([s](double x, double y) { return s * (x + y); }, 2.0 * std::abs(s));
  }
  throw ConfigError(path + ".type", "unknown graphon type '" + type + "' at " + path + ".type");
}

}  // namespace graphlim
