#include <doctest.h>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "graphlim/catalog.hpp"
#include "graphlim/model.hpp"

using namespace graphlim;
using nlohmann::json;

namespace {

const UnitGrid kGrid(4);

double g1(const ModelSpec& m, double xi, double eta) {
  double out = 0.0;
  m.g.eval(0.0, std::span<const double>(&xi, 1), std::span<const double>(&eta, 1), std::span<double>(&out, 1));
  return out;
}

ModelSpec hnp_sin(double gamma) {
  return hnp_model({[](double s) { return std::sin(s); }, 1.0, 1.0}, gamma,
                   StepFunction1D(UnitGrid(2), 1, {0.1, 0.3}),
                   {[](double, double s) { return std::sin(s); }, 1.0, 1.0});
}

}  // namespace

TEST_CASE("kuramoto_adaptive ingredients and constants") {
  const auto m = kuramoto_adaptive(0.0, 0.0, 0.0, 1.0);
  CHECK(g1(m, 0.7, 0.7) == 0.0);
  const auto u = StepFunction1D(kGrid, 1, {1.5, 1.5, 1.5, 1.5});
  const auto K = StepFunction2D(kGrid, std::vector<double>(16, 0.25));
  CHECK(m.lambda.eval(0.0, 0.1, 0.9, K, u) == -0.25);

  const auto m2 = kuramoto_adaptive(-2.0, 0.3, 0.2, 0.5);
  CHECK(m2.g.bound == 1.0);
  CHECK(m2.g.lipschitz == 1.0);
  CHECK(m2.f.bound == 2.0);
  CHECK(m2.f.lipschitz == 0.0);
  CHECK(m2.lambda.bound == 0.5);
  CHECK(m2.lambda.lipschitz == 1.0);
  CHECK(g1(m2, 0.2, 1.0) == -std::sin(1.0 - 0.2 + 0.3));

  CHECK_THROWS_AS(kuramoto_adaptive(NAN, 0, 0, 1), std::invalid_argument);
  CHECK_THROWS_AS(kuramoto_adaptive(0, 0, 0, -1), std::invalid_argument);
  CHECK_THROWS_AS(kuramoto_adaptive(0, std::numeric_limits<double>::infinity(), 0, 1), std::invalid_argument);
}

TEST_CASE("kuramoto_adaptive with epsilon = 0 freezes the weights exactly") {
  const auto m = kuramoto_adaptive(1.0, 0.0, 0.0, 0.0);
  const StepFunction1D u(kGrid, 1, {0.1, 2.0, -3.0, 0.5});
  const StepFunction2D K(kGrid, std::vector<double>(16, 1e300));
  for (double x : {0.0, 0.3, 0.99})
    for (double y : {0.0, 0.6}) {
      const double v = m.lambda.eval(0.0, x, y, K, u);
      CHECK(v == 0.0);
      CHECK_FALSE(std::signbit(v));
    }
  double f = 0.0;
  m.f.eval(0.0, 0.2, u, std::span<double>(&f, 1));
  CHECK(f == 1.0);
}

TEST_CASE("constructors are deterministic") {
  const auto a = kuramoto_adaptive(0.5, 0.3, 0.2, 0.5);
  const auto b = kuramoto_adaptive(0.5, 0.3, 0.2, 0.5);
  const StepFunction1D u(kGrid, 1, {0.1, 2.0, -3.0, 0.5});
  const StepFunction2D K(kGrid, std::vector<double>(16, 0.7));
  CHECK(a.lambda.eval(1.0, 0.1, 0.8, K, u) == b.lambda.eval(1.0, 0.1, 0.8, K, u));
  CHECK(g1(a, 0.4, -1.2) == g1(b, 0.4, -1.2));
  CHECK(a.lambda.bound == b.lambda.bound);
}

TEST_CASE("sampled assumption checks") {
  SUBCASE("kuramoto passes at 1e4 samples") {
    const auto rep = check_assumptions(kuramoto_adaptive(0.5, 0.3, 0.2, 0.5), 10000, 11);
    CHECK(rep.pass);
    CHECK(rep.samples == 10000);
    CHECK(rep.checks.size() == 6);
    for (const auto& c : rep.checks) CHECK(c.worst_ratio <= 1.0 + kRatioSlack);
    // sin reaches close to its bound on random inputs
    CHECK(rep.get("B_g").worst_ratio > 0.99);
  }
  SUBCASE("kuramoto(0,0,0,1) at 1000 samples") {
    CHECK(check_assumptions(kuramoto_adaptive(0, 0, 0, 1), 1000, 2).pass);
  }
  SUBCASE("an understated bound is caught") {
    auto m = kuramoto_adaptive(0, 0, 0, 1);
    m.g.bound = 0.5;
    const auto rep = check_assumptions(m, 1000, 5);
    CHECK_FALSE(rep.pass);
    CHECK(rep.get("B_g").worst_ratio > 1.0);
    CHECK_FALSE(rep.get("B_g").pass);
  }
  SUBCASE("an understated Lipschitz constant is caught") {
    auto m = kuramoto_adaptive(0, 0, 0, 1);
    m.lambda.lipschitz = 0.5;
    CHECK_FALSE(check_assumptions(m, 2000, 5).pass);
  }
  SUBCASE("hnp and opinion built-ins pass") {
    CHECK(check_assumptions(hnp_sin(0.5), 10000, 3).pass);
    const auto op = model_from_json(json::parse(
        R"({"model":"opinion_model","dim":2,"psi":{"type":"tanh","scale":0.8},"drift":{"type":"relax","rate":0.3,"target":1.5}})"));
    CHECK(check_assumptions(op, 10000, 4).pass);
  }
  SUBCASE("zero samples rejected") {
    CHECK_THROWS_AS(check_assumptions(kuramoto_adaptive(0, 0, 0, 1), 0, 1), std::invalid_argument);
  }
}

TEST_CASE("bound_ratio conventions") {
  CHECK(bound_ratio(0.0, 0.0) == 0.0);
  CHECK(std::isinf(bound_ratio(1e-300, 0.0)));
  CHECK(bound_ratio(5.0, std::numeric_limits<double>::infinity()) == 0.0);
  CHECK(bound_ratio(1.0, 4.0) == 0.25);
}

TEST_CASE("hnp_model") {
  SUBCASE("constant Gamma gives Lambda = c - gamma K") {
    const auto m = hnp_model({[](double) { return 0.7; }, 0.7, 0.0}, 2.0, StepFunction1D(UnitGrid(1), 1, {0.0}),
                             {[](double, double s) { return std::sin(s); }, 1.0, 1.0});
    const StepFunction1D u(kGrid, 1, {0.1, 2.0, -3.0, 0.5});
    const StepFunction2D K(kGrid, std::vector<double>(16, 0.4));
    CHECK(m.lambda.eval(0.0, 0.1, 0.7, K, u) == doctest::Approx(0.7 - 0.8));
    CHECK(m.lambda.bound == 2.0);
    CHECK(m.lambda.lipschitz == 2.0);
    CHECK_FALSE(m.f.position_dependent);
  }
  SUBCASE("constants follow max(B_Gamma, gamma) and 2 L_Gamma + gamma") {
    const auto m = hnp_sin(0.5);
    CHECK(m.lambda.bound == 1.0);
    CHECK(m.lambda.lipschitz == 2.5);
    CHECK(m.f.position_dependent);
    CHECK(m.f.bound == doctest::Approx(0.3));
  }
  SUBCASE("rejects nonpositive gamma") {
    CHECK_THROWS_AS(hnp_sin(0.0), std::invalid_argument);
    CHECK_THROWS_AS(hnp_sin(-1.0), std::invalid_argument);
  }
}

TEST_CASE("opinion_model") {
  OpinionInteraction psi{[](std::span<const double> s, std::span<double> out) { out[0] = s[0]; }, 1, 1.0, 1.0};
  WeightDrift drift{[](double, double, const StepFunction1D&, std::span<const double>) { return 0.0; }, 0.0, 0.0};
  SUBCASE("missing constants are rejected") {
    auto p = psi;
    p.bound.reset();
    CHECK_THROWS_AS(opinion_model(p, drift), std::invalid_argument);
    auto d = drift;
    d.lipschitz.reset();
    CHECK_THROWS_AS(opinion_model(psi, d), std::invalid_argument);
  }
  SUBCASE("weights enter through the first row") {
    WeightDrift d2{[](double, double y, const StepFunction1D&, std::span<const double> m) {
                     return -m[std::min<std::size_t>(m.size() - 1, static_cast<std::size_t>(y * m.size()))];
                   },
                   1.0, 1.0};
    const auto m = opinion_model(psi, d2);
    CHECK(m.lambda.structure == KernelStructure::row_constant);
    const StepFunction1D u(UnitGrid(2), 1, {0.0, 1.0});
    const StepFunction2D K(UnitGrid(2), {3.0, 5.0, 3.0, 5.0});
    CHECK(m.lambda.eval(0.0, 0.1, 0.7, K, u) == -5.0);
    CHECK(m.lambda.eval(0.0, 0.9, 0.2, K, u) == -3.0);
    CHECK(g1(m, 1.0, 3.0) == 2.0);
  }
}

TEST_CASE("validate rejects negative or NaN constants but allows +inf") {
  auto m = kuramoto_adaptive(0, 0, 0, 1);
  m.f.lipschitz = std::numeric_limits<double>::infinity();
  CHECK_NOTHROW(m.validate());
  m.f.lipschitz = -1.0;
  CHECK_THROWS_AS(m.validate(), std::invalid_argument);
  m.f.lipschitz = NAN;
  CHECK_THROWS_AS(m.validate(), std::invalid_argument);
  auto m2 = kuramoto_adaptive(0, 0, 0, 1);
  m2.dim = 0;
  CHECK_THROWS_AS(m2.validate(), std::invalid_argument);
}

TEST_CASE("catalog") {
  SUBCASE("kuramoto by name") {
    const auto m = model_from_json(
        json::parse(R"({"model":"kuramoto_adaptive","omega":0.5,"alpha":0.3,"beta":0.2,"epsilon":0.5})"));
    CHECK(m.family == "kuramoto_adaptive");
    CHECK(m.f.bound == 0.5);
  }
  SUBCASE("unknown keys name the key") {
    try {
      model_from_json(json::parse(R"({"model":"kuramoto_adaptive","epsilon":0.5,"omgea":1})"));
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(e.key() == "model.omgea");
    }
  }
  SUBCASE("unknown model") { CHECK_THROWS_AS(model_from_json(json::parse(R"({"model":"nope"})")), ConfigError); }
  SUBCASE("profiles") {
    const auto ramp = profile_from_json(json::parse(R"({"type":"smooth_ramp","amplitude":2.0})"), 1);
    double v = 0.0;
    ramp.fn(0.5, std::span<double>(&v, 1));
    CHECK(v == doctest::Approx(1.0));
    ramp.fn(0.0, std::span<double>(&v, 1));
    CHECK(v == 0.0);
    const auto c = profile_from_json(json::parse(R"({"type":"constant","value":[1,2]})"), 2);
    double w[2];
    c.fn(0.3, std::span<double>(w, 2));
    CHECK(w[1] == 2.0);
    CHECK_THROWS_AS(profile_from_json(json::parse(R"({"type":"constant","value":[1,2]})"), 3), ConfigError);
  }
  SUBCASE("graphons") {
    const auto W = graphon_from_json(json::parse(R"({"type":"exp_sq_diff","a":2,"b":1})"));
    CHECK(W(0.2, 0.2) == 2.0);
    CHECK(W.bound() == 2.0);
    CHECK(graphon_from_json(json::parse(R"({"type":"product"})"))(0.5, 0.5) == 0.25);
    CHECK_THROWS_AS(graphon_from_json(json::parse(R"({"type":"product","scal":1})")), ConfigError);
  }
  SUBCASE("riccati model carries infinite constants") {
    const auto m = riccati_blowup();
    CHECK(std::isinf(m.f.bound));
    CHECK_NOTHROW(m.validate());
    CHECK(check_assumptions(m, 100, 1).pass);
  }
}
