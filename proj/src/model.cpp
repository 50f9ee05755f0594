#include "graphlim/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "graphlim/quadrature.hpp"

namespace graphlim {

namespace {

void require_constant(double c, const char* what) {
  if (std::isnan(c) || c < 0.0) throw std::invalid_argument(std::string(what) + " must be >= 0");
}

void require_finite_param(double v, const char* what) {
  if (!std::isfinite(v)) throw std::invalid_argument(std::string(what) + " must be finite");
}

double norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double diff_norm(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

}  // namespace

void ModelSpec::validate() const {
  if (dim < 1) throw std::invalid_argument("ModelSpec: state dimension must be >= 1");
  if (!g.eval || !f.eval || !lambda.eval) throw std::invalid_argument("ModelSpec: missing g, f or Lambda");
  require_constant(g.bound, "B_g");
  require_constant(g.lipschitz, "L_g");
  require_constant(f.bound, "B_f");
  require_constant(f.lipschitz, "L_f");
  require_constant(lambda.bound, "B_Lambda");
  require_constant(lambda.lipschitz, "L_Lambda");
}

ModelSpec kuramoto_adaptive(double omega, double alpha, double beta, double epsilon) {
  require_finite_param(omega, "omega");
  require_finite_param(alpha, "alpha");
  require_finite_param(beta, "beta");
  require_finite_param(epsilon, "epsilon");
  if (epsilon < 0.0) throw std::invalid_argument("epsilon must be >= 0");

  ModelSpec m;
  m.name = "kuramoto_adaptive";
  m.family = "kuramoto_adaptive";
  m.dim = 1;
  m.g.eval = [alpha](double, std::span<const double> xi, std::span<const double> eta, std::span<double> out) {
    out[0] = -std::sin(eta[0] - xi[0] + alpha);
  };
  m.g.bound = 1.0;
  m.g.lipschitz = 1.0;
  m.f.eval = [omega](double, double, const StepFunction1D&, std::span<double> out) { out[0] = omega; };
  m.f.bound = std::abs(omega);
  m.f.lipschitz = 0.0;
  m.lambda.eval = [beta, epsilon](double, double x, double y, const StepFunction2D& K, const StepFunction1D& u) {
    if (epsilon == 0.0) return 0.0;
    return -epsilon * (std::sin(u.at(x)[0] - u.at(y)[0] + beta) + K.at(x, y));
  };
  m.lambda.bound = epsilon;
  m.lambda.lipschitz = 2.0 * epsilon;
  return m;
}

ModelSpec hnp_model(BoundedScalarFn Gamma, double gamma, StepFunction1D natural_frequencies,
                    PhaseCoupling coupling) {
  if (!Gamma.fn || !coupling.fn) throw std::invalid_argument("hnp_model: missing Gamma or coupling");
  require_finite_param(gamma, "gamma");
  if (!(gamma > 0.0)) throw std::invalid_argument("hnp_model: gamma must be > 0");
  if (natural_frequencies.dim() != 1) throw std::invalid_argument("hnp_model: natural frequencies must be scalar");
  require_constant(Gamma.bound, "B_Gamma");
  require_constant(Gamma.lipschitz, "L_Gamma");
  for (double w : natural_frequencies.values()) require_finite_param(w, "natural frequency");

  const auto vals = natural_frequencies.values();
  const bool uniform = std::all_of(vals.begin(), vals.end(), [&](double w) { return w == vals[0]; });

  ModelSpec m;
  m.name = "hnp_model";
  m.family = "hnp_model";
  m.dim = 1;
  m.g.eval = [c = coupling.fn](double t, std::span<const double> xi, std::span<const double> eta,
                               std::span<double> out) { out[0] = c(t, eta[0] - xi[0]); };
  m.g.bound = coupling.bound;
  m.g.lipschitz = coupling.lipschitz;
  m.f.bound = natural_frequencies.sup_norm();
  m.f.lipschitz = 0.0;
  m.f.position_dependent = !uniform;
  m.f.eval = [w = std::move(natural_frequencies)](double, double x, const StepFunction1D&, std::span<double> out) {
    out[0] = w.at(x)[0];
  };
  m.lambda.eval = [G = Gamma.fn, gamma](double, double x, double y, const StepFunction2D& K,
                                       const StepFunction1D& u) {
    return G(u.at(y)[0] - u.at(x)[0]) - gamma * K.at(x, y);
  };
  m.lambda.bound = std::max(Gamma.bound, gamma);
  m.lambda.lipschitz = 2.0 * Gamma.lipschitz + gamma;
  return m;
}

ModelSpec opinion_model(OpinionInteraction psi, WeightDrift Psi) {
  if (!psi.fn || !Psi.fn) throw std::invalid_argument("opinion_model: missing psi or Psi");
  if (psi.dim < 1) throw std::invalid_argument("opinion_model: dimension must be >= 1");
  if (!psi.bound || !psi.lipschitz) throw std::invalid_argument("opinion_model: psi constants missing");
  if (!Psi.bound || !Psi.lipschitz) throw std::invalid_argument("opinion_model: Psi constants missing");

  ModelSpec m;
  m.name = "opinion_model";
  m.family = "opinion_model";
  m.dim = psi.dim;
  m.g.eval = [p = psi.fn, d = psi.dim](double, std::span<const double> xi, std::span<const double> eta,
                                       std::span<double> out) {
    double diff[16];
    std::vector<double> heap;
    double* buf = diff;
    if (d > 16) {
      heap.resize(d);
      buf = heap.data();
    }
    for (std::size_t c = 0; c < d; ++c) buf[c] = eta[c] - xi[c];
    p(std::span<const double>(buf, d), out);
  };
  m.g.bound = *psi.bound;
  m.g.lipschitz = *psi.lipschitz;
  m.f.eval = [](double, double, const StepFunction1D&, std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
  };
  m.lambda.eval = [P = Psi.fn](double t, double, double y, const StepFunction2D& K, const StepFunction1D& u) {
    return P(t, y, u, K.row(0));
  };
  m.lambda.bound = *Psi.bound;
  m.lambda.lipschitz = *Psi.lipschitz;
  m.lambda.structure = KernelStructure::row_constant;
  m.validate();
  return m;
}

// ---------------------------------------------------------------------------

double bound_ratio(double quantity, double bound) {
  if (bound == 0.0) return quantity == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  if (std::isinf(bound)) return 0.0;
  return quantity / bound;
}

const RatioCheck& AssumptionReport::get(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return c;
  throw std::out_of_range("AssumptionReport: no check named " + name);
}

namespace {

constexpr std::size_t kSampleCells = 8;
constexpr int kSampleOrder = 4;

class Sampler {
 public:
  Sampler(const ModelSpec& m, std::uint64_t seed) : m_(m), rng_(seed), grid_(kSampleCells) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  double unit_point() {
    double x = uniform(0.0, 1.0);
    return x < 1.0 ? x : 0.0;
  }

  std::vector<double> vec(std::size_t d, double r) {
    std::vector<double> v(d);
    for (auto& x : v) x = uniform(-r, r);
    return v;
  }

  /// Either an independent draw or a small perturbation of `base`, so that
  /// Lipschitz ratios are probed at both scales.
  std::vector<double> partner(const std::vector<double>& base, double r) {
    if (uniform(0.0, 1.0) < 0.5) return vec(base.size(), r);
    const double scale = std::pow(10.0, uniform(-6.0, 0.0));
    auto v = base;
    for (auto& x : v) x += scale * uniform(-1.0, 1.0);
    return v;
  }

  StepFunction1D field(std::size_t d) { return StepFunction1D(grid_, d, vec(kSampleCells * d, 3.0)); }
  StepFunction1D field_partner(const StepFunction1D& base) {
    return StepFunction1D(grid_, base.dim(), partner({base.values().begin(), base.values().end()}, 3.0));
  }

  StepFunction2D kernel() {
    if (m_.lambda.structure == KernelStructure::row_constant) {
      auto row = vec(kSampleCells, 2.0);
      std::vector<double> v(kSampleCells * kSampleCells);
      for (std::size_t k = 0; k < kSampleCells; ++k)
        std::copy(row.begin(), row.end(), v.begin() + static_cast<std::ptrdiff_t>(k * kSampleCells));
      return StepFunction2D(grid_, std::move(v));
    }
    return StepFunction2D(grid_, vec(kSampleCells * kSampleCells, 2.0));
  }
  StepFunction2D kernel_partner(const StepFunction2D& base) {
    std::vector<double> b(base.values().begin(), base.values().end());
    if (m_.lambda.structure == KernelStructure::row_constant) {
      std::vector<double> row(b.begin(), b.begin() + kSampleCells);
      row = partner(row, 2.0);
      for (std::size_t k = 0; k < kSampleCells; ++k)
        std::copy(row.begin(), row.end(), b.begin() + static_cast<std::ptrdiff_t>(k * kSampleCells));
      return StepFunction2D(grid_, std::move(b));
    }
    return StepFunction2D(grid_, partner(b, 2.0));
  }

  /// ||f(t,.,u1) - f(t,.,u2)||_{L2(I)} on the sample grid.
  double forcing_gap(double t, const StepFunction1D& u1, const StepFunction1D& u2) {
    const std::size_t d = m_.dim;
    std::vector<double> a(d), b(d);
    const auto& rule = gauss_legendre(m_.f.position_dependent ? kSampleOrder : 1);
    double total = 0.0;
    for (std::size_t k = 0; k < kSampleCells; ++k) {
      for (int q = 0; q < rule.order(); ++q) {
        const double x = grid_.left(k) + grid_.width() * rule.nodes[q];
        m_.f.eval(t, x, u1, a);
        m_.f.eval(t, x, u2, b);
        const double dn = diff_norm(a, b);
        total += rule.weights[q] * grid_.width() * dn * dn;
      }
    }
    return std::sqrt(total);
  }

  double weight_gap(double t, const StepFunction2D& K1, const StepFunction1D& u1, const StepFunction2D& K2,
                    const StepFunction1D& u2) {
    const auto& rule = gauss_legendre(m_.lambda.position_dependent ? kSampleOrder : 1);
    const double h = grid_.width();
    double total = 0.0;
    for (std::size_t k = 0; k < kSampleCells; ++k)
      for (std::size_t l = 0; l < kSampleCells; ++l)
        for (int p = 0; p < rule.order(); ++p)
          for (int q = 0; q < rule.order(); ++q) {
            const double x = grid_.left(k) + h * rule.nodes[p];
            const double y = grid_.left(l) + h * rule.nodes[q];
            const double dv = m_.lambda.eval(t, x, y, K1, u1) - m_.lambda.eval(t, x, y, K2, u2);
            total += rule.weights[p] * rule.weights[q] * h * h * dv * dv;
          }
    return std::sqrt(total);
  }

 private:
  const ModelSpec& m_;
  std::mt19937_64 rng_;
  UnitGrid grid_;
};

}  // namespace

AssumptionReport check_assumptions(const ModelSpec& m, std::size_t n_samples, std::uint64_t seed) {
  if (n_samples == 0) throw std::invalid_argument("check_assumptions: n_samples must be >= 1");
  m.validate();
  Sampler s(m, seed);
  const std::size_t d = m.dim;

  double r_bg = 0, r_lg = 0, r_bf = 0, r_lf = 0, r_bl = 0, r_ll = 0;
  std::vector<double> g1(d), g2(d), fv(d);

  for (std::size_t i = 0; i < n_samples; ++i) {
    const double t = s.uniform(0.0, 10.0);

    const auto xi1 = s.vec(d, 4.0);
    const auto eta1 = s.vec(d, 4.0);
    const auto xi2 = s.partner(xi1, 4.0);
    const auto eta2 = s.partner(eta1, 4.0);
    m.g.eval(t, xi1, eta1, g1);
    m.g.eval(t, xi2, eta2, g2);
    r_bg = std::max(r_bg, bound_ratio(norm(g1), m.g.bound));
    r_lg = std::max(r_lg, bound_ratio(diff_norm(g1, g2), m.g.lipschitz * (diff_norm(xi1, xi2) + diff_norm(eta1, eta2))));

    const auto u1 = s.field(d);
    const auto u2 = s.field_partner(u1);
    m.f.eval(t, s.unit_point(), u1, fv);
    r_bf = std::max(r_bf, bound_ratio(norm(fv), m.f.bound * (1.0 + u1.sup_norm())));
    r_lf = std::max(r_lf, bound_ratio(s.forcing_gap(t, u1, u2), m.f.lipschitz * l2_distance(u1, u2)));

    const auto K1 = s.kernel();
    const auto K2 = s.kernel_partner(K1);
    const double lv = m.lambda.eval(t, s.unit_point(), s.unit_point(), K1, u1);
    r_bl = std::max(r_bl, bound_ratio(std::abs(lv), m.lambda.bound * (1.0 + K1.sup_norm())));
    r_ll = std::max(r_ll, bound_ratio(s.weight_gap(t, K1, u1, K2, u2),
                                      m.lambda.lipschitz * (l2_distance(K1, K2) + l2_distance(u1, u2))));
  }

  AssumptionReport rep;
  rep.samples = n_samples;
  auto add = [&rep](const char* name, double claimed, double ratio) {
    RatioCheck c{name, claimed, ratio, ratio <= 1.0 + kRatioSlack};
    rep.pass = rep.pass && c.pass;
    rep.checks.push_back(std::move(c));
  };
  add("B_g", m.g.bound, r_bg);
  add("L_g", m.g.lipschitz, r_lg);
  add("B_f", m.f.bound, r_bf);
  add("L_f", m.f.lipschitz, r_lf);
  add("B_Lambda", m.lambda.bound, r_bl);
  add("L_Lambda", m.lambda.lipschitz, r_ll);
  return rep;
}

}  // namespace graphlim
