#include "graphlim/discrete.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "graphlim/continuum.hpp"

namespace graphlim {

bool Trajectory::monitors_ok() const {
  return std::all_of(monitors.begin(), monitors.end(), [](const MonitorRecord& r) { return r.ok; });
}

std::vector<double> Trajectory::times() const {
  std::vector<double> t;
  t.reserve(states.size());
  for (const auto& s : states) t.push_back(s.t);
  return t;
}

namespace {

/// dst = base + a * k, elementwise over u and K.
void axpy_state(DiscreteState& dst, const DiscreteState& base, double a, const Derivative& k) {
  auto du = dst.u.values();
  const auto bu = base.u.values();
  for (std::size_t i = 0; i < du.size(); ++i) du[i] = bu[i] + a * k.du[i];
  auto dK = dst.K.values();
  const auto bK = base.K.values();
  const auto n = static_cast<std::ptrdiff_t>(dK.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) dK[i] = bK[i] + a * k.dK[i];
}

void rk4_combine(DiscreteState& dst, const DiscreteState& y, double dt, const Derivative& k1, const Derivative& k2,
                 const Derivative& k3, const Derivative& k4) {
  const double w = dt / 6.0;
  auto du = dst.u.values();
  const auto yu = y.u.values();
  for (std::size_t i = 0; i < du.size(); ++i)
    du[i] = yu[i] + w * (k1.du[i] + 2.0 * k2.du[i] + 2.0 * k3.du[i] + k4.du[i]);
  auto dK = dst.K.values();
  const auto yK = y.K.values();
  const auto n = static_cast<std::ptrdiff_t>(dK.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i)
    dK[i] = yK[i] + w * (k1.dK[i] + 2.0 * k2.dK[i] + 2.0 * k3.dK[i] + k4.dK[i]);
}

bool all_finite(const DiscreteState& s) {
  auto finite = [](double v) { return std::isfinite(v); };
  return std::all_of(s.u.values().begin(), s.u.values().end(), finite) &&
         std::all_of(s.K.values().begin(), s.K.values().end(), finite);
}

}  // namespace

Trajectory integrate(const ModelSpec& m, const DiscreteState& s0, double T, double dt, const IntegrateOptions& opts) {
  m.validate();
  s0.validate();
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("integrate: dt must be positive");
  if (!(T >= 0.0) || !std::isfinite(T)) throw std::invalid_argument("integrate: T must be >= 0");
  if (opts.store_every == 0) throw std::invalid_argument("integrate: store_every must be >= 1");
  const auto steps = static_cast<std::size_t>(std::llround(T / dt));
  if (steps % opts.store_every != 0)
    throw std::invalid_argument("integrate: store_every (" + std::to_string(opts.store_every) +
                                ") must divide the number of steps (" + std::to_string(steps) + ")");
  if (!all_finite(s0)) throw std::invalid_argument("integrate: initial state is not finite");

  Trajectory traj;
  traj.model = m;
  traj.dt = dt;
  traj.store_every = opts.store_every;
  const auto env = apriori_envelope(m, s0.u.sup_norm(), s0.K.sup_norm(), s0.t);
  traj.states.push_back(s0);
  traj.monitors.push_back(monitor_state(env, s0, opts.monitor_tol));

  DiscreteState y = s0;
  DiscreteState stage = s0;
  DiscreteState next = s0;
  const int q = opts.quadrature_order;
  for (std::size_t i = 1; i <= steps; ++i) {
    const double t = s0.t + static_cast<double>(i - 1) * dt;
    try {
      y.t = t;
      const Derivative k1 = rhs(m, y, q);
      axpy_state(stage, y, 0.5 * dt, k1);
      stage.t = t + 0.5 * dt;
      const Derivative k2 = rhs(m, stage, q);
      axpy_state(stage, y, 0.5 * dt, k2);
      const Derivative k3 = rhs(m, stage, q);
      axpy_state(stage, y, dt, k3);
      stage.t = t + dt;
      const Derivative k4 = rhs(m, stage, q);
      rk4_combine(next, y, dt, k1, k2, k3, k4);
    } catch (const SolverError& e) {
      traj.abort = AbortInfo{e.t(), e.k(), e.l(), e.what()};
      break;
    }
    next.t = s0.t + static_cast<double>(i) * dt;
    if (!all_finite(next)) {
      traj.abort = AbortInfo{next.t, -1, -1, "non-finite state after RK4 step"};
      break;
    }
    std::swap(y, next);
    if (i % opts.store_every == 0) {
      traj.states.push_back(y);
      traj.monitors.push_back(monitor_state(env, y, opts.monitor_tol));
    }
  }
  // keep the last finite state even when it falls between stored times
  if (traj.aborted() && y.t > traj.states.back().t) {
    traj.states.push_back(y);
    traj.monitors.push_back(monitor_state(env, y, opts.monitor_tol));
  }
  return traj;
}

double duhamel_check(const std::function<double(double)>& Gamma, double gamma, const Trajectory& traj) {
  if (traj.model.family != "hnp_model") throw std::invalid_argument("duhamel_check: trajectory not from hnp_model");
  if (!(gamma > 0.0)) throw std::invalid_argument("duhamel_check: gamma must be > 0");
  if (traj.states.empty()) throw std::invalid_argument("duhamel_check: empty trajectory");
  const auto& first = traj.states.front();
  const std::size_t n = first.u.size();
  const double t0 = first.t;

  double worst = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t l = 0; l < n; ++l) {
      double integral = 0.0;
      double prev_t = t0;
      double prev_F = Gamma(first.u.cell(l)[0] - first.u.cell(k)[0]);
      for (std::size_t j = 1; j < traj.states.size(); ++j) {
        const auto& s = traj.states[j];
        const double h = s.t - prev_t;
        const double F = Gamma(s.u.cell(l)[0] - s.u.cell(k)[0]);
        const double decay = std::exp(-gamma * h);
        integral = decay * integral + 0.5 * h * (decay * prev_F + F);
        const double duhamel = first.K(k, l) * std::exp(-gamma * (s.t - t0)) + integral;
        worst = std::max(worst, std::abs(s.K(k, l) - duhamel));
        prev_t = s.t;
        prev_F = F;
      }
    }
  }
  return worst;
}

namespace {

double sq_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

double sq_diff(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

}  // namespace

AssumptionReport discrete_assumption_check(const ModelSpec& m, const UnitGrid& grid, std::size_t n_samples,
                                           std::uint64_t seed, int order) {
  if (n_samples == 0) throw std::invalid_argument("discrete_assumption_check: n_samples must be >= 1");
  m.validate();
  const std::size_t n = grid.size();
  const std::size_t d = m.dim;
  const double nd = static_cast<double>(n);
  std::mt19937_64 rng(seed);
  auto uni = [&rng](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  auto draw = [&](std::size_t count, double r) {
    std::vector<double> v(count);
    for (auto& x : v) x = uni(-r, r);
    return v;
  };
  auto partner = [&](const std::vector<double>& base, double r) {
    if (uni(0.0, 1.0) < 0.5) return draw(base.size(), r);
    const double scale = std::pow(10.0, uni(-6.0, 0.0));
    auto v = base;
    for (auto& x : v) x += scale * uni(-1.0, 1.0);
    return v;
  };
  const bool row_constant = m.lambda.structure == KernelStructure::row_constant;
  auto make_kernel = [&](std::vector<double> v) {
    if (row_constant)
      for (std::size_t k = 1; k < n; ++k)
        std::copy(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(n), v.begin() + static_cast<std::ptrdiff_t>(k * n));
    return v;
  };

  double r_fb = 0, r_fl = 0, r_lb = 0, r_ll = 0, r_lb_lin = 0;
  const double Bf = m.f.bound, Lf = m.f.lipschitz, Bl = m.lambda.bound, Ll = m.lambda.lipschitz;
  for (std::size_t i = 0; i < n_samples; ++i) {
    const double t = uni(0.0, 10.0);
    const auto phi = draw(n * d, 3.0);
    const auto psi = partner(phi, 3.0);
    const auto kappa = make_kernel(draw(n * n, 2.0));
    const auto lambda = make_kernel(partner(kappa, 2.0));
    const StepFunction1D u1(grid, d, phi), u2(grid, d, psi);
    const StepFunction2D K1(grid, kappa), K2(grid, lambda);

    const auto f1 = cell_forcing(m, t, u1, order);
    const auto f2 = cell_forcing(m, t, u2, order);
    const auto L1 = cell_weight_rates(m, t, K1, u1, order);
    const auto L2 = cell_weight_rates(m, t, K2, u2, order);

    const double phi_norm = std::sqrt(sq_norm(phi));
    const double kappa_norm = std::sqrt(sq_norm(kappa));
    const double dphi = std::sqrt(sq_diff(phi, psi));
    const double dkappa = std::sqrt(sq_diff(kappa, lambda));

    r_fb = std::max(r_fb, bound_ratio(sq_norm(f1), Bf * Bf * nd * (1 + phi_norm) * (1 + phi_norm)));
    r_fl = std::max(r_fl, bound_ratio(sq_diff(f1, f2), Lf * Lf * dphi * dphi));
    const double lsq = sq_norm(L1);
    r_lb = std::max(r_lb, bound_ratio(lsq, Bl * Bl * nd * nd * (1 + kappa_norm) * (1 + kappa_norm)));
    r_lb_lin = std::max(r_lb_lin, bound_ratio(lsq, Bl * Bl * nd * (1 + kappa_norm) * (1 + kappa_norm)));
    const double lip = dkappa + nd * dphi;
    r_ll = std::max(r_ll, bound_ratio(sq_diff(L1, L2), Ll * Ll * lip * lip));
  }

  AssumptionReport rep;
  rep.samples = n_samples;
  auto add = [&rep](const char* name, double claimed, double ratio, bool enforced) {
    RatioCheck c{name, claimed, ratio, ratio <= 1.0 + kRatioSlack};
    if (enforced) rep.pass = rep.pass && c.pass;
    rep.checks.push_back(std::move(c));
  };
  add("f_bound", Bf, r_fb, true);
  add("f_lipschitz", Lf, r_fl, true);
  add("lambda_bound", Bl, r_lb, true);
  add("lambda_lipschitz", Ll, r_ll, true);
  add("lambda_bound_linear_N", Bl, r_lb_lin, false);
  return rep;
}

}  // namespace graphlim
