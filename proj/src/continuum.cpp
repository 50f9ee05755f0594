#include "graphlim/continuum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace graphlim {

bool AprioriEnvelope::uses_limit_formula() const { return std::abs(B_lambda - B_f) < kEnvelopeLimitThreshold; }

// (1+a)e^x - 1 is written as a e^x + expm1(x) so that the bound is exact at
// tau = 0 and does not lose the small-norm digits.
// An infinite constant gives no bound.
double AprioriEnvelope::K_bound(double t) const {
  if (std::isinf(B_lambda)) return std::numeric_limits<double>::infinity();
  const double x = B_lambda * (t - t0);
  return K_t0_sup * std::exp(x) + std::expm1(x);
}

double AprioriEnvelope::u_bound(double t) const {
  if (std::isinf(B_f) || std::isinf(B_g) || std::isinf(B_lambda)) return std::numeric_limits<double>::infinity();
  const double tau = t - t0;
  const double xf = B_f * tau;
  const double base = u_t0_sup * std::exp(xf) + std::expm1(xf);
  if (B_g == 0.0) return base;
  if (uses_limit_formula()) return base + B_g * (1.0 + K_t0_sup) * tau;
  const double diff = B_lambda - B_f;
  // (e^{B_L tau} - e^{B_f tau}) / (B_L - B_f)
  const double coupling = std::exp(xf) * std::expm1(diff * tau) / diff;
  return base + B_g * (1.0 + K_t0_sup) * coupling;
}

AprioriEnvelope apriori_envelope(const ModelSpec& m, double u_t0_sup, double K_t0_sup, double t0) {
  return AprioriEnvelope{t0, u_t0_sup, K_t0_sup, m.f.bound, m.g.bound, m.lambda.bound};
}

MonitorRecord monitor_state(const AprioriEnvelope& env, const DiscreteState& s, double tol) {
  MonitorRecord r;
  r.t = s.t;
  r.u_sup = s.u.sup_norm();
  r.K_sup = s.K.sup_norm();
  r.u_envelope = env.u_bound(s.t);
  r.K_envelope = env.K_bound(s.t);
  r.ok = r.u_sup <= r.u_envelope * (1.0 + tol) && r.K_sup <= r.K_envelope * (1.0 + tol);
  return r;
}

double contraction_window(const ModelSpec& m, double K0_sup, double T) {
  const double denom = std::pow(2.0, 2.5) * m.g.lipschitz * (1.0 + K0_sup) * std::exp(m.lambda.bound * T) +
                       m.f.lipschitz + std::numbers::sqrt2 * m.g.bound + m.lambda.lipschitz;
  if (denom == 0.0) return T;
  return 1.0 / (2.0 * denom);
}

double iterate_bound(double B_lambda, double tau, int n, double K_t0_sup) {
  double term = 1.0;
  double sum = 1.0;
  for (int l = 1; l <= n; ++l) {
    term *= B_lambda * tau / static_cast<double>(l);
    sum += term;
  }
  return sum * (1.0 + K_t0_sup);
}

WindowData WindowData::constant(std::vector<double> times, const StepFunction1D& u, const StepFunction2D& K) {
  WindowData w;
  w.u.assign(times.size(), u);
  w.K.assign(times.size(), K);
  w.times = std::move(times);
  return w;
}

namespace {

void check_window(const WindowData& w, const UnitGrid& grid) {
  if (w.times.size() < 3 || (w.times.size() - 1) % 2 != 0)
    throw std::invalid_argument("apply_A: window needs an even number (>= 2) of time intervals");
  if (w.u.size() != w.times.size() || w.K.size() != w.times.size())
    throw std::invalid_argument("apply_A: field count does not match time nodes");
  for (std::size_t j = 0; j < w.times.size(); ++j)
    if (!(w.u[j].grid() == grid) || !(w.K[j].grid() == grid))
      throw std::invalid_argument("apply_A: fields are not on a common grid");
}

/// out = base + sum_i w_i * d_i, elementwise.
void combine(std::span<double> out, std::span<const double> base, std::initializer_list<double> w,
             std::initializer_list<const std::vector<double>*> d) {
  const auto n = static_cast<std::ptrdiff_t>(out.size());
  const double* wp = w.begin();
  const std::vector<double>* const* dp = d.begin();
  const std::size_t terms = w.size();
#pragma omp parallel for schedule(static) if (n > 4096)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < terms; ++j) acc += wp[j] * (*dp[j])[i];
    out[i] = base[i] + acc;
  }
}

}  // namespace

WindowData apply_A(const ModelSpec& m, const WindowData& current, const StepFunction1D& u_t0,
                   const StepFunction2D& K_t0, int order) {
  if (!(u_t0.grid() == K_t0.grid())) throw std::invalid_argument("apply_A: u_t0 and K_t0 grids differ");
  check_window(current, u_t0.grid());
  const std::size_t nodes = current.times.size();
  const double h = (current.times.back() - current.times.front()) / static_cast<double>(nodes - 1);

  std::vector<Derivative> rates;
  rates.reserve(nodes);
  for (std::size_t j = 0; j < nodes; ++j)
    rates.push_back(rhs(m, DiscreteState{current.times[j], current.u[j], current.K[j]}, order));

  WindowData next = WindowData::constant(current.times, u_t0, K_t0);
  for (std::size_t j = 1; j < nodes; ++j) {
    if (j % 2 == 1) {
      const auto& f0 = rates[j - 1];
      const auto& f1 = rates[j];
      const auto& f2 = rates[j + 1];
      const double c = h / 12.0;
      combine(next.u[j].values(), next.u[j - 1].values(), {5 * c, 8 * c, -c}, {&f0.du, &f1.du, &f2.du});
      combine(next.K[j].values(), next.K[j - 1].values(), {5 * c, 8 * c, -c}, {&f0.dK, &f1.dK, &f2.dK});
    } else {
      const auto& f0 = rates[j - 2];
      const auto& f1 = rates[j - 1];
      const auto& f2 = rates[j];
      const double c = h / 3.0;
      combine(next.u[j].values(), next.u[j - 2].values(), {c, 4 * c, c}, {&f0.du, &f1.du, &f2.du});
      combine(next.K[j].values(), next.K[j - 2].values(), {c, 4 * c, c}, {&f0.dK, &f1.dK, &f2.dK});
    }
  }
  for (std::size_t j = 0; j < nodes; ++j) {
    auto finite = [](double v) { return std::isfinite(v); };
    const auto uv = next.u[j].values();
    const auto Kv = next.K[j].values();
    if (!std::all_of(uv.begin(), uv.end(), finite) || !std::all_of(Kv.begin(), Kv.end(), finite))
      throw SolverError("apply_A produced a non-finite value", next.times[j], -1, -1);
  }
  return next;
}

void PicardConfig::validate() const {
  if (!std::isfinite(t0) || t0 < 0.0) throw std::invalid_argument("picard: t0 must be finite and >= 0");
  if (!std::isfinite(T) || !(T > t0)) throw std::invalid_argument("picard: T must be finite and > t0");
  if (T_star && !(*T_star > 0.0)) throw std::invalid_argument("picard: T_star must be > 0");
  if (max_iters < 1) throw std::invalid_argument("picard: max_iters must be >= 1");
  if (!(tol_L2 > 0.0) || !std::isfinite(tol_L2)) throw std::invalid_argument("picard: tol_L2 must be > 0");
  if (time_intervals < 2 || time_intervals % 2 != 0)
    throw std::invalid_argument("picard: time_intervals must be even and >= 2");
  if (quadrature_order < 1) throw std::invalid_argument("picard: quadrature_order must be >= 1");
  if (!(monitor_tol >= 0.0)) throw std::invalid_argument("picard: monitor_tol must be >= 0");
}

namespace {

struct Increment {
  double value = 0.0;
  double scale = 0.0;  ///< magnitude of the iterates, for the noise floor
};

Increment window_increment(const WindowData& a, const WindowData& b) {
  double du = 0.0, dK = 0.0, scale = 0.0;
  for (std::size_t j = 0; j < a.times.size(); ++j) {
    du = std::max(du, l2_distance(a.u[j], b.u[j]));
    dK = std::max(dK, l2_distance(a.K[j], b.K[j]));
    scale = std::max(scale, a.u[j].l2_norm() + a.K[j].l2_norm());
  }
  return {du + dK, scale};
}

// Increments below this are dominated by rounding and give meaningless ratios.
double noise_floor(double scale) { return 1e-12 * (1.0 + scale); }

}  // namespace

PicardResult picard_solve(const ModelSpec& m, const StepFunction1D& u0, const StepFunction2D& K0,
                          const PicardConfig& cfg) {
  cfg.validate();
  m.validate();
  if (!(u0.grid() == K0.grid())) throw std::invalid_argument("picard: u0 and K0 grids differ");
  if (u0.dim() != m.dim) throw std::invalid_argument("picard: u0 dimension does not match model");
  const double K0_sup = K0.sup_norm();
  if (!std::isfinite(K0_sup)) throw std::invalid_argument("picard: K0 must be finite");

  PicardResult res;
  res.contraction_T_star = contraction_window(m, K0_sup, cfg.T);
  const double requested = cfg.T_star.value_or(res.contraction_T_star);
  if (!(requested > 0.0)) throw std::invalid_argument("picard: window length is zero (infinite constants?)");
  const double span = cfg.T - cfg.t0;
  const auto windows = static_cast<std::size_t>(std::max(1.0, std::ceil(span / requested - 1e-12)));
  const double len = span / static_cast<double>(windows);
  const int nodes = cfg.time_intervals + 1;
  const double h = len / cfg.time_intervals;

  const auto env = apriori_envelope(m, u0.sup_norm(), K0_sup, cfg.t0);
  res.trajectory.model = m;
  res.trajectory.dt = h;
  res.trajectory.store_every = 1;
  DiscreteState start{cfg.t0, u0, K0};
  res.trajectory.states.push_back(start);
  res.trajectory.monitors.push_back(monitor_state(env, start, cfg.monitor_tol));

  for (std::size_t w = 0; w < windows; ++w) {
    const double ws = cfg.t0 + static_cast<double>(w) * len;
    std::vector<double> times(static_cast<std::size_t>(nodes));
    for (int j = 0; j < nodes; ++j) times[static_cast<std::size_t>(j)] = ws + j * h;

    WindowDiagnostics diag;
    diag.t0 = ws;
    diag.T_star = len;
    const double Kt0_sup = start.K.sup_norm();
    diag.start_admissible =
        1.0 + Kt0_sup <= (1.0 + K0_sup) * std::exp(m.lambda.bound * (ws - cfg.t0)) * (1.0 + cfg.monitor_tol);

    WindowData current = WindowData::constant(times, start.u, start.K);
    int ratios_above_one = 0;
    for (int it = 1; it <= cfg.max_iters; ++it) {
      WindowData next = apply_A(m, current, start.u, start.K, cfg.quadrature_order);
      for (std::size_t j = 0; j < times.size(); ++j) {
        const double lhs = 1.0 + next.K[j].sup_norm();
        const double rhs_bound = iterate_bound(m.lambda.bound, times[j] - ws, it, Kt0_sup);
        diag.iterate_bound_worst = std::max(diag.iterate_bound_worst, lhs / rhs_bound);
      }
      const auto inc = window_increment(next, current);
      diag.iterations = it;
      if (!diag.increments.empty() && diag.increments.back() > noise_floor(inc.scale) &&
          inc.value > noise_floor(inc.scale)) {
        const double ratio = inc.value / diag.increments.back();
        diag.contraction_factors.push_back(ratio);
        ratios_above_one = ratio > 1.0 ? ratios_above_one + 1 : 0;
      }
      diag.increments.push_back(inc.value);
      current = std::move(next);
      if (ratios_above_one >= 3)
        throw PicardDivergence("picard: increments grew for 3 consecutive iterations on window starting at t=" +
                                   std::to_string(ws),
                               diag);
      if (inc.value <= cfg.tol_L2) {
        diag.converged = true;
        break;
      }
    }
    const WindowData check = apply_A(m, current, start.u, start.K, cfg.quadrature_order);
    diag.fixed_point_residual = window_increment(check, current).value;
    for (std::size_t j = 0; j < times.size(); ++j) {
      diag.u_sup_max = std::max(diag.u_sup_max, current.u[j].sup_norm());
      diag.K_sup_max = std::max(diag.K_sup_max, current.K[j].sup_norm());
    }
    res.converged = res.converged && diag.converged;

    for (std::size_t j = 1; j < times.size(); ++j) {
      DiscreteState s{times[j], std::move(current.u[j]), std::move(current.K[j])};
      res.trajectory.monitors.push_back(monitor_state(env, s, cfg.monitor_tol));
      res.trajectory.states.push_back(std::move(s));
    }
    start = res.trajectory.states.back();
    res.windows.push_back(std::move(diag));
  }
  return res;
}

Trajectory mol_solve(const ModelSpec& m, const StepFunction1D& u0, const StepFunction2D& K0, double T, double dt,
                     const IntegrateOptions& opts) {
  if (!(u0.grid() == K0.grid())) throw std::invalid_argument("mol_solve: u0 and K0 grids differ");
  return integrate(m, DiscreteState{0.0, u0, K0}, T, dt, opts);
}

double sup_l2_gap(const Trajectory& a, const Trajectory& b) {
  constexpr double kTimeMatch = 1e-9;
  double worst = 0.0;
  bool shared = false;
  std::size_t jb = 0;
  for (const auto& sa : a.states) {
    while (jb < b.states.size() && b.states[jb].t < sa.t - kTimeMatch) ++jb;
    if (jb == b.states.size()) break;
    if (std::abs(b.states[jb].t - sa.t) > kTimeMatch) continue;
    const auto& sb = b.states[jb];
    const double du = l2_distance(sa.u, sb.u);
    const double dK = l2_distance(sa.K, sb.K);
    worst = std::max(worst, std::sqrt(du * du + dK * dK));
    shared = true;
  }
  if (!shared) throw std::invalid_argument("sup_l2_gap: trajectories share no stored time");
  return worst;
}

}  // namespace graphlim
