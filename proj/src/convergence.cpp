#include "graphlim/convergence.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "graphlim/quadrature.hpp"

namespace graphlim {

void StudyConfig::validate() const {
  model.validate();
  if (u0.dim != model.dim) throw std::invalid_argument("study: u0 dimension does not match model");
  if (N_list.empty()) throw std::invalid_argument("study: N_list is empty");
  if (M_ref == 0) throw std::invalid_argument("study: M_ref must be >= 1");
  std::size_t n_max = 0;
  for (auto N : N_list) {
    if (N == 0) throw std::invalid_argument("study: N must be >= 1");
    if (M_ref % N != 0)
      throw std::invalid_argument("study: N=" + std::to_string(N) + " does not divide M_ref=" + std::to_string(M_ref));
    n_max = std::max(n_max, N);
  }
  if (M_ref < 4 * n_max) throw std::invalid_argument("study: M_ref must be >= 4 * max(N)");
  if (!(T > 0.0) || !std::isfinite(T)) throw std::invalid_argument("study: T must be > 0");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("study: dt must be > 0");
  if (store_every == 0) throw std::invalid_argument("study: store_every must be >= 1");
  if (quadrature_order < 1 || quadrature_order > 64)
    throw std::invalid_argument("study: quadrature_order must be in 1..64");
}

double trapezoid(std::span<const double> t, std::span<const double> y) {
  if (t.size() != y.size()) throw std::invalid_argument("trapezoid: size mismatch");
  double s = 0.0;
  for (std::size_t i = 1; i < t.size(); ++i) s += 0.5 * (t[i] - t[i - 1]) * (y[i] + y[i - 1]);
  return s;
}

double gronwall_envelope(const GronwallInputs& in) {
  const double growth = 4.0 * in.L_g * in.K_sup_integral +
                        (2.0 * in.L_f + 3.0 * in.L_lambda + in.B_g + 1.0) * in.T;
  const double base = in.init_error_sq + in.residual_integral;
  if (base == 0.0) return 0.0;
  return base * std::exp(growth);
}

std::optional<RateFit> fit_rate(std::span<const std::pair<double, double>> points, std::vector<std::string>* warnings) {
  std::vector<double> x, y;
  for (const auto& [N, e] : points) {
    if (!(e > 0.0) || !(N > 0.0)) {
      if (warnings) warnings->push_back("fit_rate: dropped point N=" + std::to_string(N) + " with e<=0");
      continue;
    }
    x.push_back(std::log(N));
    y.push_back(0.5 * std::log(e));
  }
  if (x.size() < 3) {
    if (warnings) warnings->push_back("fit_rate: fewer than 3 usable points, no fit");
    return std::nullopt;
  }
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) {
    if (warnings) warnings->push_back("fit_rate: all N equal, no fit");
    return std::nullopt;
  }
  RateFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (fit.intercept + fit.slope * x[i]);
    ss_res += r * r;
  }
  fit.r2 = syy == 0.0 ? 1.0 : 1.0 - ss_res / syy;
  return fit;
}

namespace {

/// f and Lambda along the reference at one stored time: reference-cell
/// averages plus the squared L2 deviation inside the reference cells.
struct FineSample {
  double t = 0.0;
  StepFunction1D f;
  StepFunction2D L;
  double f_within = 0.0;
  double L_within = 0.0;
};

// Means below are taken relative to the first sample, so a block of equal
// values has zero deviation in floating point and not just up to rounding.

double forcing_within(const ModelSpec& m, const DiscreteState& s, int q) {
  if (!m.f.position_dependent) return 0.0;
  const auto& rule = gauss_legendre(q);
  const auto& grid = s.u.grid();
  const auto order = static_cast<std::size_t>(rule.order());
  std::vector<double> v(order * m.dim);
  double total = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    for (std::size_t i = 0; i < order; ++i)
      m.f.eval(s.t, grid.left(k) + grid.width() * rule.nodes[i], s.u, std::span<double>(v).subspan(i * m.dim, m.dim));
    for (std::size_t c = 0; c < m.dim; ++c) {
      const double v0 = v[c];
      double shift = 0.0;
      for (std::size_t i = 0; i < order; ++i) shift += rule.weights[i] * (v[i * m.dim + c] - v0);
      for (std::size_t i = 0; i < order; ++i) {
        const double d = v[i * m.dim + c] - v0 - shift;
        total += rule.weights[i] * grid.width() * d * d;
      }
    }
  }
  return total;
}

double weight_within(const ModelSpec& m, const DiscreteState& s, int q) {
  if (!m.lambda.position_dependent) return 0.0;
  const auto& rule = gauss_legendre(q);
  const auto& grid = s.u.grid();
  const auto n = static_cast<std::ptrdiff_t>(grid.size());
  const auto order = static_cast<std::size_t>(rule.order());
  const double h = grid.width();
  std::vector<double> rows(grid.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    std::vector<double> v(order * order);
    double acc = 0.0;
    for (std::size_t l = 0; l < grid.size(); ++l) {
      for (std::size_t i = 0; i < order; ++i)
        for (std::size_t j = 0; j < order; ++j)
          v[i * order + j] = m.lambda.eval(s.t, grid.left(static_cast<std::size_t>(k)) + h * rule.nodes[i],
                                           grid.left(l) + h * rule.nodes[j], s.K, s.u);
      double shift = 0.0;
      for (std::size_t i = 0; i < order; ++i)
        for (std::size_t j = 0; j < order; ++j) shift += rule.weights[i] * rule.weights[j] * (v[i * order + j] - v[0]);
      for (std::size_t i = 0; i < order; ++i)
        for (std::size_t j = 0; j < order; ++j) {
          const double d = v[i * order + j] - v[0] - shift;
          acc += rule.weights[i] * rule.weights[j] * d * d;
        }
    }
    rows[static_cast<std::size_t>(k)] = acc * h * h;
  }
  double total = 0.0;
  for (double r : rows) total += r;
  return total;
}

// |P_N F - F|^2 for step data F on a grid that N divides.
double block_deviation_sq(const StepFunction1D& F, std::size_t N) {
  const std::size_t M = F.size(), r = M / N, d = F.dim();
  double total = 0.0;
  for (std::size_t b = 0; b < N; ++b)
    for (std::size_t c = 0; c < d; ++c) {
      const double v0 = F.cell(b * r)[c];
      double shift = 0.0;
      for (std::size_t i = 0; i < r; ++i) shift += F.cell(b * r + i)[c] - v0;
      shift /= static_cast<double>(r);
      for (std::size_t i = 0; i < r; ++i) {
        const double e = F.cell(b * r + i)[c] - v0 - shift;
        total += e * e;
      }
    }
  return total / static_cast<double>(M);
}

double block_deviation_sq(const StepFunction2D& F, std::size_t N) {
  const std::size_t M = F.size(), r = M / N;
  double total = 0.0;
  for (std::size_t bk = 0; bk < N; ++bk)
    for (std::size_t bl = 0; bl < N; ++bl) {
      const double v0 = F(bk * r, bl * r);
      double shift = 0.0;
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < r; ++j) shift += F(bk * r + i, bl * r + j) - v0;
      shift /= static_cast<double>(r * r);
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < r; ++j) {
          const double e = F(bk * r + i, bl * r + j) - v0 - shift;
          total += e * e;
        }
    }
  return total / static_cast<double>(M * M);
}

std::vector<FineSample> fine_samples(const ModelSpec& m, const Trajectory& ref, int q) {
  std::vector<FineSample> out;
  out.reserve(ref.states.size());
  for (const auto& s : ref.states) {
    const auto& grid = s.u.grid();
    StepFunction1D f(grid, m.dim, cell_forcing(m, s.t, s.u, q));
    StepFunction2D L(grid, cell_weight_rates(m, s.t, s.K, s.u, q));
    const double fw = forcing_within(m, s, q);
    const double Lw = weight_within(m, s, q);
    out.push_back(FineSample{s.t, std::move(f), std::move(L), fw, Lw});
  }
  return out;
}

ResidualSeries residuals_from(const std::vector<FineSample>& samples, std::size_t N) {
  ResidualSeries rs;
  for (const auto& s : samples) {
    rs.times.push_back(s.t);
    rs.r.push_back(std::sqrt(block_deviation_sq(s.f, N) + s.f_within));
    rs.R.push_back(std::sqrt(block_deviation_sq(s.L, N) + s.L_within));
  }
  return rs;
}

double residual_integral(const ResidualSeries& rs) {
  std::vector<double> y(rs.times.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = rs.r[i] * rs.r[i] + rs.R[i] * rs.R[i];
  return trapezoid(rs.times, y);
}

}  // namespace

ResidualSeries residuals(const ModelSpec& m, const Trajectory& reference, std::size_t N, int q) {
  if (reference.states.empty()) throw std::invalid_argument("residuals: empty reference");
  const std::size_t M = reference.states.front().u.size();
  if (N == 0 || M % N != 0)
    throw std::invalid_argument("residuals: N=" + std::to_string(N) + " does not divide M=" + std::to_string(M));
  return residuals_from(fine_samples(m, reference, q), N);
}

ConvergenceReport run_study(const StudyConfig& cfg) {
  cfg.validate();
  const auto& m = cfg.model;
  const int q = cfg.quadrature_order;
  const UnitGrid ref_grid(cfg.M_ref);
  const IntegrateOptions opts{cfg.store_every, q, 1e-6};

  const Trajectory ref = mol_solve(m, cell_average_1d(cfg.u0, ref_grid, q), cell_average_2d(cfg.W, ref_grid, q),
                                   cfg.T, cfg.dt, opts);
  if (ref.aborted()) throw std::runtime_error("study: reference run aborted: " + ref.abort->message);

  const auto samples = fine_samples(m, ref, q);
  const auto times = ref.times();
  std::vector<double> K_sup(ref.states.size());
  for (std::size_t j = 0; j < K_sup.size(); ++j) K_sup[j] = ref.states[j].K.sup_norm();
  const double K_sup_integral = trapezoid(times, K_sup);

  ConvergenceReport rep;
  rep.rows.resize(cfg.N_list.size());
  const auto count = static_cast<std::ptrdiff_t>(cfg.N_list.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    StudyRow& row = rep.rows[static_cast<std::size_t>(i)];
    row.N = cfg.N_list[static_cast<std::size_t>(i)];
    try {
      const UnitGrid grid(row.N);
      const auto u0 = cell_average_1d(cfg.u0, grid, q);
      const auto K0 = cell_average_2d(cfg.W, grid, q);
      row.err_u0 = l2_distance(cfg.u0, u0, q);
      row.err_K0 = l2_distance(cfg.W, K0, q);
      const Trajectory traj = integrate(m, DiscreteState{0.0, u0, K0}, cfg.T, cfg.dt, opts);
      if (traj.aborted()) {
        row.failure = "aborted at t=" + std::to_string(traj.abort->t) + ": " + traj.abort->message;
      } else {
        for (std::size_t j = 0; j < traj.states.size(); ++j) {
          const double du = l2_distance(traj.states[j].u, ref.states[j].u);
          const double dK = l2_distance(traj.states[j].K, ref.states[j].K);
          row.e_sup = std::max(row.e_sup, du * du + dK * dK);
        }
        row.converged = true;
      }
      row.monitors_ok = traj.monitors_ok();
      row.residual_integral = residual_integral(residuals_from(samples, row.N));
      row.envelope = gronwall_envelope({row.err_u0 * row.err_u0 + row.err_K0 * row.err_K0, row.residual_integral,
                                        K_sup_integral, cfg.T, m.g.lipschitz, m.f.lipschitz, m.lambda.lipschitz,
                                        m.g.bound});
      row.within_envelope = row.converged && row.e_sup <= row.envelope * kEnvelopeSlack;
    } catch (const std::exception& e) {
      row.converged = false;
      row.failure = e.what();
    }
  }

  std::vector<const StudyRow*> ok;
  for (const auto& r : rep.rows) {
    if (r.converged)
      ok.push_back(&r);
    else
      rep.warnings.push_back("N=" + std::to_string(r.N) + " failed: " + r.failure);
  }
  std::sort(ok.begin(), ok.end(), [](const StudyRow* a, const StudyRow* b) { return a->N < b->N; });
  rep.strictly_decreasing = ok.size() == rep.rows.size();
  for (std::size_t i = 1; i < ok.size(); ++i)
    rep.strictly_decreasing = rep.strictly_decreasing && ok[i]->e_sup < ok[i - 1]->e_sup;
  rep.monitors_ok = ref.monitors_ok() && std::all_of(ok.begin(), ok.end(), [](const StudyRow* r) { return r->monitors_ok; });
  rep.envelope_ok = !ok.empty() && std::all_of(rep.rows.begin(), rep.rows.end(),
                                               [](const StudyRow& r) { return r.within_envelope; });
  std::vector<std::pair<double, double>> pts;
  for (const auto* r : ok) pts.emplace_back(static_cast<double>(r->N), r->e_sup);
  rep.fit = fit_rate(pts, &rep.warnings);
  return rep;
}

}  // namespace graphlim
