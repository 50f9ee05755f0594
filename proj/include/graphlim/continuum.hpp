#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "graphlim/discrete.hpp"
#include "graphlim/grid.hpp"
#include "graphlim/model.hpp"

namespace graphlim {

/// Closed-form a-priori bounds on |u(t)|_inf and |K(t)|_inf for t >= t0:
///   K_bound(t) = (1+|K_t0|) e^{B_L tau} - 1
///   u_bound(t) = (1+|u_t0|) e^{B_f tau}
///                + B_g (1+|K_t0|) (e^{B_L tau} - e^{B_f tau}) / (B_L - B_f) - 1
/// with tau = t - t0. When |B_L - B_f| < 1e-12 the limiting-case form
///   u_bound(t) = (1+|u_t0|) e^{B_f tau} + B_g (1+|K_t0|) tau - 1
/// is used instead.
struct AprioriEnvelope {
  double t0 = 0.0;
  double u_t0_sup = 0.0;
  double K_t0_sup = 0.0;
  double B_f = 0.0;
  double B_g = 0.0;
  double B_lambda = 0.0;

  bool uses_limit_formula() const;
  double u_bound(double t) const;
  double K_bound(double t) const;
};

inline constexpr double kEnvelopeLimitThreshold = 1e-12;

AprioriEnvelope apriori_envelope(const ModelSpec& m, double u_t0_sup, double K_t0_sup, double t0);

/// Window length on which the Picard operator contracts with factor 1/2:
///   1 / (2 (2^{5/2} L_g (1+|K_0|_inf) e^{B_L T} + L_f + sqrt(2) B_g + L_L)).
/// Returns T when every constant in the denominator vanishes.
double contraction_window(const ModelSpec& m, double K0_sup, double T);

/// Right-hand side of the iterate bound
///   1 + |J_n(t)|_inf <= (sum_{l<=n} B_L^l tau^l / l!) (1 + |K_t0|_inf).
double iterate_bound(double B_lambda, double tau, int n, double K_t0_sup);

/// Time-sampled fields on one Picard window (common spatial grid).
struct WindowData {
  std::vector<double> times;
  std::vector<StepFunction1D> u;
  std::vector<StepFunction2D> K;

  static WindowData constant(std::vector<double> times, const StepFunction1D& u, const StepFunction2D& K);
};

/// One application of the Picard operator:
///   A1 = u_t0 + int_{t0}^t [ int K g dy + f ] ds,  A2 = K_t0 + int_{t0}^t Lambda ds,
/// spatial terms as cell averages on the data's grid (exact for step data) and
/// time integrals by cumulative composite Simpson on the window nodes, which
/// must be equispaced with an even number of intervals.
WindowData apply_A(const ModelSpec& m, const WindowData& current, const StepFunction1D& u_t0,
                   const StepFunction2D& K_t0, int order = 4);

struct PicardConfig {
  double t0 = 0.0;
  double T = 1.0;                 ///< global horizon
  std::optional<double> T_star;   ///< window override; contraction_window when empty
  int max_iters = 100;
  double tol_L2 = 1e-10;
  int time_intervals = 8;         ///< Simpson intervals per window (even)
  int quadrature_order = 4;
  double monitor_tol = 1e-6;

  void validate() const;
};

struct WindowDiagnostics {
  double t0 = 0.0;
  double T_star = 0.0;  ///< length actually used for this window
  int iterations = 0;
  std::vector<double> increments;           ///< C(window, L2 x L2) increment per iteration
  std::vector<double> contraction_factors;  ///< increments[n+1]/increments[n] above the noise floor
  bool converged = false;
  double fixed_point_residual = 0.0;        ///< |A[v,J] - (v,J)| at the returned iterate
  bool start_admissible = true;             ///< 1+|K_t0| <= (1+|K_0|) e^{B_L t0} (1+tol)
  double iterate_bound_worst = 0.0;         ///< max over iterates/nodes of lhs/rhs of the iterate bound
  double u_sup_max = 0.0;
  double K_sup_max = 0.0;
};

struct PicardResult {
  Trajectory trajectory;  ///< states at all window nodes, shared endpoints once
  std::vector<WindowDiagnostics> windows;
  double contraction_T_star = 0.0;
  bool converged = true;
};

class PicardDivergence : public std::runtime_error {
 public:
  PicardDivergence(const std::string& what, WindowDiagnostics diag)
      : std::runtime_error(what), diag_(std::move(diag)) {}
  const WindowDiagnostics& diagnostics() const { return diag_; }

 private:
  WindowDiagnostics diag_;
};

/// Windowed Picard iteration on [t0, T]. Windows have equal length <= T_star.
/// Each window iterates from constant data until the increment is <= tol_L2
/// or max_iters is reached (flagged unconverged). Three consecutive increment
/// ratios > 1 throw PicardDivergence.
PicardResult picard_solve(const ModelSpec& m, const StepFunction1D& u0, const StepFunction2D& K0,
                          const PicardConfig& cfg);

/// Method-of-lines reference: the continuum system restricted to step data
/// on M cells is the particle system at N = M, integrated by RK4.
Trajectory mol_solve(const ModelSpec& m, const StepFunction1D& u0, const StepFunction2D& K0, double T, double dt,
                     const IntegrateOptions& opts = {});

/// sup over common stored times of sqrt(|u_a-u_b|^2 + |K_a-K_b|^2) in L2.
/// Times are matched within 1e-9; throws when no time is shared.
double sup_l2_gap(const Trajectory& a, const Trajectory& b);

/// Envelope check of one state against an envelope.
MonitorRecord monitor_state(const AprioriEnvelope& env, const DiscreteState& s, double tol);

}  // namespace graphlim
