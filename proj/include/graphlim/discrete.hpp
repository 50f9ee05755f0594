#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "graphlim/grid.hpp"
#include "graphlim/model.hpp"

namespace graphlim {

/// (phi, kappa) at one instant, embedded as step functions on a common grid.
struct DiscreteState {
  double t = 0.0;
  StepFunction1D u;
  StepFunction2D K;

  void validate() const;  ///< throws when u and K live on different grids
};

struct Derivative {
  std::vector<double> du;  ///< N*d, cell-major
  std::vector<double> dK;  ///< N*N, row-major
};

/// Thrown when a model returns a non-finite value; carries the location.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double t, long k, long l)
      : std::runtime_error(what), t_(t), k_(k), l_(l) {}
  double t() const { return t_; }
  long k() const { return k_; }  ///< -1 when not applicable
  long l() const { return l_; }

 private:
  double t_;
  long k_;
  long l_;
};

/// du_k = 1/N sum_l K_kl g(t,u_k,u_l) + N int_{I_k} f,
/// dK_kl = N^2 int_{I_k x I_l} Lambda. OpenMP-parallel over rows k; each row
/// is reduced left to right so the result does not depend on thread count.
Derivative rhs(const ModelSpec& m, const DiscreteState& s, int order = 4);

/// Single-threaded reference implementation of rhs; bitwise identical output.
Derivative rhs_serial(const ModelSpec& m, const DiscreteState& s, int order = 4);

/// Cell averages f_k and Lambda_kl alone (no interaction term).
std::vector<double> cell_forcing(const ModelSpec& m, double t, const StepFunction1D& u, int order = 4);
std::vector<double> cell_weight_rates(const ModelSpec& m, double t, const StepFunction2D& K,
                                      const StepFunction1D& u, int order = 4);

struct IntegrateOptions {
  std::size_t store_every = 1;
  int quadrature_order = 4;
  double monitor_tol = 1e-6;
};

/// A-priori envelope check at one stored time.
struct MonitorRecord {
  double t = 0.0;
  double u_sup = 0.0;
  double K_sup = 0.0;
  double u_envelope = 0.0;
  double K_envelope = 0.0;
  bool ok = true;
};

struct AbortInfo {
  double t = 0.0;  ///< time at which the non-finite value appeared
  long k = -1;
  long l = -1;
  std::string message;
};

struct Trajectory {
  ModelSpec model;
  double dt = 0.0;
  std::size_t store_every = 1;
  std::vector<DiscreteState> states;
  std::vector<MonitorRecord> monitors;
  std::optional<AbortInfo> abort;

  bool aborted() const { return abort.has_value(); }
  bool monitors_ok() const;
  std::vector<double> times() const;
};

/// Fixed-step classical RK4 on the coupled (u, K) system from s0.t to
/// s0.t + T with round(T/dt) steps. store_every must divide the step count.
/// A non-finite state stops the run; the trajectory keeps the last finite
/// state and records the abort. Envelope violations only clear monitor flags.
Trajectory integrate(const ModelSpec& m, const DiscreteState& s0, double T, double dt,
                     const IntegrateOptions& opts = {});

/// max over k, l and stored t of |kappa_kl(t) - kappa_kl^Duhamel(t)|, with
/// kappa^Duhamel(t) = kappa(t0) e^{-gamma (t-t0)}
///                    + int_{t0}^t Gamma(phi_l - phi_k)(s) e^{-gamma (t-s)} ds
/// evaluated by the trapezoid rule on the stored samples. Throws
/// std::invalid_argument unless the trajectory came from hnp_model.
double duhamel_check(const std::function<double(double)>& Gamma, double gamma, const Trajectory& traj);

/// Ratio report for the finite-N growth/Lipschitz inequalities satisfied by
/// the cell-averaged f_k and Lambda_kl. Entries:
///   f_bound        sum |f_k|^2        <= B_f^2 N (1+|phi|)^2
///   f_lipschitz    sum |df_k|^2       <= L_f^2 |phi-psi|^2
///   lambda_bound   sum |Lambda_kl|^2  <= B_L^2 N^2 (1+|kappa|)^2
///   lambda_lipschitz sum |dLambda|^2  <= L_L^2 (|kappa-lambda| + N|phi-psi|)^2
/// plus `lambda_bound_linear_N`, the same bound with N instead of N^2, which
/// is informational and not part of `pass`.
AssumptionReport discrete_assumption_check(const ModelSpec& m, const UnitGrid& grid, std::size_t n_samples,
                                           std::uint64_t seed, int order = 4);

}  // namespace graphlim
