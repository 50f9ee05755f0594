#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "graphlim/continuum.hpp"
#include "graphlim/discrete.hpp"
#include "graphlim/grid.hpp"
#include "graphlim/model.hpp"

namespace graphlim {

struct StudyConfig {
  ModelSpec model;
  Graphon W = Graphon::analytic([](double, double) { return 0.0; }, 0.0);
  AnalyticField1D u0{[](double, std::span<double> out) { out[0] = 0.0; }, 1};
  std::vector<std::size_t> N_list;
  std::size_t M_ref = 0;
  double T = 1.0;
  double dt = 1e-3;
  std::size_t store_every = 1;
  int quadrature_order = 4;
  std::uint64_t seed = 0;

  /// Every N divides M_ref, M_ref >= 4 max(N), T and dt positive, u0 and the
  /// model share a dimension.
  void validate() const;
};

struct StudyRow {
  std::size_t N = 0;
  double e_sup = 0.0;  ///< sup_t |u^N-u|^2 + |K^N-K|^2 (squared L2)
  double err_u0 = 0.0;
  double err_K0 = 0.0;
  double residual_integral = 0.0;  ///< int_0^T |r_N|^2 + |R_N|^2 dt
  double envelope = 0.0;
  bool converged = false;  ///< the N run completed without abort
  bool within_envelope = false;
  bool monitors_ok = false;  ///< a-priori envelopes held along the N run
  std::string failure;
};

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

struct ConvergenceReport {
  std::vector<StudyRow> rows;  ///< in N_list order
  std::optional<RateFit> fit;
  bool strictly_decreasing = false;
  bool envelope_ok = false;
  bool monitors_ok = false;  ///< reference and every completed N run
  std::vector<std::string> warnings;
};

inline constexpr double kEnvelopeSlack = 1.05;

/// Reference = mol_solve at M_ref from the cell averages of (u0, W); each N
/// runs the particle system from its own cell averages. N runs execute in
/// parallel; a failing N is recorded in its row and does not stop the study.
ConvergenceReport run_study(const StudyConfig& cfg);

struct ResidualSeries {
  std::vector<double> times;
  std::vector<double> r;  ///< |r_N(t)|_{L2}
  std::vector<double> R;  ///< |R_N(t)|_{L2}
};

/// r_N = (cell average over the N-grid of f) - f and R_N likewise for Lambda,
/// both evaluated along the reference fields. Within each reference cell the
/// deviation is integrated with Gauss-Legendre of order q. Requires N | M.
ResidualSeries residuals(const ModelSpec& m, const Trajectory& reference, std::size_t N, int q = 4);

struct GronwallInputs {
  double init_error_sq = 0.0;       ///< |u^N(0)-u0|^2 + |K^N(0)-W|^2
  double residual_integral = 0.0;   ///< int_0^T |r_N|^2 + |R_N|^2
  double K_sup_integral = 0.0;      ///< int_0^T |K(s)|_inf ds
  double T = 0.0;
  double L_g = 0.0;
  double L_f = 0.0;
  double L_lambda = 0.0;
  double B_g = 0.0;
};

/// (init + residuals) exp(4 L_g int|K|_inf + (2 L_f + 3 L_L + B_g + 1) T).
double gronwall_envelope(const GronwallInputs& in);

/// Composite trapezoid rule on (possibly non-uniform) samples.
double trapezoid(std::span<const double> t, std::span<const double> y);

/// Least squares of log sqrt(e) against log N. Points with e <= 0 are dropped
/// (noted in `warnings`); returns nothing when fewer than 3 remain.
std::optional<RateFit> fit_rate(std::span<const std::pair<double, double>> points,
                                std::vector<std::string>* warnings = nullptr);

}  // namespace graphlim
