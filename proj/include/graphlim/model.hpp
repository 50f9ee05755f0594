#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "graphlim/grid.hpp"

namespace graphlim {

/// g(t, xi, eta) in R^d with |g| <= bound and
/// |g(xi1,eta1) - g(xi2,eta2)| <= lipschitz * (|xi1-xi2| + |eta1-eta2|).
struct InteractionKernel {
  std::function<void(double t, std::span<const double> xi, std::span<const double> eta, std::span<double> out)>
      eval;
  double bound = 0.0;
  double lipschitz = 0.0;
};

/// f(t, x, u) in R^d with |f| <= bound * (1 + |u|_inf) and an L2(I)
/// Lipschitz constant in u.
///
/// When `position_dependent` is false, f(t, ., u) must be constant on every
/// cell of u's grid (it may depend on x only through u(x) and global
/// functionals of u). Cell integrals then collapse to one evaluation.
struct ForcingField {
  std::function<void(double t, double x, const StepFunction1D& u, std::span<double> out)> eval;
  double bound = 0.0;
  double lipschitz = 0.0;
  bool position_dependent = false;
};

/// Admissible shapes of the weight field K. `row_constant` means K(x,y)
/// depends on y only; laws declaring it are only exercised on such K.
enum class KernelStructure { general, row_constant };

/// Lambda(t, x, y, K, u) in R with |Lambda| <= bound * (1 + |K|_inf) and
/// L2(I^2) Lipschitz constant `lipschitz` in (K, u). Same cell-constancy
/// contract as ForcingField when `position_dependent` is false.
struct WeightLaw {
  std::function<double(double t, double x, double y, const StepFunction2D& K, const StepFunction1D& u)> eval;
  double bound = 0.0;
  double lipschitz = 0.0;
  bool position_dependent = false;
  KernelStructure structure = KernelStructure::general;
};

struct ModelSpec {
  std::string name;
  std::string family;  ///< constructor that produced it, e.g. "kuramoto_adaptive"
  std::size_t dim = 1;
  InteractionKernel g;
  ForcingField f;
  WeightLaw lambda;

  /// Throws std::invalid_argument on d < 1, missing functions, or negative/NaN
  /// constants. +inf is accepted and marks a hypothesis the model does not meet.
  void validate() const;
};

// ---------------------------------------------------------------------------
// Built-in models

/// phi_k' = omega - 1/N sum kappa_kl sin(phi_l - phi_k + alpha),
/// kappa_kl' = -eps (sin(phi_k - phi_l + beta) + kappa_kl).
ModelSpec kuramoto_adaptive(double omega, double alpha, double beta, double epsilon);

/// Scalar map with caller-supplied bound and Lipschitz constant.
struct BoundedScalarFn {
  std::function<double(double)> fn;
  double bound = 0.0;
  double lipschitz = 0.0;
};

/// Phase coupling g(t, s) evaluated at the phase difference s = eta - xi.
struct PhaseCoupling {
  std::function<double(double t, double s)> fn;
  double bound = 0.0;
  double lipschitz = 0.0;
};

/// phi_k' = 1/N sum kappa_kl c(t, phi_l - phi_k) + omega_k,
/// kappa_kl' = Gamma(phi_l - phi_k) - gamma kappa_kl. Scalar phases (d = 1).
/// Natural frequencies are a step function on I.
ModelSpec hnp_model(BoundedScalarFn Gamma, double gamma, StepFunction1D natural_frequencies,
                    PhaseCoupling coupling);

/// Opinion interaction psi: R^d -> R^d applied to phi_l - phi_k.
struct OpinionInteraction {
  std::function<void(std::span<const double> diff, std::span<double> out)> fn;
  std::size_t dim = 1;
  std::optional<double> bound;
  std::optional<double> lipschitz;
};

/// Weight drift Psi(u, m)(y). `weights` holds m on the grid of K (its first
/// row); the drift must be constant on each of those cells in y.
struct WeightDrift {
  std::function<double(double t, double y, const StepFunction1D& u, std::span<const double> weights)> fn;
  std::optional<double> bound;
  std::optional<double> lipschitz;
};

/// phi_k' = 1/N sum m_l psi(phi_l - phi_k), m_k' = Psi_k(phi, m), embedded as
/// kappa_kl = m_l. Throws std::invalid_argument when a constant is missing.
ModelSpec opinion_model(OpinionInteraction psi, WeightDrift Psi);

// ---------------------------------------------------------------------------
// Sampled assumption checks

struct RatioCheck {
  std::string name;
  double claimed = 0.0;
  double worst_ratio = 0.0;  ///< max observed quantity / claimed bound
  bool pass = true;
};

struct AssumptionReport {
  std::vector<RatioCheck> checks;
  std::size_t samples = 0;
  bool pass = true;
  const RatioCheck& get(const std::string& name) const;
};

inline constexpr double kRatioSlack = 1e-9;

/// Probes the six growth/Lipschitz hypotheses on random inputs. Can only
/// falsify. Throws std::invalid_argument when n_samples == 0.
AssumptionReport check_assumptions(const ModelSpec& m, std::size_t n_samples, std::uint64_t seed);

/// quantity/bound with 0/0 := 0 and q/0 := inf.
double bound_ratio(double quantity, double bound);

}  // namespace graphlim
