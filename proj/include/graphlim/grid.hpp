#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <utility>
#include <variant>
#include <vector>

namespace graphlim {

/// Uniform partition of I = [0,1) into N half-open cells [(k)/N, (k+1)/N),
/// k = 0..N-1 (zero-based).
class UnitGrid {
 public:
  explicit UnitGrid(std::size_t cells);

  std::size_t size() const { return cells_; }
  double width() const { return 1.0 / static_cast<double>(cells_); }
  double left(std::size_t k) const { return static_cast<double>(k) / static_cast<double>(cells_); }
  double right(std::size_t k) const { return static_cast<double>(k + 1) / static_cast<double>(cells_); }
  double center(std::size_t k) const { return (static_cast<double>(k) + 0.5) / static_cast<double>(cells_); }

  /// floor(N x); throws std::out_of_range unless 0 <= x < 1.
  std::size_t cell_of(double x) const;

  friend bool operator==(const UnitGrid&, const UnitGrid&) = default;

 private:
  std::size_t cells_;
};

/// Piecewise-constant map I -> R^d; value k lives on cell k. Storage is
/// cell-major: values[k*d + c].
class StepFunction1D {
 public:
  StepFunction1D(UnitGrid grid, std::size_t dim, std::vector<double> values);
  static StepFunction1D zeros(UnitGrid grid, std::size_t dim);

  const UnitGrid& grid() const { return grid_; }
  std::size_t size() const { return grid_.size(); }
  std::size_t dim() const { return dim_; }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }
  std::span<const double> cell(std::size_t k) const { return {values_.data() + k * dim_, dim_}; }
  std::span<double> cell(std::size_t k) { return {values_.data() + k * dim_, dim_}; }
  std::span<const double> at(double x) const { return cell(grid_.cell_of(x)); }

  /// max_k |value_k| (Euclidean norm of each cell vector).
  double sup_norm() const;
  double l2_norm() const;

 private:
  UnitGrid grid_;
  std::size_t dim_;
  std::vector<double> values_;
};

/// Piecewise-constant map I^2 -> R on the product grid, row-major.
class StepFunction2D {
 public:
  StepFunction2D(UnitGrid grid, std::vector<double> values);
  static StepFunction2D zeros(UnitGrid grid);
  static StepFunction2D constant(UnitGrid grid, double value);

  const UnitGrid& grid() const { return grid_; }
  std::size_t size() const { return grid_.size(); }

  double operator()(std::size_t k, std::size_t l) const { return values_[k * size() + l]; }
  double& operator()(std::size_t k, std::size_t l) { return values_[k * size() + l]; }
  double at(double x, double y) const { return (*this)(grid_.cell_of(x), grid_.cell_of(y)); }
  std::span<const double> row(std::size_t k) const { return {values_.data() + k * size(), size()}; }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  double sup_norm() const;
  double l2_norm() const;

 private:
  UnitGrid grid_;
  std::vector<double> values_;
};

/// Analytic field I -> R^d, used for initial data u0.
struct AnalyticField1D {
  std::function<void(double x, std::span<double> out)> fn;
  std::size_t dim = 1;
};

struct AnalyticKernel {
  std::function<double(double x, double y)> fn;
  double bound = 0.0;  ///< declared sup-norm bound
};

/// Limit kernel W on I^2: analytic with a declared bound, or grid-sampled.
class Graphon {
 public:
  static Graphon analytic(std::function<double(double, double)> fn, double bound);
  static Graphon sampled(StepFunction2D values);

  double operator()(double x, double y) const;
  double bound() const;
  bool is_sampled() const { return std::holds_alternative<StepFunction2D>(repr_); }
  const StepFunction2D& samples() const { return std::get<StepFunction2D>(repr_); }

 private:
  explicit Graphon(std::variant<AnalyticKernel, StepFunction2D> r) : repr_(std::move(r)) {}
  std::variant<AnalyticKernel, StepFunction2D> repr_;
};

/// Step-function embedding of particle states (flat N*d) and weights (N*N).
std::pair<StepFunction1D, StepFunction2D> embed(std::span<const double> phi, std::size_t dim,
                                                std::span<const double> kappa);

StepFunction1D cell_average_1d(const AnalyticField1D& u, const UnitGrid& grid, int order = 4);

/// N^2 * integral over each I_k x I_l. Analytic kernels use tensor
/// Gauss-Legendre of the given order; sampled graphons are averaged exactly
/// over cell overlaps.
StepFunction2D cell_average_2d(const Graphon& w, const UnitGrid& grid, int order = 4);
StepFunction2D cell_average_2d(const std::function<double(double, double)>& w, const UnitGrid& grid,
                               int order = 4);
/// Single-threaded reference for the analytic kernel path.
StepFunction2D cell_average_2d_serial(const std::function<double(double, double)>& w,
                                      const UnitGrid& grid, int order = 4);

/// L2 distances. Step-vs-step comparisons use the coarsest common refinement
/// of the two grids (exact). Function-vs-step comparisons integrate with
/// per-cell Gauss-Legendre of the given order on the step function's grid.
double l2_distance(const StepFunction1D& a, const StepFunction1D& b);
double l2_distance(const StepFunction2D& a, const StepFunction2D& b);
double l2_distance(const AnalyticField1D& a, const StepFunction1D& b, int order = 4);
double l2_distance(const Graphon& a, const StepFunction2D& b, int order = 4);

/// L2-orthogonal projection of a fine step function onto a coarse grid.
/// Requires coarse.size() to divide the fine size.
StepFunction1D restrict_to(const StepFunction1D& fine, const UnitGrid& coarse);
StepFunction2D restrict_to(const StepFunction2D& fine, const UnitGrid& coarse);

/// Exact re-expression of a step function on a grid whose size is a multiple.
StepFunction1D refine_to(const StepFunction1D& coarse, const UnitGrid& fine);
StepFunction2D refine_to(const StepFunction2D& coarse, const UnitGrid& fine);

}  // namespace graphlim
