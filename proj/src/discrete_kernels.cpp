// Right-hand side kernels of the N-particle system: an OpenMP version and a
// serial reference. Both call the same per-row routine so their outputs are
// bitwise identical.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "graphlim/discrete.hpp"
#include "graphlim/quadrature.hpp"

namespace graphlim {

namespace {

struct RowError {
  bool set = false;
  std::size_t row = std::numeric_limits<std::size_t>::max();
  std::string what;
  long l = -1;
};

class RowKernel {
 public:
  RowKernel(const ModelSpec& m, const DiscreteState& s, int order)
      : m_(m),
        s_(s),
        n_(s.u.size()),
        d_(m.dim),
        f_rule_(gauss_legendre(m.f.position_dependent ? order : 1)),
        l_rule_(gauss_legendre(m.lambda.position_dependent ? order : 1)) {
    if (s.u.dim() != m.dim) throw std::invalid_argument("rhs: state dimension does not match model");
    s.validate();
  }

  std::size_t rows() const { return n_; }

  void forcing(std::size_t k, std::span<double> out, std::span<double> tmp) const {
    const auto& grid = s_.u.grid();
    std::fill(out.begin(), out.end(), 0.0);
    for (int q = 0; q < f_rule_.order(); ++q) {
      const double x = m_.f.position_dependent ? grid.left(k) + grid.width() * f_rule_.nodes[q] : grid.center(k);
      m_.f.eval(s_.t, x, s_.u, tmp);
      for (std::size_t c = 0; c < d_; ++c) out[c] += f_rule_.weights[q] * tmp[c];
    }
    for (std::size_t c = 0; c < d_; ++c)
      if (!std::isfinite(out[c])) throw SolverError("non-finite forcing f", s_.t, static_cast<long>(k), -1);
  }

  double weight_rate(std::size_t k, std::size_t l) const {
    const auto& grid = s_.u.grid();
    double v = 0.0;
    if (!m_.lambda.position_dependent) {
      v = m_.lambda.eval(s_.t, grid.center(k), grid.center(l), s_.K, s_.u);
    } else {
      const double h = grid.width();
      for (int p = 0; p < l_rule_.order(); ++p) {
        double inner = 0.0;
        const double x = grid.left(k) + h * l_rule_.nodes[p];
        for (int q = 0; q < l_rule_.order(); ++q)
          inner += l_rule_.weights[q] * m_.lambda.eval(s_.t, x, grid.left(l) + h * l_rule_.nodes[q], s_.K, s_.u);
        v += l_rule_.weights[p] * inner;
      }
    }
    if (!std::isfinite(v))
      throw SolverError("non-finite weight law Lambda", s_.t, static_cast<long>(k), static_cast<long>(l));
    return v;
  }

  void row(std::size_t k, Derivative& out, std::span<double> acc, std::span<double> tmp, std::span<double> fk) const {
    const auto uk = s_.u.cell(k);
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t l = 0; l < n_; ++l) {
      m_.g.eval(s_.t, uk, s_.u.cell(l), tmp);
      const double w = s_.K(k, l);
      for (std::size_t c = 0; c < d_; ++c) acc[c] += w * tmp[c];
    }
    forcing(k, fk, tmp);
    const double inv_n = 1.0 / static_cast<double>(n_);
    for (std::size_t c = 0; c < d_; ++c) {
      const double v = acc[c] * inv_n + fk[c];
      if (!std::isfinite(v)) throw SolverError("non-finite phase derivative", s_.t, static_cast<long>(k), -1);
      out.du[k * d_ + c] = v;
    }
    for (std::size_t l = 0; l < n_; ++l) out.dK[k * n_ + l] = weight_rate(k, l);
  }

  Derivative make_output() const { return {std::vector<double>(n_ * d_), std::vector<double>(n_ * n_)}; }
  std::size_t dim() const { return d_; }

 private:
  const ModelSpec& m_;
  const DiscreteState& s_;
  std::size_t n_;
  std::size_t d_;
  const GaussLegendre& f_rule_;
  const GaussLegendre& l_rule_;
};

}  // namespace

void DiscreteState::validate() const {
  if (!(u.grid() == K.grid())) throw std::invalid_argument("DiscreteState: u and K must share a grid");
}

Derivative rhs_serial(const ModelSpec& m, const DiscreteState& s, int order) {
  RowKernel kernel(m, s, order);
  auto out = kernel.make_output();
  std::vector<double> acc(kernel.dim()), tmp(kernel.dim()), fk(kernel.dim());
  for (std::size_t k = 0; k < kernel.rows(); ++k) kernel.row(k, out, acc, tmp, fk);
  return out;
}

Derivative rhs(const ModelSpec& m, const DiscreteState& s, int order) {
  RowKernel kernel(m, s, order);
  auto out = kernel.make_output();
  const auto rows = static_cast<std::ptrdiff_t>(kernel.rows());
  RowError err;
#pragma omp parallel
  {
    std::vector<double> acc(kernel.dim()), tmp(kernel.dim()), fk(kernel.dim());
#pragma omp for schedule(static)
    for (std::ptrdiff_t k = 0; k < rows; ++k) {
      try {
        kernel.row(static_cast<std::size_t>(k), out, acc, tmp, fk);
      } catch (const std::exception& e) {
        const auto* se = dynamic_cast<const SolverError*>(&e);
#pragma omp critical(graphlim_rhs_error)
        {
          // keep the lowest row so the reported location is deterministic
          if (static_cast<std::size_t>(k) < err.row) {
            err.set = true;
            err.row = static_cast<std::size_t>(k);
            err.what = e.what();
            err.l = se ? se->l() : -1;
          }
        }
      }
    }
  }
  if (err.set) throw SolverError(err.what, s.t, static_cast<long>(err.row), err.l);
  return out;
}

std::vector<double> cell_forcing(const ModelSpec& m, double t, const StepFunction1D& u, int order) {
  DiscreteState s{t, u, StepFunction2D::zeros(u.grid())};
  RowKernel kernel(m, s, order);
  std::vector<double> out(u.size() * m.dim), tmp(m.dim);
  for (std::size_t k = 0; k < u.size(); ++k)
    kernel.forcing(k, std::span<double>(out.data() + k * m.dim, m.dim), tmp);
  return out;
}

std::vector<double> cell_weight_rates(const ModelSpec& m, double t, const StepFunction2D& K,
                                      const StepFunction1D& u, int order) {
  DiscreteState s{t, u, K};
  RowKernel kernel(m, s, order);
  const std::size_t n = u.size();
  std::vector<double> out(n * n);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t l = 0; l < n; ++l) out[k * n + l] = kernel.weight_rate(k, l);
  return out;
}

}  // namespace graphlim
