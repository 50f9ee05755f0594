#include "graphlim/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "graphlim/parallel.hpp"
#include "graphlim/quadrature.hpp"

namespace graphlim {

UnitGrid::UnitGrid(std::size_t cells) : cells_(cells) {
  if (cells == 0) throw std::invalid_argument("UnitGrid: number of cells must be positive");
}

std::size_t UnitGrid::cell_of(double x) const {
  if (!(x >= 0.0 && x < 1.0)) throw std::out_of_range("UnitGrid::cell_of: x outside [0,1)");
  const auto k = static_cast<std::size_t>(std::floor(x * static_cast<double>(cells_)));
  return std::min(k, cells_ - 1);
}

StepFunction1D::StepFunction1D(UnitGrid grid, std::size_t dim, std::vector<double> values)
    : grid_(grid), dim_(dim), values_(std::move(values)) {
  if (dim_ == 0) throw std::invalid_argument("StepFunction1D: dimension must be positive");
  if (values_.size() != grid_.size() * dim_)
    throw std::invalid_argument("StepFunction1D: expected " + std::to_string(grid_.size() * dim_) +
                                " values, got " + std::to_string(values_.size()));
}

StepFunction1D StepFunction1D::zeros(UnitGrid grid, std::size_t dim) {
  return StepFunction1D(grid, dim, std::vector<double>(grid.size() * dim, 0.0));
}

double StepFunction1D::sup_norm() const {
  double m = 0.0;
  for (std::size_t k = 0; k < size(); ++k) {
    double s = 0.0;
    for (double v : cell(k)) s += v * v;
    m = std::max(m, std::sqrt(s));
  }
  return m;
}

double StepFunction1D::l2_norm() const {
  std::vector<double> sq(values_.size());
  for (std::size_t i = 0; i < values_.size(); ++i) sq[i] = values_[i] * values_[i];
  return std::sqrt(deterministic_sum(sq) * grid_.width());
}

StepFunction2D::StepFunction2D(UnitGrid grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.size() * grid_.size())
    throw std::invalid_argument("StepFunction2D: expected N*N values");
}

StepFunction2D StepFunction2D::zeros(UnitGrid grid) { return constant(grid, 0.0); }

StepFunction2D StepFunction2D::constant(UnitGrid grid, double value) {
  return StepFunction2D(grid, std::vector<double>(grid.size() * grid.size(), value));
}

double StepFunction2D::sup_norm() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

double StepFunction2D::l2_norm() const {
  std::vector<double> sq(values_.size());
  for (std::size_t i = 0; i < values_.size(); ++i) sq[i] = values_[i] * values_[i];
  const double h = grid_.width();
  return std::sqrt(deterministic_sum(sq) * h * h);
}

Graphon Graphon::analytic(std::function<double(double, double)> fn, double bound) {
  if (!fn) throw std::invalid_argument("Graphon: empty kernel function");
  if (!(bound >= 0.0) || !std::isfinite(bound))
    throw std::invalid_argument("Graphon: declared bound must be finite and nonnegative");
  return Graphon(AnalyticKernel{std::move(fn), bound});
}

Graphon Graphon::sampled(StepFunction2D values) { return Graphon(std::move(values)); }

double Graphon::operator()(double x, double y) const {
  if (const auto* a = std::get_if<AnalyticKernel>(&repr_)) return a->fn(x, y);
  return std::get<StepFunction2D>(repr_).at(x, y);
}

double Graphon::bound() const {
  if (const auto* a = std::get_if<AnalyticKernel>(&repr_)) return a->bound;
  return std::get<StepFunction2D>(repr_).sup_norm();
}

std::pair<StepFunction1D, StepFunction2D> embed(std::span<const double> phi, std::size_t dim,
                                                std::span<const double> kappa) {
  if (dim == 0 || phi.size() % dim != 0) throw std::invalid_argument("embed: phi size not a multiple of d");
  const std::size_t n = phi.size() / dim;
  if (kappa.size() != n * n)
    throw std::invalid_argument("embed: kappa must be N x N with N = " + std::to_string(n));
  UnitGrid grid(n);
  return {StepFunction1D(grid, dim, {phi.begin(), phi.end()}),
          StepFunction2D(grid, {kappa.begin(), kappa.end()})};
}

namespace {

/// Piece of the coarsest common refinement of two uniform grids.
struct Segment {
  double length;
  std::size_t ia;
  std::size_t ib;
};

std::vector<Segment> common_segments(std::size_t na, std::size_t nb) {
  // Breakpoints i/na and j/nb, scaled by na*nb to stay in integers.
  std::vector<Segment> out;
  out.reserve(na + nb);
  const double denom = static_cast<double>(na) * static_cast<double>(nb);
  std::size_t i = 0, j = 0, pos = 0;
  while (i < na && j < nb) {
    const std::size_t end_a = (i + 1) * nb;
    const std::size_t end_b = (j + 1) * na;
    const std::size_t end = std::min(end_a, end_b);
    out.push_back({static_cast<double>(end - pos) / denom, i, j});
    pos = end;
    if (end_a == end) ++i;
    if (end_b == end) ++j;
  }
  return out;
}

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw std::domain_error(std::string(what) + ": non-finite integrand value");
}

double average_cell(const std::function<double(double, double)>& w, const UnitGrid& grid,
                    const GaussLegendre& rule, std::size_t k, std::size_t l) {
  const double h = grid.width();
  const double x0 = grid.left(k);
  const double y0 = grid.left(l);
  double s = 0.0;
  for (int a = 0; a < rule.order(); ++a) {
    double row = 0.0;
    const double x = x0 + h * rule.nodes[a];
    for (int b = 0; b < rule.order(); ++b) {
      const double v = w(x, y0 + h * rule.nodes[b]);
      require_finite(v, "cell_average_2d");
      row += rule.weights[b] * v;
    }
    s += rule.weights[a] * row;
  }
  return s;
}

StepFunction2D average_sampled(const StepFunction2D& fine, const UnitGrid& grid) {
  const auto segs = common_segments(fine.size(), grid.size());
  // Per coarse cell: list of (fine index, overlap length).
  std::vector<std::vector<std::pair<std::size_t, double>>> cover(grid.size());
  for (const auto& s : segs) cover[s.ib].push_back({s.ia, s.length});
  const double n = static_cast<double>(grid.size());
  std::vector<double> out(grid.size() * grid.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t kk = 0; kk < static_cast<std::ptrdiff_t>(grid.size()); ++kk) {
    const auto k = static_cast<std::size_t>(kk);
    for (std::size_t l = 0; l < grid.size(); ++l) {
      double s = 0.0;
      for (const auto& [i, li] : cover[k])
        for (const auto& [j, lj] : cover[l]) s += li * lj * fine(i, j);
      out[k * grid.size() + l] = s * n * n;
    }
  }
  return StepFunction2D(grid, std::move(out));
}

}  // namespace

StepFunction1D cell_average_1d(const AnalyticField1D& u, const UnitGrid& grid, int order) {
  if (!u.fn || u.dim == 0) throw std::invalid_argument("cell_average_1d: empty field");
  const auto& rule = gauss_legendre(order);
  auto out = StepFunction1D::zeros(grid, u.dim);
  std::vector<double> buf(u.dim);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    auto cell = out.cell(k);
    for (int a = 0; a < rule.order(); ++a) {
      u.fn(grid.left(k) + grid.width() * rule.nodes[a], buf);
      for (std::size_t c = 0; c < u.dim; ++c) {
        require_finite(buf[c], "cell_average_1d");
        cell[c] += rule.weights[a] * buf[c];
      }
    }
  }
  return out;
}

StepFunction2D cell_average_2d(const std::function<double(double, double)>& w, const UnitGrid& grid,
                               int order) {
  const auto& rule = gauss_legendre(order);
  const std::size_t n = grid.size();
  std::vector<double> out(n * n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t kk = 0; kk < static_cast<std::ptrdiff_t>(n); ++kk) {
    const auto k = static_cast<std::size_t>(kk);
    for (std::size_t l = 0; l < n; ++l) out[k * n + l] = average_cell(w, grid, rule, k, l);
  }
  return StepFunction2D(grid, std::move(out));
}

StepFunction2D cell_average_2d_serial(const std::function<double(double, double)>& w,
                                      const UnitGrid& grid, int order) {
  const auto& rule = gauss_legendre(order);
  const std::size_t n = grid.size();
  std::vector<double> out(n * n);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t l = 0; l < n; ++l) out[k * n + l] = average_cell(w, grid, rule, k, l);
  return StepFunction2D(grid, std::move(out));
}

StepFunction2D cell_average_2d(const Graphon& w, const UnitGrid& grid, int order) {
  if (w.is_sampled()) return average_sampled(w.samples(), grid);
  return cell_average_2d([&w](double x, double y) { return w(x, y); }, grid, order);
}

double l2_distance(const StepFunction1D& a, const StepFunction1D& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("l2_distance: incompatible state dimensions");
  const auto segs = common_segments(a.size(), b.size());
  std::vector<double> terms(segs.size());
  for (std::size_t s = 0; s < segs.size(); ++s) {
    const auto ca = a.cell(segs[s].ia);
    const auto cb = b.cell(segs[s].ib);
    double sq = 0.0;
    for (std::size_t c = 0; c < a.dim(); ++c) sq += (ca[c] - cb[c]) * (ca[c] - cb[c]);
    terms[s] = segs[s].length * sq;
  }
  return std::sqrt(deterministic_sum(terms));
}

double l2_distance(const StepFunction2D& a, const StepFunction2D& b) {
  const auto segs = common_segments(a.size(), b.size());
  std::vector<double> rows(segs.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t rr = 0; rr < static_cast<std::ptrdiff_t>(segs.size()); ++rr) {
    const auto& r = segs[static_cast<std::size_t>(rr)];
    double s = 0.0;
    for (const auto& c : segs) {
      const double d = a(r.ia, c.ia) - b(r.ib, c.ib);
      s += c.length * d * d;
    }
    rows[static_cast<std::size_t>(rr)] = r.length * s;
  }
  return std::sqrt(deterministic_sum(rows));
}

double l2_distance(const AnalyticField1D& a, const StepFunction1D& b, int order) {
  if (a.dim != b.dim()) throw std::invalid_argument("l2_distance: incompatible state dimensions");
  const auto& rule = gauss_legendre(order);
  const auto& grid = b.grid();
  std::vector<double> terms(grid.size());
  std::vector<double> buf(a.dim);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const auto cb = b.cell(k);
    double s = 0.0;
    for (int q = 0; q < rule.order(); ++q) {
      a.fn(grid.left(k) + grid.width() * rule.nodes[q], buf);
      double sq = 0.0;
      for (std::size_t c = 0; c < a.dim; ++c) sq += (buf[c] - cb[c]) * (buf[c] - cb[c]);
      s += rule.weights[q] * sq;
    }
    terms[k] = s * grid.width();
  }
  return std::sqrt(deterministic_sum(terms));
}

double l2_distance(const Graphon& a, const StepFunction2D& b, int order) {
  if (a.is_sampled()) return l2_distance(a.samples(), b);
  const auto& rule = gauss_legendre(order);
  const auto& grid = b.grid();
  const std::size_t n = grid.size();
  const double h = grid.width();
  std::vector<double> rows(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t kk = 0; kk < static_cast<std::ptrdiff_t>(n); ++kk) {
    const auto k = static_cast<std::size_t>(kk);
    double row = 0.0;
    for (std::size_t l = 0; l < n; ++l) {
      double s = 0.0;
      for (int p = 0; p < rule.order(); ++p) {
        const double x = grid.left(k) + h * rule.nodes[p];
        double inner = 0.0;
        for (int q = 0; q < rule.order(); ++q) {
          const double d = a(x, grid.left(l) + h * rule.nodes[q]) - b(k, l);
          inner += rule.weights[q] * d * d;
        }
        s += rule.weights[p] * inner;
      }
      row += s;
    }
    rows[k] = row * h * h;
  }
  return std::sqrt(deterministic_sum(rows));
}

namespace {

std::size_t refinement_ratio(std::size_t fine, std::size_t coarse) {
  if (coarse == 0 || fine % coarse != 0)
    throw std::invalid_argument("grid transfer: " + std::to_string(coarse) + " does not divide " +
                                std::to_string(fine));
  return fine / coarse;
}

}  // namespace

StepFunction1D restrict_to(const StepFunction1D& fine, const UnitGrid& coarse) {
  const std::size_t r = refinement_ratio(fine.size(), coarse.size());
  auto out = StepFunction1D::zeros(coarse, fine.dim());
  for (std::size_t k = 0; k < coarse.size(); ++k) {
    auto dst = out.cell(k);
    for (std::size_t i = k * r; i < (k + 1) * r; ++i) {
      const auto src = fine.cell(i);
      for (std::size_t c = 0; c < fine.dim(); ++c) dst[c] += src[c];
    }
    for (auto& v : dst) v /= static_cast<double>(r);
  }
  return out;
}

StepFunction2D restrict_to(const StepFunction2D& fine, const UnitGrid& coarse) {
  const std::size_t r = refinement_ratio(fine.size(), coarse.size());
  const std::size_t n = coarse.size();
  std::vector<double> out(n * n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t kk = 0; kk < static_cast<std::ptrdiff_t>(n); ++kk) {
    const auto k = static_cast<std::size_t>(kk);
    for (std::size_t l = 0; l < n; ++l) {
      double s = 0.0;
      for (std::size_t i = k * r; i < (k + 1) * r; ++i)
        for (std::size_t j = l * r; j < (l + 1) * r; ++j) s += fine(i, j);
      out[k * n + l] = s / static_cast<double>(r * r);
    }
  }
  return StepFunction2D(coarse, std::move(out));
}

StepFunction1D refine_to(const StepFunction1D& coarse, const UnitGrid& fine) {
  const std::size_t r = refinement_ratio(fine.size(), coarse.size());
  auto out = StepFunction1D::zeros(fine, coarse.dim());
  for (std::size_t i = 0; i < fine.size(); ++i) {
    const auto src = coarse.cell(i / r);
    std::copy(src.begin(), src.end(), out.cell(i).begin());
  }
  return out;
}

StepFunction2D refine_to(const StepFunction2D& coarse, const UnitGrid& fine) {
  const std::size_t r = refinement_ratio(fine.size(), coarse.size());
  const std::size_t n = fine.size();
  std::vector<double> out(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = coarse(i / r, j / r);
  return StepFunction2D(fine, std::move(out));
}

}  // namespace graphlim
