#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

#include "graphlim/grid.hpp"
#include "graphlim/parallel.hpp"

using namespace graphlim;

namespace {

std::vector<double> random_values(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-2.0, 2.0);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

// Exact integral of x^a over [x0, x1].
double mono(double x0, double x1, int a) { return (std::pow(x1, a + 1) - std::pow(x0, a + 1)) / (a + 1); }

}  // namespace

TEST_CASE("unit grid cells are half-open and zero-based") {
  const UnitGrid g(4);
  CHECK(g.width() == 0.25);
  CHECK(g.cell_of(0.0) == 0);
  CHECK(g.cell_of(0.25) == 1);
  CHECK(g.cell_of(0.2499999) == 0);
  CHECK(g.cell_of(0.999999) == 3);
  CHECK_THROWS_AS(g.cell_of(1.0), std::out_of_range);
  CHECK_THROWS_AS(g.cell_of(-1e-300), std::out_of_range);
  CHECK(g.left(2) == 0.5);
  CHECK(g.right(2) == 0.75);
  CHECK(g.center(0) == 0.125);
  CHECK_THROWS(UnitGrid(0));
}

TEST_CASE("step function containers") {
  const UnitGrid g(3);
  CHECK_THROWS(StepFunction1D(g, 1, {1.0, 2.0}));
  CHECK_THROWS(StepFunction2D(g, std::vector<double>(8)));
  const StepFunction1D u(g, 2, {3, 4, 0, 0, 1, 0});
  CHECK(u.sup_norm() == 5.0);
  CHECK(u.l2_norm() == doctest::Approx(std::sqrt((25.0 + 1.0) / 3.0)));
  CHECK(u.at(0.9)[0] == 1.0);
  auto K = StepFunction2D::constant(g, -2.0);
  K(1, 2) = 7.0;
  CHECK(K.at(0.5, 0.9) == 7.0);
  CHECK(K.sup_norm() == 7.0);
  CHECK(K.row(1)[2] == 7.0);
}

TEST_CASE("embedding places particle k on cell k") {
  const std::vector<double> phi{1, 2, 3, 4, 5, 6};
  const std::vector<double> kappa{1, 2, 3, 4, 5, 6, 7, 8, 9};
  const auto [u, K] = embed(phi, 2, kappa);
  CHECK(u.size() == 3);
  CHECK(u.cell(1)[0] == 3.0);
  CHECK(u.cell(1)[1] == 4.0);
  CHECK(K(2, 0) == 7.0);
  CHECK(K.at(0.4, 0.8) == 6.0);
  CHECK_THROWS(embed(phi, 2, std::vector<double>(8)));
}

TEST_CASE("cell_average_2d is exact on polynomials of per-variable degree <= 2q-1") {
  for (int q : {1, 2, 4}) {
    const UnitGrid g(5);
    for (int a = 0; a <= 2 * q - 1; ++a)
      for (int b = 0; b <= 2 * q - 1; ++b) {
        const auto avg = cell_average_2d([a, b](double x, double y) { return std::pow(x, a) * std::pow(y, b); }, g, q);
        double worst = 0.0;
        for (std::size_t k = 0; k < 5; ++k)
          for (std::size_t l = 0; l < 5; ++l) {
            const double exact = 25.0 * mono(g.left(k), g.right(k), a) * mono(g.left(l), g.right(l), b);
            worst = std::max(worst, std::abs(avg(k, l) - exact));
          }
        CHECK(worst <= 1e-13);
      }
  }
}

TEST_CASE("cell_average_1d of a linear profile gives cell centres") {
  const UnitGrid g(8);
  const auto u = cell_average_1d({[](double x, std::span<double> out) { out[0] = x; }, 1}, g);
  for (std::size_t k = 0; k < 8; ++k) CHECK(u.cell(k)[0] == doctest::Approx(g.center(k)).epsilon(1e-15));
  CHECK_THROWS_AS(cell_average_1d({[](double, std::span<double> out) { out[0] = NAN; }, 1}, g), std::domain_error);
}

TEST_CASE("parallel and serial cell averaging agree bitwise") {
  auto w = [](double x, double y) { return std::exp(-(x - y) * (x - y)) + std::sin(7 * x * y); };
  const UnitGrid g(37);
  const int before = thread_count();
  set_thread_count(4);
  const auto par = cell_average_2d(w, g, 5);
  set_thread_count(before);
  const auto ser = cell_average_2d_serial(w, g, 5);
  for (std::size_t i = 0; i < par.values().size(); ++i) REQUIRE(par.values()[i] == ser.values()[i]);
}

TEST_CASE("sampled graphon averages over cell overlaps exactly") {
  const UnitGrid g3(3), g2(2);
  const StepFunction2D s(g3, {1, 2, 3, 4, 5, 6, 7, 8, 9});
  const auto W = Graphon::sampled(s);
  CHECK(W.is_sampled());
  CHECK(W.bound() == 9.0);
  // Coarse cell [0,1/2)^2 covers fine cell (0,0) fully, (0,1),(1,0) by half, (1,1) by a quarter.
  const auto avg = cell_average_2d(W, g2);
  const double expect = 4.0 * (1.0 / 9 * 1 + 1.0 / 18 * 2 + 1.0 / 18 * 4 + 1.0 / 36 * 5);
  CHECK(avg(0, 0) == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("L2 distance of W = xy to the constant 1/4 is sqrt(7/144)") {
  const auto W = Graphon::analytic([](double x, double y) { return x * y; }, 1.0);
  for (std::size_t n : {1, 2, 7}) {
    const auto quarter = StepFunction2D::constant(UnitGrid(n), 0.25);
    CHECK(std::abs(l2_distance(W, quarter) - std::sqrt(7.0 / 144.0)) <= 1e-10);
  }
}

TEST_CASE("cross-grid L2 distance matches a shared-refinement oracle") {
  // Oracle: lift both step functions to the grid of size lcm(3,5) = 15 and
  // compare cellwise.
  const StepFunction1D a(UnitGrid(3), 2, random_values(6, 1));
  const StepFunction1D b(UnitGrid(5), 2, random_values(10, 2));
  double s = 0.0;
  for (std::size_t k = 0; k < 15; ++k)
    for (std::size_t c = 0; c < 2; ++c) {
      const double d = a.cell(k / 5)[c] - b.cell(k / 3)[c];
      s += d * d / 15.0;
    }
  CHECK(l2_distance(a, b) == doctest::Approx(std::sqrt(s)).epsilon(1e-13));

  const StepFunction2D A(UnitGrid(3), random_values(9, 3));
  const StepFunction2D B(UnitGrid(5), random_values(25, 4));
  double S = 0.0;
  for (std::size_t k = 0; k < 15; ++k)
    for (std::size_t l = 0; l < 15; ++l) {
      const double d = A(k / 5, l / 5) - B(k / 3, l / 3);
      S += d * d / 225.0;
    }
  CHECK(l2_distance(A, B) == doctest::Approx(std::sqrt(S)).epsilon(1e-13));
  CHECK(l2_distance(A, A) == 0.0);
}

TEST_CASE("analytic-vs-step 1D distance") {
  // |x - 1/2| on [0,1): integral of (x-1/2)^2 = 1/12.
  const AnalyticField1D id{[](double x, std::span<double> out) { out[0] = x; }, 1};
  const StepFunction1D half(UnitGrid(1), 1, {0.5});
  CHECK(l2_distance(id, half) == doctest::Approx(std::sqrt(1.0 / 12.0)).epsilon(1e-14));
}

TEST_CASE("restriction is the L2 projection and refinement is exact") {
  const StepFunction1D fine(UnitGrid(12), 1, random_values(12, 5));
  const auto coarse = restrict_to(fine, UnitGrid(4));
  for (std::size_t k = 0; k < 4; ++k) {
    const double mean = (fine.cell(3 * k)[0] + fine.cell(3 * k + 1)[0] + fine.cell(3 * k + 2)[0]) / 3.0;
    CHECK(coarse.cell(k)[0] == doctest::Approx(mean).epsilon(1e-15));
  }
  const auto lifted = refine_to(coarse, UnitGrid(12));
  CHECK(l2_distance(lifted, coarse) == 0.0);
  const auto back = restrict_to(lifted, UnitGrid(4));
  for (std::size_t k = 0; k < 4; ++k) CHECK(back.cell(k)[0] == doctest::Approx(coarse.cell(k)[0]).epsilon(1e-15));
  // Projection: the residual is orthogonal to coarse step functions, so
  // |f - P f| <= |f - g| for any coarse g.
  const StepFunction1D other(UnitGrid(4), 1, random_values(4, 6));
  CHECK(l2_distance(fine, coarse) <= l2_distance(fine, other));
  CHECK_THROWS(restrict_to(fine, UnitGrid(5)));
  CHECK_THROWS(refine_to(coarse, UnitGrid(6)));

  const StepFunction2D F(UnitGrid(6), random_values(36, 7));
  const auto C = restrict_to(F, UnitGrid(3));
  const double mean00 = (F(0, 0) + F(0, 1) + F(1, 0) + F(1, 1)) / 4.0;
  CHECK(C(0, 0) == doctest::Approx(mean00).epsilon(1e-15));
  CHECK(l2_distance(refine_to(C, UnitGrid(6)), C) == 0.0);
}
