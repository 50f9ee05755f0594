// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
// exits nonzero when any criterion fails.

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "graphlim/catalog.hpp"
#include "graphlim/continuum.hpp"
#include "graphlim/convergence.hpp"
#include "graphlim/discrete.hpp"
#include "graphlim/grid.hpp"

using namespace graphlim;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const fs::path kOut = fs::path(GRAPHLIM_TEST_TMP) / "acceptance";
const fs::path kSource = GRAPHLIM_SOURCE_DIR;

int failures = 0;

void report(int id, bool pass, const std::string& what) {
  std::printf("[%s] C%d %s\n", pass ? "PASS" : "FAIL", id, what.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct CsvRow {
  double N, e_sup, err_u0, err_K0, residual, envelope, converged;
};

std::vector<CsvRow> read_study_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  std::vector<CsvRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream f(line);
    CsvRow r{};
    f >> r.N >> r.e_sup >> r.err_u0 >> r.err_K0 >> r.residual >> r.envelope >> r.converged;
    rows.push_back(r);
  }
  return rows;
}

// Criterion-1 model and initial data at resolution M.
ModelSpec study_model() { return kuramoto_adaptive(0.5, 0.3, 0.2, 0.5); }

std::pair<StepFunction1D, StepFunction2D> study_data(std::size_t M) {
  const UnitGrid g(M);
  const AnalyticField1D u0{[](double x, std::span<double> out) {
                             out[0] = 2 * std::numbers::pi * (x - std::sin(2 * std::numbers::pi * x) / (2 * std::numbers::pi));
                           },
                           1};
  const auto W = Graphon::analytic([](double x, double y) { return std::exp(-(x - y) * (x - y)); }, 1.0);
  return {cell_average_1d(u0, g), cell_average_2d(W, g)};
}

DiscreteState study_state(std::size_t M) {
  auto [u, K] = study_data(M);
  return {0.0, std::move(u), std::move(K)};
}

}  // namespace

int main() {
  fs::remove_all(kOut);
  fs::create_directories(kOut);
  bool monitors_all = true;
  std::vector<std::string> monitor_notes;
  auto note_monitors = [&](const std::string& name, bool ok) {
    monitors_all = monitors_all && ok;
    if (!ok) monitor_notes.push_back(name);
  };
  double iterate_worst = 0.0;

  // Criteria 1, 2, 10: the convergence study through the command line.
  const auto config = (kSource / "configs" / "acceptance_study.json").string();
  const auto t_start = std::chrono::steady_clock::now();
  const int rc1 = cli::run({"converge", "--config", config, "--out", (kOut / "study_t1").string(), "--threads", "1"});
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  const int rc8 = cli::run({"converge", "--config", config, "--out", (kOut / "study_t8").string(), "--threads", "8"});
  const auto csv1 = slurp(kOut / "study_t1" / "convergence.csv");
  const auto csv8 = slurp(kOut / "study_t8" / "convergence.csv");
  {
    const auto rows = read_study_csv(csv1);
    bool ok = rc1 == 0 && rows.size() == 6;
    bool decreasing = ok;
    for (std::size_t i = 1; ok && i < rows.size(); ++i) decreasing = decreasing && rows[i].e_sup < rows[i - 1].e_sup;
    for (const auto& r : rows) ok = ok && r.converged == 1.0;
    const double ratio = ok ? rows.back().e_sup / rows.front().e_sup : INFINITY;
    std::vector<std::pair<double, double>> pts;
    for (const auto& r : rows) pts.push_back({r.N, r.e_sup});
    const auto fit = fit_rate(pts);
    const double slope = fit ? fit->slope : INFINITY;
    // frozen values from the first run of this configuration
    const auto golden = read_study_csv(slurp(kSource / "tests" / "golden" / "acceptance_convergence.csv"));
    bool matches_golden = golden.size() == rows.size();
    for (std::size_t i = 0; matches_golden && i < rows.size(); ++i)
      matches_golden = std::abs(rows[i].e_sup - golden[i].e_sup) <= 1e-6 * golden[i].e_sup &&
                       std::abs(rows[i].envelope - golden[i].envelope) <= 1e-6 * golden[i].envelope;
    const bool pass = ok && decreasing && ratio <= 0.02 && slope <= -0.8 && seconds <= 300.0 && matches_golden;
    report(1, pass,
           fmt("convergence: e(128)/e(4) = %.3e, slope = %.4f, runtime %.1f s", ratio, slope, seconds) +
               (decreasing ? ", strictly decreasing" : ", NOT decreasing") +
               (matches_golden ? ", matches golden" : ", golden mismatch"));

    bool dominated = ok;
    double worst = 0.0;
    for (const auto& r : rows) {
      dominated = dominated && r.e_sup <= kEnvelopeSlack * r.envelope;
      worst = std::max(worst, r.e_sup / r.envelope);
    }
    report(2, dominated, fmt("gronwall envelope: worst e/envelope = %.3e", worst));

    const auto summary = json::parse(slurp(kOut / "study_t1" / "summary.json"), nullptr, false);
    note_monitors("study", !summary.is_discarded() && summary.value("monitors_ok", false));
  }

  // Criterion 3: Duhamel formula for the linear-decay edge dynamics.
  {
    const auto Gamma = [](double s) { return std::sin(s); };
    const auto m = hnp_model({Gamma, 1.0, 1.0}, 0.5, StepFunction1D(UnitGrid(4), 1, {0.1, -0.2, 0.35, 0.05}),
                             {[](double, double s) { return std::sin(s); }, 1.0, 1.0});
    const auto traj = integrate(m, study_state(4), 1.0, 5e-4);
    const double dev = traj.aborted() ? INFINITY : duhamel_check(Gamma, 0.5, traj);
    report(3, dev <= 5e-6, fmt("duhamel: max deviation = %.3e (<= 5e-6)", dev));
    note_monitors("duhamel run", traj.monitors_ok());
  }

  // Criteria 4, 5: Picard windows of the contraction length at M = 16.
  {
    const auto [u0, K0] = study_data(16);
    PicardConfig pc;
    pc.T = 1.0;
    double worst_ratio = 0.0;
    std::size_t windows = 0;
    bool ok = true;
    try {
      const auto res = picard_solve(study_model(), u0, K0, pc);
      ok = res.converged;
      windows = res.windows.size();
      for (const auto& w : res.windows) {
        for (double c : w.contraction_factors) worst_ratio = std::max(worst_ratio, c);
        iterate_worst = std::max(iterate_worst, w.iterate_bound_worst);
        ok = ok && w.start_admissible;
      }
      note_monitors("picard T=1", res.trajectory.monitors_ok());
      note_monitors("mol M=16 T=1", mol_solve(study_model(), u0, K0, 1.0, 1e-3, {10}).monitors_ok());
    } catch (const std::exception& e) {
      std::cout << "  picard failed: " << e.what() << '\n';
      ok = false;
    }
    report(4, ok && worst_ratio <= 0.55,
           fmt("contraction: worst increment ratio = %.4f over %.0f windows (<= 0.55)", worst_ratio,
               static_cast<double>(windows)));
  }

  // Criterion 7: Picard against the method of lines.
  {
    const auto [u0, K0] = study_data(16);
    PicardConfig pc;
    pc.T = 0.5;
    pc.tol_L2 = 1e-8;
    double gap = INFINITY;
    try {
      const auto res = picard_solve(study_model(), u0, K0, pc);
      for (const auto& w : res.windows) iterate_worst = std::max(iterate_worst, w.iterate_bound_worst);
      const double h = res.windows.front().T_star / pc.time_intervals;
      const auto mol = mol_solve(study_model(), u0, K0, pc.T, h / 4, {4});
      gap = res.converged ? sup_l2_gap(res.trajectory, mol) : INFINITY;
      note_monitors("picard T=0.5", res.trajectory.monitors_ok());
      note_monitors("mol M=16 T=0.5", mol.monitors_ok());
    } catch (const std::exception& e) {
      std::cout << "  cross-solver run failed: " << e.what() << '\n';
    }
    report(5, iterate_worst <= 1.0 + 1e-6, fmt("iterate bound: worst lhs/rhs = %.6f (<= 1 + 1e-6)", iterate_worst));
    // printed in numeric order below
    const bool pass7 = gap <= 1e-4;
    const std::string line7 = fmt("cross-solver: sup-t L2 gap picard vs mol = %.3e (<= 1e-4)", gap);

    // Criterion 6: a run where B_Lambda = B_f selects the limit formula.
    const auto hnp = hnp_model({[](double s) { return std::sin(s); }, 1.0, 1.0}, 1.0,
                               StepFunction1D(UnitGrid(4), 1, {1.0, -1.0, 0.5, 1.0}),
                               {[](double, double s) { return std::sin(s); }, 1.0, 1.0});
    const auto s0 = study_state(8);
    const auto env = apriori_envelope(hnp, s0.u.sup_norm(), s0.K.sup_norm(), 0.0);
    const auto limit_run = integrate(hnp, s0, 2.0, 1e-3, {10});
    note_monitors("limit-formula run", limit_run.monitors_ok() && !limit_run.aborted());
    const auto discrete = integrate(study_model(), study_state(32), 1.0, 1e-3, {10});
    note_monitors("discrete N=32", discrete.monitors_ok());
    std::string detail = "a-priori envelopes hold on all runs";
    if (!env.uses_limit_formula()) detail += "; limit-formula run did not select the limit formula";
    for (const auto& n : monitor_notes) detail += "; violated: " + n;
    report(6, monitors_all && env.uses_limit_formula(), detail);
    report(7, pass7, line7);
  }

  // Criterion 8: the opinion model against a hand-written ODE.
  {
    constexpr std::size_t N = 8, d = 2;
    constexpr double a = 0.8, r = 0.3, target = 1.5, c = 0.2;
    auto cell = [](double y) { return std::min<std::size_t>(N - 1, static_cast<std::size_t>(y * N)); };
    OpinionInteraction psi{[a](std::span<const double> s, std::span<double> out) {
                             for (std::size_t i = 0; i < s.size(); ++i) out[i] = a * std::tanh(s[i]);
                           },
                           d, a * std::sqrt(2.0), a};
    WeightDrift drift{[=](double, double y, const StepFunction1D& u, std::span<const double> m) {
                        return r * (target - m[cell(y)]) + c * std::sin(u.cell(cell(y))[0]);
                      },
                      r * target + c + r, r + c};
    const auto model = opinion_model(psi, drift);

    std::vector<double> phi(N * d), mw(N);
    for (std::size_t k = 0; k < N; ++k) {
      phi[k * d] = std::cos(1.0 + k);
      phi[k * d + 1] = 0.5 * static_cast<double>(k) - 1.0;
      mw[k] = 0.2 + 0.1 * static_cast<double>(k);
    }
    std::vector<double> kappa(N * N);
    for (std::size_t k = 0; k < N; ++k)
      for (std::size_t l = 0; l < N; ++l) kappa[k * N + l] = mw[l];
    auto [u0, K0] = embed(phi, d, kappa);
    const auto traj = integrate(model, {0.0, u0, K0}, 1.0, 1e-3, {100});

    // phi_k' = 1/N sum_l m_l psi(phi_l - phi_k),  m_l' = r (target - m_l) + c sin(phi_l[0])
    auto deriv = [&](const std::vector<double>& y) {
      std::vector<double> dy(y.size(), 0.0);
      for (std::size_t k = 0; k < N; ++k) {
        for (std::size_t l = 0; l < N; ++l)
          for (std::size_t i = 0; i < d; ++i) dy[k * d + i] += y[N * d + l] * a * std::tanh(y[l * d + i] - y[k * d + i]);
        for (std::size_t i = 0; i < d; ++i) dy[k * d + i] /= N;
        dy[N * d + k] = r * (target - y[N * d + k]) + c * std::sin(y[k * d]);
      }
      return dy;
    };
    std::vector<double> y(phi);
    y.insert(y.end(), mw.begin(), mw.end());
    const double h = 2.5e-4;
    double worst = 0.0;
    auto compare = [&](const DiscreteState& s) {
      for (std::size_t k = 0; k < N; ++k) {
        for (std::size_t i = 0; i < d; ++i) worst = std::max(worst, std::abs(s.u.cell(k)[i] - y[k * d + i]));
        for (std::size_t l = 0; l < N; ++l) worst = std::max(worst, std::abs(s.K(k, l) - y[N * d + l]));
      }
    };
    compare(traj.states.front());
    for (std::size_t step = 1; step <= 4000; ++step) {
      auto axpy = [&](const std::vector<double>& v, double s) {
        auto out = y;
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += s * v[i];
        return out;
      };
      const auto k1 = deriv(y), k2 = deriv(axpy(k1, h / 2)), k3 = deriv(axpy(k2, h / 2)), k4 = deriv(axpy(k3, h));
      for (std::size_t i = 0; i < y.size(); ++i) y[i] += h / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
      if (step % 400 == 0) compare(traj.states.at(step / 400));
    }
    report(8, !traj.aborted() && traj.states.size() == 11 && worst <= 1e-8,
           fmt("opinion embedding: max deviation from direct ODE = %.3e (<= 1e-8)", worst));
  }

  // Criterion 9: numerical kernels.
  {
    const auto m = study_model();
    const auto s0 = study_state(8);
    const auto a = integrate(m, s0, 1.0, 0.02, {10});
    const auto b = integrate(m, s0, 1.0, 0.01, {20});
    const auto c = integrate(m, s0, 1.0, 0.005, {40});
    const double ratio = sup_l2_gap(a, b) / sup_l2_gap(b, c);

    double poly_worst = 0.0;
    for (int q : {1, 2, 3, 4}) {
      const UnitGrid g(6);
      for (int i = 0; i <= 2 * q - 1; ++i)
        for (int j = 0; j <= 2 * q - 1; ++j) {
          const auto avg = cell_average_2d([i, j](double x, double y) { return std::pow(x, i) * std::pow(y, j); }, g, q);
          auto mono = [](double x0, double x1, int p) { return (std::pow(x1, p + 1) - std::pow(x0, p + 1)) / (p + 1); };
          for (std::size_t k = 0; k < 6; ++k)
            for (std::size_t l = 0; l < 6; ++l) {
              const double exact = 36.0 * mono(g.left(k), g.right(k), i) * mono(g.left(l), g.right(l), j);
              poly_worst = std::max(poly_worst, std::abs(avg(k, l) - exact));
            }
        }
    }
    const auto W = Graphon::analytic([](double x, double y) { return x * y; }, 1.0);
    const double dist_err = std::abs(l2_distance(W, StepFunction2D::constant(UnitGrid(4), 0.25)) - std::sqrt(7.0 / 144.0));
    report(9, ratio >= 12.0 && ratio <= 20.0 && poly_worst <= 1e-13 && dist_err <= 1e-10,
           fmt("kernels: RK4 halving ratio = %.3f, polynomial averaging error = %.1e, sqrt(7/144) error = %.1e", ratio,
               poly_worst, dist_err));
  }

  // Criterion 10: thread-count independence of the study output.
  report(10, rc1 == 0 && rc8 == 0 && !csv1.empty() && csv1 == csv8,
         std::string("determinism: convergence.csv at 1 and 8 threads is ") + (csv1 == csv8 ? "byte-identical" : "DIFFERENT"));

  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
