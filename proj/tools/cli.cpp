#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "graphlim/catalog.hpp"
#include "graphlim/continuum.hpp"
#include "graphlim/convergence.hpp"
#include "graphlim/discrete.hpp"
#include "graphlim/io.hpp"
#include "graphlim/parallel.hpp"

namespace graphlim::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Context {
  fs::path config_path;
  fs::path out_dir;
  int threads = 0;
  bool verbose = false;
  json config;
  std::string config_hash;
};

void emit(const std::string& level, const std::string& event, json fields = json::object()) {
  fields["level"] = level;
  fields["event"] = event;
  std::cerr << fields.dump() << '\n';
}

void info(const Context& ctx, const std::string& event, json fields = json::object()) {
  if (ctx.verbose) emit("info", event, std::move(fields));
}

int config_error(const std::string& key, const std::string& message) {
  emit("error", "config_error", {{"key", key}, {"message", message}});
  return kConfigError;
}

// ---------------------------------------------------------------------------
// config field helpers

double num(const json& j, const char* key, std::optional<double> fallback = {}) {
  if (!j.contains(key)) {
    if (fallback) return *fallback;
    throw ConfigError(key, std::string("missing key '") + key + "'");
  }
  if (!j.at(key).is_number()) throw ConfigError(key, std::string("'") + key + "' must be a number");
  return j.at(key).get<double>();
}

std::size_t count(const json& j, const char* key, std::optional<std::size_t> fallback = {}) {
  if (!j.contains(key)) {
    if (fallback) return *fallback;
    throw ConfigError(key, std::string("missing key '") + key + "'");
  }
  const auto& v = j.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0)
    throw ConfigError(key, std::string("'") + key + "' must be a non-negative integer");
  return v.get<std::size_t>();
}

long long integer(const json& j, const char* key, long long fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number_integer()) throw ConfigError(key, std::string("'") + key + "' must be an integer");
  return j.at(key).get<long long>();
}

const json& section(const json& j, const char* key) {
  if (!j.contains(key)) throw ConfigError(key, std::string("missing key '") + key + "'");
  return j.at(key);
}

ModelSpec load_model(const json& cfg) { return model_from_json(section(cfg, "model"), "model"); }

std::pair<StepFunction1D, StepFunction2D> initial_data(const json& cfg, const ModelSpec& m, std::size_t cells,
                                                       int q) {
  const auto u0 = profile_from_json(section(cfg, "u0"), m.dim, "u0");
  const auto W = graphon_from_json(section(cfg, "W"), "W");
  const UnitGrid grid(cells);
  return {cell_average_1d(u0, grid, q), cell_average_2d(W, grid, q)};
}

// ---------------------------------------------------------------------------
// output helpers

void write_trajectory(const fs::path& dir, const Trajectory& traj) {
  std::ostringstream u, K;
  if (!traj.states.empty()) {
    u << "t,k";
    for (std::size_t c = 0; c < traj.states.front().u.dim(); ++c) u << ",value_" << c;
    u << '\n';
  }
  K << "t,k,l,value\n";
  for (const auto& s : traj.states) {
    const std::string t = format_double(s.t);
    for (std::size_t k = 0; k < s.u.size(); ++k) {
      u << t << ',' << k;
      for (double v : s.u.cell(k)) u << ',' << format_double(v);
      u << '\n';
      for (std::size_t l = 0; l < s.K.size(); ++l) K << t << ',' << k << ',' << l << ',' << format_double(s.K(k, l)) << '\n';
    }
  }
  write_text_file(dir / "u.csv", u.str());
  write_text_file(dir / "K.csv", K.str());
}

json monitor_summary(const Trajectory& traj) {
  std::size_t violations = 0;
  json first = nullptr;
  for (const auto& r : traj.monitors) {
    if (r.ok) continue;
    if (violations++ == 0)
      first = {{"t", r.t}, {"u_sup", r.u_sup}, {"u_envelope", r.u_envelope}, {"K_sup", r.K_sup},
               {"K_envelope", r.K_envelope}};
  }
  return {{"all_ok", violations == 0}, {"violations", violations}, {"first_violation", first}};
}

json abort_json(const AbortInfo& a) { return {{"t", a.t}, {"k", a.k}, {"l", a.l}, {"message", a.message}}; }

void write_json(const fs::path& path, const json& j) { write_text_file(path, j.dump(2) + "\n"); }

// ---------------------------------------------------------------------------
// commands

int cmd_simulate(Context& ctx) {
  const auto& cfg = ctx.config;
  reject_unknown_keys(cfg,
                      {"schema_version", "model", "u0", "W", "N", "T", "dt", "store_every", "quadrature_order",
                       "monitor_tol", "binary"},
                      "config");
  const auto m = load_model(cfg);
  const std::size_t N = count(cfg, "N");
  if (N == 0) throw ConfigError("N", "'N' must be >= 1");
  IntegrateOptions opts;
  opts.store_every = count(cfg, "store_every", 1);
  opts.quadrature_order = static_cast<int>(integer(cfg, "quadrature_order", 4));
  opts.monitor_tol = num(cfg, "monitor_tol", 1e-6);
  const double T = num(cfg, "T");
  const double dt = num(cfg, "dt");
  const bool binary = cfg.value("binary", false);
  auto [u0, K0] = initial_data(cfg, m, N, opts.quadrature_order);

  Trajectory traj;
  try {
    traj = integrate(m, DiscreteState{0.0, u0, K0}, T, dt, opts);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("config", e.what());
  }
  fs::create_directories(ctx.out_dir);
  write_trajectory(ctx.out_dir, traj);
  if (binary) {
    std::ofstream ub(ctx.out_dir / "u_final.glsf", std::ios::binary), Kb(ctx.out_dir / "K_final.glsf", std::ios::binary);
    write_binary(ub, traj.states.back().u);
    write_binary(Kb, traj.states.back().K);
  }
  json manifest = {{"command", "simulate"},
                   {"model", m.name},
                   {"N", N},
                   {"dt", dt},
                   {"T", T},
                   {"store_every", opts.store_every},
                   {"stored_states", traj.states.size()},
                   {"monitor_flags", monitor_summary(traj)},
                   {"last_finite_time", traj.states.back().t},
                   {"aborted", traj.aborted()},
                   {"abort", traj.aborted() ? abort_json(*traj.abort) : json(nullptr)},
                   {"config_hash", ctx.config_hash}};
  write_json(ctx.out_dir / "manifest.json", manifest);
  if (traj.aborted()) {
    emit("error", "solver_abort", abort_json(*traj.abort));
    return kSolverAbort;
  }
  info(ctx, "simulate_done", {{"states", traj.states.size()}});
  return kOk;
}

json window_json(const WindowDiagnostics& w) {
  return {{"t0", w.t0},
          {"T_star", w.T_star},
          {"iterations", w.iterations},
          {"increments", w.increments},
          {"contraction_factors", w.contraction_factors},
          {"converged", w.converged},
          {"fixed_point_residual", w.fixed_point_residual},
          {"start_admissible", w.start_admissible},
          {"iterate_bound_worst", w.iterate_bound_worst}};
}

int cmd_picard(Context& ctx) {
  const auto& cfg = ctx.config;
  reject_unknown_keys(cfg,
                      {"schema_version", "model", "u0", "W", "M", "t0", "T", "T_star", "max_iters", "tol_L2",
                       "time_intervals", "quadrature_order", "monitor_tol"},
                      "config");
  const auto m = load_model(cfg);
  const std::size_t M = count(cfg, "M");
  if (M == 0) throw ConfigError("M", "'M' must be >= 1");
  PicardConfig pc;
  pc.t0 = num(cfg, "t0", 0.0);
  pc.T = num(cfg, "T");
  if (cfg.contains("T_star")) pc.T_star = num(cfg, "T_star");
  pc.max_iters = static_cast<int>(integer(cfg, "max_iters", pc.max_iters));
  pc.tol_L2 = num(cfg, "tol_L2", pc.tol_L2);
  pc.time_intervals = static_cast<int>(integer(cfg, "time_intervals", pc.time_intervals));
  pc.quadrature_order = static_cast<int>(integer(cfg, "quadrature_order", pc.quadrature_order));
  pc.monitor_tol = num(cfg, "monitor_tol", pc.monitor_tol);
  try {
    pc.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("config", e.what());
  }
  auto [u0, K0] = initial_data(cfg, m, M, pc.quadrature_order);

  fs::create_directories(ctx.out_dir);
  json manifest = {{"command", "picard"}, {"model", m.name}, {"M", M}, {"T", pc.T}, {"config_hash", ctx.config_hash}};
  try {
    const auto res = picard_solve(m, u0, K0, pc);
    json windows = json::array();
    for (const auto& w : res.windows) windows.push_back(window_json(w));
    write_json(ctx.out_dir / "picard_windows.json", windows);
    write_trajectory(ctx.out_dir, res.trajectory);
    manifest["contraction_T_star"] = res.contraction_T_star;
    manifest["windows"] = res.windows.size();
    manifest["converged"] = res.converged;
    manifest["monitor_flags"] = monitor_summary(res.trajectory);
    write_json(ctx.out_dir / "manifest.json", manifest);
    if (!res.converged) emit("warning", "picard_unconverged", {{"max_iters", pc.max_iters}});
    info(ctx, "picard_done", {{"windows", res.windows.size()}});
    return kOk;
  } catch (const PicardDivergence& e) {
    write_json(ctx.out_dir / "picard_windows.json", json::array({window_json(e.diagnostics())}));
    manifest["diverged"] = true;
    write_json(ctx.out_dir / "manifest.json", manifest);
    emit("error", "picard_divergence", {{"message", e.what()}});
    return kSolverAbort;
  } catch (const SolverError& e) {
    manifest["aborted"] = true;
    write_json(ctx.out_dir / "manifest.json", manifest);
    emit("error", "solver_abort", {{"t", e.t()}, {"k", e.k()}, {"l", e.l()}, {"message", e.what()}});
    return kSolverAbort;
  }
}

StudyConfig study_config(const json& cfg) {
  reject_unknown_keys(cfg,
                      {"schema_version", "model", "u0", "W", "N_list", "M_ref", "T", "dt", "store_every",
                       "quadrature_order", "seed"},
                      "config");
  StudyConfig sc;
  sc.model = load_model(cfg);
  sc.u0 = profile_from_json(section(cfg, "u0"), sc.model.dim, "u0");
  sc.W = graphon_from_json(section(cfg, "W"), "W");
  const auto& list = section(cfg, "N_list");
  if (!list.is_array()) throw ConfigError("N_list", "'N_list' must be an array of positive integers");
  for (const auto& n : list) {
    if (!n.is_number_integer() || n.get<long long>() < 1)
      throw ConfigError("N_list", "'N_list' must be an array of positive integers");
    sc.N_list.push_back(n.get<std::size_t>());
  }
  sc.M_ref = count(cfg, "M_ref");
  sc.T = num(cfg, "T");
  sc.dt = num(cfg, "dt");
  sc.store_every = count(cfg, "store_every", 1);
  sc.quadrature_order = static_cast<int>(integer(cfg, "quadrature_order", 4));
  sc.seed = static_cast<std::uint64_t>(integer(cfg, "seed", 0));
  try {
    sc.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("config", e.what());
  }
  return sc;
}

int cmd_converge(Context& ctx) {
  const auto sc = study_config(ctx.config);
  ConvergenceReport rep;
  try {
    rep = run_study(sc);
  } catch (const std::runtime_error& e) {
    emit("error", "solver_abort", {{"message", e.what()}});
    return kSolverAbort;
  }
  std::ostringstream csv;
  csv << "N,e_sup,err_u0,err_K0,residual_integral,envelope,converged\n";
  for (const auto& r : rep.rows)
    csv << r.N << ',' << format_double(r.e_sup) << ',' << format_double(r.err_u0) << ',' << format_double(r.err_K0)
        << ',' << format_double(r.residual_integral) << ',' << format_double(r.envelope) << ','
        << (r.converged ? 1 : 0) << '\n';
  fs::create_directories(ctx.out_dir);
  write_text_file(ctx.out_dir / "convergence.csv", csv.str());
  json summary = {{"slope", rep.fit ? json(rep.fit->slope) : json(nullptr)},
                  {"intercept", rep.fit ? json(rep.fit->intercept) : json(nullptr)},
                  {"r2", rep.fit ? json(rep.fit->r2) : json(nullptr)},
                  {"strictly_decreasing", rep.strictly_decreasing},
                  {"envelope_ok", rep.envelope_ok},
                  {"monitors_ok", rep.monitors_ok},
                  {"config_hash", ctx.config_hash}};
  write_json(ctx.out_dir / "summary.json", summary);
  for (const auto& w : rep.warnings) emit("warning", "study", {{"message", w}});
  info(ctx, "converge_done", summary);
  return kOk;
}

json report_json(const AssumptionReport& rep) {
  json checks = json::array();
  for (const auto& c : rep.checks)
    checks.push_back({{"name", c.name}, {"claimed", c.claimed}, {"worst_ratio", c.worst_ratio}, {"pass", c.pass}});
  return {{"samples", rep.samples}, {"pass", rep.pass}, {"checks", checks}};
}

int cmd_validate(Context& ctx) {
  const auto& cfg = ctx.config;
  reject_unknown_keys(cfg, {"schema_version", "model", "samples", "seed", "N", "quadrature_order"}, "config");
  const auto m = load_model(cfg);
  const std::size_t samples = count(cfg, "samples", 10000);
  if (samples == 0) throw ConfigError("samples", "'samples' must be >= 1");
  const auto seed = static_cast<std::uint64_t>(integer(cfg, "seed", 0));
  const std::size_t N = count(cfg, "N", 8);
  if (N == 0) throw ConfigError("N", "'N' must be >= 1");
  const int q = static_cast<int>(integer(cfg, "quadrature_order", 4));

  const auto cont = check_assumptions(m, samples, seed);
  const auto disc = discrete_assumption_check(m, UnitGrid(N), samples, seed, q);
  json report = {{"model", m.name},
                 {"pass", cont.pass && disc.pass},
                 {"continuum", report_json(cont)},
                 {"discrete", report_json(disc)},
                 {"N", N},
                 {"config_hash", ctx.config_hash}};
  report["discrete"]["N"] = N;
  fs::create_directories(ctx.out_dir);
  write_json(ctx.out_dir / "validation.json", report);
  if (!(cont.pass && disc.pass)) {
    emit("error", "assumption_check_failed", {{"model", m.name}});
    return kChecksFailed;
  }
  return kOk;
}

int load_config(Context& ctx) {
  std::ifstream in(ctx.config_path);
  if (!in) return config_error("config", "cannot read " + ctx.config_path.string());
  try {
    ctx.config = json::parse(in);
  } catch (const json::parse_error& e) {
    return config_error("config", std::string("malformed JSON: ") + e.what());
  }
  if (!ctx.config.is_object()) return config_error("config", "top level must be an object");
  if (!ctx.config.contains("schema_version")) return config_error("schema_version", "missing key 'schema_version'");
  const auto& v = ctx.config.at("schema_version");
  if (!v.is_number_integer() || v.get<long long>() != kSchemaVersion)
    return config_error("schema_version", "unsupported schema_version (expected " + std::to_string(kSchemaVersion) + ")");
  ctx.config_hash = fnv1a_hex(ctx.config.dump());
  return kOk;
}

int resolve_threads(int flag) {
  if (flag > 0) return flag;
  if (const char* env = std::getenv("GRAPHLIM_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<int>(v);
  }
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Adaptive network particle systems and their continuum limit"};
  app.require_subcommand(1);
  Context ctx;
  auto add = [&](const char* name, const char* help) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", ctx.config_path, "JSON config file")->required();
    sub->add_option("--out", ctx.out_dir, "output directory")->required();
    sub->add_option("--threads", ctx.threads, "worker threads (default: GRAPHLIM_THREADS or runtime)");
    sub->add_flag("--verbose", ctx.verbose, "progress events on stderr");
    return sub;
  };
  auto* simulate = add("simulate", "integrate the particle system");
  auto* picard = add("picard", "windowed Picard solve of the continuum equation");
  auto* converge = add("converge", "convergence study against a fine reference");
  auto* validate = add("validate", "sampled assumption checks");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  const int previous = thread_count();
  if (const int k = resolve_threads(ctx.threads); k > 0) set_thread_count(k);
  struct Restore {
    int n;
    ~Restore() { set_thread_count(n); }
  } restore{previous};

  if (const int rc = load_config(ctx); rc != kOk) return rc;
  info(ctx, "start", {{"config", ctx.config_path.string()}, {"threads", thread_count()}, {"config_hash", ctx.config_hash}});
  try {
    if (simulate->parsed()) return cmd_simulate(ctx);
    if (picard->parsed()) return cmd_picard(ctx);
    if (converge->parsed()) return cmd_converge(ctx);
    if (validate->parsed()) return cmd_validate(ctx);
  } catch (const ConfigError& e) {
    return config_error(e.key(), e.what());
  } catch (const json::exception& e) {
    return config_error("config", e.what());
  } catch (const std::invalid_argument& e) {
    return config_error("config", e.what());
  } catch (const std::exception& e) {
    emit("error", "failure", {{"message", e.what()}});
    return kSolverAbort;
  }
  return kConfigError;
}

}  // namespace graphlim::cli
