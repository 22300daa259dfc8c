// Command-line front end: run, converge, cavity, selftest.
//
// Exit codes: 0 success, 1 failed run or check, 2 usage or configuration error.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "drlm/io.hpp"
#include "drlm/oracle.hpp"
#include "drlm/problems.hpp"
#include "drlm/selfcheck.hpp"

namespace {

using namespace drlm;
namespace fs = std::filesystem;

constexpr int exit_ok = 0;
constexpr int exit_failed = 1;
constexpr int exit_usage = 2;

struct RunFlags {
  std::string config;
  std::optional<std::string> scheme, problem, tau, theta, nu, Re, T, rel_tol, abs_tol, snapshots, out, precond;
  std::optional<int> nx, ny, max_iter, stride;
  bool assert_invariants = false;
  bool no_convection = false;
};

RunConfig build_run_config(const RunFlags& f) {
  RunConfig cfg = f.config.empty() ? RunConfig{} : load_run_config(f.config);
  auto set = [&](const char* section, const char* key, const std::optional<std::string>& v) {
    if (v) apply_setting(cfg, section, key, *v);
  };
  set("scheme", "kind", f.scheme);
  set("problem", "name", f.problem);
  set("scheme", "tau", f.tau);
  set("scheme", "theta", f.theta);
  set("problem", "T", f.T);
  set("solver", "rel_tol", f.rel_tol);
  set("solver", "abs_tol", f.abs_tol);
  set("solver", "pressure_preconditioner", f.precond);
  set("output", "snapshot_times", f.snapshots);
  set("output", "dir", f.out);
  if (f.nu) {
    cfg.Re.reset();
    set("scheme", "nu", f.nu);
  }
  if (f.Re) {
    cfg.nu.reset();
    set("scheme", "Re", f.Re);
  }
  if (f.nx) cfg.nx = *f.nx;
  if (f.ny) cfg.ny = *f.ny;
  if (f.max_iter) cfg.solver.max_iter = *f.max_iter;
  if (f.stride) cfg.diagnostics_stride = *f.stride;
  if (f.assert_invariants) cfg.assert_invariants = true;
  if (f.no_convection) cfg.convection = false;
  if (!cfg.nu && !cfg.Re) cfg.nu = cfg.problem == ProblemKind::cavity ? 1e-3 : 0.1;
  if (cfg.output_dir.empty()) cfg.output_dir = default_output_root() / std::string(to_string(cfg.problem));
  cfg.validate();
  return cfg;
}

int cmd_run(const RunFlags& flags) {
  const RunConfig cfg = build_run_config(flags);
  std::cout << "run: problem=" << to_string(cfg.problem) << " scheme=" << to_string(cfg.scheme) << " nx=" << cfg.nx
            << " tau=" << format_double(cfg.tau) << " T=" << format_double(cfg.T) << '\n';
  const RunOutcome outcome = execute_run(cfg, std::cout);
  return outcome.ok ? exit_ok : exit_failed;
}

struct ConvergeFlags {
  std::string nu = "0.1", theta = "1", taus = "1/32,1/64,1/128,1/256", T = "1", scheme = "pdrlm1";
  int nx = 128;
  std::string out;
  bool serial = false;
  bool assert_invariants = false;
};

void print_rate_table(const RateTable& table) {
  auto rate = [](const std::optional<double>& r) {
    char buf[16];
    if (!r) return std::string("     -");
    std::snprintf(buf, sizeof buf, "%6.3f", *r);
    return std::string(buf);
  };
  std::printf("%-12s %-12s %-6s %-12s %-6s %-12s %-6s\n", "tau", "e_u", "rate", "e_Q", "rate", "e_p", "rate");
  for (const RateRow& r : table.rows) {
    if (r.failed) {
      std::printf("%-12.6g failed: %s\n", r.tau, r.failure.c_str());
      continue;
    }
    std::printf("%-12.6g %-12.4e %s %-12.4e %s %-12.4e %s\n", r.tau, r.errors.e_u, rate(r.rate_u).c_str(),
                r.errors.e_Q, rate(r.rate_Q).c_str(), r.errors.e_p, rate(r.rate_p).c_str());
  }
}

int cmd_converge(const ConvergeFlags& f) {
  ConvergenceStudyConfig cfg;
  cfg.nu = parse_number(f.nu);
  cfg.theta = parse_number(f.theta);
  cfg.T = parse_number(f.T);
  cfg.taus = parse_number_list(f.taus);
  cfg.nx = f.nx;
  cfg.scheme = parse_scheme_kind(f.scheme);
  cfg.parallel = !f.serial;
  cfg.assert_invariants = f.assert_invariants;
  if (!(cfg.nu > 0.0) || !(cfg.theta > 0.0) || !(cfg.T > 0.0) || cfg.nx < 2 || cfg.taus.empty())
    throw ConfigError("converge: nu, theta, T must be positive, nx >= 2, and at least one tau is required");
  for (double tau : cfg.taus) {
    if (!(tau > 0.0)) throw ConfigError("converge: taus must be positive", 0, "taus");
    steps_to_reach(cfg.T, tau);
  }
  const fs::path out = f.out.empty() ? default_output_root() / "converge" / "rates.csv" : fs::path(f.out);
  const RateTable table = run_convergence_study(cfg);
  write_rate_table(table, out);
  print_rate_table(table);
  std::cout << "rate table written to " << out.string() << '\n';
  for (const RateRow& r : table.rows)
    if (r.failed) return exit_failed;
  return exit_ok;
}

struct CavityFlags {
  std::string Re = "1000", theta = "100", tau = "0.002", T = "30", scheme = "pdrlm1";
  int nx = 128;
  std::string out, snapshots, reference_u, reference_v;
  std::string preconditioner = "mic0";
  int stride = 1;
  double tolerance = 0.05;
};

int cmd_cavity(const CavityFlags& f) {
  CavityConfig cfg;
  cfg.Re = parse_number(f.Re);
  cfg.theta = parse_number(f.theta);
  cfg.tau = parse_number(f.tau);
  cfg.T = parse_number(f.T);
  cfg.nx = f.nx;
  cfg.scheme = parse_scheme_kind(f.scheme);
  cfg.snapshot_times = parse_number_list(f.snapshots);
  cfg.solver.pressure_preconditioner = parse_pressure_preconditioner(f.preconditioner);
  if (!(cfg.Re > 0.0) || !(cfg.theta > 0.0) || !(cfg.tau > 0.0) || cfg.nx < 2 || f.stride < 1)
    throw ConfigError("cavity: Re, theta, tau must be positive, nx >= 2, stride >= 1");
  steps_to_reach(cfg.T, cfg.tau);
  std::optional<ReferenceTable> ref_u, ref_v;
  if (!f.reference_u.empty()) ref_u = load_reference_table(f.reference_u);
  if (!f.reference_v.empty()) ref_v = load_reference_table(f.reference_v);

  const fs::path dir = f.out.empty() ? default_output_root() / "cavity" : fs::path(f.out);
  DiagnosticsWriter writer(dir / "diagnostics.csv");
  cfg.on_step = [&](const StepDiagnostics& d) {
    if (d.step % f.stride == 0) writer.write(d);
  };
  cfg.on_snapshot = [&](const State& s) {
    write_field_snapshot(s, dir / ("snapshot_t" + format_double(s.t) + ".csv"));
  };

  std::cout << "cavity: Re=" << format_double(cfg.Re) << " theta=" << format_double(cfg.theta) << " nx=" << cfg.nx
            << " tau=" << format_double(cfg.tau) << " T=" << format_double(cfg.T) << '\n';
  std::optional<CavityResult> result;
  try {
    result = run_cavity(cfg);
  } catch (const StepFailure& failure) {
    writer.write(failure.diagnostics());
    writer.flush();
    std::cerr << "cavity run failed at step " << failure.diagnostics().step << ": " << failure.what() << '\n';
    return exit_failed;
  }
  writer.flush();
  CavityResult& res = *result;
  write_field_snapshot(res.final_state, dir / "final_state.csv");
  res.u_centerline.source = "computed";
  res.v_centerline.source = "computed";
  write_centerline(res.u_centerline, dir / "centerline_u.csv");
  write_centerline(res.v_centerline, dir / "centerline_v.csv");

  std::cout << "final Q=" << format_double(res.final_state.Q) << '\n';
  if (res.plateau_time)
    std::cout << "kinetic-energy plateau reached at t=" << format_double(*res.plateau_time) << '\n';
  else
    std::cout << "kinetic-energy plateau not reached (last relative rate " << format_double(res.final_energy_rate)
              << ")\n";

  int status = exit_ok;
  const BoundaryTrace lid = cavity_trace(res.final_state.grid(), cfg.lid_velocity);
  auto compare = [&](const std::optional<ReferenceTable>& ref, const char* component) {
    if (!ref) return;
    const CenterlineProfile p = compare_centerline(res.final_state.u, lid, *ref, component);
    const double dev = p.max_abs_deviation();
    std::cout << component << " centerline: max deviation " << format_double(dev) << " from " << ref->source << '\n';
    if (dev > f.tolerance) status = exit_failed;
  };
  compare(ref_u, "u");
  compare(ref_v, "v");
  return status;
}

int cmd_selftest() {
  const SelfCheckReport rep = run_operator_identities();
  for (const IdentityCheck& c : rep.checks)
    if (!c.passed())
      std::cout << "FAILED " << c.name << ": residual " << format_double(c.residual) << " > "
                << format_double(c.tolerance) << '\n';
  std::cout << "operator identities: " << rep.passed() << " passed, " << rep.failed() << " failed\n";

  int oracle_pass = 0, oracle_fail = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const OracleComparison cmp = compare_with_dense_oracle(4, seed);
    if (cmp.worst() <= 1e-12) {
      ++oracle_pass;
    } else {
      ++oracle_fail;
      std::cout << "FAILED dense oracle seed " << seed << ": du=" << format_double(cmp.du)
                << " dp=" << format_double(cmp.dp) << " dQ=" << format_double(cmp.dQ) << '\n';
    }
  }
  std::cout << "dense-oracle comparisons: " << oracle_pass << " passed, " << oracle_fail << " failed\n";
  return rep.failed() == 0 && oracle_fail == 0 ? exit_ok : exit_failed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pressure-correction Navier-Stokes solver with a dynamically regularized Lagrange multiplier"};
  app.require_subcommand(1);

  RunFlags rf;
  auto* run = app.add_subcommand("run", "Run one configuration (config file plus flag overrides)");
  run->add_option("-c,--config", rf.config, "INI configuration file")->check(CLI::ExistingFile);
  run->add_option("--scheme", rf.scheme, "pdrlm1, pdrlm2 or baseline_pc");
  run->add_option("--problem", rf.problem, "vortex, cavity or custom");
  run->add_option("--nx", rf.nx);
  run->add_option("--ny", rf.ny);
  run->add_option("--tau", rf.tau, "time step; accepts ratios such as 1/128");
  run->add_option("--theta", rf.theta);
  run->add_option("--nu", rf.nu);
  run->add_option("--Re", rf.Re);
  run->add_option("--T", rf.T, "final time");
  run->add_option("--rel-tol", rf.rel_tol);
  run->add_option("--abs-tol", rf.abs_tol);
  run->add_option("--max-iter", rf.max_iter);
  run->add_option("--pressure-preconditioner", rf.precond, "jacobi or mic0");
  run->add_option("--snapshots", rf.snapshots, "comma-separated snapshot times");
  run->add_option("--stride", rf.stride, "write every k-th diagnostics row");
  run->add_option("-o,--out", rf.out, "output directory");
  run->add_flag("--assert-invariants", rf.assert_invariants);
  run->add_flag("--no-convection", rf.no_convection);

  ConvergeFlags cf;
  auto* conv = app.add_subcommand("converge", "Temporal convergence study on the lattice vortex");
  conv->add_option("--nu", cf.nu)->capture_default_str();
  conv->add_option("--theta", cf.theta)->capture_default_str();
  conv->add_option("--nx", cf.nx)->capture_default_str();
  conv->add_option("--taus", cf.taus, "comma-separated, halving")->capture_default_str();
  conv->add_option("--T", cf.T)->capture_default_str();
  conv->add_option("--scheme", cf.scheme)->capture_default_str();
  conv->add_option("-o,--out", cf.out, "rate table CSV path");
  conv->add_flag("--serial", cf.serial, "run the rows one after another");
  conv->add_flag("--assert-invariants", cf.assert_invariants);

  CavityFlags kf;
  auto* cav = app.add_subcommand("cavity", "Lid-driven cavity");
  cav->add_option("--Re", kf.Re)->capture_default_str();
  cav->add_option("--theta", kf.theta)->capture_default_str();
  cav->add_option("--nx", kf.nx)->capture_default_str();
  cav->add_option("--tau", kf.tau)->capture_default_str();
  cav->add_option("--T", kf.T)->capture_default_str();
  cav->add_option("--scheme", kf.scheme)->capture_default_str();
  cav->add_option("--snapshots", kf.snapshots, "comma-separated snapshot times");
  cav->add_option("--stride", kf.stride, "write every k-th diagnostics row")->capture_default_str();
  cav->add_option("--reference-u", kf.reference_u, "reference CSV for u along x = 0.5")->check(CLI::ExistingFile);
  cav->add_option("--reference-v", kf.reference_v, "reference CSV for v along y = 0.5")->check(CLI::ExistingFile);
  cav->add_option("--tolerance", kf.tolerance, "allowed max deviation from the references")->capture_default_str();
  cav->add_option("--pressure-preconditioner", kf.preconditioner, "jacobi or mic0")->capture_default_str();
  cav->add_option("-o,--out", kf.out, "output directory");

  app.add_subcommand("selftest", "Operator identities and dense-oracle comparison");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? exit_ok : exit_usage;
  }

  try {
    if (run->parsed()) return cmd_run(rf);
    if (conv->parsed()) return cmd_converge(cf);
    if (cav->parsed()) return cmd_cavity(kf);
    return cmd_selftest();
  } catch (const ConfigError& e) {
    std::cerr << "configuration error";
    if (e.line() > 0) std::cerr << " (line " << e.line() << ")";
    if (!e.field().empty()) std::cerr << " [" << e.field() << "]";
    std::cerr << ": " << e.what() << '\n';
    return exit_usage;
  } catch (const ContractViolation& e) {
    std::cerr << "invalid arguments: " << e.what() << '\n';
    return exit_usage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid arguments: " << e.what() << '\n';
    return exit_usage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_failed;
  }
}
