#include "drlm/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>

#include "drlm/operators.hpp"

namespace drlm {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

double parse_plain(std::string_view text) {
  text = trim(text);
  double x = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), x);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
    throw ConfigError("not a number: '" + std::string(text) + "'");
  return x;
}

long parse_integer(std::string_view text) {
  text = trim(text);
  long x = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), x);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
    throw ConfigError("not an integer: '" + std::string(text) + "'");
  return x;
}

bool parse_bool(std::string_view text) {
  const std::string t = lower(trim(text));
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw ConfigError("not a boolean: '" + t + "'");
}

std::FILE* open_for_write(const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  }
  std::FILE* f = std::fopen(path.string().c_str(), "wb");
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  return f;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::FILE* f = open_for_write(path);
  const std::size_t n = std::fwrite(text.data(), 1, text.size(), f);
  const bool ok = n == text.size() && std::fclose(f) == 0;
  if (!ok) throw IoError("write failed: " + path.string());
}

std::string optional_cell(const std::optional<double>& x) { return x ? format_double(*x) : std::string(); }

}  // namespace

double parse_number(std::string_view text) {
  text = trim(text);
  const auto slash = text.find('/');
  if (slash == std::string_view::npos) return parse_plain(text);
  const double num = parse_plain(text.substr(0, slash));
  const double den = parse_plain(text.substr(slash + 1));
  if (den == 0.0) throw ConfigError("zero denominator in '" + std::string(text) + "'");
  return num / den;
}

std::vector<double> parse_number_list(std::string_view text) {
  std::vector<double> out;
  text = trim(text);
  if (text.empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto comma = text.find(',', start);
    out.push_back(parse_number(text.substr(start, comma == std::string_view::npos ? text.npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string_view to_string(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::vortex: return "vortex";
    case ProblemKind::cavity: return "cavity";
    case ProblemKind::custom: return "custom";
  }
  return "?";
}

ProblemKind parse_problem_kind(std::string_view name) {
  const std::string n = lower(trim(name));
  if (n == "vortex") return ProblemKind::vortex;
  if (n == "cavity") return ProblemKind::cavity;
  if (n == "custom") return ProblemKind::custom;
  throw ConfigError("unknown problem '" + n + "' (expected vortex, cavity or custom)");
}

double RunConfig::viscosity() const {
  if (nu) return *nu;
  if (Re) return 1.0 / *Re;
  throw ConfigError("neither nu nor Re is set", 0, "nu");
}

void RunConfig::validate() const {
  auto fail = [](const std::string& field, const std::string& msg) { throw ConfigError(field + ": " + msg, 0, field); };
  if (nu && Re) fail("nu", "set either nu or Re, not both");
  if (!nu && !Re) fail("nu", "one of nu or Re is required");
  if (nu && !(*nu > 0.0 && std::isfinite(*nu))) fail("nu", "must be positive");
  if (Re && !(*Re > 0.0 && std::isfinite(*Re))) fail("Re", "must be positive");
  if (nx < 2) fail("nx", "must be at least 2");
  if (ny != 0 && ny < 2) fail("ny", "must be at least 2");
  if (!(tau > 0.0 && std::isfinite(tau))) fail("tau", "must be positive");
  if (!(theta > 0.0 && std::isfinite(theta))) fail("theta", "must be positive");
  if (!(T > 0.0 && std::isfinite(T))) fail("T", "must be positive");
  if (!(invariant_rel_tol > 0.0)) fail("invariant_rel_tol", "must be positive");
  if (!(solver.rel_tol > 0.0)) fail("rel_tol", "must be positive");
  if (!(solver.abs_tol >= 0.0)) fail("abs_tol", "must be non-negative");
  if (solver.max_iter < 0) fail("max_iter", "must be non-negative");
  if (diagnostics_stride < 1) fail("diagnostics_stride", "must be at least 1");
  if (!std::isfinite(lid_velocity)) fail("lid_velocity", "must be finite");
  for (double s : snapshot_times)
    if (!(s >= 0.0) || s > T) fail("snapshot_times", "entries must lie in [0, T]");
  try {
    steps_to_reach(T, tau);
  } catch (const ContractViolation&) {
    fail("T", "must be an integer multiple of tau");
  }
  if (problem == ProblemKind::cavity && ny != 0 && ny != nx) fail("ny", "the cavity is square");
}

void apply_setting(RunConfig& cfg, std::string_view section, std::string_view key, std::string_view value,
                   int line) {
  const std::string s = lower(trim(section));
  const std::string k(trim(key));
  const std::string kl = lower(k);
  try {
    if (s == "grid") {
      if (kl == "nx") return void(cfg.nx = static_cast<int>(parse_integer(value)));
      if (kl == "ny") return void(cfg.ny = static_cast<int>(parse_integer(value)));
    } else if (s == "scheme") {
      if (kl == "kind" || kl == "scheme") return void(cfg.scheme = parse_scheme_kind(trim(value)));
      if (kl == "tau") return void(cfg.tau = parse_number(value));
      if (kl == "theta") return void(cfg.theta = parse_number(value));
      if (kl == "nu") return void(cfg.nu = parse_number(value));
      if (kl == "re") return void(cfg.Re = parse_number(value));
      if (kl == "convection") return void(cfg.convection = parse_bool(value));
      if (kl == "assert_invariants") return void(cfg.assert_invariants = parse_bool(value));
      if (kl == "invariant_rel_tol") return void(cfg.invariant_rel_tol = parse_number(value));
    } else if (s == "problem") {
      if (kl == "name" || kl == "problem") return void(cfg.problem = parse_problem_kind(value));
      if (kl == "t") return void(cfg.T = parse_number(value));
      if (kl == "lid_velocity") return void(cfg.lid_velocity = parse_number(value));
    } else if (s == "solver") {
      if (kl == "rel_tol") return void(cfg.solver.rel_tol = parse_number(value));
      if (kl == "abs_tol") return void(cfg.solver.abs_tol = parse_number(value));
      if (kl == "max_iter") return void(cfg.solver.max_iter = static_cast<int>(parse_integer(value)));
      if (kl == "pressure_preconditioner")
        return void(cfg.solver.pressure_preconditioner = parse_pressure_preconditioner(trim(value)));
    } else if (s == "output") {
      if (kl == "dir") return void(cfg.output_dir = std::string(trim(value)));
      if (kl == "snapshot_times") return void(cfg.snapshot_times = parse_number_list(value));
      if (kl == "diagnostics_stride") return void(cfg.diagnostics_stride = static_cast<int>(parse_integer(value)));
    } else {
      throw ConfigError("unknown section [" + s + "]", line, s);
    }
  } catch (const ConfigError& e) {
    if (e.line() == line && !e.field().empty()) throw;
    throw ConfigError(std::string(e.what()), line, k);
  } catch (const std::exception& e) {
    throw ConfigError(std::string(e.what()), line, k);
  }
  throw ConfigError("unknown key '" + k + "' in section [" + s + "]", line, k);
}

RunConfig parse_run_config(std::istream& in, RunConfig base) {
  std::string section;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string_view text = raw;
    const auto comment = text.find_first_of("#;");
    if (comment != std::string_view::npos) text = text.substr(0, comment);
    text = trim(text);
    if (text.empty()) continue;
    if (text.front() == '[') {
      if (text.back() != ']') throw ConfigError("unterminated section header", line);
      section = std::string(trim(text.substr(1, text.size() - 2)));
      continue;
    }
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) throw ConfigError("expected 'key = value'", line);
    if (section.empty()) throw ConfigError("setting outside of any section", line);
    const auto key = trim(text.substr(0, eq));
    if (key.empty()) throw ConfigError("empty key", line);
    apply_setting(base, section, key, text.substr(eq + 1), line);
  }
  return base;
}

RunConfig load_run_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  return parse_run_config(in, std::move(base));
}

std::filesystem::path default_output_root() {
  const char* env = std::getenv("DRLM_OUTPUT_ROOT");
  if (env && *env) return env;
  return "out";
}

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// ---------------------------------------------------------------------------

std::string diagnostics_row(const StepDiagnostics& d) {
  const auto residual = [&](const char* name) {
    auto it = d.identity_residuals.find(name);
    return it == d.identity_residuals.end() ? std::nan("") : it->second;
  };
  std::string row = std::to_string(d.step);
  for (double x : {d.t, d.Q, d.K, d.E_mod, d.quad.A, d.quad.B, d.quad.C, d.quad.C_crosscheck, d.div_inf,
                   residual("proj1"), residual("energy")}) {
    row += ',';
    row += format_double(x);
  }
  row += ',';
  row += std::to_string(d.cg_iters_total());
  return row;
}

DiagnosticsWriter::DiagnosticsWriter(const std::filesystem::path& path) : path_(path), file_(open_for_write(path)) {
  std::fprintf(file_, "%s\n", std::string(header).c_str());
}

DiagnosticsWriter::~DiagnosticsWriter() {
  if (file_) std::fclose(file_);
}

void DiagnosticsWriter::write(const StepDiagnostics& d) {
  const std::string row = diagnostics_row(d);
  if (std::fprintf(file_, "%s\n", row.c_str()) < 0) throw IoError("write failed: " + path_.string());
  ++rows_;
}

void DiagnosticsWriter::flush() {
  if (std::fflush(file_) != 0) throw IoError("flush failed: " + path_.string());
}

std::string rate_table_csv(const RateTable& table) {
  std::string out = "tau,steps,e_u,rate_u,e_Q,rate_Q,e_p,rate_p,status\n";
  for (const RateRow& r : table.rows) {
    out += format_double(r.tau) + ',' + std::to_string(r.steps) + ',';
    if (r.failed) {
      out += ",,,,,,failed\n";
      continue;
    }
    out += format_double(r.errors.e_u) + ',' + optional_cell(r.rate_u) + ',' + format_double(r.errors.e_Q) + ',' +
           optional_cell(r.rate_Q) + ',' + format_double(r.errors.e_p) + ',' + optional_cell(r.rate_p) + ",ok\n";
  }
  return out;
}

void write_rate_table(const RateTable& table, const std::filesystem::path& path) {
  write_text(path, rate_table_csv(table));
}

void write_field_snapshot(const State& state, const std::filesystem::path& path) {
  const Grid& g = state.grid();
  std::string out;
  out += "# grid nx=" + std::to_string(g.nx()) + " ny=" + std::to_string(g.ny()) + " x0=" + format_double(g.x0()) +
         " x1=" + format_double(g.x1()) + " y0=" + format_double(g.y0()) + " y1=" + format_double(g.y1()) + "\n";
  out += "# t=" + format_double(state.t) + "\n";
  out += "# Q=" + format_double(state.Q) + "\n";
  out += "x,y,u,v,p,speed\n";
  for (int j = 0; j < g.ny(); ++j) {
    for (int i = 0; i < g.nx(); ++i) {
      const double u = 0.5 * (state.u.u(i, j) + state.u.u(i + 1, j));
      const double v = 0.5 * (state.u.v(i, j) + state.u.v(i, j + 1));
      out += format_double(g.center_x(i)) + ',' + format_double(g.center_y(j)) + ',' + format_double(u) + ',' +
             format_double(v) + ',' + format_double(state.p(i, j)) + ',' + format_double(std::hypot(u, v)) + '\n';
    }
  }
  write_text(path, out);
}

ReferenceTable parse_reference_table(std::istream& in, const std::string& origin) {
  ReferenceTable table;
  std::string raw;
  int line = 0;
  bool header_seen = false;
  auto fail = [&](const std::string& msg) {
    throw IoError(origin + ":" + std::to_string(line) + ": " + msg);
  };
  while (std::getline(in, raw)) {
    ++line;
    std::string_view text = trim(raw);
    if (text.empty()) continue;
    if (text.front() == '#') {
      text.remove_prefix(1);
      text = trim(text);
      if (text.starts_with("source:")) table.source = std::string(trim(text.substr(7)));
      continue;
    }
    if (!header_seen) {
      if (lower(text) != "coord,value") fail("expected header 'coord,value'");
      header_seen = true;
      continue;
    }
    const auto comma = text.find(',');
    if (comma == std::string_view::npos) fail("expected 'coord,value'");
    double c = 0.0, v = 0.0;
    try {
      c = parse_plain(text.substr(0, comma));
      v = parse_plain(text.substr(comma + 1));
    } catch (const ConfigError& e) {
      fail(e.what());
    }
    if (!std::isfinite(c) || !std::isfinite(v)) fail("non-finite entry");
    if (c < 0.0 || c > 1.0) fail("coordinate outside [0, 1]");
    if (!table.coord.empty() && !(c > table.coord.back())) fail("coordinates must be strictly increasing");
    table.coord.push_back(c);
    table.value.push_back(v);
  }
  if (table.source.empty()) throw IoError(origin + ": missing '# source:' line");
  if (!header_seen) throw IoError(origin + ": missing 'coord,value' header");
  if (table.coord.empty()) throw IoError(origin + ": no data rows");
  return table;
}

ReferenceTable load_reference_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open reference table " + path.string());
  return parse_reference_table(in, path.string());
}

void write_centerline(const CenterlineProfile& profile, const std::filesystem::path& path) {
  std::string out = "# source: " + (profile.source.empty() ? std::string("computed") : profile.source) + "\n";
  out += "# component: " + profile.component + "\n";
  out += "coord,value\n";
  for (std::size_t k = 0; k < profile.coord.size(); ++k)
    out += format_double(profile.coord[k]) + ',' + format_double(profile.value[k]) + '\n';
  write_text(path, out);
}

CenterlineProfile compare_centerline(const VelocityField& vel, const BoundaryTrace& trace,
                                     const ReferenceTable& ref, std::string_view component) {
  CenterlineProfile prof;
  if (component == "u")
    prof = centerline_u(vel, trace, ref.coord);
  else if (component == "v")
    prof = centerline_v(vel, trace, ref.coord);
  else
    throw ContractViolation("compare_centerline: component must be 'u' or 'v'");
  prof.reference = ref.value;
  prof.source = ref.source;
  return prof;
}

// ---------------------------------------------------------------------------

RunOutcome execute_run(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  const double nu = cfg.viscosity();
  const Grid grid(cfg.nx, cfg.cells_y());

  SchemeConfig sc;
  sc.tau = cfg.tau;
  sc.theta = cfg.theta;
  sc.nu = nu;
  sc.kind = cfg.scheme;
  sc.convection = cfg.convection;
  sc.assert_invariants = cfg.assert_invariants;
  sc.invariant_rel_tol = cfg.invariant_rel_tol;
  sc.solver = cfg.solver;
  sc.validate();

  std::optional<ExactSolution> exact;
  FlowInputs inputs;
  State initial = State::zero(grid, 0.0);
  switch (cfg.problem) {
    case ProblemKind::vortex:
      exact = lattice_vortex(nu);
      inputs = exact->inputs(grid);
      initial = vortex_initial_state(grid, *exact, cfg.solver);
      break;
    case ProblemKind::cavity: {
      const BoundaryTrace lid = cavity_trace(grid, cfg.lid_velocity);
      inputs.boundary = [lid](double) { return lid; };
      initial.u.impose_normal(lid);
      break;
    }
    case ProblemKind::custom: initial.u = box_vortex_velocity(grid); break;
  }

  std::filesystem::path dir = cfg.output_dir.empty() ? default_output_root() / "run" : cfg.output_dir;
  RunOutcome outcome;
  outcome.diagnostics_path = dir / "diagnostics.csv";
  DiagnosticsWriter writer(outcome.diagnostics_path);

  std::vector<double> pending = cfg.snapshot_times;
  std::sort(pending.begin(), pending.end());
  std::size_t next_snapshot = 0;
  auto snapshots_up_to = [&](const State& s) {
    while (next_snapshot < pending.size() && pending[next_snapshot] <= s.t + 0.5 * cfg.tau) {
      write_field_snapshot(s, dir / ("snapshot_t" + format_double(pending[next_snapshot]) + ".csv"));
      ++next_snapshot;
    }
  };

  const long steps = steps_to_reach(cfg.T, cfg.tau);
  Integrator integ(sc, inputs, initial);
  snapshots_up_to(integ.state());
  try {
    for (long n = 0; n < steps; ++n) {
      const StepResult& res = integ.advance();
      if (res.diagnostics.step % cfg.diagnostics_stride == 0 || n + 1 == steps) writer.write(res.diagnostics);
      snapshots_up_to(res.state);
    }
  } catch (const StepFailure& failure) {
    writer.write(failure.diagnostics());
    writer.flush();
    outcome.steps = integ.steps_taken();
    outcome.message = failure.what();
    log << "run failed at step " << failure.diagnostics().step << ": " << failure.what() << '\n';
    return outcome;
  }
  writer.flush();
  outcome.ok = true;
  outcome.steps = integ.steps_taken();
  if (exact) {
    State s = integ.state();
    s.t = cfg.T;
    outcome.errors = compute_errors(s, *exact);
    log << "errors at T=" << format_double(cfg.T) << ": e_u=" << format_double(outcome.errors->e_u)
        << " e_p=" << format_double(outcome.errors->e_p) << " e_Q=" << format_double(outcome.errors->e_Q) << '\n';
  }
  outcome.message = "completed " + std::to_string(outcome.steps) + " steps";
  log << outcome.message << "; diagnostics in " << outcome.diagnostics_path.string() << '\n';
  return outcome;
}

}  // namespace drlm
