#pragma once

/// \file
/// Run configuration, output writers and reference-data ingestion.

#include <cstdio>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "drlm/problems.hpp"
#include "drlm/scheme.hpp"

namespace drlm {

/// Malformed configuration or out-of-range value. `line` is 0 when the
/// problem is not tied to a line of a file (flag overrides, validation).
class ConfigError : public std::runtime_error {
public:
  ConfigError(const std::string& what, int line = 0, std::string field = {})
      : std::runtime_error(what), line_(line), field_(std::move(field)) {}
  int line() const { return line_; }
  const std::string& field() const { return field_; }

private:
  int line_;
  std::string field_;
};

class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Parses a decimal number or an exact ratio "a/b".
double parse_number(std::string_view text);
/// Comma-separated list of parse_number values.
std::vector<double> parse_number_list(std::string_view text);

enum class ProblemKind { vortex, cavity, custom };
std::string_view to_string(ProblemKind kind);
ProblemKind parse_problem_kind(std::string_view name);

struct RunConfig {
  SchemeKind scheme = SchemeKind::pdrlm1;
  ProblemKind problem = ProblemKind::vortex;
  int nx = 32;
  int ny = 0;  ///< 0 means ny = nx
  double tau = 0.0;
  double theta = 1.0;
  std::optional<double> nu;
  std::optional<double> Re;
  double T = 0.0;
  bool convection = true;
  bool assert_invariants = false;
  double invariant_rel_tol = 1e-8;
  SolverConfig solver{};
  std::filesystem::path output_dir;
  std::vector<double> snapshot_times;
  int diagnostics_stride = 1;
  double lid_velocity = 1.0;

  double viscosity() const;
  int cells_y() const { return ny > 0 ? ny : nx; }
  /// Throws ConfigError naming the offending field.
  void validate() const;
};

/// Applies `key = value` in `section` to cfg. Unknown keys are errors.
void apply_setting(RunConfig& cfg, std::string_view section, std::string_view key, std::string_view value,
                   int line = 0);

/// INI-style file with sections [grid] [scheme] [problem] [solver] [output].
/// '#' and ';' start comments.
RunConfig parse_run_config(std::istream& in, RunConfig base = {});
RunConfig load_run_config(const std::filesystem::path& path, RunConfig base = {});

/// $DRLM_OUTPUT_ROOT if set and non-empty, else "out".
std::filesystem::path default_output_root();

/// %.17g, the format every writer uses.
std::string format_double(double x);

/// Streaming writer for per-step diagnostics.
class DiagnosticsWriter {
public:
  static constexpr std::string_view header =
      "step,t,Q,K,E_mod,A,B,C,C_crosscheck,div_inf,res_proj1,res_energy,cg_iters_total";

  explicit DiagnosticsWriter(const std::filesystem::path& path);
  ~DiagnosticsWriter();
  DiagnosticsWriter(const DiagnosticsWriter&) = delete;
  DiagnosticsWriter& operator=(const DiagnosticsWriter&) = delete;

  void write(const StepDiagnostics& d);
  void flush();
  const std::filesystem::path& path() const { return path_; }
  long rows() const { return rows_; }

private:
  std::filesystem::path path_;
  std::FILE* file_ = nullptr;
  long rows_ = 0;
};

std::string diagnostics_row(const StepDiagnostics& d);

/// tau,steps,e_u,rate_u,e_Q,rate_Q,e_p,rate_p,status; missing rates are empty.
void write_rate_table(const RateTable& table, const std::filesystem::path& path);
std::string rate_table_csv(const RateTable& table);

/// '#'-prefixed metadata lines (grid, t, Q), then a header and one row per
/// cell: x,y,u,v,p,speed with the velocity averaged to the cell center.
void write_field_snapshot(const State& state, const std::filesystem::path& path);

struct ReferenceTable {
  std::string source;
  std::vector<double> coord;
  std::vector<double> value;
};

/// `# source: ...` line, `coord,value` header, data rows. Coordinates must be
/// strictly increasing in [0, 1] and values finite.
ReferenceTable load_reference_table(const std::filesystem::path& path);
ReferenceTable parse_reference_table(std::istream& in, const std::string& origin = "<stream>");

/// Writes a profile in the reference-table format (readable by load_reference_table).
void write_centerline(const CenterlineProfile& profile, const std::filesystem::path& path);

/// Profile sampled at the reference stations, with the reference attached.
CenterlineProfile compare_centerline(const VelocityField& vel, const BoundaryTrace& trace,
                                     const ReferenceTable& ref, std::string_view component);

struct RunOutcome {
  bool ok = false;
  long steps = 0;
  std::string message;
  std::optional<ErrorReport> errors;  ///< vortex problem only
  std::filesystem::path diagnostics_path;
};

/// Executes a validated configuration: writes diagnostics.csv and any
/// requested snapshots into cfg.output_dir. The vortex problem uses the exact
/// solution for initial and boundary data; the cavity drives the lid at
/// y = 1; the custom problem is the no-slip box with the single-vortex stream
/// function sin^2(pi x) sin^2(pi y) and p = 0.
RunOutcome execute_run(const RunConfig& cfg, std::ostream& log);

}  // namespace drlm
