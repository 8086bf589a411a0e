#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vtb/chargebasis.hpp"
#include "vtb/vtb.hpp"

namespace vtb::cli {

// Circuit source: a factory preset with named parameters, or a raw Hamiltonian.
struct CircuitConfig {
  std::string preset;  // "flux_qubit", "current_mirror" or empty for raw
  std::map<std::string, double> params;
  Vec ng;  // offset charges; empty means zero
  std::optional<CircuitSpec> raw;

  CircuitSpec build() const;
  // Sweep hooks. Flux is only defined for presets.
  void set_flux(double flux_frac);
  void set_ng_component(int index, double value);
};

struct SolverSettings {
  Scheme scheme = Scheme::IP;
  int sigma_max = 2;
  int levels = 4;
  double epsilon = 1e-3;
  double delta_min = 1e-10;
  int n_cut = 6;
  double mem_cap_gb = 2.0;
  int threads = 1;
  bool omit_timing = false;

  TBOptions tb_options() const;
};

enum class MethodKind { TightBinding, ChargeBasis };
struct Method {
  MethodKind kind = MethodKind::TightBinding;
  Scheme scheme = Scheme::IP;
  std::string label() const;
};
Method parse_method(const std::string& text);  // "tb:ip", "tb:pac", "charge"

enum class SweepVariable { FluxFrac, NgComponent, SigmaMax, NCut, Epsilon };

struct SweepPlan {
  SweepVariable variable = SweepVariable::FluxFrac;
  int ng_index = 0;  // for NgComponent
  std::vector<double> values;
  std::vector<Method> methods;
  CircuitConfig circuit;
  SolverSettings solver;

  // Throws Error(ConfigError) on an empty method list, empty values or a
  // non-monotone ordered variable.
  void validate() const;
};

struct ConvergencePlan {
  CircuitConfig circuit;
  SolverSettings solver;
  std::vector<Scheme> schemes;
  std::vector<int> sigma_values;
  std::vector<int> ncut_values;
  // Reference: explicit energies, or an adaptive charge-basis run.
  Vec reference;
  int reference_ncut_start = 4;
  int reference_ncut_max = 12;
  double reference_tol = 1e-6;
};

struct TablePlan {
  CircuitConfig circuit;
  SolverSettings solver;
  std::vector<Scheme> schemes;
  std::vector<int> sigma_values;
  std::vector<int> ncut_values;
};

// Parsed run document: circuit, solver defaults and optional study sections.
struct AppConfig {
  CircuitConfig circuit;
  SolverSettings solver;
  std::optional<SweepPlan> sweep;
  std::optional<ConvergencePlan> converge;
  std::optional<TablePlan> table;
};

AppConfig parse_config_text(const std::string& text);
AppConfig load_config(const std::string& path);

// A CSV table whose cells are stored already formatted, so that writing and
// parsing are exact inverses.
struct Report {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  int failures = 0;

  std::size_t column(const std::string& name) const;
  double number(std::size_t row, const std::string& name) const;
  bool operator==(const Report& o) const { return columns == o.columns && rows == o.rows; }
};

std::string format_number(double x);  // %.9g
std::string format_integer(long long x);
std::string write_csv(const Report& report);
Report parse_csv(const std::string& text);

Report minima_report(const CircuitSpec& spec);
Report spectrum_report(const CircuitSpec& spec, const SolverSettings& solver);
Report oracle_report(const CircuitSpec& spec, const SolverSettings& solver);
Report run_sweep(const SweepPlan& plan);
Report convergence_report(const ConvergencePlan& plan);
Report table_report(const TablePlan& plan);

// Entry point of the command-line tool; returns the process exit code.
int run_cli(int argc, char** argv);

}  // namespace vtb::cli
