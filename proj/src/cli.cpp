#include "vtb/cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

namespace vtb::cli {

using nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string& what) { throw Error(ErrorCode::ConfigError, what); }

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) config_error(where + " must be an object");
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key())) config_error("unknown key '" + it.key() + "' in " + where);
}

double get_number(const json& j, const std::string& where) {
  if (!j.is_number()) config_error(where + " must be a number");
  return j.get<double>();
}

int get_int(const json& j, const std::string& where) {
  if (!j.is_number_integer()) config_error(where + " must be an integer");
  return j.get<int>();
}

Vec get_vec(const json& j, const std::string& where) {
  if (!j.is_array()) config_error(where + " must be a list");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = get_number(j[i], where);
  return v;
}

std::vector<int> get_ints(const json& j, const std::string& where) {
  if (!j.is_array()) config_error(where + " must be a list");
  std::vector<int> out;
  for (const auto& e : j) out.push_back(get_int(e, where));
  return out;
}

std::vector<Scheme> get_schemes(const json& j, const std::string& where) {
  if (!j.is_array()) config_error(where + " must be a list");
  std::vector<Scheme> out;
  for (const auto& e : j) {
    if (!e.is_string()) config_error(where + " entries must be strings");
    try {
      out.push_back(parse_scheme(e.get<std::string>()));
    } catch (const Error& err) {
      config_error(err.what());
    }
  }
  return out;
}

const std::map<std::string, std::set<std::string>>& preset_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"flux_qubit", {"EJ", "ECJ", "ECg", "alpha", "flux_frac"}},
      {"current_mirror", {"n_big", "ECB", "ECJ", "ECg", "EJ", "flux_frac"}},
  };
  return keys;
}

CircuitSpec parse_raw_circuit(const json& doc) {
  CircuitSpec spec;
  if (!doc.contains("n_nodes") || !doc.contains("ec_matrix"))
    config_error("a raw circuit needs n_nodes and ec_matrix");
  spec.n_nodes = get_int(doc["n_nodes"], "n_nodes");
  const json& ec = doc["ec_matrix"];
  if (!ec.is_array() || static_cast<int>(ec.size()) != spec.n_nodes) config_error("ec_matrix must have n_nodes rows");
  spec.ec_matrix.resize(spec.n_nodes, spec.n_nodes);
  for (int i = 0; i < spec.n_nodes; ++i) {
    Vec row = get_vec(ec[i], "ec_matrix row");
    if (row.size() != spec.n_nodes) config_error("ec_matrix must be square");
    spec.ec_matrix.row(i) = row.transpose();
  }
  if (doc.contains("cosine_terms")) {
    const json& terms = doc["cosine_terms"];
    if (!terms.is_array()) config_error("cosine_terms must be a list");
    for (const auto& t : terms) {
      check_keys(t, {"amplitude_ghz", "weights", "phase_offset"}, "cosine term");
      CosineTerm term;
      term.amplitude = get_number(t.at("amplitude_ghz"), "amplitude_ghz");
      std::vector<int> w = get_ints(t.at("weights"), "weights");
      term.weights = Eigen::Map<IVec>(w.data(), static_cast<Eigen::Index>(w.size()));
      if (t.contains("phase_offset")) term.phase_offset = get_number(t["phase_offset"], "phase_offset");
      spec.cosine_terms.push_back(term);
    }
  }
  spec.offset_charges = Vec::Zero(spec.n_nodes);
  if (doc.contains("energy_shift_ghz")) spec.energy_shift = get_number(doc["energy_shift_ghz"], "energy_shift_ghz");
  try {
    spec.validate();
  } catch (const Error& e) {
    config_error(std::string("invalid circuit: ") + e.what());
  }
  return spec;
}

double param(const std::map<std::string, double>& p, const std::string& key) {
  auto it = p.find(key);
  if (it == p.end()) config_error("missing preset parameter '" + key + "'");
  return it->second;
}

double now_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

std::string scheme_label(Scheme s) {
  std::string out = to_string(s);
  return out;
}

std::string status_of(const std::exception& e) { return std::string("error: ") + e.what(); }

std::string quote_csv(const std::string& cell) {
  if (cell.find_first_of(",\"\n\r") == std::string::npos) return cell;
  std::string out = "\"";
  for (char c : cell) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

// Outcome of one solver call.
struct Spectrum {
  Vec energies;
  long long n_h = 0;
  long long retained = 0;
  double seconds = 0.0;
};

Spectrum solve_tb(const CircuitSpec& spec, const SolverSettings& s, Scheme scheme, int sigma_max) {
  SolverSettings local = s;
  local.scheme = scheme;
  local.sigma_max = sigma_max;
  const double t0 = now_seconds();
  TBResult r = solve_tight_binding(spec, local.tb_options());
  Spectrum out;
  out.energies = r.energies;
  out.n_h = r.n_h;
  out.retained = r.retained_dim;
  out.seconds = s.omit_timing ? 0.0 : now_seconds() - t0;
  return out;
}

Spectrum solve_charge(const CircuitSpec& spec, const SolverSettings& s, int n_cut) {
  const double t0 = now_seconds();
  ChargeBasisConfig cfg;
  cfg.n_cut = n_cut;
  cfg.levels = s.levels;
  cfg.mem_cap_gb = s.mem_cap_gb;
  ChargeHamiltonian h = build_sparse_h(spec, cfg);
  Spectrum out;
  out.energies = lowest_eigs(h, s.levels);
  out.n_h = h.nonzeros();
  out.retained = h.dim();
  out.seconds = s.omit_timing ? 0.0 : now_seconds() - t0;
  return out;
}

}  // namespace

CircuitSpec CircuitConfig::build() const {
  CircuitSpec spec;
  if (raw) {
    spec = *raw;
  } else if (preset == "flux_qubit") {
    spec = flux_qubit_spec(param(params, "EJ"), param(params, "ECJ"), param(params, "ECg"), param(params, "alpha"),
                           param(params, "flux_frac"));
  } else if (preset == "current_mirror") {
    const double nb = param(params, "n_big");
    if (nb != std::floor(nb) || nb < 2) config_error("n_big must be an integer >= 2");
    spec = current_mirror_spec(static_cast<int>(nb), param(params, "ECB"), param(params, "ECJ"), param(params, "ECg"),
                               param(params, "EJ"), param(params, "flux_frac"));
  } else {
    config_error("unknown preset '" + preset + "'");
  }
  if (ng.size() > 0) {
    if (ng.size() != spec.n_nodes)
      config_error("offset_charges has " + std::to_string(ng.size()) + " entries for " +
                   std::to_string(spec.n_nodes) + " nodes");
    spec.offset_charges = ng;
  }
  return spec;
}

void CircuitConfig::set_flux(double flux_frac) {
  if (raw) config_error("flux sweeps need a preset circuit");
  params["flux_frac"] = flux_frac;
}

void CircuitConfig::set_ng_component(int index, double value) {
  if (ng.size() == 0) ng = Vec::Zero(build().n_nodes);
  if (index < 0 || index >= ng.size()) config_error("ng_index out of range");
  ng(index) = value;
}

TBOptions SolverSettings::tb_options() const {
  TBOptions o;
  o.scheme = scheme;
  o.sigma_max = sigma_max;
  o.levels = levels;
  o.epsilon = epsilon;
  o.delta_min = delta_min;
  return o;
}

std::string Method::label() const {
  return kind == MethodKind::ChargeBasis ? "charge" : "tb";
}

Method parse_method(const std::string& text) {
  Method m;
  if (text == "charge") {
    m.kind = MethodKind::ChargeBasis;
    return m;
  }
  if (text.rfind("tb:", 0) != 0) config_error("method must be 'charge' or 'tb:<scheme>', got '" + text + "'");
  try {
    m.scheme = parse_scheme(text.substr(3));
  } catch (const Error& e) {
    config_error(e.what());
  }
  return m;
}

void SweepPlan::validate() const {
  if (methods.empty()) config_error("sweep has no methods");
  if (values.empty()) config_error("sweep has no values");
  if (values.size() > 1) {
    const bool up = values[1] > values[0];
    for (std::size_t i = 1; i < values.size(); ++i)
      if (up ? !(values[i] > values[i - 1]) : !(values[i] < values[i - 1]))
        config_error("sweep values must be strictly monotone");
  }
  const bool integral = variable == SweepVariable::SigmaMax || variable == SweepVariable::NCut;
  for (double v : values) {
    if (integral && (v != std::floor(v) || v < 0)) config_error("sigma_max / n_cut values must be whole numbers");
    if (variable == SweepVariable::NCut && v < 1) config_error("n_cut values must be >= 1");
    if (variable == SweepVariable::Epsilon && !(v > 0 && v < 1)) config_error("epsilon values must lie in (0, 1)");
  }
  if (variable == SweepVariable::FluxFrac && circuit.raw) config_error("flux sweeps need a preset circuit");
}

namespace {

SolverSettings parse_solver(const json& j, SolverSettings s) {
  check_keys(j, {"scheme", "sigma_max", "levels", "epsilon", "delta_min", "n_cut", "mem_cap_gb", "threads"}, "solver");
  if (j.contains("scheme")) s.scheme = get_schemes(json::array({j["scheme"]}), "solver.scheme")[0];
  if (j.contains("sigma_max")) s.sigma_max = get_int(j["sigma_max"], "sigma_max");
  if (j.contains("levels")) s.levels = get_int(j["levels"], "levels");
  if (j.contains("epsilon")) s.epsilon = get_number(j["epsilon"], "epsilon");
  if (j.contains("delta_min")) s.delta_min = get_number(j["delta_min"], "delta_min");
  if (j.contains("n_cut")) s.n_cut = get_int(j["n_cut"], "n_cut");
  if (j.contains("mem_cap_gb")) s.mem_cap_gb = get_number(j["mem_cap_gb"], "mem_cap_gb");
  if (j.contains("threads")) s.threads = get_int(j["threads"], "threads");
  return s;
}

SweepVariable parse_variable(const std::string& v) {
  if (v == "flux_frac") return SweepVariable::FluxFrac;
  if (v == "ng_component") return SweepVariable::NgComponent;
  if (v == "sigma_max") return SweepVariable::SigmaMax;
  if (v == "n_cut") return SweepVariable::NCut;
  if (v == "epsilon") return SweepVariable::Epsilon;
  config_error("unknown sweep variable '" + v + "'");
}

const char* variable_name(SweepVariable v) {
  switch (v) {
    case SweepVariable::FluxFrac: return "flux_frac";
    case SweepVariable::NgComponent: return "ng_component";
    case SweepVariable::SigmaMax: return "sigma_max";
    case SweepVariable::NCut: return "n_cut";
    case SweepVariable::Epsilon: return "epsilon";
  }
  return "?";
}

std::vector<double> parse_values(const json& j) {
  if (j.contains("values")) {
    Vec v = get_vec(j["values"], "sweep.values");
    return std::vector<double>(v.data(), v.data() + v.size());
  }
  if (j.contains("range")) {
    const json& r = j["range"];
    check_keys(r, {"start", "stop", "count"}, "sweep.range");
    const double a = get_number(r.at("start"), "range.start");
    const double b = get_number(r.at("stop"), "range.stop");
    const int n = get_int(r.at("count"), "range.count");
    if (n < 1) config_error("range.count must be positive");
    std::vector<double> out;
    for (int i = 0; i < n; ++i) out.push_back(n == 1 ? a : a + (b - a) * i / (n - 1));
    return out;
  }
  return {};
}

}  // namespace

AppConfig parse_config_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    config_error(std::string("cannot parse config: ") + e.what());
  }
  check_keys(doc,
             {"preset", "params", "n_nodes", "ec_matrix", "cosine_terms", "offset_charges", "energy_shift_ghz",
              "solver", "sweep", "converge", "table"},
             "config");
  AppConfig cfg;
  try {
    if (doc.contains("preset")) {
      if (!doc["preset"].is_string()) config_error("preset must be a string");
      cfg.circuit.preset = doc["preset"].get<std::string>();
      auto keys = preset_keys().find(cfg.circuit.preset);
      if (keys == preset_keys().end()) config_error("unknown preset '" + cfg.circuit.preset + "'");
      if (doc.contains("n_nodes") || doc.contains("ec_matrix") || doc.contains("cosine_terms"))
        config_error("preset and raw circuit keys are mutually exclusive");
      const json& p = doc.contains("params") ? doc["params"] : json::object();
      check_keys(p, keys->second, "params");
      for (auto it = p.begin(); it != p.end(); ++it) cfg.circuit.params[it.key()] = get_number(it.value(), it.key());
      if (!cfg.circuit.params.count("flux_frac")) cfg.circuit.params["flux_frac"] = 0.0;
      if (cfg.circuit.preset == "flux_qubit" && !cfg.circuit.params.count("alpha")) cfg.circuit.params["alpha"] = 0.8;
    } else {
      if (doc.contains("params")) config_error("params requires a preset");
      cfg.circuit.raw = parse_raw_circuit(doc);
    }
    if (doc.contains("offset_charges")) cfg.circuit.ng = get_vec(doc["offset_charges"], "offset_charges");
    CircuitSpec probe = cfg.circuit.build();
    (void)probe;

    if (doc.contains("solver")) cfg.solver = parse_solver(doc["solver"], cfg.solver);

    if (doc.contains("sweep")) {
      const json& j = doc["sweep"];
      check_keys(j, {"variable", "ng_index", "values", "range", "methods"}, "sweep");
      SweepPlan plan;
      if (!j.contains("variable") || !j["variable"].is_string()) config_error("sweep.variable is required");
      plan.variable = parse_variable(j["variable"].get<std::string>());
      if (j.contains("ng_index")) plan.ng_index = get_int(j["ng_index"], "ng_index");
      plan.values = parse_values(j);
      if (j.contains("methods")) {
        if (!j["methods"].is_array()) config_error("sweep.methods must be a list");
        for (const auto& m : j["methods"]) {
          if (!m.is_string()) config_error("sweep.methods entries must be strings");
          plan.methods.push_back(parse_method(m.get<std::string>()));
        }
      }
      cfg.sweep = plan;
    }
    if (doc.contains("converge")) {
      const json& j = doc["converge"];
      check_keys(j, {"schemes", "sigma_max", "n_cut", "reference", "reference_ncut_start", "reference_ncut_max",
                     "reference_tol"},
                 "converge");
      ConvergencePlan plan;
      if (j.contains("schemes")) plan.schemes = get_schemes(j["schemes"], "converge.schemes");
      if (j.contains("sigma_max")) plan.sigma_values = get_ints(j["sigma_max"], "converge.sigma_max");
      if (j.contains("n_cut")) plan.ncut_values = get_ints(j["n_cut"], "converge.n_cut");
      if (j.contains("reference")) plan.reference = get_vec(j["reference"], "converge.reference");
      if (j.contains("reference_ncut_start"))
        plan.reference_ncut_start = get_int(j["reference_ncut_start"], "reference_ncut_start");
      if (j.contains("reference_ncut_max"))
        plan.reference_ncut_max = get_int(j["reference_ncut_max"], "reference_ncut_max");
      if (j.contains("reference_tol")) plan.reference_tol = get_number(j["reference_tol"], "reference_tol");
      cfg.converge = plan;
    }
    if (doc.contains("table")) {
      const json& j = doc["table"];
      check_keys(j, {"schemes", "sigma_max", "n_cut"}, "table");
      TablePlan plan;
      if (j.contains("schemes")) plan.schemes = get_schemes(j["schemes"], "table.schemes");
      if (j.contains("sigma_max")) plan.sigma_values = get_ints(j["sigma_max"], "table.sigma_max");
      if (j.contains("n_cut")) plan.ncut_values = get_ints(j["n_cut"], "table.n_cut");
      cfg.table = plan;
    }
  } catch (const json::exception& e) {
    config_error(e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigError) throw;
    config_error(e.what());
  }
  return cfg;
}

AppConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) config_error("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

std::size_t Report::column(const std::string& name) const {
  auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw Error(ErrorCode::InvalidArgument, "no column '" + name + "'");
  return static_cast<std::size_t>(it - columns.begin());
}

double Report::number(std::size_t row, const std::string& name) const {
  const std::string& cell = rows.at(row).at(column(name));
  if (cell.empty()) return std::nan("");
  return std::stod(cell);
}

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return buf;
}

std::string format_integer(long long x) { return std::to_string(x); }

std::string write_csv(const Report& report) {
  std::string out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += quote_csv(cells[i]);
    }
    out += '\n';
  };
  line(report.columns);
  for (const auto& r : report.rows) line(r);
  return out;
}

Report parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> lines;
  std::vector<std::string> cur;
  std::string cell;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          cell += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cell += c;
      }
      continue;
    }
    any = true;
    if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cur.push_back(cell);
      cell.clear();
    } else if (c == '\n') {
      cur.push_back(cell);
      cell.clear();
      lines.push_back(cur);
      cur.clear();
      any = false;
    } else if (c != '\r') {
      cell += c;
    }
  }
  if (quoted) throw Error(ErrorCode::InvalidArgument, "unterminated quote in CSV");
  if (any || !cell.empty() || !cur.empty()) {
    cur.push_back(cell);
    lines.push_back(cur);
  }
  if (lines.empty()) throw Error(ErrorCode::InvalidArgument, "CSV has no header");
  Report r;
  r.columns = lines[0];
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].size() != r.columns.size())
      throw Error(ErrorCode::InvalidArgument, "CSV row " + std::to_string(i) + " has the wrong number of cells");
    r.rows.push_back(lines[i]);
  }
  return r;
}

Report minima_report(const CircuitSpec& spec) {
  const auto minima = find_minima(spec);
  Report r;
  r.columns.push_back("m");
  for (int i = 0; i < spec.n_nodes; ++i) r.columns.push_back("theta_" + std::to_string(i));
  r.columns.push_back("potential_ghz");
  for (int i = 0; i < spec.n_nodes; ++i) r.columns.push_back("omega_" + std::to_string(i) + "_ghz");
  for (const auto& m : minima) {
    const ModeData modes = normal_modes(spec.ec_matrix, m.hessian);
    std::vector<std::string> row{format_integer(m.index)};
    for (int i = 0; i < spec.n_nodes; ++i) row.push_back(format_number(m.theta(i)));
    row.push_back(format_number(m.value));
    for (int i = 0; i < spec.n_nodes; ++i) row.push_back(format_number(modes.omega(i)));
    r.rows.push_back(row);
  }
  return r;
}

Report spectrum_report(const CircuitSpec& spec, const SolverSettings& solver) {
  Spectrum s = solve_tb(spec, solver, solver.scheme, solver.sigma_max);
  Report r;
  r.columns = {"level", "energy_ghz", "retained_dim", "n_h", "wall_time_s"};
  for (Eigen::Index k = 0; k < s.energies.size(); ++k)
    r.rows.push_back({format_integer(k), format_number(s.energies(k)), format_integer(s.retained),
                      format_integer(s.n_h), format_number(s.seconds)});
  return r;
}

Report oracle_report(const CircuitSpec& spec, const SolverSettings& solver) {
  Spectrum s = solve_charge(spec, solver, solver.n_cut);
  Report r;
  r.columns = {"level", "energy_ghz", "retained_dim", "n_h", "wall_time_s", "n_cut"};
  for (Eigen::Index k = 0; k < s.energies.size(); ++k)
    r.rows.push_back({format_integer(k), format_number(s.energies(k)), format_integer(s.retained),
                      format_integer(s.n_h), format_number(s.seconds), format_integer(solver.n_cut)});
  return r;
}

Report run_sweep(const SweepPlan& plan) {
  plan.validate();
  struct Task {
    std::size_t point;
    Method method;
  };
  std::vector<Task> tasks;
  for (std::size_t p = 0; p < plan.values.size(); ++p)
    for (const auto& m : plan.methods) tasks.push_back({p, m});

  Report report;
  report.columns = {"point",  "variable", "value",      "method", "scheme",       "sigma_max",   "n_cut",
                    "epsilon", "level",   "energy_ghz", "n_h",    "retained_dim", "wall_time_s", "status"};
  std::vector<std::vector<std::vector<std::string>>> rows(tasks.size());
  std::vector<int> failed(tasks.size(), 0);

  auto run_task = [&](std::size_t t) {
    const Task& task = tasks[t];
    const double value = plan.values[task.point];
    CircuitConfig circuit = plan.circuit;
    SolverSettings solver = plan.solver;
    std::vector<std::string> head{format_integer(static_cast<long long>(task.point)), variable_name(plan.variable),
                                  format_number(value), task.method.label(),
                                  task.method.kind == MethodKind::TightBinding ? scheme_label(task.method.scheme) : ""};
    try {
      switch (plan.variable) {
        case SweepVariable::FluxFrac: circuit.set_flux(value); break;
        case SweepVariable::NgComponent: circuit.set_ng_component(plan.ng_index, value); break;
        case SweepVariable::SigmaMax: solver.sigma_max = static_cast<int>(value); break;
        case SweepVariable::NCut: solver.n_cut = static_cast<int>(value); break;
        case SweepVariable::Epsilon: solver.epsilon = value; break;
      }
      const bool tb = task.method.kind == MethodKind::TightBinding;
      head.push_back(tb ? format_integer(solver.sigma_max) : "");
      head.push_back(tb ? "" : format_integer(solver.n_cut));
      head.push_back(tb ? format_number(solver.epsilon) : "");
      const CircuitSpec spec = circuit.build();
      Spectrum s = tb ? solve_tb(spec, solver, task.method.scheme, solver.sigma_max)
                      : solve_charge(spec, solver, solver.n_cut);
      for (Eigen::Index k = 0; k < s.energies.size(); ++k) {
        auto row = head;
        row.insert(row.end(), {format_integer(k), format_number(s.energies(k)), format_integer(s.n_h),
                               format_integer(s.retained), format_number(s.seconds), "ok"});
        rows[t].push_back(row);
      }
    } catch (const std::exception& e) {
      head.resize(8);
      head.insert(head.end(), {"", "", "", "", "", status_of(e)});
      rows[t].push_back(head);
      failed[t] = 1;
    }
  };

  const int n_threads = std::max(1, std::min<int>(plan.solver.threads, static_cast<int>(tasks.size())));
  if (n_threads == 1) {
    for (std::size_t t = 0; t < tasks.size(); ++t) run_task(t);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < n_threads; ++w)
      pool.emplace_back([&] {
        for (std::size_t t = next++; t < tasks.size(); t = next++) run_task(t);
      });
    for (auto& th : pool) th.join();
  }
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    for (auto& row : rows[t]) report.rows.push_back(std::move(row));
    report.failures += failed[t];
  }
  return report;
}

Report convergence_report(const ConvergencePlan& plan) {
  const CircuitSpec spec = plan.circuit.build();
  const SolverSettings& solver = plan.solver;
  Report report;
  report.columns = {"method",  "scheme",  "cutoff",          "n_h",         "retained_dim", "eta_avg",
                    "eta_min", "eta_max", "max_abs_err_ghz", "wall_time_s", "status"};
  Vec reference = plan.reference;
  if (reference.size() == 0) {
    const double t0 = now_seconds();
    ReferenceSpectrum ref = converged_reference(spec, solver.levels, plan.reference_ncut_start,
                                                plan.reference_ncut_max, plan.reference_tol, solver.mem_cap_gb);
    reference = ref.energies;
    report.rows.push_back({"reference", "", format_integer(ref.n_cut), format_integer(ref.nonzeros),
                           format_number(charge_dimension(spec.n_nodes, ref.n_cut)), "0", "0", "0", "0",
                           format_number(solver.omit_timing ? 0.0 : now_seconds() - t0),
                           ref.converged ? "ok" : "unconverged"});
  }
  auto add = [&](const std::string& method, const std::string& scheme, int cutoff, const auto& solve) {
    try {
      Spectrum s = solve();
      EtaReport eta = eta_metrics(s.energies, reference);
      const Eigen::Index n = std::min(s.energies.size(), reference.size());
      const double err = (s.energies.head(n) - reference.head(n)).cwiseAbs().maxCoeff();
      report.rows.push_back({method, scheme, format_integer(cutoff), format_integer(s.n_h), format_integer(s.retained),
                             format_number(eta.eta_avg), format_number(eta.eta_min), format_number(eta.eta_max),
                             format_number(err), format_number(s.seconds), "ok"});
    } catch (const std::exception& e) {
      report.rows.push_back({method, scheme, format_integer(cutoff), "", "", "", "", "", "", "", status_of(e)});
      ++report.failures;
    }
  };
  for (Scheme sc : plan.schemes)
    for (int sigma : plan.sigma_values)
      add("tb", scheme_label(sc), sigma, [&] { return solve_tb(spec, solver, sc, sigma); });
  for (int nc : plan.ncut_values) add("charge", "", nc, [&] { return solve_charge(spec, solver, nc); });
  return report;
}

Report table_report(const TablePlan& plan) {
  const CircuitSpec spec = plan.circuit.build();
  SolverSettings solver = plan.solver;
  solver.levels = std::max(solver.levels, 2);
  Report report;
  report.columns = {"method", "scheme", "cutoff", "e0_ghz", "e1_ghz", "n_h", "wall_time_s", "best_e0", "best_e1",
                    "status"};
  struct Row {
    std::string method, scheme;
    int cutoff;
    Spectrum s;
    std::string status;
  };
  std::vector<Row> rows;
  auto add = [&](const std::string& method, const std::string& scheme, int cutoff, const auto& solve) {
    Row row{method, scheme, cutoff, {}, "ok"};
    try {
      row.s = solve();
    } catch (const Error& e) {
      row.status = e.code() == ErrorCode::DimensionOverflow ? "skipped: over memory cap" : status_of(e);
      if (e.code() != ErrorCode::DimensionOverflow) ++report.failures;
    } catch (const std::exception& e) {
      row.status = status_of(e);
      ++report.failures;
    }
    rows.push_back(row);
  };
  for (Scheme sc : plan.schemes)
    for (int sigma : plan.sigma_values)
      add("tb", scheme_label(sc), sigma, [&] { return solve_tb(spec, solver, sc, sigma); });
  for (int nc : plan.ncut_values) add("charge", "", nc, [&] { return solve_charge(spec, solver, nc); });

  // Flag the lowest E0 and E1 within each column (one column per method/scheme).
  std::map<std::string, std::pair<int, int>> best;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Row& r = rows[i];
    if (r.status != "ok" || r.s.energies.size() < 2) continue;
    const std::string key = r.method + "/" + r.scheme;
    auto it = best.find(key);
    if (it == best.end()) {
      best[key] = {static_cast<int>(i), static_cast<int>(i)};
      continue;
    }
    if (r.s.energies(0) < rows[it->second.first].s.energies(0)) it->second.first = static_cast<int>(i);
    if (r.s.energies(1) < rows[it->second.second].s.energies(1)) it->second.second = static_cast<int>(i);
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Row& r = rows[i];
    const bool ok = r.status == "ok" && r.s.energies.size() >= 2;
    const auto it = best.find(r.method + "/" + r.scheme);
    const bool b0 = ok && it != best.end() && it->second.first == static_cast<int>(i);
    const bool b1 = ok && it != best.end() && it->second.second == static_cast<int>(i);
    report.rows.push_back({r.method, r.scheme, format_integer(r.cutoff), ok ? format_number(r.s.energies(0)) : "",
                           ok ? format_number(r.s.energies(1)) : "", ok ? format_integer(r.s.n_h) : "",
                           ok ? format_number(r.s.seconds) : "", b0 ? "1" : "0", b1 ? "1" : "0", r.status});
  }
  return report;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Variational tight-binding spectra of periodic superconducting circuits"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, out_path, scheme;
  int sigma_max = 0, n_cut = 0, levels = 0, threads = 0;
  double epsilon = 0, delta_min = 0, mem_cap = 0;
  bool omit_timing = false;
  app.add_option("--config", config_path, "Run document (JSON)")->required();
  app.add_option("--out", out_path, "Write CSV here instead of stdout");
  auto* o_scheme = app.add_option("--scheme", scheme, "ip | p | ipac | pac");
  auto* o_sigma = app.add_option("--sigma-max", sigma_max, "Excitation cutoff per minimum")->check(CLI::NonNegativeNumber);
  auto* o_ncut = app.add_option("--ncut", n_cut, "Charge cutoff per node")->check(CLI::PositiveNumber);
  auto* o_levels = app.add_option("--levels", levels, "Number of eigenvalues")->check(CLI::PositiveNumber);
  auto* o_eps = app.add_option("--epsilon", epsilon, "Neighbor overlap threshold")->check(CLI::PositiveNumber);
  auto* o_dmin = app.add_option("--delta-min", delta_min, "Relative overlap deflation threshold")->check(CLI::PositiveNumber);
  auto* o_threads = app.add_option("--threads", threads, "Sweep workers")->check(CLI::PositiveNumber);
  auto* o_mem = app.add_option("--mem-cap-gb", mem_cap, "Charge-basis memory cap")->check(CLI::PositiveNumber);
  app.add_flag("--omit-timing", omit_timing, "Report zero wall time (byte-identical reruns)");

  auto* c_minima = app.add_subcommand("minima", "Potential minima and harmonic frequencies");
  auto* c_spectrum = app.add_subcommand("spectrum", "Tight-binding spectrum");
  auto* c_oracle = app.add_subcommand("oracle", "Charge-basis spectrum");
  auto* c_sweep = app.add_subcommand("sweep", "Parameter sweep from the config's sweep section");
  auto* c_converge = app.add_subcommand("converge", "Convergence study against a reference");
  auto* c_table = app.add_subcommand("table", "Ground and first excited energies per scheme and cutoff");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    AppConfig cfg = load_config(config_path);
    SolverSettings& s = cfg.solver;
    if (*o_scheme) s.scheme = parse_scheme(scheme);
    if (*o_sigma) s.sigma_max = sigma_max;
    if (*o_ncut) s.n_cut = n_cut;
    if (*o_levels) s.levels = levels;
    if (*o_eps) s.epsilon = epsilon;
    if (*o_dmin) s.delta_min = delta_min;
    if (*o_threads) s.threads = threads;
    if (*o_mem) s.mem_cap_gb = mem_cap;
    if (omit_timing) s.omit_timing = true;

    Report report;
    if (*c_minima) {
      report = minima_report(cfg.circuit.build());
    } else if (*c_spectrum) {
      report = spectrum_report(cfg.circuit.build(), s);
    } else if (*c_oracle) {
      report = oracle_report(cfg.circuit.build(), s);
    } else if (*c_sweep) {
      if (!cfg.sweep) config_error("config has no sweep section");
      SweepPlan plan = *cfg.sweep;
      plan.circuit = cfg.circuit;
      plan.solver = s;
      report = run_sweep(plan);
    } else if (*c_converge) {
      if (!cfg.converge) config_error("config has no converge section");
      ConvergencePlan plan = *cfg.converge;
      plan.circuit = cfg.circuit;
      plan.solver = s;
      if (plan.schemes.empty()) plan.schemes = {s.scheme};
      report = convergence_report(plan);
    } else if (*c_table) {
      if (!cfg.table) config_error("config has no table section");
      TablePlan plan = *cfg.table;
      plan.circuit = cfg.circuit;
      plan.solver = s;
      if (plan.schemes.empty()) plan.schemes = {s.scheme};
      report = table_report(plan);
    }

    const std::string csv = write_csv(report);
    if (out_path.empty()) {
      std::cout << csv;
    } else {
      std::ofstream out(out_path, std::ios::binary);
      if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write '" + out_path + "'");
      out << csv;
    }
    if (report.failures > 0) {
      std::cerr << report.failures << " point(s) failed; see the status column\n";
      return 2;
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace vtb::cli
