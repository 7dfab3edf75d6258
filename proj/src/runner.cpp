#include "multibeam/runner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "multibeam/experiments.hpp"
#include "multibeam/finite_theory.hpp"
#include "multibeam/optimize.hpp"

namespace multibeam {

namespace {

using nlohmann::json;

const std::vector<std::string> kResultColumns = {"r0", "gamma", "gamma_loss", "delta_res", "w_opt"};

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

// Everything a subcommand produces, independent of the output format.
struct Artifact {
  std::optional<json> single;
  Table table;
  std::vector<std::string> metadata;
  std::vector<std::string> warnings;
  double max_residual = 0.0;
  std::string summary;
};

std::string number(double v) {
  if (std::isnan(v)) return "";
  std::ostringstream out;
  out.precision(12);
  out << v;
  return out.str();
}

EvaluationSettings settings_from(const RunConfig& c) {
  EvaluationSettings s;
  s.grid_resolution = c.grid_resolution;
  s.bz_resolution = c.bz_resolution;
  s.scan_half_width = c.scan_half_width;
  s.scan_points = c.scan_points;
  s.scan_tolerance = c.scan_tolerance;
  s.projection = c.filtered_projection ? MirrorProjection::filtered : MirrorProjection::unfiltered;
  return s;
}

WaistSearch waist_search_from(const RunConfig& c) {
  WaistSearch w;
  w.lo = c.w_range.first;
  w.hi = c.w_range.second;
  w.tolerance = c.w_tolerance;
  return w;
}

double residual_of(const InterfaceResult& r) {
  const auto it = r.diagnostics.find("residual");
  return it == r.diagnostics.end() ? 0.0 : it->second;
}

json result_json(const InterfaceResult& r) {
  json j;
  j["r0"] = r.r0;
  j["gamma"] = r.gamma;
  j["gamma_loss"] = r.gamma_loss;
  j["delta_res"] = r.delta_res;
  j["source"] = std::string(to_string(r.source));
  j["diagnostics"] = json::object();
  for (const auto& [k, v] : r.diagnostics) j["diagnostics"][k] = v;
  j["warnings"] = r.warnings;
  return j;
}

std::vector<std::string> swept_columns(std::string_view sub) {
  if (sub == "sweep-spacing") return {"a", "na"};
  if (sub == "sweep-na") return {"na"};
  if (sub == "scale-n") return {"n"};
  if (sub == "scan-shift") return {"a", "d", "d_rescaled"};
  if (sub == "disorder") return {"dr_over_a"};
  return {};
}

std::vector<std::string> extra_columns(std::string_view sub) {
  if (sub == "sweep-spacing") return {"r0_infinite", "r0_theory", "r0_minus", "r0_plus"};
  if (sub == "sweep-na") return {"r0_minus", "r0_plus"};
  if (sub == "scale-n") return {"a_opt", "one_minus_r0", "linear_size", "r0_minus", "r0_plus"};
  if (sub == "scan-shift") return {"unit"};
  if (sub == "disorder") return {"mean_inefficiency", "stderr", "excess", "realizations"};
  return {};
}

std::vector<std::string> trailing_columns(std::string_view sub) {
  if (sub == "scale-n" || sub == "disorder") return {"residual", "slope", "intercept"};
  return {"residual"};
}

void add_rows(Artifact& art, std::string_view sub, const std::vector<SweepRow>& rows) {
  art.table.columns = csv_columns(sub);
  for (const auto& row : rows) {
    std::vector<std::string> cells;
    for (const auto& [name, value] : row.swept) cells.push_back(number(value));
    cells.push_back(number(row.result.r0));
    cells.push_back(number(row.result.gamma));
    cells.push_back(number(row.result.gamma_loss));
    cells.push_back(number(row.result.delta_res));
    cells.push_back(number(row.w_opt));
    for (const auto& [name, value] : row.extra) cells.push_back(number(value));
    const double residual = residual_of(row.result);
    art.max_residual = std::max(art.max_residual, residual);
    cells.push_back(number(residual));
    while (cells.size() < art.table.columns.size()) cells.emplace_back();
    art.table.rows.push_back(std::move(cells));
    for (const auto& w : row.result.warnings) {
      std::ostringstream msg;
      msg << row.swept.front().first << "=" << row.swept.front().second << ": " << w;
      art.warnings.push_back(msg.str());
    }
  }
}

void add_fit_row(Artifact& art, const LinearFit& fit) {
  std::vector<std::string> cells(art.table.columns.size());
  cells.front() = "fit";
  cells[cells.size() - 2] = fit.points >= 2 ? number(fit.slope) : "";
  cells.back() = fit.points >= 2 ? number(fit.intercept) : "";
  art.table.rows.push_back(std::move(cells));
}

AtomArray make_array(const RunConfig& c) {
  const LatticeSpec lattice(c.lattice, c.a);
  AtomArray array = build_patch(lattice, c.n_atoms);
  if (c.shift != Vec3::Zero()) array = apply_shift(array, c.shift);
  if (c.dr > 0.0) array = apply_disorder(array, c.dr * c.a, c.seed);
  return array;
}

Artifact run_infinite(const RunConfig& c) {
  const LatticeSpec lattice(c.lattice, c.a);
  const OrderSet target = default_target(lattice);
  const InterfaceResult r = r0_infinite(lattice, target);
  Artifact art;
  art.single = result_json(r);
  json orders = json::array();
  for (const auto& o : radiative_orders(lattice).orders) {
    orders.push_back({{"m", {o.m.first, o.m.second}},
                      {"theta_deg", o.theta * 180.0 / kPi},
                      {"gamma", gamma0(lattice) * order_rate_factor(o.q)},
                      {"in_target", target.contains(o.m)}});
  }
  (*art.single)["orders"] = orders;
  art.warnings = r.warnings;
  art.summary = "infinite-r0: r0 = " + number(r.r0);
  return art;
}

Artifact run_theory(const RunConfig& c) {
  const AtomArray array = build_patch(LatticeSpec(c.lattice, c.a), c.n_atoms);
  const OrderSet target = default_target(array.lattice);
  const EvaluationSettings settings = settings_from(c);
  double ratio = 0.0;
  if (c.waist_ratio) {
    ratio = *c.waist_ratio;
  } else {
    const auto best = golden_section_maximize(
        [&](double x) { return theory_point(array, target, x * array.linear_size(), settings).r0; }, c.w_range.first,
        c.w_range.second, c.w_tolerance);
    ratio = best.x;
  }
  const InterfaceResult r = theory_point(array, target, ratio * array.linear_size(), settings);
  Artifact art;
  art.single = result_json(r);
  (*art.single)["w_opt"] = ratio;
  art.warnings = r.warnings;
  art.summary = "theory-r0: r0 = " + number(r.r0) + " at w/L_a = " + number(ratio);
  return art;
}

Artifact run_scatter(const RunConfig& c) {
  const AtomArray array = make_array(c);
  const OrderSet target = default_target(array.lattice);
  const EvaluationSettings settings = settings_from(c);
  const auto op = std::make_shared<const ArrayOperator>(array);
  double ratio = 0.0;
  InterfaceResult r;
  if (c.waist_ratio) {
    ratio = *c.waist_ratio;
  } else {
    ratio = optimize_waist(array, target, c.na, settings, waist_search_from(c), op).ratio;
  }
  const double waist = ratio * array.linear_size();
  if (c.detuning) {
    const TargetMode mode = assemble_mode(array.lattice, target, waist, Direction::forward);
    r = ReflectivityModel(array, mode, c.na, c.grid_resolution, op, settings.projection).evaluate(*c.detuning);
  } else {
    r = resonant_scattering(array, target, waist, c.na, settings, op);
  }
  // Convergence check on a finer k grid at the same detuning.
  const int fine = c.grid_resolution * 3 / 2;
  const TargetMode mode = assemble_mode(array.lattice, target, waist, Direction::forward);
  const InterfaceResult check =
      ReflectivityModel(array, mode, c.na, fine, op, settings.projection).evaluate(r.delta_res);
  r.diagnostics["r0_fine_grid"] = check.r0;
  r.diagnostics["fine_grid_resolution"] = fine;
  if (std::abs(check.r0 - r.r0) >= 1e-4) {
    r.warnings.push_back("r0 changes by more than 1e-4 on the finer k grid");
  }
  Artifact art;
  art.single = result_json(r);
  (*art.single)["w_opt"] = ratio;
  art.warnings = r.warnings;
  art.max_residual = std::max(residual_of(r), residual_of(check));
  art.summary = "scatter-r0: r0 = " + number(r.r0) + " at delta = " + number(r.delta_res);
  return art;
}

Artifact run_optimize_waist(const RunConfig& c) {
  const AtomArray array = make_array(c);
  const OrderSet target = default_target(array.lattice);
  const WaistOptimum best = optimize_waist(array, target, c.na, settings_from(c), waist_search_from(c));
  Artifact art;
  art.single = result_json(best.result);
  (*art.single)["w_opt"] = best.ratio;
  (*art.single)["waist"] = best.waist;
  (*art.single)["r0_minus"] = best.r0_minus;
  (*art.single)["r0_plus"] = best.r0_plus;
  (*art.single)["evaluations"] = best.evaluations;
  art.warnings = best.result.warnings;
  art.max_residual = residual_of(best.result);
  art.summary = "optimize-waist: w/L_a = " + number(best.ratio) + ", r0 = " + number(best.result.r0);
  return art;
}

Artifact run_sweep_spacing(const RunConfig& c) {
  SpacingSweepSpec spec;
  spec.kind = c.lattice;
  spec.n_atoms = c.n_atoms;
  spec.spacings = c.a_list;
  spec.nas = c.na_list;
  spec.waist_ratio = c.waist_ratio;
  spec.settings = settings_from(c);
  spec.waist_search = waist_search_from(c);
  Artifact art;
  const auto rows = sweep_spacing(spec);
  add_rows(art, "sweep-spacing", rows);
  art.summary = "sweep-spacing: " + std::to_string(rows.size()) + " rows";
  return art;
}

Artifact run_sweep_na(const RunConfig& c) {
  NaSweepSpec spec;
  spec.kind = c.lattice;
  spec.n_atoms = c.n_atoms;
  spec.spacing = c.a;
  spec.nas = c.na_list;
  spec.waist_ratio = c.waist_ratio;
  spec.settings = settings_from(c);
  spec.waist_search = waist_search_from(c);
  Artifact art;
  const auto rows = sweep_na(spec);
  add_rows(art, "sweep-na", rows);
  art.summary = "sweep-na: " + std::to_string(rows.size()) + " rows";
  return art;
}

Artifact run_scale(const RunConfig& c) {
  ScaleSpec spec;
  spec.kind = c.lattice;
  spec.n_atoms = c.n_list;
  spec.na = c.na;
  spec.spacing_range = c.a_range;
  spec.spacing_tolerance = c.a_tolerance;
  spec.settings = settings_from(c);
  spec.waist_search = waist_search_from(c);
  const ScaleResult result = scale_n(spec);
  Artifact art;
  add_rows(art, "scale-n", result.rows);
  add_fit_row(art, result.fit);
  art.summary = "scale-n: slope = " + number(result.fit.slope) + " over " + std::to_string(result.fit.points) + " points";
  return art;
}

Artifact run_shift(const RunConfig& c) {
  ShiftSpec spec;
  spec.axis = c.axis == "axial" ? ShiftAxis::axial : ShiftAxis::lateral;
  spec.kind = c.lattice;
  spec.na = c.na;
  spec.periods = c.periods;
  spec.points = c.points;
  spec.settings = settings_from(c);
  // The robustness preset supplies N, w and a unless they are given explicitly.
  const bool preset = c.preset == "robustness";
  if (!preset || c.is_explicit("N")) spec.n_atoms = c.n_atoms;
  if (!preset || c.is_explicit("w")) {
    if (!c.waist_ratio) throw ConfigError("w: scan-shift needs a fixed waist ratio", "w");
    spec.waist_ratio = *c.waist_ratio;
  }
  if (!c.a_list.empty()) {
    spec.spacings = c.a_list;
  } else if (!preset || c.is_explicit("a")) {
    spec.spacings = {c.a};
  }
  const ShiftResult result = scan_shift(spec);
  Artifact art;
  add_rows(art, "scan-shift", result.rows);
  std::string periods;
  for (const auto& a : result.analysis) {
    std::ostringstream line;
    line << "period: a=" << a.spacing << " unit=" << a.unit << " period=" << a.period << " ratio="
         << (a.unit > 0.0 ? a.period / a.unit : 0.0) << " peaks=" << a.peaks;
    art.metadata.push_back(line.str());
    periods += (periods.empty() ? "" : ", ") + number(a.unit > 0.0 ? a.period / a.unit : 0.0);
  }
  art.metadata.push_back("collapse_deviation: " + number(result.collapse_deviation));
  art.summary = "scan-shift: period / unit = " + periods;
  return art;
}

Artifact run_disorder(const RunConfig& c) {
  DisorderSpec spec;
  spec.kind = c.lattice;
  spec.n_atoms = c.n_atoms;
  spec.spacing = c.a;
  spec.na = c.na;
  spec.waist_ratio = c.waist_ratio;
  spec.strengths = c.dr_list;
  spec.seeds = c.seeds;
  spec.base_seed = c.seed;
  spec.antithetic = c.antithetic;
  spec.settings = settings_from(c);
  spec.waist_search = waist_search_from(c);
  const DisorderResult result = disorder_study(spec);
  Artifact art;
  add_rows(art, "disorder", result.rows);
  add_fit_row(art, result.fit);
  art.summary = "disorder: exponent = " + number(result.fit.slope);
  return art;
}

Artifact dispatch(std::string_view sub, const RunConfig& c) {
  if (sub == "infinite-r0") return run_infinite(c);
  if (sub == "theory-r0") return run_theory(c);
  if (sub == "scatter-r0") return run_scatter(c);
  if (sub == "optimize-waist") return run_optimize_waist(c);
  if (sub == "sweep-spacing") return run_sweep_spacing(c);
  if (sub == "sweep-na") return run_sweep_na(c);
  if (sub == "scale-n") return run_scale(c);
  if (sub == "scan-shift") return run_shift(c);
  if (sub == "disorder") return run_disorder(c);
  throw ConfigError("unknown subcommand '" + std::string(sub) + "'", "subcommand");
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

void write_csv(std::ostream& out, std::string_view sub, const RunConfig& c, const Artifact& art) {
  out << "# multibeam " << MULTIBEAM_VERSION << '\n';
  out << "# subcommand: " << sub << '\n';
  std::istringstream config(emit_config(c));
  for (std::string line; std::getline(config, line);) {
    if (!line.empty()) out << "# config: " << line << '\n';
  }
  out << "# grid: N_k=" << c.grid_resolution << " bz_resolution=" << c.bz_resolution << '\n';
  out << "# max_residual: " << art.max_residual << '\n';
  for (const auto& m : art.metadata) out << "# " << m << '\n';
  for (const auto& w : art.warnings) out << "# warning: " << w << '\n';
  if (art.single) {
    // Single-point runs flatten the result object into one row.
    const json& j = *art.single;
    out << "r0,gamma,gamma_loss,delta_res,w_opt,source,residual\n";
    out << number(j["r0"].get<double>()) << ',' << number(j["gamma"].get<double>()) << ','
        << number(j["gamma_loss"].get<double>()) << ',' << number(j["delta_res"].get<double>()) << ','
        << (j.contains("w_opt") ? number(j["w_opt"].get<double>()) : "") << ',' << j["source"].get<std::string>()
        << ',' << number(art.max_residual) << '\n';
    return;
  }
  for (std::size_t i = 0; i < art.table.columns.size(); ++i) out << (i ? "," : "") << art.table.columns[i];
  out << '\n';
  for (const auto& row : art.table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << csv_field(row[i]);
    out << '\n';
  }
}

json config_json(const RunConfig& c) {
  json j = json::object();
  std::string section;
  std::istringstream in(emit_config(c));
  for (std::string line; std::getline(in, line);) {
    if (line.empty()) continue;
    if (line.front() == '[') {
      section = line.substr(1, line.size() - 2);
      continue;
    }
    const auto eq = line.find(" = ");
    j[section][line.substr(0, eq)] = line.substr(eq + 3);
  }
  return j;
}

void write_json(std::ostream& out, std::string_view sub, const RunConfig& c, const Artifact& art) {
  json j = art.single ? *art.single : json::object();
  if (!art.single) {
    json rows = json::array();
    for (const auto& row : art.table.rows) {
      json r = json::object();
      for (std::size_t i = 0; i < row.size(); ++i) r[art.table.columns[i]] = row[i];
      rows.push_back(r);
    }
    j["columns"] = art.table.columns;
    j["rows"] = rows;
    j["metadata"] = art.metadata;
  }
  j["subcommand"] = std::string(sub);
  j["version"] = MULTIBEAM_VERSION;
  j["config"] = config_json(c);
  j["grid"] = {{"N_k", c.grid_resolution}, {"bz_resolution", c.bz_resolution}};
  j["max_residual"] = art.max_residual;
  j["warnings"] = art.warnings;
  out << j.dump(2) << '\n';
}

}  // namespace

std::vector<std::string> csv_columns(std::string_view subcommand) {
  std::vector<std::string> columns = swept_columns(subcommand);
  columns.insert(columns.end(), kResultColumns.begin(), kResultColumns.end());
  const auto extra = extra_columns(subcommand);
  columns.insert(columns.end(), extra.begin(), extra.end());
  const auto trailing = trailing_columns(subcommand);
  columns.insert(columns.end(), trailing.begin(), trailing.end());
  return columns;
}

std::string error_json(const std::exception& error) {
  json j;
  j["error"] = error.what();
  if (const auto* config = dynamic_cast<const ConfigError*>(&error)) {
    j["kind"] = "config";
    j["field"] = config->field();
    j["line"] = config->line();
  } else if (dynamic_cast<const std::invalid_argument*>(&error) || dynamic_cast<const std::domain_error*>(&error)) {
    j["kind"] = "invalid_argument";
  } else {
    j["kind"] = "runtime";
  }
  return j.dump();
}

int run(std::string_view subcommand, const RunConfig& config, std::ostream& out, std::ostream& log) {
  try {
    validate_for(config, subcommand);
    const Artifact art = dispatch(subcommand, config);
    const bool single = art.single.has_value();
    const OutputFormat format = config.format.value_or(single ? OutputFormat::json : OutputFormat::csv);
    std::ofstream file;
    std::ostream* sink = &out;
    if (config.path != "-") {
      file.open(config.path);
      if (!file) throw std::runtime_error("cannot open output file '" + config.path + "'");
      sink = &file;
    }
    if (format == OutputFormat::csv) {
      write_csv(*sink, subcommand, config, art);
    } else {
      write_json(*sink, subcommand, config, art);
    }
    if (!*sink) throw std::runtime_error("failed writing output");
    log << art.summary << '\n';
    return 0;
  } catch (const std::exception& e) {
    out << error_json(e) << '\n';
    log << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace multibeam
