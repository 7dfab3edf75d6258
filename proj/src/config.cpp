#include "multibeam/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>

#include <json.hpp>

namespace multibeam {

ConfigError::ConfigError(const std::string& message, std::string field, int line)
    : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + message : message),
      field_(std::move(field)), line_(line) {}

namespace {

std::string trim(std::string_view s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string_view::npos) return {};
  const auto end = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(begin, end - begin + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string format_double(double v) {
  char buf[64];
  const auto result = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, result.ptr);
}

struct Context {
  std::string key;
  int line = 0;

  [[noreturn]] void fail(const std::string& message) const { throw ConfigError(key + ": " + message, key, line); }
};

double parse_double(const std::string& text, const Context& ctx) {
  double v = 0.0;
  const auto result = std::from_chars(text.data(), text.data() + text.size(), v);
  if (result.ec != std::errc() || result.ptr != text.data() + text.size() || !std::isfinite(v)) {
    ctx.fail("expected a number, got '" + text + "'");
  }
  return v;
}

long long parse_integer(const std::string& text, const Context& ctx) {
  long long v = 0;
  const auto result = std::from_chars(text.data(), text.data() + text.size(), v);
  if (result.ec != std::errc() || result.ptr != text.data() + text.size()) {
    ctx.fail("expected an integer, got '" + text + "'");
  }
  return v;
}

double positive(double v, const Context& ctx) {
  if (!(v > 0.0)) ctx.fail("must be positive");
  return v;
}

std::vector<double> parse_list(const std::string& text, const Context& ctx) {
  std::vector<double> out;
  if (trim(text).empty()) return out;
  // start:stop:step expands to an inclusive arithmetic grid.
  if (text.find(':') != std::string::npos) {
    const auto parts = split(text, ':');
    if (parts.size() != 3) ctx.fail("range must be start:stop:step");
    const double start = parse_double(parts[0], ctx);
    const double stop = parse_double(parts[1], ctx);
    const double step = parse_double(parts[2], ctx);
    if (!(step > 0.0) || stop < start) ctx.fail("range needs start <= stop and a positive step");
    const auto count = static_cast<long long>(std::floor((stop - start) / step + 1e-9));
    for (long long i = 0; i <= count; ++i) out.push_back(start + static_cast<double>(i) * step);
    return out;
  }
  for (const auto& item : split(text, ',')) out.push_back(parse_double(item, ctx));
  return out;
}

void require_monotone(const std::vector<double>& values, const Context& ctx) {
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (!(values[i] > values[i - 1])) ctx.fail("grid must be strictly increasing");
  }
}

void require_monotone_desc_ok(const std::vector<double>& values, const Context& ctx) {
  // NA grids may run either way but must not repeat.
  bool up = true, down = true;
  for (std::size_t i = 1; i < values.size(); ++i) {
    up = up && values[i] > values[i - 1];
    down = down && values[i] < values[i - 1];
  }
  if (values.size() > 1 && !up && !down) ctx.fail("grid must be strictly monotone");
}

std::string join(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) out += (i ? "," : "") + format_double(values[i]);
  return out;
}

struct Key {
  std::string name;
  std::string section;
  std::function<void(RunConfig&, const std::string&, const Context&)> set;
  std::function<std::string(const RunConfig&)> get;
};

const std::vector<Key>& keys() {
  static const std::vector<Key> table = {
      {"lattice", "array",
       [](RunConfig& c, const std::string& v, const Context& ctx) {
         try {
           c.lattice = parse_lattice_kind(v);
         } catch (const std::exception&) {
           ctx.fail("expected triangular or square, got '" + v + "'");
         }
       },
       [](const RunConfig& c) { return std::string(to_string(c.lattice)); }},
      {"a", "array", [](RunConfig& c, const std::string& v, const Context& ctx) { c.a = positive(parse_double(v, ctx), ctx); },
       [](const RunConfig& c) { return format_double(c.a); }},
      {"N", "array",
       [](RunConfig& c, const std::string& v, const Context& ctx) {
         const auto n = parse_integer(v, ctx);
         if (n < 1) ctx.fail("must be at least 1");
         c.n_atoms = static_cast<std::size_t>(n);
       },
       [](const RunConfig& c) { return std::to_string(c.n_atoms); }},
      {"w", "mode",
       [](RunConfig& c, const std::string& v, const Context& ctx) {
         if (v == "optimize") {
           c.waist_ratio.reset();
         } else {
           c.waist_ratio = positive(parse_double(v, ctx), ctx);
         }
       },
       [](const RunConfig& c) { return c.waist_ratio ? format_double(*c.waist_ratio) : std::string("optimize"); }},
      {"NA", "mode",
       [](RunConfig& c, const std::string& v, const Context& ctx) {
         const double na = parse_double(v, ctx);
         if (!(na > 0.0 && na <= 1.0)) ctx.fail("must lie in (0, 1]");
         c.na = na;
       },
       [](const RunConfig& c) { return format_double(c.na); }},
      {"delta", "mode",
       [](RunConfig& c, const std::string& v, const Context& ctx) {
         if (v == "resonant") {
           c.detuning.reset();
         } else {
           c.detuning = parse_double(v, ctx);
         }
       },
       [](const RunConfig& c) { return c.detuning ? format_double(*c.detuning) : std::string("resonant"); }},
      {"projection", "mode",
       [](RunConfig& c, const std::string& v, const Context& ctx) {
         if (v != "filtered" && v != "unfiltered") ctx.fail("expected filtered or unfiltered, got '" + v + "'");
         c.filtered_projection = v == "filtered";
       },
       [](const RunConfig& c) { return std::string(c.filtered_projection ? "filtered" : "unfiltered"); }},
      {"N_k", "numerics",
       [](RunConfig& c, const std::string& v, const Context& ctx) {
         const auto n = parse_integer(v, ctx);
         if (n < 8 || n > 4096) ctx.fail("must lie in [8, 4096]");
         c.grid_resolution = static_cast<int>(n);
       },
       [](const RunConfig& c) { return std::to_string(c.grid_resolution); }},
      {"bz_resolution", "numerics",
       [](RunConfig& c, const std::string& v, const Context& ctx) {
         const auto n = parse_integer(v, ctx);
         if (n < 4 || n > 4096) ctx.fail("must lie in [4, 4096]");
         c.bz_resolution = static_cast<int>(n);
       },
       [](const RunConfig& c) { return std::to_string(c.bz_resolution); }},
      {"scan_half_width", "numerics",
       [](RunConfig& c, const std::string& v, const Context& ctx) { c.scan_half_width = positive(parse_double(v, ctx), ctx); },
       [](const RunConfig& c) { return format_double(c.scan_half_width); }},
      {"scan_points", "numerics",
       [](RunConfig& c, const std::string& v, const Context& ctx) {
         const auto n = parse_integer(v, ctx);
         if (n < 3) ctx.fail("must be at least 3");
         c.scan_points = static_cast<int>(n);
       },
       [](const RunConfig& c) { return std::to_string(c.scan_points); }},
      {"scan_tolerance", "numerics",
       [](RunConfig& c, const std::string& v, const Context& ctx) { c.scan_tolerance = positive(parse_double(v, ctx), ctx); },
       [](const RunConfig& c) { return format_double(c.scan_tolerance); }},
      {"a_list", "sweep",
       [](RunConfig& c, const std::string& v, const Context& ctx) {
         auto list = parse_list(v, ctx);
         require_monotone(list, ctx);
         for (double a : list) positive(a, ctx);
         c.a_list = std::move(list);
       },
       [](const RunConfig& c) { return join(c.a_list); }},
      {"NA_list", "sweep",
       [](RunConfig& c, const std::string& v, const Context& ctx) {
         auto list = parse_list(v, ctx);
         require_monotone_desc_ok(list, ctx);
         for (double na : list) {
           if (!(na > 0.0 && na <= 1.0)) ctx.fail("every NA must lie in (0, 1]");
         }
         c.na_list = std::move(list);
       },
       [](const RunConfig& c) { return join(c.na_list); }},
      {"N_list", "sweep",
       [](RunConfig& c, const std::string& v, const Context& ctx) {
         std::vector<std::size_t> list;
         for (const auto& item : split(v, ',')) {
           const auto n = parse_integer(item, ctx);
           if (n < 1) ctx.fail("every N must be at least 1");
           if (!list.empty() && static_cast<std::size_t>(n) <= list.back()) ctx.fail("grid must be strictly increasing");
           list.push_back(static_cast<std::size_t>(n));
         }
         c.n_list = std::move(list);
       },
       [](const RunConfig& c) {
         std::string out;
         for (std::size_t i = 0; i < c.n_list.size(); ++i) out += (i ? "," : "") + std::to_string(c.n_list[i]);
         return out;
       }},
      {"a_range", "sweep",
       [](RunConfig& c, const std::string& v, const Context& ctx) {
         if (v == "window") {
           c.a_range.reset();
           return;
         }
         const auto list = parse_list(v, ctx);
         if (list.size() != 2 || !(list[1] > list[0])) ctx.fail("expected 'window' or lo,hi with lo < hi");
         c.a_range = std::make_pair(list[0], list[1]);
       },
       [](const RunConfig& c) {
         return c.a_range ? format_double(c.a_range->first) + "," + format_double(c.a_range->second)
                          : std::string("window");
       }},
      {"a_tolerance", "sweep",
       [](RunConfig& c, const std::string& v, const Context& ctx) { c.a_tolerance = positive(parse_double(v, ctx), ctx); },
       [](const RunConfig& c) { return format_double(c.a_tolerance); }},
      {"w_range", "sweep",
       [](RunConfig& c, const std::string& v, const Context& ctx) {
         const auto list = parse_list(v, ctx);
         if (list.size() != 2 || !(list[0] > 0.0) || !(list[1] > list[0])) ctx.fail("expected lo,hi with 0 < lo < hi");
         c.w_range = {list[0], list[1]};
       },
       [](const RunConfig& c) { return format_double(c.w_range.first) + "," + format_double(c.w_range.second); }},
      {"w_tolerance", "sweep",
       [](RunConfig& c, const std::string& v, const Context& ctx) { c.w_tolerance = positive(parse_double(v, ctx), ctx); },
       [](const RunConfig& c) { return format_double(c.w_tolerance); }},
      {"preset", "shift",
       [](RunConfig& c, const std::string& v, const Context& ctx) {
         if (v != "none" && v != "robustness") ctx.fail("expected none or robustness, got '" + v + "'");
         c.preset = v;
       },
       [](const RunConfig& c) { return c.preset; }},
      {"axis", "shift",
       [](RunConfig& c, const std::string& v, const Context& ctx) {
         if (v != "lateral" && v != "axial") ctx.fail("expected lateral or axial, got '" + v + "'");
         c.axis = v;
       },
       [](const RunConfig& c) { return c.axis; }},
      {"shift", "shift",
       [](RunConfig& c, const std::string& v, const Context& ctx) {
         const auto parts = split(v, ',');
         if (parts.size() != 3) ctx.fail("expected x,y,z");
         c.shift = Vec3(parse_double(parts[0], ctx), parse_double(parts[1], ctx), parse_double(parts[2], ctx));
       },
       [](const RunConfig& c) {
         return format_double(c.shift.x()) + "," + format_double(c.shift.y()) + "," + format_double(c.shift.z());
       }},
      {"periods", "shift",
       [](RunConfig& c, const std::string& v, const Context& ctx) { c.periods = positive(parse_double(v, ctx), ctx); },
       [](const RunConfig& c) { return format_double(c.periods); }},
      {"points", "shift",
       [](RunConfig& c, const std::string& v, const Context& ctx) {
         const auto n = parse_integer(v, ctx);
         if (n < 3) ctx.fail("must be at least 3");
         c.points = static_cast<int>(n);
       },
       [](const RunConfig& c) { return std::to_string(c.points); }},
      {"dr", "disorder",
       [](RunConfig& c, const std::string& v, const Context& ctx) {
         const double dr = parse_double(v, ctx);
         if (!(dr >= 0.0 && dr <= 0.15)) ctx.fail("must lie in [0, 0.15] (units of a)");
         c.dr = dr;
       },
       [](const RunConfig& c) { return format_double(c.dr); }},
      {"dr_list", "disorder",
       [](RunConfig& c, const std::string& v, const Context& ctx) {
         auto list = parse_list(v, ctx);
         require_monotone(list, ctx);
         for (double dr : list) {
           if (!(dr >= 0.0 && dr <= 0.15)) ctx.fail("every value must lie in [0, 0.15] (units of a)");
         }
         c.dr_list = std::move(list);
       },
       [](const RunConfig& c) { return join(c.dr_list); }},
      {"seeds", "disorder",
       [](RunConfig& c, const std::string& v, const Context& ctx) {
         const auto n = parse_integer(v, ctx);
         if (n < 1) ctx.fail("must be at least 1");
         c.seeds = static_cast<std::size_t>(n);
       },
       [](const RunConfig& c) { return std::to_string(c.seeds); }},
      {"seed", "disorder",
       [](RunConfig& c, const std::string& v, const Context& ctx) {
         const auto n = parse_integer(v, ctx);
         if (n < 0) ctx.fail("must be non-negative");
         c.seed = static_cast<std::uint64_t>(n);
       },
       [](const RunConfig& c) { return std::to_string(c.seed); }},
      {"antithetic", "disorder",
       [](RunConfig& c, const std::string& v, const Context& ctx) {
         if (v == "true") {
           c.antithetic = true;
         } else if (v == "false") {
           c.antithetic = false;
         } else {
           ctx.fail("expected true or false, got '" + v + "'");
         }
       },
       [](const RunConfig& c) { return std::string(c.antithetic ? "true" : "false"); }},
      {"format", "output",
       [](RunConfig& c, const std::string& v, const Context& ctx) {
         if (v == "csv") {
           c.format = OutputFormat::csv;
         } else if (v == "json") {
           c.format = OutputFormat::json;
         } else if (v == "auto") {
           c.format.reset();
         } else {
           ctx.fail("expected csv, json or auto, got '" + v + "'");
         }
       },
       [](const RunConfig& c) {
         return c.format ? std::string(*c.format == OutputFormat::csv ? "csv" : "json") : std::string("auto");
       }},
      {"path", "output", [](RunConfig& c, const std::string& v, const Context&) { c.path = v; },
       [](const RunConfig& c) { return c.path; }},
  };
  return table;
}

const Key* find_key(const std::string& name) {
  for (const auto& key : keys()) {
    if (key.name == name) return &key;
  }
  return nullptr;
}

bool known_section(const std::string& name) {
  return std::any_of(keys().begin(), keys().end(), [&](const Key& k) { return k.section == name; });
}

void assign(RunConfig& config, const std::string& section, const std::string& name, const std::string& value,
            int line) {
  const Key* key = find_key(name);
  if (!key) throw ConfigError("unknown key '" + name + "'", name, line);
  if (!section.empty() && section != key->section) {
    throw ConfigError("key '" + name + "' belongs in section [" + key->section + "], not [" + section + "]", name,
                      line);
  }
  if (config.explicit_keys.count(name) && line > 0) {
    throw ConfigError("key '" + name + "' given twice", name, line);
  }
  key->set(config, value, Context{name, line});
  config.explicit_keys.insert(name);
}

std::string json_scalar(const nlohmann::json& value, const std::string& name) {
  if (value.is_string()) return value.get<std::string>();
  if (value.is_boolean()) return value.get<bool>() ? "true" : "false";
  if (value.is_number_integer()) return std::to_string(value.get<long long>());
  if (value.is_number()) return format_double(value.get<double>());
  if (value.is_array()) {
    std::string out;
    for (std::size_t i = 0; i < value.size(); ++i) {
      if (value[i].is_array() || value[i].is_object()) {
        throw ConfigError(name + ": nested arrays are not allowed", name);
      }
      out += (i ? "," : "") + json_scalar(value[i], name);
    }
    return out;
  }
  throw ConfigError(name + ": unsupported value type", name);
}

RunConfig parse_json(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what(), "");
  }
  if (!doc.is_object()) throw ConfigError("JSON config must be an object", "");
  RunConfig config;
  auto set_one = [&](const std::string& section, const std::string& name, const nlohmann::json& value) {
    if (config.explicit_keys.count(name)) throw ConfigError("key '" + name + "' given twice", name);
    assign(config, section, name, json_scalar(value, name), 0);
  };
  for (const auto& [name, value] : doc.items()) {
    if (value.is_object()) {
      if (!known_section(name)) throw ConfigError("unknown section '" + name + "'", name);
      for (const auto& [inner, inner_value] : value.items()) set_one(name, inner, inner_value);
    } else {
      set_one("", name, value);
    }
  }
  return config;
}

}  // namespace

bool RunConfig::operator==(const RunConfig& other) const {
  for (const auto& key : keys()) {
    if (key.get(*this) != key.get(other)) return false;
  }
  return true;
}

RunConfig parse_config(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string_view::npos && text[first] == '{') return parse_json(text);

  RunConfig config;
  std::string section;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string content = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (content.empty()) continue;
    if (content.front() == '[') {
      if (content.back() != ']') throw ConfigError("malformed section header '" + content + "'", "", line);
      section = trim(content.substr(1, content.size() - 2));
      if (!known_section(section)) throw ConfigError("unknown section [" + section + "]", section, line);
      continue;
    }
    const auto eq = content.find('=');
    if (eq == std::string::npos) throw ConfigError("expected key = value, got '" + content + "'", "", line);
    const std::string name = trim(content.substr(0, eq));
    const std::string value = trim(content.substr(eq + 1));
    if (name.empty()) throw ConfigError("missing key before '='", "", line);
    assign(config, section, name, value, line);
  }
  return config;
}

void apply_override(RunConfig& config, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw ConfigError("override must be key=value, got '" + std::string(assignment) + "'", "");
  }
  std::string name = trim(assignment.substr(0, eq));
  // Allow section.key for symmetry with the text form.
  std::string section;
  if (const auto dot = name.find('.'); dot != std::string::npos) {
    section = name.substr(0, dot);
    name = name.substr(dot + 1);
  }
  const std::string value = trim(assignment.substr(eq + 1));
  config.explicit_keys.erase(name);
  assign(config, section, name, value, 0);
}

std::string emit_config(const RunConfig& config) {
  std::ostringstream out;
  std::string section;
  for (const auto& key : keys()) {
    if (key.section != section) {
      if (!section.empty()) out << '\n';
      section = key.section;
      out << '[' << section << "]\n";
    }
    out << key.name << " = " << key.get(config) << '\n';
  }
  return out.str();
}

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names = {"infinite-r0", "theory-r0", "scatter-r0",
                                                 "sweep-spacing", "sweep-na", "scale-n",
                                                 "scan-shift", "disorder", "optimize-waist"};
  return names;
}

void validate_for(const RunConfig& config, std::string_view subcommand) {
  const auto& names = subcommands();
  if (std::find(names.begin(), names.end(), subcommand) == names.end()) {
    throw ConfigError("unknown subcommand '" + std::string(subcommand) + "'", "subcommand");
  }
  const double lo = config.lattice == LatticeKind::triangular ? 2.0 / std::sqrt(3.0) : 1.0;
  const double hi = config.lattice == LatticeKind::triangular ? 2.0 : std::sqrt(2.0);
  auto in_window = [&](double a, const std::string& field) {
    if (!(a > lo && a < hi)) {
      std::ostringstream msg;
      msg << field << ": a = " << a << " lies outside the single-shell window (" << lo << ", " << hi << ") of the "
          << to_string(config.lattice) << " lattice";
      throw ConfigError(msg.str(), field);
    }
  };
  const bool uses_single_spacing = subcommand == "theory-r0" || subcommand == "scatter-r0" ||
                                   subcommand == "optimize-waist" || subcommand == "sweep-na" ||
                                   subcommand == "disorder";
  if (uses_single_spacing) in_window(config.a, "a");
  if (subcommand == "sweep-spacing") {
    if (config.a_list.empty()) throw ConfigError("a_list: sweep-spacing needs a spacing grid", "a_list");
    for (double a : config.a_list) in_window(a, "a_list");
  }
  if (subcommand == "scan-shift") {
    if (config.preset == "none") {
      if (config.a_list.empty()) {
        in_window(config.a, "a");
      } else {
        for (double a : config.a_list) in_window(a, "a_list");
      }
      if (!config.waist_ratio) throw ConfigError("w: scan-shift needs a fixed waist ratio", "w");
    }
  }
  if (subcommand == "scale-n" && config.a_range) {
    in_window(config.a_range->first, "a_range");
    in_window(config.a_range->second, "a_range");
  }
  if (subcommand == "disorder" && config.dr_list.empty()) {
    throw ConfigError("dr_list: disorder needs at least one strength", "dr_list");
  }
  if (config.waist_ratio && (subcommand == "theory-r0" || subcommand == "scatter-r0") && *config.waist_ratio > 5.0) {
    throw ConfigError("w: waist ratio above 5 leaves no overlap with the array", "w");
  }
}

}  // namespace multibeam
