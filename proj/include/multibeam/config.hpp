#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "multibeam/lattice.hpp"
#include "multibeam/units.hpp"

namespace multibeam {

/// Parse or validation failure. `line` is 0 when the problem is not tied to
/// a line of the input (JSON input, cross-field checks).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& message, std::string field, int line = 0);

  const std::string& field() const { return field_; }
  int line() const { return line_; }

 private:
  std::string field_;
  int line_;
};

enum class OutputFormat { csv, json };

/// All run parameters. Text form is sectioned key = value:
///
///   [array]     lattice, a, N
///   [mode]      w ("optimize" or w / L_a), NA, delta ("resonant" or detuning in gamma),
///               projection (filtered | unfiltered mirror mode)
///   [numerics]  N_k, bz_resolution, scan_half_width, scan_points, scan_tolerance
///   [sweep]     a_list, NA_list, N_list, a_range, a_tolerance, w_range, w_tolerance
///   [shift]     preset, axis, shift, periods, points
///   [disorder]  dr, dr_list, seeds, seed, antithetic
///   [output]    format, path
///
/// Keys may also appear before the first section header. '#' starts a comment.
struct RunConfig {
  LatticeKind lattice = LatticeKind::triangular;
  double a = 1.76;
  std::size_t n_atoms = 149;

  std::optional<double> waist_ratio;  // empty: optimize
  double na = 1.0;
  std::optional<double> detuning;  // empty: resonant
  bool filtered_projection = true;

  int grid_resolution = 256;
  int bz_resolution = 201;
  double scan_half_width = 5.0;
  int scan_points = 41;
  double scan_tolerance = 1e-3;

  std::vector<double> a_list;
  std::vector<double> na_list{1.0, 0.8, 0.7, 0.6};
  std::vector<std::size_t> n_list{61, 101, 149, 203, 305, 537, 800, 1100};
  std::optional<std::pair<double, double>> a_range;
  double a_tolerance = 0.01;
  std::pair<double, double> w_range{0.08, 0.6};
  double w_tolerance = 0.005;

  std::string preset = "none";
  std::string axis = "lateral";
  Vec3 shift = Vec3::Zero();
  double periods = 3.0;
  int points = 61;

  double dr = 0.0;
  std::vector<double> dr_list{0.0, 0.02, 0.04, 0.06, 0.08, 0.1, 0.12};
  std::size_t seeds = 20;
  std::uint64_t seed = 1;
  bool antithetic = true;

  std::optional<OutputFormat> format;  // empty: json for single points, csv for sweeps
  std::string path = "-";

  // Keys given explicitly in the parsed input.
  std::set<std::string> explicit_keys;

  bool is_explicit(const std::string& key) const { return explicit_keys.count(key) > 0; }
  /// Value equality; ignores which keys were explicit.
  bool operator==(const RunConfig& other) const;
};

/// Parses key = value text, or the JSON mirror when the first non-blank
/// character is '{'. Unknown keys, malformed values and out-of-range values
/// raise ConfigError naming the field and line.
RunConfig parse_config(std::string_view text);

/// Applies one "key=value" override (command line) to an existing config.
void apply_override(RunConfig& config, std::string_view assignment);

/// Canonical sectioned text with every key spelled out.
std::string emit_config(const RunConfig& config);

/// Checks cross-field constraints for a subcommand before any computation.
void validate_for(const RunConfig& config, std::string_view subcommand);

/// Subcommands accepted by run().
const std::vector<std::string>& subcommands();

}  // namespace multibeam
