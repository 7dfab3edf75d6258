#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "multibeam/diffraction.hpp"
#include "multibeam/interface_metrics.hpp"
#include "multibeam/interface_result.hpp"
#include "multibeam/lattice.hpp"

namespace multibeam {

/// Numerical resolution shared by every study.
struct EvaluationSettings {
  int grid_resolution = 256;
  int bz_resolution = 201;
  double scan_half_width = 5.0;
  int scan_points = 41;
  double scan_tolerance = 1e-3;
  MirrorProjection projection = MirrorProjection::filtered;
};

/// Number of worker threads: MULTIBEAM_WORKERS if set, else the hardware count.
unsigned worker_count();

/// Runs task(i) for i in [0, count) on the worker pool. Results are stored by
/// index so the output order never depends on scheduling.
template <class T>
std::vector<T> parallel_map(std::size_t count, const std::function<T(std::size_t)>& task);

/// Window (exclusive) where only the zeroth order and the first shell radiate.
std::pair<double, double> single_shell_window(LatticeKind kind);

/// Target-mode beams for the first shell plus the zeroth order.
OrderSet default_target(const LatticeSpec& lattice);

/// Scattering r0 at resonance for a Gaussian target mode of the given waist.
/// The detuning scan is centred on the D_00 shift of the same waist.
InterfaceResult resonant_scattering(const AtomArray& array, const OrderSet& target, double waist, double na,
                                    const EvaluationSettings& settings,
                                    std::shared_ptr<const ArrayOperator> op = nullptr);

/// Finite-size theory at one waist; delta_res is the D_00 shift.
InterfaceResult theory_point(const AtomArray& array, const OrderSet& target, double waist,
                             const EvaluationSettings& settings);

struct WaistSearch {
  double lo = 0.08;
  double hi = 0.6;
  double tolerance = 0.005;
  double certificate_step = 0.02;
};

struct WaistOptimum {
  // Optimal waist in units of L_a and in wavelengths.
  double ratio = 0.0;
  double waist = 0.0;
  InterfaceResult result;
  // r0 at ratio -/+ certificate_step (local-maximum certificate).
  double r0_minus = 0.0;
  double r0_plus = 0.0;
  int evaluations = 0;
};

/// Golden-section search of the resonant scattering r0 over w / L_a.
WaistOptimum optimize_waist(const AtomArray& array, const OrderSet& target, double na,
                            const EvaluationSettings& settings, const WaistSearch& search = {},
                            std::shared_ptr<const ArrayOperator> op = nullptr);

/// One output row. `swept` and `extra` are ordered (name, value) columns
/// fixed per study; `result` supplies r0, gamma, gamma_loss and delta_res.
struct SweepRow {
  std::vector<std::pair<std::string, double>> swept;
  InterfaceResult result;
  double w_opt = 0.0;
  std::vector<std::pair<std::string, double>> extra;
};

struct SpacingSweepSpec {
  LatticeKind kind = LatticeKind::triangular;
  std::size_t n_atoms = 149;
  std::vector<double> spacings;
  std::vector<double> nas{1.0};
  // Fixed w / L_a, or optimized per row when empty.
  std::optional<double> waist_ratio;
  EvaluationSettings settings;
  WaistSearch waist_search;
};

/// Per (NA, spacing): infinite-array r0, finite theory r0 and scattering r0.
std::vector<SweepRow> sweep_spacing(const SpacingSweepSpec& spec);

struct NaSweepSpec {
  LatticeKind kind = LatticeKind::triangular;
  std::size_t n_atoms = 149;
  double spacing = 1.8;
  std::vector<double> nas{1.0, 0.8, 0.7, 0.6};
  std::optional<double> waist_ratio;
  EvaluationSettings settings;
  WaistSearch waist_search;
};

std::vector<SweepRow> sweep_na(const NaSweepSpec& spec);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  std::size_t points = 0;
};

/// Least-squares line through (x, y).
LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

struct ScaleSpec {
  LatticeKind kind = LatticeKind::triangular;
  std::vector<std::size_t> n_atoms{61, 101, 149, 203, 305, 537, 800, 1100};
  double na = 1.0;
  // Outer search over a / lambda; defaults to the single-shell window
  // shrunk by 0.01 at both ends.
  std::optional<std::pair<double, double>> spacing_range;
  double spacing_tolerance = 0.01;
  std::size_t fit_min_atoms = 203;
  EvaluationSettings settings;
  WaistSearch waist_search;
};

struct ScaleResult {
  std::vector<SweepRow> rows;
  // log(1 - r0) against log N over rows with N >= fit_min_atoms.
  LinearFit fit;
};

/// Joint (a, w) optimization per atom number.
ScaleResult scale_n(const ScaleSpec& spec);

enum class ShiftAxis { lateral, axial };

struct ShiftSpec {
  ShiftAxis axis = ShiftAxis::lateral;
  LatticeKind kind = LatticeKind::triangular;
  // Defaults reproduce the shift-robustness preset: N = 537, w / L_a = 0.25, a / lambda = 1.76.
  std::size_t n_atoms = 537;
  double waist_ratio = 0.25;
  std::vector<double> spacings{1.76};
  double na = 1.0;
  // Scan [0, periods * unit] with unit = a (lateral) or lambda_eff (axial).
  double periods = 3.0;
  int points = 61;
  EvaluationSettings settings;
};

/// Axial beating period 2 pi / (k - k_z) of the first-shell beams.
double beating_period(const LatticeSpec& lattice);

struct ShiftAnalysis {
  double spacing = 0.0;
  double unit = 0.0;
  double period = 0.0;
  std::size_t peaks = 0;
};

struct ShiftResult {
  std::vector<SweepRow> rows;
  std::vector<ShiftAnalysis> analysis;
  // Largest difference between the min-max normalized curves of different
  // spacings on the common rescaled axis.
  double collapse_deviation = 0.0;
};

ShiftResult scan_shift(const ShiftSpec& spec);

/// Mean spacing of the local maxima of y(x), refined by parabolic interpolation.
ShiftAnalysis peak_period(const std::vector<double>& x, const std::vector<double>& y);

struct DisorderSpec {
  LatticeKind kind = LatticeKind::triangular;
  std::size_t n_atoms = 149;
  double spacing = 1.76;
  double na = 1.0;
  // Fixed w / L_a, or the clean-array optimum when empty.
  std::optional<double> waist_ratio;
  // Displacement standard deviation per Cartesian component, in units of a.
  std::vector<double> strengths{0.0, 0.02, 0.04, 0.06, 0.08, 0.1, 0.12};
  std::size_t seeds = 20;
  std::uint64_t base_seed = 1;
  // Pair each seed with its negated draw.
  bool antithetic = true;
  EvaluationSettings settings;
  WaistSearch waist_search;
};

struct DisorderResult {
  std::vector<SweepRow> rows;
  // log of the excess inefficiency against log(delta r / a), excluding delta r = 0.
  LinearFit fit;
};

DisorderResult disorder_study(const DisorderSpec& spec);

}  // namespace multibeam

#include "multibeam/parallel.ipp"
