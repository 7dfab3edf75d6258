#include "multibeam/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <string>
#include <thread>
#include <tuple>

#include "multibeam/finite_theory.hpp"
#include "multibeam/optimize.hpp"
#include "multibeam/target_mode.hpp"

namespace multibeam {

namespace {

std::shared_ptr<const BZQuadrature> cached_quadrature(const LatticeSpec& lattice, int resolution) {
  static std::mutex mutex;
  static std::map<std::tuple<int, double, int>, std::shared_ptr<const BZQuadrature>> cache;
  const auto key = std::make_tuple(static_cast<int>(lattice.kind()), lattice.spacing(), resolution);
  const std::lock_guard lock(mutex);
  auto& slot = cache[key];
  if (!slot) slot = std::make_shared<const BZQuadrature>(lattice, resolution);
  return slot;
}

void require_in_window(LatticeKind kind, double spacing) {
  const auto [lo, hi] = single_shell_window(kind);
  if (!(spacing > lo && spacing < hi)) {
    throw std::invalid_argument("spacing " + std::to_string(spacing) + " lies outside the single-shell window of the " +
                                std::string(to_string(kind)) + " lattice");
  }
}

void require_na(double na) {
  if (!(na > 0.0 && na <= 1.0)) {
    throw std::invalid_argument("NA must lie in (0, 1]");
  }
}

struct WaistChoice {
  double ratio = 0.0;
  InterfaceResult result;
  double r0_minus = 0.0;
  double r0_plus = 0.0;
};

WaistChoice choose_waist(const AtomArray& array, const OrderSet& target, double na, std::optional<double> fixed,
                         const EvaluationSettings& settings, const WaistSearch& search,
                         std::shared_ptr<const ArrayOperator> op) {
  if (fixed) {
    if (!(*fixed > 0.0)) {
      throw std::invalid_argument("waist ratio must be positive");
    }
    const double w = *fixed * array.linear_size();
    return {*fixed, resonant_scattering(array, target, w, na, settings, op), 0.0, 0.0};
  }
  const WaistOptimum best = optimize_waist(array, target, na, settings, search, op);
  return {best.ratio, best.result, best.r0_minus, best.r0_plus};
}

double mean(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

unsigned worker_count() {
  if (const char* env = std::getenv("MULTIBEAM_WORKERS")) {
    char* end = nullptr;
    const long value = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && value > 0) return static_cast<unsigned>(value);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::pair<double, double> single_shell_window(LatticeKind kind) {
  switch (kind) {
    case LatticeKind::triangular:
      return {2.0 / std::sqrt(3.0), 2.0};
    case LatticeKind::square:
      return {1.0, std::sqrt(2.0)};
  }
  throw std::invalid_argument("single_shell_window: unknown lattice kind");
}

OrderSet default_target(const LatticeSpec& lattice) { return first_shell_orders(lattice); }

InterfaceResult resonant_scattering(const AtomArray& array, const OrderSet& target, double waist, double na,
                                    const EvaluationSettings& settings, std::shared_ptr<const ArrayOperator> op) {
  if (!op) op = std::make_shared<const ArrayOperator>(array);
  const TargetMode mode = assemble_mode(array.lattice, target, waist, Direction::forward);
  const ReflectivityModel model(array, mode, na, settings.grid_resolution, op, settings.projection);
  ResonanceSearch search;
  search.half_width = settings.scan_half_width;
  search.points = settings.scan_points;
  search.tolerance = settings.scan_tolerance;
  if (array.size() > 0) {
    search.center = d_matrix_00(GaussianCollectiveMode(array, waist), op->interaction).imag();
  }
  InterfaceResult result = find_resonance(model, search);
  result.diagnostics["waist_ratio"] = array.size() > 0 ? waist / array.linear_size() : 0.0;
  return result;
}

InterfaceResult theory_point(const AtomArray& array, const OrderSet& target, double waist,
                             const EvaluationSettings& settings) {
  const GaussianCollectiveMode mode(array, waist);
  const auto quad = cached_quadrature(array.lattice, settings.bz_resolution);
  return r0_finite_theory(mode, target, *quad);
}

WaistOptimum optimize_waist(const AtomArray& array, const OrderSet& target, double na,
                            const EvaluationSettings& settings, const WaistSearch& search,
                            std::shared_ptr<const ArrayOperator> op) {
  if (array.size() == 0) {
    throw std::invalid_argument("optimize_waist: empty array");
  }
  if (!(search.lo > 0.0 && search.hi > search.lo)) {
    throw std::invalid_argument("optimize_waist: invalid waist range");
  }
  if (!op) op = std::make_shared<const ArrayOperator>(array);
  const double length = array.linear_size();
  std::map<double, InterfaceResult> evaluated;
  auto r0_at = [&](double ratio) {
    auto it = evaluated.find(ratio);
    if (it == evaluated.end()) {
      it = evaluated.emplace(ratio, resonant_scattering(array, target, ratio * length, na, settings, op)).first;
    }
    return it->second.r0;
  };
  const ScalarMaximum best = golden_section_maximize(r0_at, search.lo, search.hi, search.tolerance);
  WaistOptimum out;
  out.ratio = best.x;
  out.waist = best.x * length;
  out.result = evaluated.at(best.x);
  out.evaluations = best.evaluations;
  if (best.at_boundary) {
    out.result.warnings.push_back("optimal waist on the boundary of the search range");
  }
  out.r0_minus = r0_at(std::max(best.x - search.certificate_step, 1e-3));
  out.r0_plus = r0_at(best.x + search.certificate_step);
  return out;
}

std::vector<SweepRow> sweep_spacing(const SpacingSweepSpec& spec) {
  for (double a : spec.spacings) require_in_window(spec.kind, a);
  for (double na : spec.nas) require_na(na);
  if (spec.n_atoms == 0) {
    throw std::invalid_argument("sweep_spacing: N must be at least 1");
  }
  const std::size_t count = spec.spacings.size() * spec.nas.size();
  return parallel_map<SweepRow>(count, [&](std::size_t index) {
    const double na = spec.nas[index / spec.spacings.size()];
    const double a = spec.spacings[index % spec.spacings.size()];
    const LatticeSpec lattice(spec.kind, a);
    const AtomArray array = build_patch(lattice, spec.n_atoms);
    const OrderSet target = default_target(lattice);
    const auto op = std::make_shared<const ArrayOperator>(array);
    const WaistChoice choice =
        choose_waist(array, target, na, spec.waist_ratio, spec.settings, spec.waist_search, op);
    const InterfaceResult theory = theory_point(array, target, choice.ratio * array.linear_size(), spec.settings);
    SweepRow row;
    row.swept = {{"a", a}, {"na", na}};
    row.result = choice.result;
    row.w_opt = choice.ratio;
    row.extra = {{"r0_infinite", r0_infinite(lattice, target).r0},
                 {"r0_theory", theory.r0},
                 {"r0_minus", choice.r0_minus},
                 {"r0_plus", choice.r0_plus}};
    return row;
  });
}

std::vector<SweepRow> sweep_na(const NaSweepSpec& spec) {
  require_in_window(spec.kind, spec.spacing);
  for (double na : spec.nas) require_na(na);
  const LatticeSpec lattice(spec.kind, spec.spacing);
  const AtomArray array = build_patch(lattice, spec.n_atoms);
  const OrderSet target = default_target(lattice);
  const auto op = std::make_shared<const ArrayOperator>(array);
  return parallel_map<SweepRow>(spec.nas.size(), [&](std::size_t index) {
    const double na = spec.nas[index];
    const WaistChoice choice =
        choose_waist(array, target, na, spec.waist_ratio, spec.settings, spec.waist_search, op);
    SweepRow row;
    row.swept = {{"na", na}};
    row.result = choice.result;
    row.w_opt = choice.ratio;
    row.extra = {{"r0_minus", choice.r0_minus}, {"r0_plus", choice.r0_plus}};
    return row;
  });
}

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw std::invalid_argument("fit_line: need at least two points");
  }
  const double mx = mean(x), my = mean(y);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0.0) {
    throw std::invalid_argument("fit_line: abscissae are all equal");
  }
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.points = x.size();
  return fit;
}

ScaleResult scale_n(const ScaleSpec& spec) {
  require_na(spec.na);
  auto range = spec.spacing_range;
  if (!range) {
    const auto [lo, hi] = single_shell_window(spec.kind);
    range = std::make_pair(lo + 0.01, hi - 0.01);
  }
  require_in_window(spec.kind, range->first);
  require_in_window(spec.kind, range->second);
  for (auto n : spec.n_atoms) {
    if (n == 0) throw std::invalid_argument("scale_n: N must be at least 1");
  }
  ScaleResult out;
  out.rows = parallel_map<SweepRow>(spec.n_atoms.size(), [&](std::size_t index) {
    const std::size_t n = spec.n_atoms[index];
    std::map<double, WaistOptimum> evaluated;
    auto r0_at = [&](double a) {
      auto it = evaluated.find(a);
      if (it == evaluated.end()) {
        const LatticeSpec lattice(spec.kind, a);
        const AtomArray array = build_patch(lattice, n);
        it = evaluated.emplace(a, optimize_waist(array, default_target(lattice), spec.na, spec.settings,
                                                 spec.waist_search)).first;
      }
      return it->second.result.r0;
    };
    const ScalarMaximum best = golden_section_maximize(r0_at, range->first, range->second, spec.spacing_tolerance);
    const WaistOptimum& opt = evaluated.at(best.x);
    SweepRow row;
    row.swept = {{"n", static_cast<double>(n)}};
    row.result = opt.result;
    if (best.at_boundary) row.result.warnings.push_back("optimal spacing on the boundary of the search range");
    row.w_opt = opt.ratio;
    const LatticeSpec lattice(spec.kind, best.x);
    row.extra = {{"a_opt", best.x},
                 {"one_minus_r0", 1.0 - opt.result.r0},
                 {"linear_size", build_patch(lattice, n).linear_size()},
                 {"r0_minus", opt.r0_minus},
                 {"r0_plus", opt.r0_plus}};
    return row;
  });
  std::vector<double> x, y;
  for (const auto& row : out.rows) {
    const double n = row.swept.front().second;
    const double loss = 1.0 - row.result.r0;
    if (n >= static_cast<double>(spec.fit_min_atoms) && loss > 0.0) {
      x.push_back(std::log(n));
      y.push_back(std::log(loss));
    }
  }
  if (x.size() >= 2) out.fit = fit_line(x, y);
  return out;
}

double beating_period(const LatticeSpec& lattice) {
  const OrderSet shell = first_shell_orders(lattice);
  for (const auto& order : shell.orders) {
    if (order.m != OrderIndex{0, 0}) return kWavelength / (1.0 - order.cos_theta);
  }
  throw std::invalid_argument("beating_period: no radiative first-shell order");
}

ShiftAnalysis peak_period(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 3) {
    throw std::invalid_argument("peak_period: need at least three samples");
  }
  const std::size_t n = y.size();
  const auto [lo_it, hi_it] = std::minmax_element(y.begin(), y.end());
  const double range = *hi_it - *lo_it;
  std::vector<std::size_t> maxima;
  for (std::size_t i = 0; i < n; ++i) {
    const bool left = i == 0 || y[i] > y[i - 1];
    const bool right = i + 1 == n || y[i] >= y[i + 1];
    if (left && right) maxima.push_back(i);
  }
  // Keep maxima that rise above the minima between them and their neighbours
  // by at least a tenth of the full range.
  std::vector<double> peaks;
  for (std::size_t j = 0; j < maxima.size(); ++j) {
    const std::size_t i = maxima[j];
    const std::size_t left_end = j == 0 ? 0 : maxima[j - 1];
    const std::size_t right_end = j + 1 == maxima.size() ? n - 1 : maxima[j + 1];
    const double left_min = *std::min_element(y.begin() + static_cast<long>(left_end), y.begin() + static_cast<long>(i) + 1);
    const double right_min = *std::min_element(y.begin() + static_cast<long>(i), y.begin() + static_cast<long>(right_end) + 1);
    const double floor = i == 0 ? right_min : (i + 1 == n ? left_min : std::max(left_min, right_min));
    if (y[i] - floor < 0.1 * range) continue;
    double position = x[i];
    if (i > 0 && i + 1 < n) {
      const double denom = y[i - 1] - 2.0 * y[i] + y[i + 1];
      if (denom < 0.0) position += 0.5 * (y[i - 1] - y[i + 1]) / denom * (x[i + 1] - x[i]);
    }
    peaks.push_back(position);
  }
  ShiftAnalysis out;
  out.peaks = peaks.size();
  if (peaks.size() >= 2) out.period = (peaks.back() - peaks.front()) / static_cast<double>(peaks.size() - 1);
  return out;
}

ShiftResult scan_shift(const ShiftSpec& spec) {
  require_na(spec.na);
  if (spec.points < 3 || !(spec.periods > 0.0) || spec.spacings.empty()) {
    throw std::invalid_argument("scan_shift: need at least three points over a positive range");
  }
  for (double a : spec.spacings) require_in_window(spec.kind, a);

  struct Geometry {
    AtomArray array;
    OrderSet target;
    std::shared_ptr<const ArrayOperator> op;
    double unit = 0.0;
  };
  const auto geometries = parallel_map<std::shared_ptr<Geometry>>(spec.spacings.size(), [&](std::size_t i) {
    const LatticeSpec lattice(spec.kind, spec.spacings[i]);
    auto g = std::make_shared<Geometry>(Geometry{build_patch(lattice, spec.n_atoms), default_target(lattice), nullptr,
                                                 spec.axis == ShiftAxis::lateral ? lattice.spacing() : beating_period(lattice)});
    g->op = std::make_shared<const ArrayOperator>(g->array);
    return g;
  });

  const auto points = static_cast<std::size_t>(spec.points);
  ShiftResult out;
  out.rows = parallel_map<SweepRow>(spec.spacings.size() * points, [&](std::size_t index) {
    const Geometry& g = *geometries[index / points];
    const std::size_t i = index % points;
    const double fraction = spec.periods * static_cast<double>(i) / static_cast<double>(points - 1);
    const double d = fraction * g.unit;
    const Vec3 offset = spec.axis == ShiftAxis::lateral ? Vec3(d, 0.0, 0.0) : Vec3(0.0, 0.0, d);
    const AtomArray shifted = apply_shift(g.array, offset);
    const double waist = spec.waist_ratio * g.array.linear_size();
    SweepRow row;
    row.swept = {{"a", g.array.lattice.spacing()}, {"d", d}, {"d_rescaled", fraction}};
    row.result = resonant_scattering(shifted, g.target, waist, spec.na, spec.settings, g.op);
    row.w_opt = spec.waist_ratio;
    row.extra = {{"unit", g.unit}};
    return row;
  });

  std::vector<std::vector<double>> normalized;
  for (std::size_t s = 0; s < spec.spacings.size(); ++s) {
    std::vector<double> x, y;
    for (std::size_t i = 0; i < points; ++i) {
      const auto& row = out.rows[s * points + i];
      x.push_back(row.swept[1].second);
      y.push_back(row.result.r0);
    }
    ShiftAnalysis analysis = peak_period(x, y);
    analysis.spacing = spec.spacings[s];
    analysis.unit = geometries[s]->unit;
    out.analysis.push_back(analysis);
    const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
    const double span = *hi - *lo;
    for (auto& v : y) v = span > 0.0 ? (v - *lo) / span : 0.0;
    normalized.push_back(y);
  }
  for (std::size_t s = 1; s < normalized.size(); ++s) {
    for (std::size_t i = 0; i < points; ++i) {
      out.collapse_deviation = std::max(out.collapse_deviation, std::abs(normalized[s][i] - normalized[0][i]));
    }
  }
  return out;
}

DisorderResult disorder_study(const DisorderSpec& spec) {
  require_na(spec.na);
  require_in_window(spec.kind, spec.spacing);
  if (spec.seeds == 0) {
    throw std::invalid_argument("disorder_study: need at least one seed");
  }
  for (double s : spec.strengths) {
    if (!(s >= 0.0 && s <= 0.15)) {
      throw std::invalid_argument("disorder_study: strengths must lie in [0, 0.15] a");
    }
  }
  const LatticeSpec lattice(spec.kind, spec.spacing);
  const AtomArray clean = build_patch(lattice, spec.n_atoms);
  const OrderSet target = default_target(lattice);
  const WaistChoice choice =
      choose_waist(clean, target, spec.na, spec.waist_ratio, spec.settings, spec.waist_search, nullptr);
  const double waist = choice.ratio * clean.linear_size();
  const double clean_loss = 1.0 - choice.result.r0;

  const std::size_t draws = spec.antithetic ? 2 : 1;
  const std::size_t per_strength = spec.seeds * draws;
  const auto samples = parallel_map<double>(spec.strengths.size() * per_strength, [&](std::size_t index) {
    const double strength = spec.strengths[index / per_strength];
    if (strength == 0.0) return choice.result.r0;
    const std::size_t k = index % per_strength;
    const AtomArray disordered =
        apply_disorder(clean, strength * spec.spacing, spec.base_seed + k / draws, draws == 2 && k % 2 == 1);
    return resonant_scattering(disordered, target, waist, spec.na, spec.settings).r0;
  });

  DisorderResult out;
  std::vector<double> fx, fy;
  for (std::size_t s = 0; s < spec.strengths.size(); ++s) {
    // Antithetic partners are averaged first; the spread of the pair means
    // gives the standard error.
    std::vector<double> losses;
    for (std::size_t j = 0; j < spec.seeds; ++j) {
      double sum = 0.0;
      for (std::size_t d = 0; d < draws; ++d) sum += 1.0 - samples[s * per_strength + j * draws + d];
      losses.push_back(sum / static_cast<double>(draws));
    }
    const double m = mean(losses);
    double var = 0.0;
    for (double l : losses) var += (l - m) * (l - m);
    const double stderr_mean =
        losses.size() > 1 ? std::sqrt(var / static_cast<double>(losses.size() - 1) / static_cast<double>(losses.size()))
                          : 0.0;
    SweepRow row;
    row.swept = {{"dr_over_a", spec.strengths[s]}};
    row.result = choice.result;
    row.result.r0 = 1.0 - m;
    row.w_opt = choice.ratio;
    const double excess = m - clean_loss;
    row.extra = {{"mean_inefficiency", m},
                 {"stderr", stderr_mean},
                 {"excess", excess},
                 {"realizations", static_cast<double>(spec.strengths[s] == 0.0 ? 1 : per_strength)}};
    out.rows.push_back(row);
    if (spec.strengths[s] > 0.0 && excess > 0.0) {
      fx.push_back(std::log(spec.strengths[s]));
      fy.push_back(std::log(excess));
    }
  }
  if (fx.size() >= 2) out.fit = fit_line(fx, fy);
  return out;
}

}  // namespace multibeam
