#include "multibeam/interface_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "multibeam/optimize.hpp"

namespace multibeam {

namespace {

// e_d^dagger A at every node of a spectrum.
std::vector<Complex> projected_weights(const AngularSpectrum& spectrum) {
  const CVec3 ed = dipole_orientation();
  std::vector<Complex> out(spectrum.amplitudes.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = ed.dot(spectrum.amplitudes[i]);
  return out;
}

Eigen::VectorXcd to_vector(const std::vector<Complex>& values) {
  return Eigen::Map<const Eigen::VectorXcd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

}  // namespace

Complex oracle_1d(double gamma, double gamma_loss, double shift, double detuning) {
  if (gamma < 0.0 || gamma_loss < 0.0) {
    throw std::invalid_argument("oracle_1d: rates must be non-negative");
  }
  const Complex denom = -kI * (detuning - shift) + (gamma + gamma_loss) / 2.0;
  if (denom == Complex(0.0)) return Complex(0.0);
  return -(gamma / 2.0) / denom;
}

ArrayOperator::ArrayOperator(const AtomArray& array)
    : interaction(interaction_matrix(array.positions)),
      hessenberg(std::make_shared<const HessenbergForm>(interaction)) {}

ReflectivityModel::ReflectivityModel(const AtomArray& array, const TargetMode& mode, double na,
                                     int grid_resolution, std::shared_ptr<const ArrayOperator> op,
                                     MirrorProjection projection)
    : array_(array), mode_(mode), na_(na), op_(std::move(op)) {
  if (mode.alpha != Direction::forward) {
    throw std::invalid_argument("ReflectivityModel: the incident mode must propagate toward +z");
  }
  if (!(na > 0.0 && na <= 1.0)) {
    throw std::invalid_argument("ReflectivityModel: NA must lie in (0, 1]");
  }
  if (!op_) op_ = std::make_shared<const ArrayOperator>(array_);
  if (static_cast<std::size_t>(op_->interaction.rows()) != array_.size()) {
    throw std::invalid_argument("ReflectivityModel: operator does not match the array");
  }
  const auto grid = make_k_grid(grid_resolution);
  const AngularSpectrum raw = mode_spectrum(mode_, grid, HalfSpace::forward);
  incident_ = na_filter(raw, na_, true);
  kept_flux_ = flux_norm(na_filter(raw, na_, false));
  mirror_ = mode_spectrum(mode_.mirrored(), grid, HalfSpace::backward);
  if (projection == MirrorProjection::filtered) mirror_ = na_filter(mirror_, na_, true);

  drive_ = to_vector(synthesize_scalar(*grid, HalfSpace::forward, projected_weights(incident_), array_.positions));
  // rho = <mirror, A_scat> = sum_n h_n sigma_n, with
  // h_n = (3 i lambda / 4 k) conj(e_d^dagger E_mirror(r_n)).
  const auto mirror_field = synthesize_scalar(*grid, HalfSpace::backward, projected_weights(mirror_), array_.positions);
  projection_.resize(static_cast<Eigen::Index>(array_.size()));
  const Complex pre = 3.0 * kI * kLinewidth * kWavelength / (4.0 * kWavenumber);
  for (std::size_t i = 0; i < array_.size(); ++i) projection_[static_cast<Eigen::Index>(i)] = pre * std::conj(mirror_field[i]);
  solver_ = std::make_unique<DetuningSolver>(op_->hessenberg, drive_, projection_);
}

Complex ReflectivityModel::amplitude(double detuning) const {
  return solver_->response(detuning);
}

InterfaceResult ReflectivityModel::evaluate(double detuning) const {
  InterfaceResult result;
  result.source = ResultSource::scattering;
  result.delta_res = detuning;
  result.diagnostics["grid_resolution"] = incident_.grid->resolution();
  result.diagnostics["waist"] = mode_.waist;
  result.diagnostics["na"] = na_;
  result.diagnostics["aperture_flux"] = kept_flux_;
  result.warnings = paraxial_warnings(mode_);
  if (array_.size() == 0) {
    result.diagnostics["residual"] = 0.0;
    return result;
  }
  const CoupledDipoleSystem system(array_.positions, detuning, drive_, op_->interaction);
  const SteadyState state = solve_steady_state(system);
  const Complex rho = projection_.cwiseProduct(state.sigma).sum();
  result.r0 = std::abs(rho);
  result.diagnostics["rho_re"] = rho.real();
  result.diagnostics["rho_im"] = rho.imag();
  result.diagnostics["residual"] = state.residual;
  result.diagnostics["rcond"] = state.rcond;
  if (result.r0 > 1.0) {
    result.warnings.push_back("modal reflectivity above one: grid quadrature is under-resolved");
  }
  return result;
}

InterfaceResult reflectivity(const AtomArray& array, const TargetMode& mode, double detuning, double na,
                             int grid_resolution) {
  if (!std::isfinite(detuning)) {
    throw std::invalid_argument("reflectivity: detuning must be finite");
  }
  return ReflectivityModel(array, mode, na, grid_resolution).evaluate(detuning);
}

InterfaceResult find_resonance(const ReflectivityModel& model, const ResonanceSearch& search) {
  if (!std::isfinite(search.center) || !(search.half_width > 0.0) || search.points < 3 || !(search.tolerance > 0.0)) {
    throw std::invalid_argument("find_resonance: invalid search window");
  }
  if (model.array().size() == 0) {
    InterfaceResult empty = model.evaluate(search.center);
    return empty;
  }
  const double lo = search.center - search.half_width;
  const double step = 2.0 * search.half_width / (search.points - 1);
  int best = 0;
  double best_value = -1.0;
  for (int i = 0; i < search.points; ++i) {
    const double value = std::abs(model.amplitude(lo + i * step));
    if (value > best_value) {
      best_value = value;
      best = i;
    }
  }
  const double a = lo + std::max(0, best - 1) * step;
  const double b = lo + std::min(search.points - 1, best + 1) * step;
  const auto refined = golden_section_maximize([&](double d) { return std::abs(model.amplitude(d)); }, a, b,
                                               search.tolerance);
  double delta = refined.x;
  if (best_value > refined.value) delta = lo + best * step;

  InterfaceResult result = model.evaluate(delta);
  if (best == 0 || best == search.points - 1) {
    result.warnings.push_back("resonance maximum on the edge of the detuning window");
  }

  // Half-maximum points of |rho|^2 on either side of the peak.
  const double peak2 = std::norm(model.amplitude(delta));
  auto half_point = [&](double direction) {
    double inner = 0.0;
    double outer = 0.01;
    while (std::norm(model.amplitude(delta + direction * outer)) > peak2 / 2.0) {
      inner = outer;
      outer *= 2.0;
      if (outer > 1e4) return std::numeric_limits<double>::quiet_NaN();
    }
    for (int it = 0; it < 60 && outer - inner > 1e-9 * outer; ++it) {
      const double mid = 0.5 * (inner + outer);
      if (std::norm(model.amplitude(delta + direction * mid)) > peak2 / 2.0) {
        inner = mid;
      } else {
        outer = mid;
      }
    }
    return 0.5 * (inner + outer);
  };
  const double width = half_point(1.0) + half_point(-1.0);
  if (std::isfinite(width)) {
    result.gamma = result.r0 * width;
    result.gamma_loss = (1.0 - result.r0) * width;
    result.diagnostics["linewidth"] = width;
  } else {
    result.warnings.push_back("resonance width could not be resolved");
  }
  result.diagnostics["scan_center"] = search.center;
  return result;
}

EnergyBalance energy_balance(const ReflectivityModel& model, double detuning) {
  EnergyBalance balance;
  const auto& incident = model.incident();
  balance.incident = flux_norm(incident);
  const auto& array = model.array();
  if (array.size() == 0) {
    balance.transmitted = balance.incident;
    return balance;
  }
  const CoupledDipoleSystem system(array.positions, detuning, model.drive(), model.array_operator().interaction);
  const SteadyState state = solve_steady_state(system);
  const std::span<const Complex> sigma(state.sigma.data(), static_cast<std::size_t>(state.sigma.size()));
  const AngularSpectrum forward = scattered_spectrum(sigma, array.positions, incident.grid, HalfSpace::forward);
  const AngularSpectrum backward = scattered_spectrum(sigma, array.positions, incident.grid, HalfSpace::backward);
  AngularSpectrum total = incident;
  for (std::size_t i = 0; i < total.amplitudes.size(); ++i) total.amplitudes[i] += forward.amplitudes[i];
  balance.transmitted = flux_norm(total);
  balance.reflected = flux_norm(backward);
  const auto& drive = model.drive();
  balance.extinguished = extinguished_power(std::span<const Complex>(drive.data(), static_cast<std::size_t>(drive.size())), sigma);
  balance.radiated = radiated_power(model.array_operator().interaction, state.sigma);
  return balance;
}

}  // namespace multibeam
