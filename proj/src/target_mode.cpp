#include "multibeam/target_mode.hpp"

#include <cmath>
#include <stdexcept>

namespace multibeam {

namespace {

const Eigen::Matrix3d kMirrorZ = Eigen::Vector3d(1.0, 1.0, -1.0).asDiagonal();

}  // namespace

Eigen::Matrix3d beam_frame(double theta, double phi) {
  const double ct = std::cos(theta), st = std::sin(theta);
  const double cf = std::cos(phi), sf = std::sin(phi);
  Eigen::Matrix3d ry;
  ry << ct, 0.0, -st,
        0.0, 1.0, 0.0,
        st, 0.0, ct;
  Eigen::Matrix3d rz;
  rz << cf, sf, 0.0,
        -sf, cf, 0.0,
        0.0, 0.0, 1.0;
  return ry * rz;
}

Complex gaussian_1d(double xi, double z, double waist) {
  if (!(waist > 0.0)) {
    throw std::invalid_argument("gaussian_1d: waist must be positive");
  }
  const double z_r = kPi * waist * waist / kWavelength;
  const double w = waist * std::sqrt(1.0 + (z / z_r) * (z / z_r));
  // 1/R(z) = z / (z^2 + z_R^2) stays finite at the focus.
  const double inv_r = z / (z * z + z_r * z_r);
  const double gouy = std::atan(z / z_r);
  const double amplitude = std::sqrt(std::sqrt(2.0 / kPi) / w);
  const double phase = kWavenumber * xi * xi * inv_r / 2.0 - gouy / 2.0;
  return amplitude * std::exp(-(xi / w) * (xi / w)) * std::polar(1.0, phase);
}

Vec3 GaussianBeam::to_beam_frame(const Vec3& r) const {
  return alpha == Direction::forward ? Vec3(frame * r) : Vec3(frame * (kMirrorZ * r));
}

TargetMode TargetMode::mirrored() const {
  TargetMode out = *this;
  out.alpha = alpha == Direction::forward ? Direction::backward : Direction::forward;
  for (auto& beam : out.beams) {
    beam.alpha = out.alpha;
    beam.e = kMirrorZ * beam.e;
  }
  return out;
}

TargetMode assemble_mode(const LatticeSpec& lattice, const OrderSet& orders, double waist, Direction alpha) {
  if (!(waist > 0.0)) {
    throw std::invalid_argument("assemble_mode: waist must be positive");
  }
  TargetMode mode{lattice, orders, alpha, waist, 1.0, {}};
  const auto coefficients = mode_coefficients(orders, alpha);
  double total = 0.0;
  for (const auto& order : orders.orders) total += order_rate_factor(order.q);
  if (total <= 0.0) {
    throw std::invalid_argument("assemble_mode: empty order set");
  }
  // Gamma_0 / Gamma_tot with Gamma_tot = Gamma_0 * sum of rate factors.
  mode.prefactor = std::sqrt(1.0 / total);
  for (std::size_t i = 0; i < orders.size(); ++i) {
    const auto& order = orders.orders[i];
    for (int j = 0; j < 2; ++j) {
      const auto& coeff = coefficients[2 * i + j];
      GaussianBeam beam;
      beam.m = order.m;
      beam.theta = order.theta;
      beam.phi = order.phi;
      beam.waist_x = waist * order.cos_theta;
      beam.waist_y = waist;
      beam.mu = coeff.mu;
      beam.alpha = alpha;
      beam.e = polarization_vector(order, coeff.mu, alpha);
      beam.c = coeff.c;
      beam.frame = beam_frame(order.theta, order.phi);
      mode.beams.push_back(beam);
    }
  }
  return mode;
}

namespace {

// d/dxi log f(xi, z) for the profile of gaussian_1d.
Complex gaussian_1d_log_slope(double xi, double z, double waist) {
  const double z_r = kPi * waist * waist / kWavelength;
  const double w2 = waist * waist * (1.0 + (z / z_r) * (z / z_r));
  const double inv_r = z / (z * z + z_r * z_r);
  return Complex(-2.0 * xi / w2, kWavenumber * xi * inv_r);
}

}  // namespace

std::vector<CVec3> field_at_points(const TargetMode& mode, std::span<const Vec3> points) {
  std::vector<CVec3> out(points.size(), CVec3::Zero());
  for (const auto& beam : mode.beams) {
    const Complex amp = mode.prefactor * std::conj(beam.c);
    const Vec3 pol_b = beam.to_beam_frame(beam.e);
    // Lab direction of the beam axis (inverse of to_beam_frame applied to z').
    Vec3 axis_lab = beam.frame.transpose() * Vec3::UnitZ();
    if (beam.alpha == Direction::backward) axis_lab = kMirrorZ * axis_lab;
    for (std::size_t j = 0; j < points.size(); ++j) {
      const Vec3 rb = beam.to_beam_frame(points[j]);
      const Complex profile = std::polar(1.0, kWavenumber * rb.z()) *
                              gaussian_1d(rb.x(), rb.z(), beam.waist_x) *
                              gaussian_1d(rb.y(), rb.z(), beam.waist_y);
      // Leading longitudinal field from div E = 0: E_z' = (i/k) (d_x' E_x' + d_y' E_y').
      const Complex longitudinal = kI / kWavenumber *
                                   (pol_b.x() * gaussian_1d_log_slope(rb.x(), rb.z(), beam.waist_x) +
                                    pol_b.y() * gaussian_1d_log_slope(rb.y(), rb.z(), beam.waist_y));
      out[j] += (amp * profile) * (beam.e.cast<Complex>() + longitudinal * axis_lab.cast<Complex>());
    }
  }
  return out;
}

AngularSpectrum mode_spectrum(const TargetMode& mode, std::shared_ptr<const KGrid> grid, HalfSpace half_space) {
  const HalfSpace expected = mode.alpha == Direction::forward ? HalfSpace::forward : HalfSpace::backward;
  if (half_space != expected) {
    throw std::invalid_argument("mode_spectrum: half-space does not match the mode direction");
  }
  for (const auto& order : mode.orders.orders) {
    if (order.q.norm() >= kWavenumber) {
      throw std::invalid_argument("mode_spectrum: beam center outside the radiative disk");
    }
  }
  AngularSpectrum spectrum = AngularSpectrum::zeros(grid, half_space);
  const auto& nodes = grid->nodes();
  const double zsign = half_space == HalfSpace::forward ? 1.0 : -1.0;

  for (const auto& beam : mode.beams) {
    // Angular spectrum of the beam-frame Gaussian at its waist, normalized
    // to unit flux in the paraxial limit.
    const double norm = std::sqrt(beam.waist_x * beam.waist_y) * std::sqrt(2.0 / kPi) / (4.0 * kPi);
    const Complex weight = mode.prefactor * std::conj(beam.c) * norm;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const auto& node = nodes[i];
      const Vec3 k(node.kx, node.ky, zsign * node.kz);
      const Vec3 kb = beam.to_beam_frame(k);
      if (kb.z() <= 0.0) continue;
      const double exponent = -(beam.waist_x * beam.waist_x * kb.x() * kb.x() +
                                beam.waist_y * beam.waist_y * kb.y() * kb.y()) / 4.0;
      if (exponent < -60.0) continue;
      const double jacobian = kb.z() / node.kz;
      const Vec3 khat = k / kWavenumber;
      const Vec3 pol = beam.e - khat * khat.dot(beam.e);
      spectrum.amplitudes[i] += (weight * (std::exp(exponent) * jacobian)) * pol.cast<Complex>();
    }
  }
  const double flux = flux_norm(spectrum);
  if (flux <= 0.0) {
    throw std::runtime_error("mode_spectrum: mode has no flux on this grid");
  }
  const double scale = 1.0 / std::sqrt(flux);
  for (auto& a : spectrum.amplitudes) a *= scale;
  return spectrum;
}

std::vector<std::string> paraxial_warnings(const TargetMode& mode) {
  std::vector<std::string> warnings;
  for (const auto& order : mode.orders.orders) {
    if (mode.waist * order.cos_theta < 2.0 * kWavelength) {
      warnings.push_back("waist below 2 lambda in a beam frame; paraxial spectrum is approximate");
      break;
    }
  }
  return warnings;
}

}  // namespace multibeam
