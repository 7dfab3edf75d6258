#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "multibeam/angular_spectrum.hpp"
#include "multibeam/diffraction.hpp"
#include "multibeam/lattice.hpp"

namespace multibeam {

// Field convention: time dependence exp(-i omega t), so a wave travelling
// toward +z carries exp(+i k z). The scattered field then uses the outgoing
// Green's tensor exp(+i k r) and the coupled-dipole self term +i gamma / 2.

/// Rotation taking lab coordinates to the frame of a beam travelling along
/// (sin t cos f, sin t sin f, cos t): r' = R_y(-theta) R_z(-phi) r.
Eigen::Matrix3d beam_frame(double theta, double phi);

/// Normalized 1D Gaussian beam profile (integral of |f|^2 over xi is 1):
/// sqrt(sqrt(2/pi) / w(z)) exp(-(xi/w)^2 + i k xi^2 / (2 R) - i psi / 2).
Complex gaussian_1d(double xi, double z, double waist);

struct GaussianBeam {
  OrderIndex m;
  double theta = 0.0;
  double phi = 0.0;
  // Beam-frame waists: (w cos theta, w), giving a circular footprint w on z = 0.
  double waist_x = 1.0;
  double waist_y = 1.0;
  Polarization mu = Polarization::s;
  Direction alpha = Direction::forward;
  Vec3 e = Vec3::Zero();
  Complex c;
  Eigen::Matrix3d frame = Eigen::Matrix3d::Identity();

  /// Beam-frame coordinates of a lab point (backward beams are the z-mirror
  /// images of forward ones).
  Vec3 to_beam_frame(const Vec3& r) const;
};

struct TargetMode {
  LatticeSpec lattice;
  OrderSet orders;
  Direction alpha = Direction::forward;
  double waist = 1.0;
  // sqrt(Gamma_0 / Gamma_tot), the overall normalization of the superposition.
  double prefactor = 1.0;
  std::vector<GaussianBeam> beams;

  /// Same beams and coefficients propagating toward the opposite half-space.
  TargetMode mirrored() const;
};

/// One beam per (order, polarization) with coefficients from mode_coefficients.
TargetMode assemble_mode(const LatticeSpec& lattice, const OrderSet& orders, double waist, Direction alpha);

/// Paraxial real-space field of the mode:
/// prefactor * sum conj(c) e exp(i k z') f(x', z') f(y', z'), plus the leading
/// longitudinal component (i/k) div_perp of each beam.
std::vector<CVec3> field_at_points(const TargetMode& mode, std::span<const Vec3> points);

/// Analytic angular spectrum: every beam is an elliptical Gaussian in its own
/// transverse momenta, mapped to lab k_perp with the exact Jacobian and
/// projected transverse to each plane wave. The result has unit flux.
AngularSpectrum mode_spectrum(const TargetMode& mode, std::shared_ptr<const KGrid> grid, HalfSpace half_space);

/// Warnings about the paraxial validity of a mode (empty when w cos theta >= 2 lambda).
std::vector<std::string> paraxial_warnings(const TargetMode& mode);

}  // namespace multibeam
