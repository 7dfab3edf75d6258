#pragma once

#include <complex>
#include <numbers>

#include <Eigen/Core>

namespace multibeam {

using Complex = std::complex<double>;
using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using CVec3 = Eigen::Vector3cd;

// Every length is measured in resonant wavelengths and every rate in
// single-atom linewidths. Dipole matrix element, hbar and epsilon_0 are
// absorbed into the field normalization (d/hbar = 1).
inline constexpr double kPi = std::numbers::pi;
inline constexpr double kWavelength = 1.0;
inline constexpr double kWavenumber = 2.0 * kPi / kWavelength;
inline constexpr double kLinewidth = 1.0;
inline constexpr Complex kI{0.0, 1.0};

/// Circular dipole orientation e_d = (e_x + i e_y) / sqrt(2).
inline CVec3 dipole_orientation() {
  const double s = 1.0 / std::numbers::sqrt2;
  return CVec3(Complex(s, 0.0), Complex(0.0, s), Complex(0.0, 0.0));
}

}  // namespace multibeam
