#pragma once

#include <memory>
#include <vector>

#include <Eigen/Core>

#include "multibeam/angular_spectrum.hpp"
#include "multibeam/dipole_solver.hpp"
#include "multibeam/interface_result.hpp"
#include "multibeam/lattice.hpp"
#include "multibeam/target_mode.hpp"

namespace multibeam {

/// Steady-state reflection amplitude of the 1D interface model driven from
/// one side: -(Gamma/2) / (-i (delta - Delta) + (Gamma + gamma_loss) / 2).
Complex oracle_1d(double gamma, double gamma_loss, double shift, double detuning);

/// Geometry-dependent data that several reflectivity models can share: the
/// interaction matrix of an array and its Hessenberg form. Rigid shifts of
/// the array and changes of the mode leave both unchanged.
struct ArrayOperator {
  Eigen::MatrixXcd interaction;
  std::shared_ptr<const HessenbergForm> hessenberg;

  explicit ArrayOperator(const AtomArray& array);
};

/// Which mirror mode the back-scattered field is projected on: the NA-filtered
/// and renormalized one (default) or the unfiltered original.
enum class MirrorProjection { filtered, unfiltered };

/// The scattering pipeline for one (array, mode, NA): the NA-filtered
/// incident spectrum drives the atoms, and the back-scattered field is
/// projected onto the filtered z-mirror of the mode. The modal amplitude is
/// rho(delta) = h^T sigma(delta).
class ReflectivityModel {
 public:
  ReflectivityModel(const AtomArray& array, const TargetMode& mode, double na, int grid_resolution = 256,
                    std::shared_ptr<const ArrayOperator> op = nullptr,
                    MirrorProjection projection = MirrorProjection::filtered);

  /// Fast modal amplitude from the Hessenberg solve.
  Complex amplitude(double detuning) const;

  /// Dense LU solve at one detuning with residual and spectrum diagnostics;
  /// r0 = |rho|.
  InterfaceResult evaluate(double detuning) const;

  const AtomArray& array() const { return array_; }
  const TargetMode& mode() const { return mode_; }
  double na() const { return na_; }
  const Eigen::VectorXcd& drive() const { return drive_; }
  const Eigen::VectorXcd& projection() const { return projection_; }
  const AngularSpectrum& incident() const { return incident_; }
  const AngularSpectrum& mirror() const { return mirror_; }
  const ArrayOperator& array_operator() const { return *op_; }
  std::shared_ptr<const ArrayOperator> shared_operator() const { return op_; }

 private:
  AtomArray array_;
  TargetMode mode_;
  double na_;
  std::shared_ptr<const ArrayOperator> op_;
  AngularSpectrum incident_;
  AngularSpectrum mirror_;
  Eigen::VectorXcd drive_;
  Eigen::VectorXcd projection_;
  std::unique_ptr<DetuningSolver> solver_;
  double kept_flux_ = 1.0;
};

/// One-shot reflectivity of an array for a forward-propagating mode.
InterfaceResult reflectivity(const AtomArray& array, const TargetMode& mode, double detuning, double na,
                             int grid_resolution = 256);

struct ResonanceSearch {
  double center = 0.0;
  double half_width = 5.0;
  int points = 41;
  double tolerance = 1e-3;
};

/// Maximizes |rho| by a coarse scan and golden-section refinement, then
/// evaluates the maximum with a dense solve. The Lorentzian half-maximum
/// width W of |rho|^2 gives Gamma = r0 W and gamma_loss = (1 - r0) W.
InterfaceResult find_resonance(const ReflectivityModel& model, const ResonanceSearch& search);

struct EnergyBalance {
  double incident = 0.0;
  double reflected = 0.0;
  double transmitted = 0.0;
  // Power removed from the drive and power radiated, both exact in the dipoles.
  double extinguished = 0.0;
  double radiated = 0.0;

  double relative_error() const { return std::abs(reflected + transmitted - incident) / incident; }
};

/// Flux bookkeeping over both half-spaces at one detuning (grid quadrature
/// for the fluxes; closed forms for extinction and radiation).
EnergyBalance energy_balance(const ReflectivityModel& model, double detuning);

}  // namespace multibeam
