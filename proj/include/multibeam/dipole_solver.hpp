#pragma once

#include <memory>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Dense>

#include "multibeam/angular_spectrum.hpp"
#include "multibeam/lattice.hpp"

namespace multibeam {

/// Outgoing free-space dyadic Green's tensor
/// exp(ikr)/(4 pi r) [(1 + i/kr - 1/(kr)^2) I + (-1 - 3i/kr + 3/(kr)^2) r_hat r_hat].
/// Throws at r = 0; the self term is handled analytically by the solver.
Eigen::Matrix3cd greens_dyadic(const Vec3& r);

/// e_d^dagger G(r) e_d for the circular dipole orientation.
Complex greens_projected(const Vec3& r);

/// M_nm = (3/2) gamma lambda G(r_n - r_m) for n != m and M_nn = i gamma / 2.
/// The matrix is complex symmetric.
Eigen::MatrixXcd interaction_matrix(std::span<const Vec3> positions);

struct CoupledDipoleSystem {
  std::vector<Vec3> positions;
  double detuning = 0.0;
  Eigen::VectorXcd drive;
  Eigen::MatrixXcd interaction;

  CoupledDipoleSystem(std::vector<Vec3> positions, double detuning, Eigen::VectorXcd drive);
  CoupledDipoleSystem(std::vector<Vec3> positions, double detuning, Eigen::VectorXcd drive,
                      Eigen::MatrixXcd interaction);

  std::size_t size() const { return positions.size(); }
};

struct SteadyState {
  Eigen::VectorXcd sigma;
  double residual = 0.0;
  double rcond = 1.0;
};

/// Solves (delta + M) sigma = -drive with a dense LU factorization. Throws
/// std::runtime_error with the reciprocal condition estimate when the matrix
/// is numerically singular.
SteadyState solve_steady_state(const CoupledDipoleSystem& system);

/// Relative residual ||(delta + M) sigma + drive|| / ||drive||.
double steady_state_residual(const Eigen::MatrixXcd& interaction, double detuning,
                             const Eigen::VectorXcd& drive, const Eigen::VectorXcd& sigma);

/// Upper Hessenberg form M = Q H Q^H. It depends on the geometry only, so
/// one reduction serves every drive, projection and detuning.
struct HessenbergForm {
  Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> h;
  Eigen::MatrixXcd q;

  explicit HessenbergForm(const Eigen::MatrixXcd& interaction);
  Eigen::Index size() const { return h.rows(); }
};

/// Linear response h^T sigma(delta) at many detunings in O(N^2) each.
class DetuningSolver {
 public:
  DetuningSolver(std::shared_ptr<const HessenbergForm> form, const Eigen::VectorXcd& drive,
                 const Eigen::VectorXcd& projection);
  DetuningSolver(const Eigen::MatrixXcd& interaction, const Eigen::VectorXcd& drive,
                 const Eigen::VectorXcd& projection);

  Complex response(double detuning) const;
  Eigen::VectorXcd sigma(double detuning) const;

 private:
  Eigen::VectorXcd solve_hessenberg(double detuning) const;

  std::shared_ptr<const HessenbergForm> form_;
  Eigen::VectorXcd rotated_drive_;
  Eigen::VectorXcd rotated_projection_;
};

/// Angular spectrum of the field radiated by the dipoles into one half-space:
/// A(k) = (3/2) gamma lambda (i / (8 pi^2 k_z)) (I - k_hat k_hat) e_d sum_n sigma_n exp(-i k . r_n).
/// With E = sum dk^2 A exp(i k . r) this reproduces (3/2) lambda G e_d sigma
/// on the far side of every dipole.
AngularSpectrum scattered_spectrum(std::span<const Complex> sigma, std::span<const Vec3> positions,
                                   std::shared_ptr<const KGrid> grid, HalfSpace half_space);

/// Power removed from the drive, (3 / 4 pi) sum Im(conj(E_n) sigma_n), in the
/// flux units of flux_norm.
double extinguished_power(std::span<const Complex> drive, std::span<const Complex> sigma);

/// Power radiated by the dipoles, (3 / 4 pi) sigma^dagger Im(M) sigma, exact.
double radiated_power(const Eigen::MatrixXcd& interaction, const Eigen::VectorXcd& sigma);

/// Collective decay rates: twice the eigenvalues of the anti-Hermitian part
/// (M - M^dagger) / 2i, sorted ascending. A passive array has none negative.
Eigen::VectorXd collective_decay_rates(const Eigen::MatrixXcd& interaction);

}  // namespace multibeam
