#pragma once

#include <memory>
#include <vector>

#include <Eigen/Core>

#include "multibeam/diffraction.hpp"
#include "multibeam/interface_result.hpp"
#include "multibeam/lattice.hpp"

namespace multibeam {

/// Gaussian weighting u(r) = sqrt(2 / pi w^2) exp(-|r|^2 / w^2) of the ideal
/// array sites, defining the collective dipole that the target mode drives.
struct GaussianCollectiveMode {
  AtomArray array;
  double waist = 1.0;
  // u at each ideal site, in array order.
  std::vector<double> weights;
  // erf^2(L_a / (sqrt(2) w)), the overlap of the profile with a square of side L_a.
  double eta = 1.0;
  // A_cell sum |u_n|^2, the same overlap measured on the actual sites.
  double eta_discrete = 1.0;

  GaussianCollectiveMode(AtomArray array, double waist);
};

/// u~(k) = A_cell sum_n u(r_n) exp(-i k . r_n) over the ideal sites.
Complex u_tilde(const GaussianCollectiveMode& mode, const Vec2& k);

/// Uniform grid over the primitive reciprocal cell folded into the first
/// Brillouin zone, with 4x4 subdivision of cells where any order comes
/// within k_z < 0.05 k of the radiative edge.
struct BZQuadrature {
  struct Node {
    Vec2 k = Vec2::Zero();
    double weight = 0.0;
  };
  int resolution = 201;
  std::vector<Node> nodes;
  std::size_t refined_cells = 0;

  BZQuadrature(const LatticeSpec& lattice, int resolution = 201);

  double total_weight() const;
};

/// Folds k into the first Brillouin zone (Wigner-Seitz cell) of the lattice.
Vec2 fold_to_first_zone(const LatticeSpec& lattice, const Vec2& k);

struct CollectiveRates {
  double gamma_r = 0.0;
  double gamma_prime_0 = 0.0;
  // Integral of the normalized weight |u~|^2 / (eta_discrete (2 pi)^2) over the zone.
  double parseval = 0.0;
};

/// Gaussian-weighted zone integrals of the order rates. Gamma_R counts the
/// target orders wherever they are radiative; Gamma'_0 counts every order
/// radiative at k. Both are normalized by eta_discrete so that the weight
/// integrates to one on the quadrature.
CollectiveRates gamma_R_and_0(const GaussianCollectiveMode& mode, const OrderSet& target, const BZQuadrature& quad);

/// Gamma = eta Gamma_R, gamma_loss = Gamma'_0 - eta Gamma_R, r0 = eta Gamma_R / Gamma'_0,
/// with the resonance shift taken from d_matrix_00.
InterfaceResult r0_finite_theory(const GaussianCollectiveMode& mode, const OrderSet& target, const BZQuadrature& quad);

/// Finite-waist replacement of cos(theta_m): the inverse of the weighted
/// zone average of 1 / sqrt(1 - |q_m + k|^2 / k^2) over radiative k.
double b_m(const GaussianCollectiveMode& mode, OrderIndex m, const BZQuadrature& quad);

/// c_{m mu} with cos(theta_m) replaced by B_m.
std::vector<ModeCoefficient> finite_mode_coefficients(const GaussianCollectiveMode& mode, const OrderSet& orders,
                                                      Direction alpha, const BZQuadrature& quad);

/// D_00 = Gamma'_0 / 2 + i Delta' = -i v^T M v with v_n = u_n / ||u||.
Complex d_matrix_00(const GaussianCollectiveMode& mode);
Complex d_matrix_00(const GaussianCollectiveMode& mode, const Eigen::MatrixXcd& interaction);

}  // namespace multibeam
