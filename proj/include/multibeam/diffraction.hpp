#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "multibeam/interface_result.hpp"
#include "multibeam/lattice.hpp"

namespace multibeam {

enum class Polarization { s, p };
enum class Direction { forward, backward };

// Orders with cos(theta) below this are treated as grazing: their decay
// rate diverges, so they are excluded from order sets and flagged.
inline constexpr double kGrazingCosThreshold = 1e-6;

struct DiffractionOrder {
  OrderIndex m;
  // In-plane wavevector q_m + k_shift.
  Vec2 q = Vec2::Zero();
  double cos_theta = 1.0;
  double theta = 0.0;
  double phi = 0.0;
  bool radiative = true;
};

DiffractionOrder make_order(const LatticeSpec& lattice, OrderIndex m,
                            const Vec2& k_shift = Vec2::Zero());

enum class OrderSetLabel { all_radiative, first_shell, custom };

struct OrderSet {
  std::vector<DiffractionOrder> orders;
  bool includes_zero = false;
  OrderSetLabel label = OrderSetLabel::custom;
  // Orders dropped because they sit at the grazing boundary.
  std::vector<OrderIndex> grazing;

  std::size_t size() const { return orders.size(); }
  bool contains(OrderIndex m) const;
};

/// All m with |q_m + k_shift| < k, sorted by (|q_m|, m).
OrderSet radiative_orders(const LatticeSpec& lattice, const Vec2& k_shift = Vec2::Zero());

/// The zeroth order plus the shell of smallest nonzero |q_m| (R1 u {0}),
/// restricted to radiative orders.
OrderSet first_shell_orders(const LatticeSpec& lattice);

/// Builds a set from explicit indices; throws if an order is duplicated or
/// not radiative.
OrderSet custom_orders(const LatticeSpec& lattice, std::span<const OrderIndex> indices);

/// Gamma_0 = gamma (3 / 4 pi) lambda^2 / A_cell.
double gamma0(const LatticeSpec& lattice);

/// (1 - |v . e_d|^2 / k^2) / sqrt(1 - |v|^2 / k^2) for circular e_d, i.e.
/// Gamma_m / Gamma_0 for an in-plane wavevector v. Requires |v| < k.
double order_rate_factor(const Vec2& v);

/// Gamma_m(k_shift) in units of gamma. Throws std::domain_error when the
/// order is evanescent or grazing at k_shift.
double gamma_order(const LatticeSpec& lattice, OrderIndex m, const Vec2& k_shift = Vec2::Zero());

/// s/p unit vectors. Forward: e_p = (cos t cos f, cos t sin f, -sin t),
/// e_s = (-sin f, cos f, 0); backward vectors are the z-mirror images.
Vec3 polarization_vector(const DiffractionOrder& order, Polarization mu, Direction alpha);

struct ModeCoefficient {
  OrderIndex m;
  Polarization mu = Polarization::s;
  Direction alpha = Direction::forward;
  Complex c;
};

/// c_{m mu} = (e_{m mu} . conj(e_d)) / sqrt(cos theta_m), two entries per order.
std::vector<ModeCoefficient> mode_coefficients(const OrderSet& orders, Direction alpha);

/// Infinite-array efficiency for a target order set:
/// Gamma = sum over target, gamma_loss = sum over all radiative - Gamma.
InterfaceResult r0_infinite(const LatticeSpec& lattice, const OrderSet& target);

}  // namespace multibeam
