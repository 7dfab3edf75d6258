#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "multibeam/units.hpp"

namespace multibeam {

enum class LatticeKind { triangular, square };

std::string_view to_string(LatticeKind kind);
LatticeKind parse_lattice_kind(std::string_view text);

/// Integer pair labelling either a lattice site (n1, n2) or a reciprocal
/// lattice vector / diffraction order (m1, m2).
struct IndexPair {
  int first = 0;
  int second = 0;
  auto operator<=>(const IndexPair&) const = default;
};
using SiteIndex = IndexPair;
using OrderIndex = IndexPair;

/// 2D Bravais lattice in the z = 0 plane. The lattice angle is fixed by the
/// kind: pi/3 for triangular, pi/2 for square.
class LatticeSpec {
 public:
  LatticeSpec(LatticeKind kind, double spacing);

  LatticeKind kind() const { return kind_; }
  double spacing() const { return spacing_; }
  double angle() const;
  double cell_area() const;

  /// r_n = (n1 a + n2 a cos psi, n2 a sin psi).
  Vec2 site(SiteIndex n) const;
  /// q_m = (2 pi / a) (m1, -m1 cot psi + m2 / sin psi).
  Vec2 reciprocal(OrderIndex m) const;
  /// Squared site radius in units of a^2; exact for both lattice kinds.
  long long integer_norm(SiteIndex n) const;

  bool operator==(const LatticeSpec&) const = default;

 private:
  LatticeKind kind_;
  double spacing_;
};

Vec2 reciprocal_vector(const LatticeSpec& lattice, OrderIndex m);

struct AtomArray {
  LatticeSpec lattice;
  std::vector<Vec3> positions;
  // Ideal lattice site of each atom, in the same order as positions.
  std::vector<SiteIndex> sites;
  // Largest ideal site radius of the patch.
  double max_radius = 0.0;
  std::uint64_t rng_seed = 0;

  std::size_t size() const { return positions.size(); }
  /// Side of the square with the same area as the patch, sqrt(N a^2 sin psi).
  double linear_size() const;
  /// Ideal (unshifted, undisordered) position of atom i.
  Vec3 ideal_position(std::size_t i) const;
};

/// The n_target lattice sites closest to the origin. Ties are broken by
/// (radius, polar angle, n1, n2), so the result depends only on the inputs.
AtomArray build_patch(const LatticeSpec& lattice, std::size_t n_target);

AtomArray apply_shift(const AtomArray& array, const Vec3& offset);

/// Adds an independent N(0, sigma^2) displacement to every Cartesian
/// component of every atom. With antithetic = true the displacement drawn
/// for the same seed is negated.
AtomArray apply_disorder(const AtomArray& array, double sigma, std::uint64_t seed,
                         bool antithetic = false);

}  // namespace multibeam
