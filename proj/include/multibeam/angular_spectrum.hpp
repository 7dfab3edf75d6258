#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "multibeam/units.hpp"

namespace multibeam {

enum class HalfSpace { forward, backward };

/// Uniform midpoint sampling of k_perp over [-k, k]^2. Only nodes strictly
/// inside the radiative disk |k_perp| < k are kept; evanescent components
/// carry no flux and never enter a flux integral.
class KGrid {
 public:
  struct Node {
    int ix = 0;
    int iy = 0;
    double kx = 0.0;
    double ky = 0.0;
    double kz = 0.0;
  };

  explicit KGrid(int resolution);

  int resolution() const { return resolution_; }
  double spacing() const { return spacing_; }
  double coordinate(int i) const { return -kWavenumber + (i + 0.5) * spacing_; }
  double node_area() const { return spacing_ * spacing_; }
  const std::vector<Node>& nodes() const { return nodes_; }
  std::size_t size() const { return nodes_.size(); }

 private:
  int resolution_;
  double spacing_;
  std::vector<Node> nodes_;
};

std::shared_ptr<const KGrid> make_k_grid(int resolution);

/// Plane-wave decomposition E(r) = sum_nodes dk^2 A(k) exp(i k . r) of a field
/// propagating into one half-space (k_z > 0 forward, k_z < 0 backward).
struct AngularSpectrum {
  std::shared_ptr<const KGrid> grid;
  HalfSpace half_space = HalfSpace::forward;
  std::vector<CVec3> amplitudes;

  static AngularSpectrum zeros(std::shared_ptr<const KGrid> grid, HalfSpace half_space);

  /// Unit propagation vector of node i, sign of k_z set by the half-space.
  Vec3 direction(std::size_t i) const;
};

/// Power-normalized overlap <a, b> = (2 pi)^2 sum dk^2 (k_z / k) a* . b.
/// The (2 pi)^2 makes it agree with the real-space integral of |E|^2 over a
/// beam cross-section. Throws on grid or half-space mismatch.
Complex flux_inner(const AngularSpectrum& a, const AngularSpectrum& b);
double flux_norm(const AngularSpectrum& a);

/// Largest |A . k_hat| relative to the largest |A| over the grid.
double max_longitudinal_fraction(const AngularSpectrum& a);

/// Scalar plane-wave synthesis sum_nodes dk^2 w_i exp(i (kx x + ky y +- kz z))
/// at each point, with the sign of kz set by the half-space. Points sharing
/// one z are evaluated with a separable matrix product.
std::vector<Complex> synthesize_scalar(const KGrid& grid, HalfSpace half_space,
                                       std::span<const Complex> weights, std::span<const Vec3> points);

/// Full vector field of a spectrum at the given points.
std::vector<CVec3> synthesize_field(const AngularSpectrum& spectrum, std::span<const Vec3> points);

/// Zeroes every node with |k_perp| > NA k. With renormalize the result is
/// rescaled to unit flux (incident modes); without it the removed flux is a
/// physical loss (scattered fields).
AngularSpectrum na_filter(const AngularSpectrum& spectrum, double na, bool renormalize);

}  // namespace multibeam
