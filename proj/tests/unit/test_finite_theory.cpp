#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "multibeam/diffraction.hpp"
#include "multibeam/dipole_solver.hpp"
#include "multibeam/finite_theory.hpp"

using namespace multibeam;

namespace {

GaussianCollectiveMode tri_mode(double a, std::size_t n, double ratio) {
  AtomArray array = build_patch(LatticeSpec(LatticeKind::triangular, a), n);
  const double w = ratio * array.linear_size();
  return GaussianCollectiveMode(std::move(array), w);
}

}  // namespace

TEST_SUITE("finite_theory") {

TEST_CASE("quadrature covers the zone") {
  for (const auto kind : {LatticeKind::triangular, LatticeKind::square}) {
    const LatticeSpec lattice(kind, 1.76);
    const BZQuadrature quad(lattice, 61);
    CHECK(quad.total_weight() == doctest::Approx(4 * kPi * kPi / lattice.cell_area()).epsilon(1e-12));
    CHECK(quad.refined_cells > 0);
    // Every node lies in the first zone: no reciprocal vector is closer.
    for (std::size_t i = 0; i < quad.nodes.size(); i += 97) {
      const Vec2 k = quad.nodes[i].k;
      for (int m1 = -1; m1 <= 1; ++m1)
        for (int m2 = -1; m2 <= 1; ++m2) CHECK((k - lattice.reciprocal({m1, m2})).norm() >= k.norm() - 1e-9);
    }
  }
  CHECK_THROWS_AS(BZQuadrature(LatticeSpec(LatticeKind::square, 1.0), 2), std::invalid_argument);
}

TEST_CASE("folding") {
  const LatticeSpec lattice(LatticeKind::triangular, 1.5);
  const Vec2 k(0.3, -0.2);
  const Vec2 shifted = k + lattice.reciprocal({2, -1});
  CHECK((fold_to_first_zone(lattice, shifted) - k).norm() < 1e-12);
}

TEST_CASE("lattice transform") {
  const GaussianCollectiveMode mode = tri_mode(1.76, 1100, 0.13);
  REQUIRE(mode.waist >= 4 * 1.76);
  // Continuum integral of u is w sqrt(2 pi).
  CHECK(u_tilde(mode, Vec2::Zero()).real() == doctest::Approx(mode.waist * std::sqrt(2 * kPi)).epsilon(0.01));

  const Vec2 k(0.41, 0.93);
  const Complex base = u_tilde(mode, k);
  for (const OrderIndex m : {OrderIndex{1, 0}, OrderIndex{-2, 3}}) {
    CHECK(std::abs(u_tilde(mode, k + mode.array.lattice.reciprocal(m)) - base) < 1e-9 * std::abs(u_tilde(mode, Vec2::Zero())));
  }
}

TEST_CASE("overlap factor") {
  for (double ratio : {0.15, 0.25, 0.4, 0.5}) {
    const GaussianCollectiveMode mode = tri_mode(1.76, 537, ratio);
    if (mode.waist < 1.76) continue;
    CHECK(mode.eta_discrete == doctest::Approx(mode.eta).epsilon(0.05));
    CHECK(mode.eta <= 1.0);
  }
  CHECK_THROWS_AS(GaussianCollectiveMode(build_patch(LatticeSpec(LatticeKind::square, 1.0), 4), 0.0),
                  std::invalid_argument);
}

TEST_CASE("Parseval and rate positivity") {
  const GaussianCollectiveMode mode = tri_mode(1.76, 537, 0.25);
  const BZQuadrature quad(mode.array.lattice);
  const OrderSet target = first_shell_orders(mode.array.lattice);
  const CollectiveRates rates = gamma_R_and_0(mode, target, quad);
  CHECK(rates.parseval == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(rates.gamma_prime_0 - mode.eta * rates.gamma_r > 0.0);

  const InterfaceResult r = r0_finite_theory(mode, target, quad);
  CHECK(r.gamma_loss >= 0.0);
  CHECK(r.r0 == doctest::Approx(r.gamma / (r.gamma + r.gamma_loss)));
  CHECK(r.r0 > 0.99);
  CHECK(r.warnings.empty());

  // Cross-check of the total collective decay rate.
  CHECK(2 * d_matrix_00(mode).real() == doctest::Approx(rates.gamma_prime_0).epsilon(0.05));
}

TEST_CASE("infinite-array limit") {
  const GaussianCollectiveMode mode = tri_mode(1.6, 1100, 0.3);
  const BZQuadrature quad(mode.array.lattice);
  const OrderSet target = first_shell_orders(mode.array.lattice);
  const CollectiveRates rates = gamma_R_and_0(mode, target, quad);
  const InterfaceResult inf = r0_infinite(mode.array.lattice, target);
  CHECK(rates.gamma_r == doctest::Approx(inf.gamma).epsilon(0.01));
  CHECK(rates.gamma_prime_0 == doctest::Approx(inf.gamma).epsilon(0.01));
}

TEST_CASE("loss grows near the upper window edge") {
  const GaussianCollectiveMode mid = tri_mode(1.76, 537, 0.25);
  const GaussianCollectiveMode edge = tri_mode(1.98, 537, 0.25);
  const auto loss = [](const GaussianCollectiveMode& m) {
    const BZQuadrature quad(m.array.lattice);
    const CollectiveRates r = gamma_R_and_0(m, first_shell_orders(m.array.lattice), quad);
    return (r.gamma_prime_0 - r.gamma_r) / r.gamma_prime_0;
  };
  CHECK(loss(edge) > 2 * loss(mid));
}

TEST_CASE("narrow waists degrade the efficiency") {
  const LatticeSpec lattice(LatticeKind::triangular, 1.76);
  const AtomArray array = build_patch(lattice, 149);
  const BZQuadrature quad(lattice);
  const OrderSet target = first_shell_orders(lattice);
  const double good = r0_finite_theory(GaussianCollectiveMode(array, 0.25 * array.linear_size()), target, quad).r0;
  const double narrow = r0_finite_theory(GaussianCollectiveMode(array, 0.5 * 1.76), target, quad).r0;
  CHECK(narrow < good - 0.05);
}

TEST_CASE("quadrature convergence") {
  const GaussianCollectiveMode mode = tri_mode(1.76, 149, 0.27);
  const OrderSet target = first_shell_orders(mode.array.lattice);
  const double coarse = r0_finite_theory(mode, target, BZQuadrature(mode.array.lattice, 201)).r0;
  const double fine = r0_finite_theory(mode, target, BZQuadrature(mode.array.lattice, 402)).r0;
  CHECK(std::abs(coarse - fine) < 1e-3);
}

TEST_CASE("finite-waist cosine factors") {
  const GaussianCollectiveMode wide = tri_mode(1.6, 1100, 0.3);
  const BZQuadrature quad(wide.array.lattice);
  const DiffractionOrder first = make_order(wide.array.lattice, {1, 0});
  CHECK(b_m(wide, {0, 0}, quad) == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(b_m(wide, {1, 0}, quad) == doctest::Approx(first.cos_theta).epsilon(0.01));

  // Near grazing the spectrum straddles the light cone, so the plane-wave cosine is a poor estimate.
  const GaussianCollectiveMode grazing = tri_mode(1.2, 149, 0.25);
  const BZQuadrature quad2(grazing.array.lattice);
  const double cos_edge = make_order(grazing.array.lattice, {1, 0}).cos_theta;
  const double b_edge = b_m(grazing, {1, 0}, quad2);
  CHECK(b_edge > 0.0);
  CHECK(b_edge < 1.0);
  CHECK(std::abs(b_edge - cos_edge) > 0.05 * cos_edge);

  const auto coeffs = finite_mode_coefficients(wide, first_shell_orders(wide.array.lattice), Direction::forward, quad);
  CHECK(coeffs.size() == 14);
  CHECK_THROWS_AS(b_m(wide, {2, 0}, quad), std::domain_error);
}

TEST_CASE("D matrix element") {
  const GaussianCollectiveMode single(build_patch(LatticeSpec(LatticeKind::square, 1.0), 1), 1.0);
  const Complex d = d_matrix_00(single);
  CHECK(d.real() == doctest::Approx(0.5));
  CHECK(std::abs(d.imag()) < 1e-15);

  const GaussianCollectiveMode mode = tri_mode(1.5, 61, 0.3);
  const Complex direct = d_matrix_00(mode, interaction_matrix(mode.array.positions));
  CHECK(std::abs(direct - d_matrix_00(mode)) < 1e-12);
}

}
