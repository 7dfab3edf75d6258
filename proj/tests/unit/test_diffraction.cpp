#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <stdexcept>
#include <vector>

#include "multibeam/diffraction.hpp"

using namespace multibeam;

namespace {

std::set<OrderIndex> indices(const OrderSet& set) {
  std::set<OrderIndex> out;
  for (const auto& o : set.orders) out.insert(o.m);
  return out;
}

// Direct closed-form rate, without going through the library helpers.
double rate_oracle(double a, bool triangular, int m1, int m2) {
  const double g = 2 * kPi / a;
  const double qx = g * m1;
  const double qy = triangular ? g * (2.0 * m2 - m1) / std::sqrt(3.0) : g * m2;
  const double s2 = (qx * qx + qy * qy) / (4 * kPi * kPi);
  const double area = triangular ? a * a * std::sqrt(3.0) / 2 : a * a;
  return 3.0 / (4 * kPi) / area * (1.0 - s2 / 2) / std::sqrt(1.0 - s2);
}

}  // namespace

TEST_SUITE("diffraction") {

TEST_CASE("radiative order enumeration") {
  const OrderSet tri = radiative_orders(LatticeSpec(LatticeKind::triangular, 1.8));
  const std::set<OrderIndex> expected{{0, 0}, {1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 1}, {-1, -1}};
  CHECK(indices(tri) == expected);
  CHECK(tri.includes_zero);

  const OrderSet square = radiative_orders(LatticeSpec(LatticeKind::square, 1.2));
  CHECK(indices(square) == std::set<OrderIndex>{{0, 0}, {1, 0}, {-1, 0}, {0, 1}, {0, -1}});

  const OrderSet sub = radiative_orders(LatticeSpec(LatticeKind::square, 0.8));
  CHECK(indices(sub) == std::set<OrderIndex>{{0, 0}});
}

TEST_CASE("enumeration agrees with a wide brute-force search") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> spacing(0.5, 4.0);
  for (int trial = 0; trial < 20; ++trial) {
    const double a = spacing(rng);
    for (const auto kind : {LatticeKind::triangular, LatticeKind::square}) {
      const LatticeSpec lattice(kind, a);
      std::set<OrderIndex> brute;
      for (int m1 = -20; m1 <= 20; ++m1)
        for (int m2 = -20; m2 <= 20; ++m2)
          if (lattice.reciprocal({m1, m2}).norm() < kWavenumber * (1 - 1e-6)) brute.insert({m1, m2});
      CHECK(indices(radiative_orders(lattice)) == brute);
    }
  }
}

TEST_CASE("first shell target matches the full set inside the window") {
  for (double a : {1.2, 1.5, 1.8, 1.99}) {
    const LatticeSpec lattice(LatticeKind::triangular, a);
    CHECK(indices(first_shell_orders(lattice)) == indices(radiative_orders(lattice)));
  }
  for (double a : {1.05, 1.3, 1.41}) {
    const LatticeSpec lattice(LatticeKind::square, a);
    CHECK(indices(first_shell_orders(lattice)) == indices(radiative_orders(lattice)));
  }
}

TEST_CASE("order rates") {
  for (const auto kind : {LatticeKind::triangular, LatticeKind::square}) {
    const LatticeSpec lattice(kind, 1.3);
    CHECK(gamma_order(lattice, {0, 0}) == doctest::Approx(3.0 / (4 * kPi) / lattice.cell_area()));
  }
  CHECK(gamma0(LatticeSpec(LatticeKind::square, 1.7)) == doctest::Approx(3.0 / (4 * kPi) / (1.7 * 1.7)));

  const LatticeSpec tri(LatticeKind::triangular, 2.0);
  const double g0 = gamma0(tri);
  CHECK(gamma_order(tri, {1, 0}) / g0 == doctest::Approx((1 - 1.0 / 6) / std::sqrt(2.0 / 3)).epsilon(1e-7));

  CHECK_THROWS_AS(gamma_order(LatticeSpec(LatticeKind::square, 1.0), {1, 0}), std::domain_error);
  CHECK_THROWS_AS(gamma_order(LatticeSpec(LatticeKind::square, 0.8), {1, 0}), std::domain_error);

  const OrderSet grazing = radiative_orders(LatticeSpec(LatticeKind::square, 1.0));
  CHECK(grazing.size() == 1);
  CHECK(grazing.grazing.size() == 4);
}

TEST_CASE("rates share the point-group symmetry") {
  const LatticeSpec tri(LatticeKind::triangular, 1.7);
  const OrderSet shell = first_shell_orders(tri);
  REQUIRE(shell.size() == 7);
  double ref = -1, ref_theta = -1;
  for (const auto& o : shell.orders) {
    if (o.m == OrderIndex{0, 0}) continue;
    if (ref < 0) {
      ref = gamma_order(tri, o.m);
      ref_theta = o.theta;
    }
    CHECK(gamma_order(tri, o.m) == doctest::Approx(ref).epsilon(1e-13));
    CHECK(o.theta == doctest::Approx(ref_theta).epsilon(1e-13));
  }
}

TEST_CASE("diffraction angles") {
  const DiffractionOrder tri = make_order(LatticeSpec(LatticeKind::triangular, 2.0), {1, 0});
  CHECK(tri.theta * 180 / kPi == doctest::Approx(35.26).epsilon(1e-3));
  const DiffractionOrder sq = make_order(LatticeSpec(LatticeKind::square, std::sqrt(2.0)), {1, 0});
  CHECK(sq.theta * 180 / kPi == doctest::Approx(45.0).epsilon(1e-6));

  // Closed forms, and monotonic decrease with spacing.
  double last = kPi;
  for (double a = 1.2; a < 2.0; a += 0.05) {
    const DiffractionOrder o = make_order(LatticeSpec(LatticeKind::triangular, a), {0, 1});
    CHECK(o.theta == doctest::Approx(std::asin(2 / (std::sqrt(3.0) * a))).epsilon(1e-13));
    CHECK(o.theta < last);
    last = o.theta;
  }
  for (double a = 1.05; a < 1.41; a += 0.05) {
    const DiffractionOrder o = make_order(LatticeSpec(LatticeKind::square, a), {1, 0});
    CHECK(o.theta == doctest::Approx(std::asin(1 / a)).epsilon(1e-13));
  }
  CHECK(make_order(LatticeSpec(LatticeKind::square, 1.3), {0, 0}).phi == 0.0);
}

TEST_CASE("coefficient-rate identity") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> spacing(0.6, 3.5);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    for (const auto kind : {LatticeKind::triangular, LatticeKind::square}) {
      const LatticeSpec lattice(kind, spacing(rng));
      const OrderSet all = radiative_orders(lattice);
      for (const auto alpha : {Direction::forward, Direction::backward}) {
        const auto coeffs = mode_coefficients(all, alpha);
        for (const auto& order : all.orders) {
          double sum = 0.0;
          for (const auto& c : coeffs)
            if (c.m == order.m) sum += std::norm(c.c);
          const double expected =
              rate_oracle(lattice.spacing(), kind == LatticeKind::triangular, order.m.first, order.m.second) /
              rate_oracle(lattice.spacing(), kind == LatticeKind::triangular, 0, 0);
          worst = std::max(worst, std::abs(sum - expected));
        }
      }
    }
  }
  CHECK(worst < 1e-10);
}

TEST_CASE("zeroth order reproduces the conjugate dipole") {
  const OrderSet zero = radiative_orders(LatticeSpec(LatticeKind::square, 0.8));
  const auto coeffs = mode_coefficients(zero, Direction::forward);
  CVec3 sum = CVec3::Zero();
  for (const auto& c : coeffs) {
    sum += c.c * polarization_vector(zero.orders[0], c.mu, c.alpha).cast<Complex>();
  }
  CHECK((sum - dipole_orientation().conjugate()).norm() < 1e-15);
}

TEST_CASE("sum of c e is independent of basis sign") {
  const LatticeSpec tri(LatticeKind::triangular, 1.6);
  const OrderSet shell = first_shell_orders(tri);
  const auto coeffs = mode_coefficients(shell, Direction::forward);
  for (const auto& order : shell.orders) {
    CVec3 plain = CVec3::Zero(), flipped = CVec3::Zero();
    for (const auto& c : coeffs) {
      if (c.m != order.m) continue;
      const Vec3 e = polarization_vector(order, c.mu, c.alpha);
      plain += c.c * e.cast<Complex>();
      // Flipping e_s flips its coefficient too.
      const double s = c.mu == Polarization::s ? -1.0 : 1.0;
      const Vec3 e2 = s * e;
      flipped += e2.cast<Complex>().dot(dipole_orientation().conjugate()) / std::sqrt(order.cos_theta) *
                 e2.cast<Complex>();
    }
    CHECK((plain - flipped).norm() < 1e-14);
  }
}

TEST_CASE("infinite-array efficiency") {
  for (double a : {1.2, 1.5, 1.8}) {
    const LatticeSpec lattice(LatticeKind::triangular, a);
    const InterfaceResult r = r0_infinite(lattice, first_shell_orders(lattice));
    CHECK(std::abs(r.r0 - 1.0) < 1e-12);
    CHECK(r.gamma_loss == doctest::Approx(0.0));
  }
  for (double a : {1.1, 1.3}) {
    const LatticeSpec lattice(LatticeKind::square, a);
    CHECK(std::abs(r0_infinite(lattice, first_shell_orders(lattice)).r0 - 1.0) < 1e-12);
  }

  // Beyond the square window the second shell (1,1) family radiates.
  const LatticeSpec wide(LatticeKind::square, 1.5);
  double total = 0.0, coupled = 0.0;
  for (int m1 = -2; m1 <= 2; ++m1)
    for (int m2 = -2; m2 <= 2; ++m2) {
      const double s2 = (m1 * m1 + m2 * m2) / (1.5 * 1.5);
      if (s2 >= 1.0) continue;
      const double g = rate_oracle(1.5, false, m1, m2);
      total += g;
      if (std::abs(m1) + std::abs(m2) <= 1) coupled += g;
    }
  const InterfaceResult r = r0_infinite(wide, first_shell_orders(wide));
  CHECK(r.r0 < 1.0);
  CHECK(r.r0 == doctest::Approx(coupled / total).epsilon(1e-12));

  const LatticeSpec sub(LatticeKind::square, 0.8);
  CHECK(r0_infinite(sub, radiative_orders(sub)).r0 == 1.0);
}

TEST_CASE("custom order sets") {
  const LatticeSpec tri(LatticeKind::triangular, 1.8);
  const std::vector<OrderIndex> good{{0, 0}, {1, 0}};
  CHECK(custom_orders(tri, good).size() == 2);
  const std::vector<OrderIndex> dup{{0, 0}, {0, 0}};
  CHECK_THROWS_AS(custom_orders(tri, dup), std::invalid_argument);
  const std::vector<OrderIndex> dark{{2, 0}};
  CHECK_THROWS_AS(custom_orders(tri, dark), std::invalid_argument);
}

}
