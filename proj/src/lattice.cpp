#include "multibeam/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <tuple>

namespace multibeam {

std::string_view to_string(LatticeKind kind) {
  return kind == LatticeKind::triangular ? "triangular" : "square";
}

LatticeKind parse_lattice_kind(std::string_view text) {
  if (text == "triangular") return LatticeKind::triangular;
  if (text == "square") return LatticeKind::square;
  throw std::invalid_argument("unknown lattice kind '" + std::string(text) + "'");
}

LatticeSpec::LatticeSpec(LatticeKind kind, double spacing) : kind_(kind), spacing_(spacing) {
  if (!(spacing > 0.0) || !std::isfinite(spacing)) {
    throw std::invalid_argument("lattice spacing must be positive and finite");
  }
}

double LatticeSpec::angle() const {
  return kind_ == LatticeKind::triangular ? kPi / 3.0 : kPi / 2.0;
}

double LatticeSpec::cell_area() const {
  return kind_ == LatticeKind::triangular ? spacing_ * spacing_ * std::sqrt(3.0) / 2.0
                                          : spacing_ * spacing_;
}

Vec2 LatticeSpec::site(SiteIndex n) const {
  if (kind_ == LatticeKind::square) {
    return Vec2(n.first * spacing_, n.second * spacing_);
  }
  return Vec2((n.first + 0.5 * n.second) * spacing_, n.second * spacing_ * std::sqrt(3.0) / 2.0);
}

Vec2 LatticeSpec::reciprocal(OrderIndex m) const {
  const double g = 2.0 * kPi / spacing_;
  if (kind_ == LatticeKind::square) {
    return Vec2(g * m.first, g * m.second);
  }
  // cot(pi/3) = 1/sqrt(3), 1/sin(pi/3) = 2/sqrt(3)
  return Vec2(g * m.first, g * (2.0 * m.second - m.first) / std::sqrt(3.0));
}

long long LatticeSpec::integer_norm(SiteIndex n) const {
  const long long a = n.first;
  const long long b = n.second;
  return kind_ == LatticeKind::square ? a * a + b * b : a * a + a * b + b * b;
}

Vec2 reciprocal_vector(const LatticeSpec& lattice, OrderIndex m) { return lattice.reciprocal(m); }

double AtomArray::linear_size() const {
  return std::sqrt(static_cast<double>(positions.size()) * lattice.cell_area());
}

Vec3 AtomArray::ideal_position(std::size_t i) const {
  const Vec2 r = lattice.site(sites.at(i));
  return Vec3(r.x(), r.y(), 0.0);
}

AtomArray build_patch(const LatticeSpec& lattice, std::size_t n_target) {
  if (n_target == 0) {
    throw std::invalid_argument("build_patch: N_target must be at least 1");
  }
  struct Candidate {
    long long norm;
    double angle;
    SiteIndex site;
  };
  const double sin_psi = std::sin(lattice.angle());
  // Radius of the disk with the requested area, padded by a few shells.
  const double r_estimate = std::sqrt(static_cast<double>(n_target) * lattice.cell_area() / kPi);
  int extent = static_cast<int>(std::ceil(r_estimate / (lattice.spacing() * sin_psi))) + 3;

  for (;;) {
    std::vector<Candidate> candidates;
    candidates.reserve(static_cast<std::size_t>((2 * extent + 1) * (2 * extent + 1)));
    for (int n1 = -extent; n1 <= extent; ++n1) {
      for (int n2 = -extent; n2 <= extent; ++n2) {
        const SiteIndex n{n1, n2};
        const Vec2 r = lattice.site(n);
        double phi = std::atan2(r.y(), r.x());
        if (phi < 0.0) phi += 2.0 * kPi;
        if (n1 == 0 && n2 == 0) phi = 0.0;
        candidates.push_back({lattice.integer_norm(n), phi, n});
      }
    }
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& x, const Candidate& y) {
      return std::tie(x.norm, x.angle, x.site) < std::tie(y.norm, y.angle, y.site);
    });
    if (candidates.size() < n_target) {
      extent *= 2;
      continue;
    }
    // Every site inside the enumerated square with radius up to extent*a*sin(psi)
    // is present, so the cut is complete when the last kept radius is below it.
    const double last_radius =
        lattice.spacing() * std::sqrt(static_cast<double>(candidates[n_target - 1].norm));
    if (last_radius >= extent * lattice.spacing() * sin_psi) {
      extent *= 2;
      continue;
    }
    AtomArray array{lattice, {}, {}, last_radius, 0};
    array.positions.reserve(n_target);
    array.sites.reserve(n_target);
    for (std::size_t i = 0; i < n_target; ++i) {
      const Vec2 r = lattice.site(candidates[i].site);
      array.positions.emplace_back(r.x(), r.y(), 0.0);
      array.sites.push_back(candidates[i].site);
    }
    return array;
  }
}

AtomArray apply_shift(const AtomArray& array, const Vec3& offset) {
  AtomArray shifted = array;
  for (auto& p : shifted.positions) p += offset;
  return shifted;
}

AtomArray apply_disorder(const AtomArray& array, double sigma, std::uint64_t seed, bool antithetic) {
  if (!(sigma >= 0.0)) {
    throw std::invalid_argument("apply_disorder: sigma must be non-negative");
  }
  AtomArray disordered = array;
  disordered.rng_seed = seed;
  if (sigma == 0.0) return disordered;
  std::mt19937_64 rng(seed);
  // Unit draws scaled by sigma: one seed gives the same displacement pattern
  // at every disorder strength.
  std::normal_distribution<double> normal(0.0, 1.0);
  const double scale = antithetic ? -sigma : sigma;
  for (auto& p : disordered.positions) {
    for (int c = 0; c < 3; ++c) p[c] += scale * normal(rng);
  }
  return disordered;
}

}  // namespace multibeam
