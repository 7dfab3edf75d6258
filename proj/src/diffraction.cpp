#include "multibeam/diffraction.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <tuple>

namespace multibeam {

std::string_view to_string(ResultSource source) {
  switch (source) {
    case ResultSource::infinite_theory: return "infinite_theory";
    case ResultSource::finite_theory: return "finite_theory";
    case ResultSource::scattering: return "scattering";
  }
  return "unknown";
}

DiffractionOrder make_order(const LatticeSpec& lattice, OrderIndex m, const Vec2& k_shift) {
  DiffractionOrder order;
  order.m = m;
  order.q = lattice.reciprocal(m) + k_shift;
  const double qn = order.q.norm() / kWavenumber;
  order.phi = (m == OrderIndex{0, 0} && k_shift.isZero()) ? 0.0 : std::atan2(order.q.y(), order.q.x());
  if (qn < 1.0) {
    order.cos_theta = std::sqrt(1.0 - qn * qn);
    order.theta = std::asin(qn);
    order.radiative = order.cos_theta >= kGrazingCosThreshold;
  } else {
    order.cos_theta = 0.0;
    order.theta = kPi / 2.0;
    order.radiative = false;
  }
  return order;
}

bool OrderSet::contains(OrderIndex m) const {
  return std::any_of(orders.begin(), orders.end(), [&](const DiffractionOrder& o) { return o.m == m; });
}

namespace {

void sort_orders(std::vector<DiffractionOrder>& orders) {
  std::sort(orders.begin(), orders.end(), [](const DiffractionOrder& a, const DiffractionOrder& b) {
    const double na = std::round(a.q.squaredNorm() * 1e9);
    const double nb = std::round(b.q.squaredNorm() * 1e9);
    return std::tie(na, a.m) < std::tie(nb, b.m);
  });
}

}  // namespace

OrderSet radiative_orders(const LatticeSpec& lattice, const Vec2& k_shift) {
  OrderSet set;
  set.label = OrderSetLabel::all_radiative;
  // Generous bound: |m_i| <= (a/lambda)(1 + |k_shift|/k)/sin(psi) + 2 covers
  // every reciprocal vector inside the shifted light cone.
  const double reach = lattice.spacing() / kWavelength * (1.0 + k_shift.norm() / kWavenumber);
  const int bound = static_cast<int>(std::ceil(reach / std::sin(lattice.angle()))) + 2;
  for (int m1 = -bound; m1 <= bound; ++m1) {
    for (int m2 = -bound; m2 <= bound; ++m2) {
      const DiffractionOrder order = make_order(lattice, {m1, m2}, k_shift);
      if (order.radiative) {
        set.orders.push_back(order);
      } else if (order.q.norm() < kWavenumber * (1.0 + 1e-9)) {
        set.grazing.push_back(order.m);
      }
    }
  }
  sort_orders(set.orders);
  set.includes_zero = set.contains({0, 0});
  return set;
}

OrderSet first_shell_orders(const LatticeSpec& lattice) {
  OrderSet set;
  set.label = OrderSetLabel::first_shell;
  const long long shell = 1;  // m1^2 + m2^2 (square) or m1^2 - m1 m2 + m2^2 (triangular)
  for (int m1 = -1; m1 <= 1; ++m1) {
    for (int m2 = -1; m2 <= 1; ++m2) {
      const long long norm = lattice.kind() == LatticeKind::square
                                 ? m1 * m1 + m2 * m2
                                 : m1 * m1 - m1 * m2 + m2 * m2;
      if (norm != 0 && norm != shell) continue;
      const DiffractionOrder order = make_order(lattice, {m1, m2});
      if (order.radiative) {
        set.orders.push_back(order);
      } else if (order.q.norm() < kWavenumber * (1.0 + 1e-9)) {
        set.grazing.push_back(order.m);
      }
    }
  }
  sort_orders(set.orders);
  set.includes_zero = set.contains({0, 0});
  return set;
}

OrderSet custom_orders(const LatticeSpec& lattice, std::span<const OrderIndex> indices) {
  OrderSet set;
  set.label = OrderSetLabel::custom;
  for (const OrderIndex& m : indices) {
    if (set.contains(m)) {
      throw std::invalid_argument("custom_orders: duplicate order (" + std::to_string(m.first) + "," +
                                  std::to_string(m.second) + ")");
    }
    const DiffractionOrder order = make_order(lattice, m);
    if (!order.radiative) {
      throw std::invalid_argument("custom_orders: order (" + std::to_string(m.first) + "," +
                                  std::to_string(m.second) + ") is not radiative");
    }
    set.orders.push_back(order);
  }
  sort_orders(set.orders);
  set.includes_zero = set.contains({0, 0});
  return set;
}

double gamma0(const LatticeSpec& lattice) {
  return kLinewidth * 3.0 / (4.0 * kPi) * kWavelength * kWavelength / lattice.cell_area();
}

double order_rate_factor(const Vec2& v) {
  const double s2 = v.squaredNorm() / (kWavenumber * kWavenumber);
  // |v . e_d|^2 = |v|^2 / 2 for circular e_d.
  return (1.0 - 0.5 * s2) / std::sqrt(1.0 - s2);
}

double gamma_order(const LatticeSpec& lattice, OrderIndex m, const Vec2& k_shift) {
  const DiffractionOrder order = make_order(lattice, m, k_shift);
  if (!order.radiative) {
    throw std::domain_error("gamma_order: order (" + std::to_string(m.first) + "," +
                            std::to_string(m.second) + ") is evanescent or grazing");
  }
  return gamma0(lattice) * order_rate_factor(order.q);
}

Vec3 polarization_vector(const DiffractionOrder& order, Polarization mu, Direction alpha) {
  const double ct = std::cos(order.theta);
  const double st = std::sin(order.theta);
  const double cf = std::cos(order.phi);
  const double sf = std::sin(order.phi);
  if (mu == Polarization::s) {
    return Vec3(-sf, cf, 0.0);
  }
  const double z_sign = alpha == Direction::forward ? -1.0 : 1.0;
  return Vec3(ct * cf, ct * sf, z_sign * st);
}

std::vector<ModeCoefficient> mode_coefficients(const OrderSet& orders, Direction alpha) {
  const CVec3 ed_conj = dipole_orientation().conjugate();
  std::vector<ModeCoefficient> out;
  out.reserve(2 * orders.size());
  for (const auto& order : orders.orders) {
    if (!order.radiative) {
      throw std::invalid_argument("mode_coefficients: order set contains a non-radiative order");
    }
    for (Polarization mu : {Polarization::s, Polarization::p}) {
      const Vec3 e = polarization_vector(order, mu, alpha);
      const Complex c = e.cast<Complex>().dot(ed_conj) / std::sqrt(order.cos_theta);
      out.push_back({order.m, mu, alpha, c});
    }
  }
  return out;
}

InterfaceResult r0_infinite(const LatticeSpec& lattice, const OrderSet& target) {
  const OrderSet all = radiative_orders(lattice);
  InterfaceResult result;
  result.source = ResultSource::infinite_theory;
  double total = 0.0;
  for (const auto& order : all.orders) total += gamma0(lattice) * order_rate_factor(order.q);
  double coupled = 0.0;
  for (const auto& order : target.orders) {
    if (!all.contains(order.m)) {
      throw std::invalid_argument("r0_infinite: target order is not radiative at k_shift = 0");
    }
    coupled += gamma0(lattice) * order_rate_factor(order.q);
  }
  result.gamma = coupled;
  result.gamma_loss = total - coupled;
  result.r0 = total > 0.0 ? coupled / total : 0.0;
  result.diagnostics["gamma0"] = gamma0(lattice);
  result.diagnostics["radiative_orders"] = static_cast<double>(all.size());
  result.diagnostics["target_orders"] = static_cast<double>(target.size());
  if (!all.grazing.empty()) {
    result.warnings.push_back("grazing diffraction orders excluded from the loss sum");
  }
  return result;
}

}  // namespace multibeam
