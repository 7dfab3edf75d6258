#include "multibeam/finite_theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "multibeam/dipole_solver.hpp"

namespace multibeam {

namespace {

constexpr double kEdgeKz = 0.05;
constexpr int kRefinement = 4;

// Orders that can be radiative somewhere in the first zone.
std::vector<OrderIndex> candidate_orders(const LatticeSpec& lattice) {
  const Vec2 b1 = lattice.reciprocal({1, 0});
  const Vec2 b2 = lattice.reciprocal({0, 1});
  const double zone_radius = (b1.norm() + b2.norm());
  const double reach = kWavenumber + zone_radius;
  const double bmin = std::min(b1.norm(), b2.norm()) * std::sin(lattice.angle());
  const int bound = static_cast<int>(std::ceil(reach / bmin)) + 2;
  std::vector<OrderIndex> out;
  for (int m1 = -bound; m1 <= bound; ++m1) {
    for (int m2 = -bound; m2 <= bound; ++m2) {
      if (lattice.reciprocal({m1, m2}).norm() < reach) out.push_back({m1, m2});
    }
  }
  return out;
}

// Powers z^n for n in [lo, hi].
void fill_powers(Complex z, int lo, int hi, std::vector<Complex>& out) {
  out.assign(static_cast<std::size_t>(hi - lo + 1), Complex(1.0));
  Complex start(1.0);
  const Complex base = lo < 0 ? 1.0 / z : z;
  for (int i = 0; i < std::abs(lo); ++i) start *= base;
  Complex p = start;
  for (int n = lo; n <= hi; ++n) {
    out[static_cast<std::size_t>(n - lo)] = p;
    p *= z;
  }
}

class UTildeEvaluator {
 public:
  explicit UTildeEvaluator(const GaussianCollectiveMode& mode) : mode_(mode) {
    for (const auto& s : mode.array.sites) {
      lo1_ = std::min(lo1_, s.first);
      hi1_ = std::max(hi1_, s.first);
      lo2_ = std::min(lo2_, s.second);
      hi2_ = std::max(hi2_, s.second);
    }
  }

  Complex operator()(const Vec2& k) {
    const auto& lattice = mode_.array.lattice;
    const Vec2 a1 = lattice.site({1, 0});
    const Vec2 a2 = lattice.site({0, 1});
    fill_powers(std::polar(1.0, -k.dot(a1)), lo1_, hi1_, p1_);
    fill_powers(std::polar(1.0, -k.dot(a2)), lo2_, hi2_, p2_);
    Complex sum = 0.0;
    const auto& sites = mode_.array.sites;
    for (std::size_t i = 0; i < sites.size(); ++i) {
      sum += mode_.weights[i] * p1_[static_cast<std::size_t>(sites[i].first - lo1_)] *
             p2_[static_cast<std::size_t>(sites[i].second - lo2_)];
    }
    return lattice.cell_area() * sum;
  }

 private:
  const GaussianCollectiveMode& mode_;
  int lo1_ = 0, hi1_ = 0, lo2_ = 0, hi2_ = 0;
  std::vector<Complex> p1_, p2_;
};

bool is_radiative(const Vec2& v) {
  const double c2 = 1.0 - v.squaredNorm() / (kWavenumber * kWavenumber);
  return c2 > kGrazingCosThreshold * kGrazingCosThreshold;
}

}  // namespace

GaussianCollectiveMode::GaussianCollectiveMode(AtomArray array_in, double waist_in)
    : array(std::move(array_in)), waist(waist_in) {
  if (!(waist > 0.0) || !std::isfinite(waist)) {
    throw std::invalid_argument("GaussianCollectiveMode: waist must be positive");
  }
  const double norm = std::sqrt(2.0 / (kPi * waist * waist));
  double sum2 = 0.0;
  weights.reserve(array.size());
  for (std::size_t i = 0; i < array.size(); ++i) {
    const Vec3 r = array.ideal_position(i);
    const double u = norm * std::exp(-(r.x() * r.x() + r.y() * r.y()) / (waist * waist));
    weights.push_back(u);
    sum2 += u * u;
  }
  eta_discrete = array.lattice.cell_area() * sum2;
  const double e = std::erf(array.linear_size() / (std::sqrt(2.0) * waist));
  eta = e * e;
}

Complex u_tilde(const GaussianCollectiveMode& mode, const Vec2& k) {
  UTildeEvaluator eval(mode);
  return eval(k);
}

Vec2 fold_to_first_zone(const LatticeSpec& lattice, const Vec2& k) {
  const Vec2 b1 = lattice.reciprocal({1, 0});
  const Vec2 b2 = lattice.reciprocal({0, 1});
  // Coordinates of k in the reciprocal basis, then a local search for the
  // nearest reciprocal lattice vector.
  Eigen::Matrix2d basis;
  basis.col(0) = b1;
  basis.col(1) = b2;
  const Vec2 c = basis.inverse() * k;
  const int c1 = static_cast<int>(std::floor(c.x()));
  const int c2 = static_cast<int>(std::floor(c.y()));
  Vec2 best = k;
  double best_norm = std::numeric_limits<double>::infinity();
  for (int i = c1 - 1; i <= c1 + 2; ++i) {
    for (int j = c2 - 1; j <= c2 + 2; ++j) {
      const Vec2 candidate = k - lattice.reciprocal({i, j});
      const double n2 = candidate.squaredNorm();
      if (n2 < best_norm - 1e-12) {
        best_norm = n2;
        best = candidate;
      }
    }
  }
  return best;
}

BZQuadrature::BZQuadrature(const LatticeSpec& lattice, int resolution_in) : resolution(resolution_in) {
  if (resolution < 4) {
    throw std::invalid_argument("BZQuadrature: resolution must be at least 4");
  }
  const Vec2 b1 = lattice.reciprocal({1, 0});
  const Vec2 b2 = lattice.reciprocal({0, 1});
  const double zone_area = std::abs(b1.x() * b2.y() - b1.y() * b2.x());
  const double cell_weight = zone_area / (static_cast<double>(resolution) * resolution);
  const double cell_diameter = (b1 + b2).norm() / resolution + (b1 - b2).norm() / resolution;
  const auto orders = candidate_orders(lattice);
  // |v| with k_z = kEdgeKz k.
  const double edge_inner = kWavenumber * std::sqrt(1.0 - kEdgeKz * kEdgeKz);

  nodes.reserve(static_cast<std::size_t>(resolution) * resolution);
  for (int s = 0; s < resolution; ++s) {
    for (int t = 0; t < resolution; ++t) {
      const Vec2 center = fold_to_first_zone(
          lattice, ((s + 0.5) / resolution) * b1 + ((t + 0.5) / resolution) * b2);
      bool near_edge = false;
      for (const auto& m : orders) {
        const double v = (lattice.reciprocal(m) + center).norm();
        if (v > edge_inner - cell_diameter && v < kWavenumber + cell_diameter) {
          near_edge = true;
          break;
        }
      }
      if (!near_edge) {
        nodes.push_back({center, cell_weight});
        continue;
      }
      ++refined_cells;
      const Vec2 corner = center - 0.5 * (b1 + b2) / resolution;
      for (int i = 0; i < kRefinement; ++i) {
        for (int j = 0; j < kRefinement; ++j) {
          const Vec2 k = corner + ((i + 0.5) / kRefinement) * b1 / resolution +
                         ((j + 0.5) / kRefinement) * b2 / resolution;
          nodes.push_back({fold_to_first_zone(lattice, k), cell_weight / (kRefinement * kRefinement)});
        }
      }
    }
  }
}

double BZQuadrature::total_weight() const {
  double sum = 0.0;
  for (const auto& n : nodes) sum += n.weight;
  return sum;
}

CollectiveRates gamma_R_and_0(const GaussianCollectiveMode& mode, const OrderSet& target, const BZQuadrature& quad) {
  const auto& lattice = mode.array.lattice;
  if (mode.array.size() == 0) {
    throw std::invalid_argument("gamma_R_and_0: empty array");
  }
  const auto orders = candidate_orders(lattice);
  std::vector<Vec2> q(orders.size());
  std::vector<bool> in_target(orders.size());
  for (std::size_t i = 0; i < orders.size(); ++i) {
    q[i] = lattice.reciprocal(orders[i]);
    in_target[i] = target.contains(orders[i]);
  }
  const double g0 = gamma0(lattice);
  UTildeEvaluator eval(mode);
  double sum_r = 0.0, sum_0 = 0.0, sum_w = 0.0;
  for (const auto& node : quad.nodes) {
    const double weight = std::norm(eval(node.k)) * node.weight;
    sum_w += weight;
    double rate_r = 0.0, rate_0 = 0.0;
    for (std::size_t i = 0; i < orders.size(); ++i) {
      const Vec2 v = q[i] + node.k;
      if (!is_radiative(v)) continue;
      const double rate = order_rate_factor(v);
      rate_0 += rate;
      if (in_target[i]) rate_r += rate;
    }
    sum_r += weight * rate_r;
    sum_0 += weight * rate_0;
  }
  const double scale = 1.0 / (4.0 * kPi * kPi * mode.eta_discrete);
  return {g0 * sum_r * scale, g0 * sum_0 * scale, sum_w * scale};
}

Complex d_matrix_00(const GaussianCollectiveMode& mode) {
  const auto n = mode.array.size();
  double norm2 = 0.0;
  for (double u : mode.weights) norm2 += u * u;
  if (n == 0 || norm2 == 0.0) {
    throw std::invalid_argument("d_matrix_00: empty mode");
  }
  std::vector<Vec3> ideal(n);
  for (std::size_t i = 0; i < n; ++i) ideal[i] = mode.array.ideal_position(i);
  Complex off = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      off += mode.weights[i] * mode.weights[j] * greens_projected(ideal[i] - ideal[j]);
    }
  }
  const Complex vmv = Complex(0.0, kLinewidth / 2.0) + 2.0 * 1.5 * kLinewidth * kWavelength * off / norm2;
  return -kI * vmv;
}

Complex d_matrix_00(const GaussianCollectiveMode& mode, const Eigen::MatrixXcd& interaction) {
  const auto n = static_cast<Eigen::Index>(mode.array.size());
  if (interaction.rows() != n || interaction.cols() != n || n == 0) {
    throw std::invalid_argument("d_matrix_00: interaction matrix does not match the mode");
  }
  Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(mode.weights.data(), n);
  v /= v.norm();
  const Eigen::VectorXcd vc = v.cast<Complex>();
  return -kI * (vc.transpose() * interaction * vc).value();
}

InterfaceResult r0_finite_theory(const GaussianCollectiveMode& mode, const OrderSet& target, const BZQuadrature& quad) {
  const CollectiveRates rates = gamma_R_and_0(mode, target, quad);
  InterfaceResult result;
  result.source = ResultSource::finite_theory;
  result.gamma = mode.eta * rates.gamma_r;
  result.gamma_loss = rates.gamma_prime_0 - result.gamma;
  result.r0 = rates.gamma_prime_0 > 0.0 ? result.gamma / rates.gamma_prime_0 : 0.0;
  const Complex d00 = d_matrix_00(mode);
  result.delta_res = d00.imag();
  result.diagnostics["gamma_R"] = rates.gamma_r;
  result.diagnostics["gamma_prime_0"] = rates.gamma_prime_0;
  result.diagnostics["eta"] = mode.eta;
  result.diagnostics["eta_discrete"] = mode.eta_discrete;
  result.diagnostics["eta_mismatch"] = mode.eta - mode.eta_discrete;
  result.diagnostics["parseval"] = rates.parseval;
  result.diagnostics["d00_gamma"] = 2.0 * d00.real();
  result.diagnostics["waist"] = mode.waist;
  result.diagnostics["bz_resolution"] = quad.resolution;
  result.diagnostics["bz_nodes"] = static_cast<double>(quad.nodes.size());
  if (result.gamma_loss < 0.0) {
    result.warnings.push_back("negative loss rate: the profile overlap exceeds the discrete norm");
  }
  return result;
}

double b_m(const GaussianCollectiveMode& mode, OrderIndex m, const BZQuadrature& quad) {
  const auto& lattice = mode.array.lattice;
  const Vec2 q = lattice.reciprocal(m);
  if (!is_radiative(q)) {
    throw std::domain_error("b_m: order is not radiative at k = 0");
  }
  UTildeEvaluator eval(mode);
  double sum = 0.0;
  for (const auto& node : quad.nodes) {
    const Vec2 v = q + node.k;
    if (!is_radiative(v)) continue;
    const double c = std::sqrt(1.0 - v.squaredNorm() / (kWavenumber * kWavenumber));
    sum += std::norm(eval(node.k)) * node.weight / c;
  }
  sum /= 4.0 * kPi * kPi * mode.eta_discrete;
  return 1.0 / sum;
}

std::vector<ModeCoefficient> finite_mode_coefficients(const GaussianCollectiveMode& mode, const OrderSet& orders,
                                                      Direction alpha, const BZQuadrature& quad) {
  auto out = mode_coefficients(orders, alpha);
  for (std::size_t i = 0; i < orders.size(); ++i) {
    const double scale = std::sqrt(orders.orders[i].cos_theta / b_m(mode, orders.orders[i].m, quad));
    out[2 * i].c *= scale;
    out[2 * i + 1].c *= scale;
  }
  return out;
}

}  // namespace multibeam
