#include "multibeam/angular_spectrum.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

#include <Eigen/Dense>

namespace multibeam {

KGrid::KGrid(int resolution) : resolution_(resolution) {
  if (resolution < 8) {
    throw std::invalid_argument("KGrid: resolution must be at least 8");
  }
  spacing_ = 2.0 * kWavenumber / resolution;
  const double k2 = kWavenumber * kWavenumber;
  for (int ix = 0; ix < resolution; ++ix) {
    for (int iy = 0; iy < resolution; ++iy) {
      const double kx = coordinate(ix);
      const double ky = coordinate(iy);
      const double kz2 = k2 - kx * kx - ky * ky;
      if (kz2 <= 1e-12 * k2) continue;
      nodes_.push_back({ix, iy, kx, ky, std::sqrt(kz2)});
    }
  }
}

std::shared_ptr<const KGrid> make_k_grid(int resolution) {
  static std::mutex mutex;
  static std::map<int, std::weak_ptr<const KGrid>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  if (auto cached = cache[resolution].lock()) return cached;
  auto grid = std::make_shared<const KGrid>(resolution);
  cache[resolution] = grid;
  return grid;
}

AngularSpectrum AngularSpectrum::zeros(std::shared_ptr<const KGrid> grid, HalfSpace half_space) {
  AngularSpectrum s;
  s.amplitudes.assign(grid->size(), CVec3::Zero());
  s.grid = std::move(grid);
  s.half_space = half_space;
  return s;
}

Vec3 AngularSpectrum::direction(std::size_t i) const {
  const auto& n = grid->nodes()[i];
  const double sign = half_space == HalfSpace::forward ? 1.0 : -1.0;
  return Vec3(n.kx, n.ky, sign * n.kz) / kWavenumber;
}

Complex flux_inner(const AngularSpectrum& a, const AngularSpectrum& b) {
  if (!a.grid || !b.grid || a.grid->resolution() != b.grid->resolution()) {
    throw std::invalid_argument("flux_inner: grid mismatch");
  }
  if (a.half_space != b.half_space) {
    throw std::invalid_argument("flux_inner: half-space mismatch");
  }
  const auto& nodes = a.grid->nodes();
  Complex sum = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    sum += nodes[i].kz * a.amplitudes[i].dot(b.amplitudes[i]);  // dot conjugates the first argument
  }
  return sum * (4.0 * kPi * kPi) * a.grid->node_area() / kWavenumber;
}

double flux_norm(const AngularSpectrum& a) { return flux_inner(a, a).real(); }

double max_longitudinal_fraction(const AngularSpectrum& a) {
  double max_amp = 0.0;
  double max_long = 0.0;
  for (std::size_t i = 0; i < a.amplitudes.size(); ++i) {
    max_amp = std::max(max_amp, a.amplitudes[i].norm());
    max_long = std::max(max_long, std::abs(a.amplitudes[i].dot(a.direction(i).cast<Complex>())));
  }
  return max_amp > 0.0 ? max_long / max_amp : 0.0;
}

std::vector<Complex> synthesize_scalar(const KGrid& grid, HalfSpace half_space,
                                       std::span<const Complex> weights, std::span<const Vec3> points) {
  if (weights.size() != grid.size()) {
    throw std::invalid_argument("synthesize_scalar: weight count does not match grid");
  }
  std::vector<Complex> out(points.size(), Complex(0.0));
  if (points.empty()) return out;
  const int n = grid.resolution();
  const double zsign = half_space == HalfSpace::forward ? 1.0 : -1.0;
  const auto& nodes = grid.nodes();
  const double area = grid.node_area();

  bool common_z = true;
  for (const auto& p : points) common_z = common_z && p.z() == points.front().z();

  Eigen::VectorXd coords(n);
  for (int i = 0; i < n; ++i) coords[i] = grid.coordinate(i);

  if (common_z) {
    const double z0 = points.front().z();
    Eigen::MatrixXcd dense = Eigen::MatrixXcd::Zero(n, n);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      dense(nodes[i].ix, nodes[i].iy) = weights[i] * std::polar(area, zsign * nodes[i].kz * z0);
    }
    const Eigen::Index m = static_cast<Eigen::Index>(points.size());
    Eigen::MatrixXcd phase_y(n, m);
    Eigen::MatrixXcd phase_x(n, m);
    for (Eigen::Index j = 0; j < m; ++j) {
      for (int i = 0; i < n; ++i) {
        phase_y(i, j) = std::polar(1.0, coords[i] * points[j].y());
        phase_x(i, j) = std::polar(1.0, coords[i] * points[j].x());
      }
    }
    const Eigen::MatrixXcd partial = dense * phase_y;
    for (Eigen::Index j = 0; j < m; ++j) {
      out[j] = (phase_x.col(j).array() * partial.col(j).array()).sum();
    }
    return out;
  }

  Eigen::VectorXcd px(n), py(n);
  for (std::size_t j = 0; j < points.size(); ++j) {
    const Vec3& p = points[j];
    for (int i = 0; i < n; ++i) {
      px[i] = std::polar(1.0, coords[i] * p.x());
      py[i] = std::polar(1.0, coords[i] * p.y());
    }
    Complex sum = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const auto& node = nodes[i];
      sum += weights[i] * px[node.ix] * py[node.iy] * std::polar(1.0, zsign * node.kz * p.z());
    }
    out[j] = sum * area;
  }
  return out;
}

std::vector<CVec3> synthesize_field(const AngularSpectrum& spectrum, std::span<const Vec3> points) {
  std::vector<CVec3> out(points.size(), CVec3::Zero());
  std::vector<Complex> weights(spectrum.amplitudes.size());
  for (int c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < weights.size(); ++i) weights[i] = spectrum.amplitudes[i][c];
    const auto component = synthesize_scalar(*spectrum.grid, spectrum.half_space, weights, points);
    for (std::size_t j = 0; j < points.size(); ++j) out[j][c] = component[j];
  }
  return out;
}

AngularSpectrum na_filter(const AngularSpectrum& spectrum, double na, bool renormalize) {
  if (!(na > 0.0 && na <= 1.0)) {
    throw std::invalid_argument("na_filter: NA must lie in (0, 1]");
  }
  AngularSpectrum out = spectrum;
  const double cutoff2 = na * na * kWavenumber * kWavenumber;
  const auto& nodes = spectrum.grid->nodes();
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].kx * nodes[i].kx + nodes[i].ky * nodes[i].ky > cutoff2) out.amplitudes[i].setZero();
  }
  if (renormalize) {
    const double norm = flux_norm(out);
    if (norm <= 0.0) {
      throw std::runtime_error("na_filter: no flux survives the aperture");
    }
    const double scale = 1.0 / std::sqrt(norm);
    for (auto& a : out.amplitudes) a *= scale;
  }
  return out;
}

}  // namespace multibeam
