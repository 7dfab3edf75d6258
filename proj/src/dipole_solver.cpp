#include "multibeam/dipole_solver.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace multibeam {

namespace {

constexpr double kCoupling = 1.5 * kLinewidth * kWavelength;

}  // namespace

Eigen::Matrix3cd greens_dyadic(const Vec3& r) {
  const double dist = r.norm();
  if (!(dist > 0.0)) {
    throw std::invalid_argument("greens_dyadic: separation must be nonzero");
  }
  const double kr = kWavenumber * dist;
  const Complex prefactor = std::polar(1.0 / (4.0 * kPi * dist), kr);
  const Complex a = 1.0 + kI / kr - 1.0 / (kr * kr);
  const Complex b = -1.0 - 3.0 * kI / kr + 3.0 / (kr * kr);
  const Vec3 rhat = r / dist;
  const Eigen::Matrix3d outer = rhat * rhat.transpose();
  return prefactor * (a * Eigen::Matrix3cd::Identity() + b * outer.cast<Complex>());
}

Complex greens_projected(const Vec3& r) {
  const double r2 = r.squaredNorm();
  if (!(r2 > 0.0)) {
    throw std::invalid_argument("greens_projected: separation must be nonzero");
  }
  const double dist = std::sqrt(r2);
  const double kr = kWavenumber * dist;
  const Complex prefactor = std::polar(1.0 / (4.0 * kPi * dist), kr);
  const Complex a = 1.0 + kI / kr - 1.0 / (kr * kr);
  const Complex b = -1.0 - 3.0 * kI / kr + 3.0 / (kr * kr);
  // |r_hat . e_d|^2 for e_d = (1, i, 0) / sqrt 2.
  const double transverse = (r.x() * r.x() + r.y() * r.y()) / (2.0 * r2);
  return prefactor * (a + b * transverse);
}

Eigen::MatrixXcd interaction_matrix(std::span<const Vec3> positions) {
  const auto n = static_cast<Eigen::Index>(positions.size());
  Eigen::MatrixXcd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    m(i, i) = Complex(0.0, kLinewidth / 2.0);
    for (Eigen::Index j = 0; j < i; ++j) {
      const Complex g = kCoupling * greens_projected(positions[i] - positions[j]);
      m(i, j) = g;
      m(j, i) = g;
    }
  }
  return m;
}

CoupledDipoleSystem::CoupledDipoleSystem(std::vector<Vec3> positions_in, double detuning_in,
                                         Eigen::VectorXcd drive_in)
    : positions(std::move(positions_in)), detuning(detuning_in), drive(std::move(drive_in)),
      interaction(interaction_matrix(positions)) {
  if (static_cast<std::size_t>(drive.size()) != positions.size()) {
    throw std::invalid_argument("CoupledDipoleSystem: drive size does not match atom count");
  }
}

CoupledDipoleSystem::CoupledDipoleSystem(std::vector<Vec3> positions_in, double detuning_in,
                                         Eigen::VectorXcd drive_in, Eigen::MatrixXcd interaction_in)
    : positions(std::move(positions_in)), detuning(detuning_in), drive(std::move(drive_in)),
      interaction(std::move(interaction_in)) {
  const auto n = static_cast<Eigen::Index>(positions.size());
  if (drive.size() != n || interaction.rows() != n || interaction.cols() != n) {
    throw std::invalid_argument("CoupledDipoleSystem: inconsistent dimensions");
  }
}

double steady_state_residual(const Eigen::MatrixXcd& interaction, double detuning,
                             const Eigen::VectorXcd& drive, const Eigen::VectorXcd& sigma) {
  const double scale = drive.norm();
  if (scale == 0.0) return sigma.norm() == 0.0 ? 0.0 : 1.0;
  const Eigen::VectorXcd r = interaction * sigma + detuning * sigma + drive;
  return r.norm() / scale;
}

SteadyState solve_steady_state(const CoupledDipoleSystem& system) {
  if (!std::isfinite(system.detuning) || !system.drive.allFinite()) {
    throw std::invalid_argument("solve_steady_state: detuning and drive must be finite");
  }
  SteadyState state;
  if (system.size() == 0) {
    state.sigma = Eigen::VectorXcd(0);
    return state;
  }
  Eigen::MatrixXcd a = system.interaction;
  a.diagonal().array() += system.detuning;
  const Eigen::PartialPivLU<Eigen::MatrixXcd> lu(a);
  state.rcond = lu.rcond();
  if (!(state.rcond > 1e-14)) {
    std::ostringstream msg;
    msg << "solve_steady_state: matrix is numerically singular (rcond estimate " << state.rcond << ")";
    throw std::runtime_error(msg.str());
  }
  state.sigma = lu.solve(-system.drive);
  state.residual = steady_state_residual(system.interaction, system.detuning, system.drive, state.sigma);
  return state;
}

HessenbergForm::HessenbergForm(const Eigen::MatrixXcd& interaction) {
  if (interaction.rows() != interaction.cols()) {
    throw std::invalid_argument("HessenbergForm: matrix must be square");
  }
  if (interaction.rows() == 0) return;
  const Eigen::HessenbergDecomposition<Eigen::MatrixXcd> hess(interaction);
  q = hess.matrixQ();
  h = hess.matrixH();
}

DetuningSolver::DetuningSolver(std::shared_ptr<const HessenbergForm> form, const Eigen::VectorXcd& drive,
                               const Eigen::VectorXcd& projection)
    : form_(std::move(form)) {
  const auto n = form_->size();
  if (drive.size() != n || projection.size() != n) {
    throw std::invalid_argument("DetuningSolver: inconsistent dimensions");
  }
  if (n == 0) return;
  rotated_drive_ = -(form_->q.adjoint() * drive);
  rotated_projection_ = form_->q.transpose() * projection;
}

DetuningSolver::DetuningSolver(const Eigen::MatrixXcd& interaction, const Eigen::VectorXcd& drive,
                               const Eigen::VectorXcd& projection)
    : DetuningSolver(std::make_shared<const HessenbergForm>(interaction), drive, projection) {}

Eigen::VectorXcd DetuningSolver::solve_hessenberg(double detuning) const {
  const auto n = form_->size();
  auto h = form_->h;
  h.diagonal().array() += detuning;
  Eigen::VectorXcd y = rotated_drive_;
  // Gaussian elimination with pivoting between neighbouring rows only.
  for (Eigen::Index k = 0; k + 1 < n; ++k) {
    if (std::abs(h(k + 1, k)) > std::abs(h(k, k))) {
      h.row(k).segment(k, n - k).swap(h.row(k + 1).segment(k, n - k));
      std::swap(y[k], y[k + 1]);
    }
    if (h(k, k) == Complex(0.0)) {
      throw std::runtime_error("DetuningSolver: singular shifted matrix");
    }
    const Complex l = h(k + 1, k) / h(k, k);
    if (l != Complex(0.0)) {
      h.row(k + 1).segment(k + 1, n - k - 1) -= l * h.row(k).segment(k + 1, n - k - 1);
      y[k + 1] -= l * y[k];
    }
  }
  for (Eigen::Index k = n - 1; k >= 0; --k) {
    Complex s = y[k];
    if (k + 1 < n) s -= (h.row(k).segment(k + 1, n - k - 1) * y.segment(k + 1, n - k - 1)).value();
    if (h(k, k) == Complex(0.0)) {
      throw std::runtime_error("DetuningSolver: singular shifted matrix");
    }
    y[k] = s / h(k, k);
  }
  return y;
}

Complex DetuningSolver::response(double detuning) const {
  if (form_->size() == 0) return Complex(0.0);
  return rotated_projection_.cwiseProduct(solve_hessenberg(detuning)).sum();
}

Eigen::VectorXcd DetuningSolver::sigma(double detuning) const {
  if (form_->size() == 0) return Eigen::VectorXcd(0);
  return form_->q * solve_hessenberg(detuning);
}

AngularSpectrum scattered_spectrum(std::span<const Complex> sigma, std::span<const Vec3> positions,
                                   std::shared_ptr<const KGrid> grid, HalfSpace half_space) {
  if (sigma.size() != positions.size()) {
    throw std::invalid_argument("scattered_spectrum: sigma size does not match atom count");
  }
  AngularSpectrum spectrum = AngularSpectrum::zeros(grid, half_space);
  if (positions.empty()) return spectrum;
  const auto& nodes = grid->nodes();
  const int n = grid->resolution();
  const auto m = static_cast<Eigen::Index>(positions.size());
  const double zsign = half_space == HalfSpace::forward ? 1.0 : -1.0;

  // Array factor S(k) = sum_n sigma_n exp(-i k . r_n).
  std::vector<Complex> factor(nodes.size());
  bool common_z = true;
  for (const auto& p : positions) common_z = common_z && p.z() == positions.front().z();
  if (common_z) {
    Eigen::MatrixXcd px(n, m), py(m, n);
    for (Eigen::Index j = 0; j < m; ++j) {
      for (int i = 0; i < n; ++i) {
        const double c = grid->coordinate(i);
        px(i, j) = sigma[j] * std::polar(1.0, -c * positions[j].x());
        py(j, i) = std::polar(1.0, -c * positions[j].y());
      }
    }
    const Eigen::MatrixXcd dense = px * py;
    const double z0 = positions.front().z();
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      factor[i] = dense(nodes[i].ix, nodes[i].iy) * std::polar(1.0, -zsign * nodes[i].kz * z0);
    }
  } else {
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const auto& node = nodes[i];
      Complex s = 0.0;
      for (Eigen::Index j = 0; j < m; ++j) {
        const Vec3& r = positions[j];
        s += sigma[j] * std::polar(1.0, -(node.kx * r.x() + node.ky * r.y() + zsign * node.kz * r.z()));
      }
      factor[i] = s;
    }
  }

  const CVec3 ed = dipole_orientation();
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const Vec3 khat = spectrum.direction(i);
    const CVec3 transverse = ed - khat.cast<Complex>() * khat.cast<Complex>().dot(ed);
    const Complex pre = kCoupling * kI / (8.0 * kPi * kPi * nodes[i].kz);
    spectrum.amplitudes[i] = pre * factor[i] * transverse;
  }
  return spectrum;
}

double extinguished_power(std::span<const Complex> drive, std::span<const Complex> sigma) {
  if (drive.size() != sigma.size()) {
    throw std::invalid_argument("extinguished_power: size mismatch");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < drive.size(); ++i) sum += (std::conj(drive[i]) * sigma[i]).imag();
  return 3.0 / (4.0 * kPi) * sum;
}

double radiated_power(const Eigen::MatrixXcd& interaction, const Eigen::VectorXcd& sigma) {
  const Eigen::MatrixXcd anti = (interaction - interaction.adjoint()) / Complex(0.0, 2.0);
  return 3.0 / (4.0 * kPi) * sigma.dot(anti * sigma).real();
}

Eigen::VectorXd collective_decay_rates(const Eigen::MatrixXcd& interaction) {
  const Eigen::MatrixXcd anti = (interaction - interaction.adjoint()) / Complex(0.0, 2.0);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(anti, Eigen::EigenvaluesOnly);
  return 2.0 * solver.eigenvalues();
}

}  // namespace multibeam
