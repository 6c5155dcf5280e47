#include "spinent/gaussian_state.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace spinent {

namespace {

void symmetrize(Eigen::MatrixXd& m) { m = 0.5 * (m + m.transpose()).eval(); }

std::vector<std::string> default_labels(std::size_t n) {
  std::vector<std::string> labels;
  labels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) labels.push_back(fmt::format("m{}", i));
  return labels;
}

// Index list of all quadrature rows except those of `drop`.
std::vector<Eigen::Index> rows_without(std::size_t n_modes, ModeRef drop) {
  std::vector<Eigen::Index> rows;
  rows.reserve(2 * n_modes);
  for (std::size_t k = 0; k < n_modes; ++k) {
    if (k == drop.index) continue;
    rows.push_back(static_cast<Eigen::Index>(2 * k));
    rows.push_back(static_cast<Eigen::Index>(2 * k + 1));
  }
  return rows;
}

}  // namespace

GaussianState::GaussianState(std::vector<std::string> labels,
                             Eigen::VectorXd mean, Eigen::MatrixXd cov)
    : labels_(std::move(labels)), mean_(std::move(mean)), cov_(std::move(cov)) {
  const auto dim = static_cast<Eigen::Index>(2 * labels_.size());
  if (mean_.size() != dim || cov_.rows() != dim || cov_.cols() != dim) {
    throw std::invalid_argument(fmt::format(
        "GaussianState: {} modes need a mean of length {} and a {}x{} "
        "covariance",
        labels_.size(), dim, dim, dim));
  }
  if (!mean_.allFinite() || !cov_.allFinite()) {
    throw std::invalid_argument("GaussianState: non-finite entries");
  }
}

ModeRef GaussianState::mode(std::string_view label) const {
  auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) {
    throw std::invalid_argument(fmt::format("unknown mode '{}'", label));
  }
  return ModeRef{static_cast<std::size_t>(it - labels_.begin())};
}

ModeRef GaussianState::checked(ModeRef m) const {
  if (m.index >= labels_.size()) {
    throw std::invalid_argument(fmt::format(
        "mode index {} out of range for {} modes", m.index, labels_.size()));
  }
  return m;
}

double GaussianState::variance(ModeRef m, Quadrature q) const {
  const auto r = static_cast<Eigen::Index>(row_of(checked(m), q));
  return cov_(r, r);
}

double GaussianState::covariance(ModeRef a, Quadrature qa, ModeRef b,
                                 Quadrature qb) const {
  return cov_(static_cast<Eigen::Index>(row_of(checked(a), qa)),
              static_cast<Eigen::Index>(row_of(checked(b), qb)));
}

double GaussianState::mean_of(ModeRef m, Quadrature q) const {
  return mean_(static_cast<Eigen::Index>(row_of(checked(m), q)));
}

GaussianState GaussianState::marginal(const std::vector<ModeRef>& keep) const {
  std::vector<Eigen::Index> rows;
  std::vector<std::string> labels;
  for (auto m : keep) {
    checked(m);
    rows.push_back(static_cast<Eigen::Index>(2 * m.index));
    rows.push_back(static_cast<Eigen::Index>(2 * m.index + 1));
    labels.push_back(labels_[m.index]);
  }
  Eigen::VectorXd mean = mean_(rows);
  Eigen::MatrixXd cov = cov_(rows, rows);
  return GaussianState(std::move(labels), std::move(mean), std::move(cov));
}

GaussianState vacuum_state(std::size_t n_modes) {
  if (n_modes == 0) {
    throw std::invalid_argument("vacuum_state: need at least one mode");
  }
  return vacuum_state(default_labels(n_modes));
}

GaussianState vacuum_state(std::vector<std::string> labels) {
  if (labels.empty()) {
    throw std::invalid_argument("vacuum_state: need at least one mode");
  }
  const auto dim = static_cast<Eigen::Index>(2 * labels.size());
  return GaussianState(std::move(labels), Eigen::VectorXd::Zero(dim),
                       kVacuumVariance * Eigen::MatrixXd::Identity(dim, dim));
}

std::pair<GaussianState, ModeRef> append_vacuum(const GaussianState& state,
                                                std::string label) {
  const auto n = static_cast<Eigen::Index>(state.mean().size());
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(n + 2);
  mean.head(n) = state.mean();
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(n + 2, n + 2);
  cov.topLeftCorner(n, n) = state.cov();
  cov.bottomRightCorner(2, 2) =
      kVacuumVariance * Eigen::Matrix2d::Identity();
  auto labels = state.labels();
  labels.push_back(std::move(label));
  ModeRef added{labels.size() - 1};
  return {GaussianState(std::move(labels), std::move(mean), std::move(cov)),
          added};
}

GaussianState append_two_mode_squeezed(const GaussianState& state, double r,
                                       std::string label1,
                                       std::string label2) {
  if (!(r >= 0.0) || !std::isfinite(r)) {
    throw std::invalid_argument("append_two_mode_squeezed: r must be >= 0");
  }
  auto [s1, m1] = append_vacuum(state, std::move(label1));
  auto [s2, m2] = append_vacuum(s1, std::move(label2));
  Eigen::MatrixXd cov = s2.cov();
  const double c = 0.5 * std::cosh(2.0 * r);
  const double s = 0.5 * std::sinh(2.0 * r);
  const auto x1 = static_cast<Eigen::Index>(row_of(m1, Quadrature::X));
  const auto x2 = static_cast<Eigen::Index>(row_of(m2, Quadrature::X));
  cov(x1, x1) = cov(x1 + 1, x1 + 1) = c;
  cov(x2, x2) = cov(x2 + 1, x2 + 1) = c;
  cov(x1, x2) = cov(x2, x1) = -s;
  cov(x1 + 1, x2 + 1) = cov(x2 + 1, x1 + 1) = s;
  return GaussianState(s2.labels(), s2.mean(), std::move(cov));
}

GaussianState displace(const GaussianState& state, ModeRef mode, double dx,
                       double dp) {
  state.checked(mode);
  Eigen::VectorXd mean = state.mean();
  mean(static_cast<Eigen::Index>(row_of(mode, Quadrature::X))) += dx;
  mean(static_cast<Eigen::Index>(row_of(mode, Quadrature::P))) += dp;
  return GaussianState(state.labels(), std::move(mean), state.cov());
}

GaussianState rotate(const GaussianState& state, ModeRef mode, double phi) {
  state.checked(mode);
  const auto dim = static_cast<Eigen::Index>(state.mean().size());
  Eigen::MatrixXd s = Eigen::MatrixXd::Identity(dim, dim);
  const auto x = static_cast<Eigen::Index>(row_of(mode, Quadrature::X));
  const double c = std::cos(phi);
  const double sn = std::sin(phi);
  s(x, x) = c;
  s(x, x + 1) = -sn;
  s(x + 1, x) = sn;
  s(x + 1, x + 1) = c;
  return apply_symplectic(state, s);
}

GaussianState apply_symplectic(const GaussianState& state,
                               const Eigen::MatrixXd& s) {
  Eigen::VectorXd mean = s * state.mean();
  Eigen::MatrixXd cov = s * state.cov() * s.transpose();
  symmetrize(cov);
  return GaussianState(state.labels(), std::move(mean), std::move(cov));
}

GaussianState apply_qnd_observable(const GaussianState& state, ModeRef light,
                                   const Eigen::VectorXd& observable,
                                   double kappa) {
  state.checked(light);
  const auto dim = static_cast<Eigen::Index>(state.mean().size());
  if (observable.size() != dim) {
    throw std::invalid_argument("apply_qnd_observable: observable length");
  }
  const auto xl = static_cast<Eigen::Index>(row_of(light, Quadrature::X));
  if (observable(xl) != 0.0 || observable(xl + 1) != 0.0) {
    throw std::invalid_argument(
        "apply_qnd_observable: observable must not involve the light mode");
  }
  const Eigen::MatrixXd omega = symplectic_form(state.n_modes());
  Eigen::MatrixXd s = Eigen::MatrixXd::Identity(dim, dim);
  s.row(xl) += kappa * observable.transpose();
  s.col(xl + 1) += kappa * (omega * observable);
  return apply_symplectic(state, s);
}

GaussianState apply_qnd(const GaussianState& state, ModeRef atom,
                        ModeRef light, double kappa) {
  state.checked(atom);
  state.checked(light);
  if (atom.index == light.index) {
    throw std::invalid_argument("apply_qnd: atom and light must differ");
  }
  Eigen::VectorXd o = Eigen::VectorXd::Zero(state.mean().size());
  o(static_cast<Eigen::Index>(row_of(atom, Quadrature::P))) = 1.0;
  return apply_qnd_observable(state, light, o, kappa);
}

GaussianState condition_x(const GaussianState& state, ModeRef mode,
                          double outcome) {
  state.checked(mode);
  if (state.n_modes() == 1) {
    throw std::invalid_argument("condition_x: cannot remove the only mode");
  }
  const auto x = static_cast<Eigen::Index>(row_of(mode, Quadrature::X));
  const auto rest = rows_without(state.n_modes(), mode);
  const double var = state.cov()(x, x);

  Eigen::VectorXd mean = state.mean()(rest);
  Eigen::MatrixXd cov = state.cov()(rest, rest);
  if (var > 0.0) {
    Eigen::VectorXd c = state.cov()(rest, x);
    mean += c * ((outcome - state.mean()(x)) / var);
    cov -= (c * c.transpose()) / var;
    symmetrize(cov);
  }
  auto labels = state.labels();
  labels.erase(labels.begin() + static_cast<std::ptrdiff_t>(mode.index));
  return GaussianState(std::move(labels), std::move(mean), std::move(cov));
}

std::pair<MeasurementOutcome, GaussianState> measure_x_with(
    const GaussianState& state, ModeRef mode, double standard_normal) {
  const double var = state.variance(mode, Quadrature::X);
  const double mu = state.mean_of(mode, Quadrature::X);
  const double value = var > 0.0 ? mu + std::sqrt(var) * standard_normal : mu;
  MeasurementOutcome outcome{value, mode, Quadrature::X};
  return {outcome, condition_x(state, mode, value)};
}

GaussianState apply_beta_decay(const GaussianState& state, ModeRef mode,
                               double beta) {
  state.checked(mode);
  if (!(beta >= 0.0 && beta <= 1.0)) {
    throw std::invalid_argument(
        fmt::format("apply_beta_decay: beta {} outside [0, 1]", beta));
  }
  const auto x = static_cast<Eigen::Index>(row_of(mode, Quadrature::X));
  Eigen::VectorXd mean = state.mean();
  Eigen::MatrixXd cov = state.cov();
  mean.segment(x, 2) *= beta;
  cov.middleRows(x, 2) *= beta;
  cov.middleCols(x, 2) *= beta;
  cov.block(x, x, 2, 2) +=
      (1.0 - beta * beta) * kVacuumVariance * Eigen::Matrix2d::Identity();
  symmetrize(cov);
  return GaussianState(state.labels(), std::move(mean), std::move(cov));
}

double duan_sum(const GaussianState& state, ModeRef a1, ModeRef a2) {
  state.checked(a1);
  state.checked(a2);
  if (a1.index == a2.index) {
    throw std::invalid_argument("duan_sum: modes must be distinct");
  }
  return state.variance(a1, Quadrature::P) + state.variance(a2, Quadrature::P);
}

double combination_variance(const GaussianState& state,
                            const Eigen::VectorXd& coefficients) {
  if (coefficients.size() != state.mean().size()) {
    throw std::invalid_argument("combination_variance: length mismatch");
  }
  return coefficients.dot(state.cov() * coefficients);
}

Eigen::MatrixXd symplectic_form(std::size_t n_modes) {
  const auto dim = static_cast<Eigen::Index>(2 * n_modes);
  Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(dim, dim);
  for (Eigen::Index k = 0; k < dim; k += 2) {
    omega(k, k + 1) = 1.0;
    omega(k + 1, k) = -1.0;
  }
  return omega;
}

std::vector<double> symplectic_eigenvalues(const GaussianState& state) {
  // ν² are the eigenvalues of Σ^{1/2} Ω Σ Ωᵀ Σ^{1/2}, each appearing twice.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(state.cov());
  Eigen::VectorXd ev = eig.eigenvalues().cwiseMax(0.0);
  Eigen::MatrixXd root =
      eig.eigenvectors() * ev.cwiseSqrt().asDiagonal() *
      eig.eigenvectors().transpose();
  const Eigen::MatrixXd omega = symplectic_form(state.n_modes());
  Eigen::MatrixXd m = root * omega * state.cov() * omega.transpose() * root;
  symmetrize(m);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> sq(m,
                                                    Eigen::EigenvaluesOnly);
  std::vector<double> nu;
  nu.reserve(state.n_modes());
  for (Eigen::Index k = 0; k < sq.eigenvalues().size(); k += 2) {
    // Paired eigenvalues are adjacent after sorting; average the pair.
    const double v =
        0.5 * (sq.eigenvalues()(k) + sq.eigenvalues()(k + 1));
    nu.push_back(std::sqrt(std::max(v, 0.0)));
  }
  return nu;
}

bool is_physical(const GaussianState& state, double tol) {
  const auto& c = state.cov();
  const double scale = std::max(1.0, c.cwiseAbs().maxCoeff());
  if ((c - c.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) return false;
  for (double nu : symplectic_eigenvalues(state)) {
    if (nu < kVacuumVariance - tol) return false;
  }
  return true;
}

void check_physical(const GaussianState& state, double tol) {
  if (!is_physical(state, tol)) {
    auto nu = symplectic_eigenvalues(state);
    throw InvariantViolation(fmt::format(
        "state violates the uncertainty relation (min symplectic eigenvalue "
        "{:.17g})",
        nu.empty() ? 0.0 : *std::min_element(nu.begin(), nu.end())));
  }
}

double coherent_fidelity(const GaussianState& single_mode,
                         const Eigen::Vector2d& target_mean) {
  if (single_mode.n_modes() != 1) {
    throw std::invalid_argument("coherent_fidelity: expects one mode");
  }
  const Eigen::Matrix2d sum =
      single_mode.cov() + kVacuumVariance * Eigen::Matrix2d::Identity();
  const Eigen::Vector2d delta = single_mode.mean() - target_mean;
  const double quad = delta.dot(sum.inverse() * delta);
  return std::exp(-0.5 * quad) / std::sqrt(sum.determinant());
}

}  // namespace spinent
