#pragma once

#include <cstddef>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace spinent {

// Quadrature convention: [X, P] = i, vacuum variance 1/2. Mode k occupies
// rows/columns (2k, 2k+1) as (X_k, P_k).
inline constexpr double kVacuumVariance = 0.5;

enum class Quadrature { X, P };

struct ModeRef {
  std::size_t index = 0;
};

struct MeasurementOutcome {
  double value = 0.0;
  ModeRef measured_mode;
  Quadrature quadrature = Quadrature::X;
};

// Raised when a state fails the uncertainty-relation check.
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Gaussian state over labelled bosonic modes: mean vector and covariance
/// matrix in canonical units.
///
/// Operations are free functions taking the state by const reference and
/// returning a new state.
class GaussianState {
 public:
  GaussianState(std::vector<std::string> labels, Eigen::VectorXd mean,
                Eigen::MatrixXd cov);

  std::size_t n_modes() const { return labels_.size(); }
  const std::vector<std::string>& labels() const { return labels_; }
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::MatrixXd& cov() const { return cov_; }

  ModeRef mode(std::string_view label) const;
  ModeRef checked(ModeRef m) const;

  double variance(ModeRef m, Quadrature q) const;
  double covariance(ModeRef a, Quadrature qa, ModeRef b, Quadrature qb) const;
  double mean_of(ModeRef m, Quadrature q) const;

  /// Reduced state on the listed modes, in the listed order.
  GaussianState marginal(const std::vector<ModeRef>& keep) const;

 private:
  std::vector<std::string> labels_;
  Eigen::VectorXd mean_;
  Eigen::MatrixXd cov_;
};

inline std::size_t row_of(ModeRef m, Quadrature q) {
  return 2 * m.index + (q == Quadrature::P ? 1 : 0);
}

GaussianState vacuum_state(std::size_t n_modes);
GaussianState vacuum_state(std::vector<std::string> labels);

/// Appends a vacuum mode; the returned ModeRef addresses it.
std::pair<GaussianState, ModeRef> append_vacuum(const GaussianState& state,
                                                std::string label);

/// Appends a two-mode squeezed vacuum whose first mode has X anti-correlated
/// and P correlated with the second: var((X1+X2)/sqrt2) = var((P1-P2)/sqrt2)
/// = e^{-2r}/2.
GaussianState append_two_mode_squeezed(const GaussianState& state, double r,
                                       std::string label1, std::string label2);

GaussianState displace(const GaussianState& state, ModeRef mode, double dx,
                       double dp);

/// Phase-space rotation of one mode: (X, P) -> (cos φ X - sin φ P,
/// sin φ X + cos φ P).
GaussianState rotate(const GaussianState& state, ModeRef mode, double phi);

/// QND coupling of a light mode to a single atomic mode:
/// X_L += κ P_A, X_A += κ P_L.
GaussianState apply_qnd(const GaussianState& state, ModeRef atom,
                        ModeRef light, double kappa);

/// General QND coupling. `observable` is a length-2n coefficient vector o over
/// all quadratures (zero on the light mode); the light reads X_L += κ oᵀr and
/// the atoms receive back-action r += κ (Ω o) P_L.
GaussianState apply_qnd_observable(const GaussianState& state, ModeRef light,
                                   const Eigen::VectorXd& observable,
                                   double kappa);

/// Applies an arbitrary symplectic matrix S: mean -> S mean, cov -> S cov Sᵀ.
GaussianState apply_symplectic(const GaussianState& state,
                               const Eigen::MatrixXd& s);

/// Conditions on an X-quadrature outcome and drops the measured mode.
GaussianState condition_x(const GaussianState& state, ModeRef mode,
                          double outcome);

/// Homodyne measurement of X: outcome = mean + sqrt(var) * z.
/// A zero-variance marginal yields the mean exactly.
std::pair<MeasurementOutcome, GaussianState> measure_x_with(
    const GaussianState& state, ModeRef mode, double standard_normal);

template <class Rng>
std::pair<MeasurementOutcome, GaussianState> measure_x(
    const GaussianState& state, ModeRef mode, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  return measure_x_with(state, mode, normal(rng));
}

/// Decay of a mode towards vacuum with amplitude survival β.
GaussianState apply_beta_decay(const GaussianState& state, ModeRef mode,
                               double beta);

/// var(P_a1) + var(P_a2); below 1 certifies entanglement.
double duan_sum(const GaussianState& state, ModeRef a1, ModeRef a2);

/// Variance of the linear combination cᵀr over all quadratures.
double combination_variance(const GaussianState& state,
                            const Eigen::VectorXd& coefficients);

// ----- diagnostics -----

Eigen::MatrixXd symplectic_form(std::size_t n_modes);
std::vector<double> symplectic_eigenvalues(const GaussianState& state);
bool is_physical(const GaussianState& state, double tol = 1e-10);
/// Throws InvariantViolation when the state breaks symmetry or the
/// uncertainty relation.
void check_physical(const GaussianState& state, double tol = 1e-10);

/// Overlap of a single-mode Gaussian state with a coherent state of mean
/// target_mean.
double coherent_fidelity(const GaussianState& single_mode,
                         const Eigen::Vector2d& target_mean);

}  // namespace spinent
