#include "spinent/physics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include <fmt/format.h>

namespace spinent::physics {

namespace {

constexpr double kDegPerRad = 180.0 / kPi;

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw std::invalid_argument(
        fmt::format("{} must be positive and finite (got {})", name, v));
  }
}

void require_non_negative(double v, const char* name) {
  if (!(v >= 0.0) || std::isnan(v)) {
    throw std::invalid_argument(
        fmt::format("{} must be non-negative (got {})", name, v));
  }
}

}  // namespace

void PhysicalParams::validate() const {
  require_positive(wavelength_nm, "wavelength_nm");
  require_positive(linewidth_MHz, "linewidth_MHz");
  if (detuning_MHz == 0.0 || !std::isfinite(detuning_MHz)) {
    throw std::invalid_argument("detuning_MHz must be nonzero and finite");
  }
  require_positive(power_mW, "power_mW");
  require_positive(pulse_ms, "pulse_ms");
  require_positive(area_eff_cm2, "area_eff_cm2");
  require_positive(larmor_kHz, "larmor_kHz");
  require_positive(n_atoms, "n_atoms");
}

double coupling_a(const PhysicalParams& p) {
  if (p.detuning_MHz == 0.0) {
    throw std::invalid_argument("coupling_a: zero detuning");
  }
  require_positive(p.wavelength_nm, "wavelength_nm");
  require_positive(p.area_eff_cm2, "area_eff_cm2");
  const double lambda_m = p.wavelength_nm * 1e-9;
  const double area_m2 = p.area_eff_cm2 * 1e-4;
  return -(p.linewidth_MHz / p.detuning_MHz) * lambda_m * lambda_m /
         (8.0 * kPi * area_m2);
}

double photon_flux(const PhysicalParams& p) {
  const double photon_energy_J =
      kPlanck * kSpeedOfLight / (p.wavelength_nm * 1e-9);
  return p.power_mW * 1e-3 / photon_energy_J;
}

double stokes_sx(const PhysicalParams& p) { return 0.5 * photon_flux(p); }

double macroscopic_spin(double n_atoms) {
  require_positive(n_atoms, "n_atoms");
  return 4.0 * n_atoms;
}

double faraday_theta_deg(double j_x, const PhysicalParams& p) {
  require_non_negative(j_x, "j_x");
  return 0.5 * coupling_a(p) * j_x * kDegPerRad;
}

double j_x_from_theta(double theta_deg, const PhysicalParams& p) {
  return 2.0 * (theta_deg / kDegPerRad) / coupling_a(p);
}

double kappa2_theory(double power_mW, double pulse_ms, double theta_deg,
                     double detuning_MHz) {
  return kappa2_theory(power_mW, pulse_ms, theta_deg, detuning_MHz,
                       kKappa2TheoryCoefficient);
}

double kappa2_theory(double power_mW, double pulse_ms, double theta_deg,
                     double detuning_MHz, double coefficient) {
  require_non_negative(power_mW, "power_mW");
  require_non_negative(pulse_ms, "pulse_ms");
  require_non_negative(theta_deg, "theta_deg");
  require_positive(detuning_MHz, "detuning_MHz");
  return coefficient * power_mW * pulse_ms * theta_deg / detuning_MHz;
}

double kappa2_model(double a, double j_x, double s_x, double pulse_s) {
  return a * a * j_x * s_x * pulse_s;
}

double kappa2_theory_coefficient(const PhysicalParams& p) {
  // κ² = a²J_xS_xT with J_x = 2θ/a gives κ² = 2|a||θ|S_xT; evaluate per
  // unit P[mW], T[ms], θ[deg], Δ[MHz].
  PhysicalParams unit = p;
  unit.power_mW = 1.0;
  unit.pulse_ms = 1.0;
  unit.detuning_MHz = 1.0;
  const double theta_rad = 1.0 / kDegPerRad;
  return 2.0 * std::abs(coupling_a(unit)) * theta_rad * stokes_sx(unit) *
         1e-3;
}

double kappa2_experimental(double theta_deg) {
  require_non_negative(theta_deg, "theta_deg");
  return kKappa2ExperimentalSlope * theta_deg;
}

double css_variance(double n_atoms) {
  require_positive(n_atoms, "n_atoms");
  return 0.5 * macroscopic_spin(n_atoms);
}

double beta_from_t2(double t2_ms, double gap_ms) {
  if (!(t2_ms > 0.0)) {
    throw std::invalid_argument(
        fmt::format("t2_ms must be positive (got {})", t2_ms));
  }
  require_non_negative(gap_ms, "gap_ms");
  if (std::isinf(t2_ms)) return 1.0;
  return std::exp(-gap_ms / t2_ms);
}

double mean_sy_small_angle(double s_x, double theta_rad) {
  return 2.0 * s_x * theta_rad;
}

Calibration calibrate(const PhysicalParams& p) {
  p.validate();
  Calibration c;
  c.a_coupling = coupling_a(p);
  c.j_x = macroscopic_spin(p.n_atoms);
  c.s_x = stokes_sx(p);
  c.pulse_s = p.pulse_ms * 1e-3;
  c.kappa2 = kappa2_model(c.a_coupling, c.j_x, c.s_x, c.pulse_s);
  c.kappa = c.a_coupling * std::sqrt(c.j_x * c.s_x * c.pulse_s);
  c.theta_deg = faraday_theta_deg(c.j_x, p);
  return c;
}

}  // namespace spinent::physics
