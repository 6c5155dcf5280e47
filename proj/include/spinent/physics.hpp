#pragma once

namespace spinent::physics {

inline constexpr double kPlanck = 6.62607015e-34;       // J s
inline constexpr double kSpeedOfLight = 299792458.0;    // m / s
inline constexpr double kPi = 3.14159265358979323846;

/// Slope of the closed-form κ² estimate in mW, ms, deg and MHz units.
inline constexpr double kKappa2TheoryCoefficient = 18.6;
/// Measured projection-noise slope, κ² per degree of DC Faraday rotation.
inline constexpr double kKappa2ExperimentalSlope = 0.10;

/// Laboratory parameters. Frequencies γ and Δ share one convention (both in
/// MHz), so only their ratio enters. Blue detuning is positive.
struct PhysicalParams {
  double wavelength_nm = 852.0;
  double linewidth_MHz = 5.0;
  double detuning_MHz = 700.0;
  double power_mW = 4.5;
  double pulse_ms = 2.0;
  double area_eff_cm2 = 6.0;
  double larmor_kHz = 325.0;
  double n_atoms = 1e11;  // per cell, all in F=4

  /// Throws std::invalid_argument unless every field is positive and finite.
  void validate() const;
};

/// Derived quantities for one parameter set. All fields are SI-consistent:
/// a is radians of polarization rotation per unit spin, s_x is photons/s/2,
/// kappa is dimensionless and carries the sign of a.
struct Calibration {
  double a_coupling = 0.0;
  double j_x = 0.0;
  double s_x = 0.0;
  double pulse_s = 0.0;
  double kappa = 0.0;
  double kappa2 = 0.0;
  double theta_deg = 0.0;
};

/// a = -γλ²/(8πAΔ) with A = A_eff.
double coupling_a(const PhysicalParams& p);

/// Photon flux φ in photons per second for the probe power at λ.
double photon_flux(const PhysicalParams& p);

/// S_x = φ/2 for x-polarized light.
double stokes_sx(const PhysicalParams& p);

/// Macroscopic spin J_x = 4 N for a fully pumped F=4 ensemble.
double macroscopic_spin(double n_atoms);

/// DC Faraday angle θ = aJ_x/2, in degrees (negative for blue detuning).
double faraday_theta_deg(double j_x, const PhysicalParams& p);
double j_x_from_theta(double theta_deg, const PhysicalParams& p);

/// κ² = 18.6·P[mW]·T[ms]·θ[deg]/Δ[MHz].
double kappa2_theory(double power_mW, double pulse_ms, double theta_deg,
                     double detuning_MHz);
double kappa2_theory(double power_mW, double pulse_ms, double theta_deg,
                     double detuning_MHz, double coefficient);

/// κ² = a² J_x S_x T from the microscopic coupling.
double kappa2_model(double a, double j_x, double s_x, double pulse_s);

/// The coefficient that kappa2_theory would need to reproduce kappa2_model
/// exactly for these λ, γ and A_eff (mW, ms, deg, MHz units).
double kappa2_theory_coefficient(const PhysicalParams& p);

double kappa2_experimental(double theta_deg);

/// Transverse spin variance of a coherent spin state, J_x/2 = 2N.
double css_variance(double n_atoms);

/// Amplitude survival exp(-gap/T2) under transverse spin decay.
double beta_from_t2(double t2_ms, double gap_ms);

/// <S_y> = 2 S_x θ for a small polarization rotation θ (radians).
double mean_sy_small_angle(double s_x, double theta_rad);

Calibration calibrate(const PhysicalParams& p);

}  // namespace spinent::physics
