#pragma once

#include <cstddef>
#include <ostream>
#include <random>
#include <vector>

#include "spinent/parallel.hpp"
#include "spinent/physics.hpp"

namespace spinent::time_domain {

inline constexpr double kDefaultLarmorCycles = 650.0;  // Ω·T/2π
inline constexpr double kMinStepsPerCycle = 100.0;

/// Discretization and scale of one probe pulse through two oppositely
/// oriented cells. Time is in ms; s_x is in photons/ms/2. The coupling a is
/// derived so that κ = a·sqrt(J_x S_x T).
struct PulseSettings {
  double kappa = 1.0;
  double omega_T = 2.0 * physics::kPi * kDefaultLarmorCycles;
  std::size_t n_steps = static_cast<std::size_t>(kDefaultLarmorCycles *
                                                 kMinStepsPerCycle);
  double pulse_ms = 2.0;
  double s_x = 1.0;
  double j_x = 1.0;
  /// false runs the single-cell equations (second cell has J_x = 0).
  bool two_cells = true;
};

/// Canonical atomic quadratures (X_A1, P_A1, X_A2, P_A2).
struct AtomQuadratures {
  double x1 = 0.0;
  double p1 = 0.0;
  double x2 = 0.0;
  double p2 = 0.0;
};

struct LockInResult {
  double x_l1 = 0.0;
  double x_l2 = 0.0;
};

/// Per-step record of one pulse. sy_samples holds the step-integrated S_y^out
/// in units of the shot-noise standard deviation of one step.
struct PulseTrace {
  double dt_ms = 0.0;
  std::size_t n_steps = 0;
  std::vector<double> sy_samples;
  std::vector<double> jy_sum;
  std::vector<double> jz_sum;
  std::vector<double> jy_diff;
  std::vector<double> jz_diff;
};

struct PulseRun {
  LockInResult lockin;
  /// Demodulated S_z, the light P quadratures. P_L2 is signed so that every
  /// mode obeys X_A += κ P_L.
  double p_l1 = 0.0;
  double p_l2 = 0.0;
  /// ∫S_y^out dt over the whole pulse.
  double sy_integral = 0.0;
  AtomQuadratures atoms_out;
  PulseTrace trace;  // empty unless requested
};

/// Step-integrated input Stokes noise; each entry has variance (S_x/2)·dt.
struct PulseNoise {
  std::vector<double> sy;
  std::vector<double> sz;
};

/// Euler–Maruyama integrator for the rotating-frame spin/light equations
/// with lock-in demodulation at the Larmor frequency. Construction
/// precomputes the demodulation tables; simulate() is const and may be
/// called concurrently with per-thread random sources.
class PulseSimulator {
 public:
  explicit PulseSimulator(PulseSettings settings);

  const PulseSettings& settings() const { return settings_; }
  double dt_ms() const { return dt_; }
  double coupling_a() const { return a_; }

  PulseRun simulate(const AtomQuadratures& atoms_in, Rng& rng,
                    bool record_trace = false) const;

  /// Same integration with caller-provided noise increments.
  PulseRun integrate(const AtomQuadratures& atoms_in, const PulseNoise& noise,
                     bool record_trace = false) const;

  PulseNoise draw_noise(Rng& rng) const;

 private:
  template <class NextNoise>
  PulseRun run(const AtomQuadratures& atoms_in, NextNoise&& next,
               bool record_trace) const;

  PulseSettings settings_;
  double dt_ = 0.0;
  double a_ = 0.0;
  double noise_sd_ = 0.0;
  double norm_cos_ = 0.0;
  double norm_sin_ = 0.0;
  std::vector<double> cos_;
  std::vector<double> sin_;
};

/// Free-function form: one pulse with the given settings.
PulseRun simulate_pulse(const PulseSettings& settings,
                        const AtomQuadratures& atoms_in, Rng& rng,
                        bool record_trace = false);

/// Monte Carlo variance of ∫S_y dt for coherent light with n_ph photons per
/// pulse, one entry per element of n_ph_list.
std::vector<double> shot_noise_scaling(const std::vector<double>& n_ph_list,
                                       std::uint64_t seed,
                                       std::size_t n_runs = 10000,
                                       std::size_t n_steps = 200,
                                       unsigned threads = 1);

/// Monte Carlo var(X_A1^out) after one pulse on vacuum atoms.
double diff_noise_growth(const PulseSettings& settings, std::uint64_t seed,
                         std::size_t n_runs, unsigned threads = 1);

/// Vacuum atoms sampled from N(0, 1/2) per quadrature.
AtomQuadratures sample_vacuum_atoms(Rng& rng);

/// Sample moments of (X_L1, X_L2, X_A1, P_A1, X_A2, P_A2) over runs with
/// vacuum atomic input, ready for comparison with the Gaussian engine.
struct JointMoments {
  std::vector<double> mean;                 // length 6
  std::vector<std::vector<double>> cov;     // 6x6
  double max_spin_sum_drift = 0.0;
  std::size_t n_runs = 0;
};

JointMoments sample_joint_moments(const PulseSettings& settings,
                                  std::uint64_t seed, std::size_t n_runs,
                                  unsigned threads = 1);

/// CSV with columns step,t_ms,sy_sample,jy_sum,jz_sum,jy_diff,jz_diff.
void write_trace_csv(std::ostream& out, const PulseTrace& trace);

}  // namespace spinent::time_domain
