#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

namespace spinent::experiment {

/// Lock-in outcomes of one entangle-and-verify cycle, canonical units.
struct CycleRecord {
  double a1 = 0.0;
  double b1 = 0.0;
  double a2 = 0.0;
  double b2 = 0.0;
};

struct CycleConfig {
  double kappa2 = 1.0;
  double beta = 1.0;
  std::size_t n_cycles = 10000;
  std::uint64_t seed = 0;
  /// Additive Gaussian detector floor per outcome (variance, canonical
  /// units). Zero disables it.
  double electronics_noise_var = 0.0;
  unsigned threads = 1;
};

/// Simulates n_cycles measurement cycles on the Gaussian engine: two vacuum
/// atomic modes, entangling pulse (A1, B1), β-decay, verifying pulse
/// (A2, B2). Cycle i draws only from stream (seed, i), so the result does not
/// depend on `threads`.
std::vector<CycleRecord> run_cycles(const CycleConfig& config);
std::vector<CycleRecord> run_cycles(double kappa2, double beta,
                                    std::size_t n_cycles, std::uint64_t seed,
                                    unsigned threads = 1);

struct AlphaEstimate {
  double alpha = 0.0;
  bool degenerate = false;  // all first-pulse outcomes were zero
};

/// Pooled least-squares weight α* = Σ(a1a2 + b1b2) / Σ(a1² + b1²).
AlphaEstimate optimal_alpha(std::span<const CycleRecord> records);

/// Separate α for the A and B channels; diagnostic only.
std::pair<AlphaEstimate, AlphaEstimate> optimal_alpha_per_channel(
    std::span<const CycleRecord> records);

/// (1/(N-1)) Σ ((a2 - α a1)² + (b2 - α b1)²).
double conditional_variance(std::span<const CycleRecord> records,
                            double alpha);

/// Standard error of conditional_variance from the per-cycle spread.
double conditional_variance_stderr(std::span<const CycleRecord> records,
                                   double alpha);

struct CycleStats {
  std::size_t n = 0;
  double kappa2 = 0.0;
  double beta = 0.0;
  double shot_level = 1.0;  // var of an (A, B) pair without atoms
  double var1 = 0.0;        // var(A1) + var(B1)
  double var2 = 0.0;        // var(A2) + var(B2)
  double alpha_star = 0.0;
  bool alpha_degenerate = false;
  double cond_var = 0.0;    // var(A2|A1) + var(B2|B1)
  double cond_var_stderr = 0.0;
  double atomic_var_inferred = 0.0;  // (cond_var - shot)/κ²
  bool calibration_ok = false;
  bool entangled = false;
};

/// A verdict of "entangled" needs the margin to exceed this many standard
/// errors, so a separable state is not certified by sampling luck.
inline constexpr double kVerdictSigmas = 3.0;

struct Verdict {
  bool entangled = false;
  /// False when var1 sits more than 5σ from shot + κ²; the verdict is then
  /// withheld (entangled stays false).
  bool calibration_ok = false;
  double margin = 0.0;         // shot + κ² - cond_var
  double margin_stderr = 0.0;
};

Verdict entanglement_verdict(const CycleStats& stats);

CycleStats compute_stats(std::span<const CycleRecord> records, double kappa2,
                         double beta, double shot_level = 1.0);

struct TheoryCurve {
  double cond_var = 0.0;    // 1 + κ²(1 + (1-β²)κ²)/(1+κ²)
  double alpha = 0.0;       // βκ²/(1+κ²)
  double atomic_var = 0.0;  // (1 + (1-β²)κ²)/(1+κ²)
};

TheoryCurve theory_curves(double kappa2, double beta);

/// Duan criterion in spin units for two oppositely oriented cells of equal
/// |J_x|: var(J_y1+J_y2) + var(J_z1+J_z2) < 2 J_x.
bool duan_spin_check(double varsum_y, double varsum_z, double j_x);

/// The same quantity in canonical units, var(P_A1) + var(P_A2).
double canonical_duan_from_spin(double varsum_y, double varsum_z, double j_x);

/// One row of a density sweep. Noise columns are shot-subtracted and in
/// units of the measured shot noise:
///   pn1 = var1/var1_shot - 1, pn2 = var2/var2_shot - 1,
///   cond_var_minus_shot = cond_var/cond_var_shot - 1,
/// where the *_shot values come from a κ² = 0 reference run that replays the
/// same random streams. Theory columns are shot-subtracted likewise.
struct SweepRow {
  double theta_deg = 0.0;
  double kappa2 = 0.0;
  double pn1 = 0.0;
  double pn2 = 0.0;
  double cond_var_minus_shot = 0.0;
  double alpha_star = 0.0;
  double theory_cond = 0.0;
  double theory_alpha = 0.0;
  double theory_cond_ideal = 0.0;   // β = 1 overlay
  double theory_alpha_ideal = 0.0;  // β = 1 overlay
};

struct SweepConfig {
  std::vector<double> theta_deg;
  double beta = 0.65;
  std::size_t n_cycles = 10000;
  std::uint64_t seed = 0;
  double electronics_noise_var = 0.0;
  unsigned threads = 1;
};

/// κ² per row follows the measured Faraday-angle slope.
std::vector<SweepRow> density_sweep(const SweepConfig& config);

void write_cycles_csv(std::ostream& out, std::span<const CycleRecord> records);
void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows);
/// Flat key=value block.
void write_summary(std::ostream& out, const CycleStats& stats);

}  // namespace spinent::experiment
