#pragma once

#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "spinent/gaussian_state.hpp"

namespace spinent::protocols {

/// Source of standard-normal draws for homodyne outcomes. Returning 0 on
/// every call replays the protocol along its mean path.
using NormalSource = std::function<double()>;

/// Per-run record: raw outcomes, the feedback displacement that was applied
/// and the run's figure of merit (fidelity, or Duan sum for swapping).
struct RunRecord {
  std::vector<double> outcomes;
  double shift_x = 0.0;
  double shift_p = 0.0;
  double figure = 0.0;
};

struct ProtocolResult {
  std::string protocol;
  std::vector<std::pair<std::string, double>> parameters;
  double mean_fidelity = 0.0;   // NaN for swapping
  double fidelity_stderr = 0.0;
  double duan_sum_out = 0.0;    // NaN unless swapping
  /// Mean over runs of (output mean - target mean). For swapping this is the
  /// mean of ((x2 + x4)/√2, (p4 - p2)/√2) after Bob's correction.
  double mean_displacement_error_x = 0.0;
  double mean_displacement_error_p = 0.0;
  std::size_t n_runs = 0;
  std::vector<std::string> outcome_names;
  std::vector<RunRecord> runs;
};

// ----- building blocks on per-cell modes -----
//
// Each cell carries one mode (x, p) = (J_y, s J_z)/sqrt(J_x) where s = ±1 is
// its orientation along the bias field.

struct PairOutcome {
  double a = 0.0;  // cos channel: κ(s_i p_i + s_j p_j)/√2 + shot noise
  double b = 0.0;  // sin channel: κ(x_i + x_j)/√2 + shot noise
};

/// Probes two oppositely oriented cells with one pulse and measures both
/// lock-in channels. The light modes are consumed.
std::pair<PairOutcome, GaussianState> probe_pair(const GaussianState& state,
                                                 ModeRef cell_i, int sign_i,
                                                 ModeRef cell_j, int sign_j,
                                                 double kappa,
                                                 const NormalSource& draw);

// ----- teleportation of a spin state (three cells) -----

struct TeleportParams {
  double input_x = 0.0;
  double input_p = 0.0;
  double kappa2 = 100.0;
  double gain = 1.0;
  std::size_t n_runs = 2000;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

struct TeleportRun {
  PairOutcome first;   // cells 1, 2
  PairOutcome second;  // cells 1, 3
  double shift_x = 0.0;
  double shift_p = 0.0;
  GaussianState output;  // Bob's cell after feedback
  double fidelity = 0.0;
};

TeleportRun teleport_once(const TeleportParams& params,
                          const NormalSource& draw);
ProtocolResult teleport_spin_state(const TeleportParams& params);

// ----- entanglement swapping (four cells) -----

struct SwapParams {
  double kappa2 = 100.0;
  double gain = 1.0;
  /// Optional displacement of Alice's cell 1 before her joint pulse; Bob
  /// recovers it in the means of his pair.
  double alice_shift_x = 0.0;
  double alice_shift_p = 0.0;
  std::size_t n_runs = 200;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

struct SwapRun {
  PairOutcome pair12;
  PairOutcome pair34;
  PairOutcome pair13;
  double shift_x = 0.0;
  double shift_p = 0.0;
  GaussianState bob;  // cells 2 and 4
  double duan_sum = 0.0;
  double sum_x_mean = 0.0;   // <(x2 + x4)/√2>
  double diff_p_mean = 0.0;  // <(p4 - p2)/√2>
};

SwapRun swap_once(const SwapParams& params, const NormalSource& draw);
ProtocolResult entanglement_swap(const SwapParams& params);

/// Duan sum of one directly entangled pair after a single pulse.
double direct_pair_duan(double kappa2);

// ----- light-to-atom memory -----

struct MemoryParams {
  double light_x = 0.0;
  double light_p = 0.0;
  double squeeze_r = 2.0;
  double kappa2_readout = 100.0;
  double gain = 1.0;
  std::size_t n_runs = 2000;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

struct MemoryRun {
  double map_outcome = 0.0;
  double readout_outcome = 0.0;
  double shift_x = 0.0;  // feedback applied to x2
  double shift_p = 0.0;  // feedback applied to p2
  GaussianState stored;
  double fidelity = 0.0;
};

MemoryRun memory_once(const MemoryParams& params, const NormalSource& draw);
ProtocolResult quantum_memory(const MemoryParams& params);

void write_summary(std::ostream& out, const ProtocolResult& result);
void write_runs_csv(std::ostream& out, const ProtocolResult& result);

}  // namespace spinent::protocols
