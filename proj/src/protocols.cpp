#include "spinent/protocols.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <fmt/format.h>

#include "spinent/csv.hpp"
#include "spinent/parallel.hpp"
#include "spinent/stats.hpp"

namespace spinent::protocols {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
const double kInvSqrt2 = 1.0 / std::numbers::sqrt2;

Eigen::Index xrow(ModeRef m) {
  return static_cast<Eigen::Index>(row_of(m, Quadrature::X));
}
Eigen::Index prow(ModeRef m) {
  return static_cast<Eigen::Index>(row_of(m, Quadrature::P));
}

void require_kappa2(double kappa2, const char* who) {
  if (!(kappa2 >= 0.0) || !std::isfinite(kappa2)) {
    throw std::invalid_argument(fmt::format("{}: kappa2 must be >= 0", who));
  }
}

void require_runs(std::size_t n_runs, const char* who) {
  if (n_runs == 0) {
    throw std::invalid_argument(fmt::format("{}: n_runs must be > 0", who));
  }
}

// Feedback factor applied to a lock-in outcome: gain·√2/κ, or nothing
// without coupling.
double pair_feedback(double gain, double kappa) {
  return (gain == 0.0 || kappa == 0.0) ? 0.0
                                       : gain * std::numbers::sqrt2 / kappa;
}

NormalSource stream_source(Rng& rng) {
  return [&rng, normal = std::normal_distribution<double>(0.0, 1.0)]() mutable {
    return normal(rng);
  };
}

double mean_or_zero(const std::vector<double>& v) {
  return v.empty() ? 0.0 : stats::mean(v);
}

double stderr_of(const std::vector<double>& v) {
  return v.size() < 2 ? 0.0
                      : std::sqrt(stats::variance(v) /
                                  static_cast<double>(v.size()));
}

}  // namespace

std::pair<PairOutcome, GaussianState> probe_pair(const GaussianState& state,
                                                 ModeRef cell_i, int sign_i,
                                                 ModeRef cell_j, int sign_j,
                                                 double kappa,
                                                 const NormalSource& draw) {
  state.checked(cell_i);
  state.checked(cell_j);
  if (cell_i.index == cell_j.index) {
    throw std::invalid_argument("probe_pair: cells must differ");
  }
  if (std::abs(sign_i) != 1 || sign_j != -sign_i) {
    throw std::invalid_argument(
        "probe_pair: cells must be oppositely oriented (signs ±1)");
  }
  auto [s1, cos_light] = append_vacuum(state, "Lcos");
  auto [s2, sin_light] = append_vacuum(s1, "Lsin");
  const auto dim = s2.mean().size();

  // cos channel reads the J_z sum, sin channel the J_y sum.
  Eigen::VectorXd o_cos = Eigen::VectorXd::Zero(dim);
  o_cos(prow(cell_i)) = sign_i * kInvSqrt2;
  o_cos(prow(cell_j)) = sign_j * kInvSqrt2;
  Eigen::VectorXd o_sin = Eigen::VectorXd::Zero(dim);
  o_sin(xrow(cell_i)) = kInvSqrt2;
  o_sin(xrow(cell_j)) = kInvSqrt2;

  s2 = apply_qnd_observable(s2, cos_light, o_cos, kappa);
  s2 = apply_qnd_observable(s2, sin_light, o_sin, kappa);
  auto [a, s3] = measure_x_with(s2, cos_light, draw());
  auto [b, s4] = measure_x_with(s3, s3.mode("Lsin"), draw());
  return {PairOutcome{a.value, b.value}, std::move(s4)};
}

// ----- teleportation -----

TeleportRun teleport_once(const TeleportParams& params,
                          const NormalSource& draw) {
  require_kappa2(params.kappa2, "teleport");
  if (!(params.gain >= 0.0)) {
    throw std::invalid_argument("teleport: gain must be >= 0");
  }
  const double kappa = std::sqrt(params.kappa2);
  // Orientations: cell 1 (Alice) +, cell 2 (Bob) -, cell 3 (input) -.
  GaussianState s = vacuum_state({"c1", "c2", "c3"});
  s = displace(s, s.mode("c3"), params.input_x, params.input_p);

  auto [first, s12] = probe_pair(s, s.mode("c1"), +1, s.mode("c2"), -1, kappa,
                                 draw);
  auto [second, s13] = probe_pair(s12, s12.mode("c1"), +1, s12.mode("c3"), -1,
                                  kappa, draw);

  // x3 - x2 = √2(B2 - B1)/κ and p3 - p2 = √2(A1 - A2)/κ up to shot noise.
  const double f = pair_feedback(params.gain, kappa);
  const double shift_x = f * (second.b - first.b);
  const double shift_p = f * (first.a - second.a);
  GaussianState shifted = displace(s13, s13.mode("c2"), shift_x, shift_p);
  GaussianState output = shifted.marginal({shifted.mode("c2")});
  const double fidelity = coherent_fidelity(
      output, Eigen::Vector2d(params.input_x, params.input_p));
  return TeleportRun{first, second, shift_x, shift_p, std::move(output),
                     fidelity};
}

ProtocolResult teleport_spin_state(const TeleportParams& params) {
  require_runs(params.n_runs, "teleport");
  ProtocolResult result;
  result.protocol = "teleport";
  result.parameters = {{"input_x", params.input_x},
                       {"input_p", params.input_p},
                       {"kappa2", params.kappa2},
                       {"gain", params.gain}};
  result.outcome_names = {"a1", "b1", "a2", "b2"};
  result.runs.resize(params.n_runs);
  std::vector<double> fid(params.n_runs), ex(params.n_runs), ep(params.n_runs);
  parallel_for(params.n_runs, params.threads, [&](std::size_t i) {
    Rng rng = make_stream(params.seed, i);
    const auto run = teleport_once(params, stream_source(rng));
    fid[i] = run.fidelity;
    ex[i] = run.output.mean()(0) - params.input_x;
    ep[i] = run.output.mean()(1) - params.input_p;
    result.runs[i] = RunRecord{
        {run.first.a, run.first.b, run.second.a, run.second.b},
        run.shift_x,
        run.shift_p,
        run.fidelity};
  });
  result.n_runs = params.n_runs;
  result.mean_fidelity = mean_or_zero(fid);
  result.fidelity_stderr = stderr_of(fid);
  result.duan_sum_out = kNaN;
  result.mean_displacement_error_x = mean_or_zero(ex);
  result.mean_displacement_error_p = mean_or_zero(ep);
  return result;
}

// ----- entanglement swapping -----

SwapRun swap_once(const SwapParams& params, const NormalSource& draw) {
  require_kappa2(params.kappa2, "swap");
  const double kappa = std::sqrt(params.kappa2);
  // Alice holds cells 1 (+) and 3 (-); Bob holds 2 (-) and 4 (+).
  GaussianState s = vacuum_state({"c1", "c2", "c3", "c4"});
  auto [p12, s1] =
      probe_pair(s, s.mode("c1"), +1, s.mode("c2"), -1, kappa, draw);
  auto [p34, s2] =
      probe_pair(s1, s1.mode("c3"), -1, s1.mode("c4"), +1, kappa, draw);
  s2 = displace(s2, s2.mode("c1"), params.alice_shift_x,
                params.alice_shift_p);
  auto [p13, s3] =
      probe_pair(s2, s2.mode("c1"), +1, s2.mode("c3"), -1, kappa, draw);

  // Estimates x2 + x4 = √2(B12 + B34 - B13)/κ, p4 - p2 = √2(A12 + A34 - A13)/κ.
  const double f = pair_feedback(params.gain, kappa);
  const double shift_x = -f * (p12.b + p34.b - p13.b);
  const double shift_p = -f * (p12.a + p34.a - p13.a);
  s3 = displace(s3, s3.mode("c4"), shift_x, shift_p);
  GaussianState bob = s3.marginal({s3.mode("c2"), s3.mode("c4")});

  // Bob's pair: cell 2 is "-" and cell 4 is "+", so the Duan combinations
  // are (x2 + x4)/√2 and (p4 - p2)/√2.
  Eigen::Vector4d sum_x(kInvSqrt2, 0.0, kInvSqrt2, 0.0);
  Eigen::Vector4d diff_p(0.0, -kInvSqrt2, 0.0, kInvSqrt2);
  const double duan = combination_variance(bob, sum_x) +
                      combination_variance(bob, diff_p);
  const double mx = sum_x.dot(bob.mean());
  const double mp = diff_p.dot(bob.mean());
  return SwapRun{p12, p34, p13, shift_x, shift_p, std::move(bob), duan, mx,
                 mp};
}

ProtocolResult entanglement_swap(const SwapParams& params) {
  require_runs(params.n_runs, "swap");
  ProtocolResult result;
  result.protocol = "swap";
  result.parameters = {{"kappa2", params.kappa2},
                       {"gain", params.gain},
                       {"alice_shift_x", params.alice_shift_x},
                       {"alice_shift_p", params.alice_shift_p}};
  result.outcome_names = {"a12", "b12", "a34", "b34", "a13", "b13"};
  result.runs.resize(params.n_runs);
  std::vector<double> duan(params.n_runs), ex(params.n_runs),
      ep(params.n_runs);
  parallel_for(params.n_runs, params.threads, [&](std::size_t i) {
    Rng rng = make_stream(params.seed, i);
    const auto run = swap_once(params, stream_source(rng));
    duan[i] = run.duan_sum;
    ex[i] = run.sum_x_mean;
    ep[i] = run.diff_p_mean;
    result.runs[i] = RunRecord{{run.pair12.a, run.pair12.b, run.pair34.a,
                                run.pair34.b, run.pair13.a, run.pair13.b},
                               run.shift_x,
                               run.shift_p,
                               run.duan_sum};
  });
  result.n_runs = params.n_runs;
  result.mean_fidelity = kNaN;
  result.fidelity_stderr = kNaN;
  result.duan_sum_out = mean_or_zero(duan);
  result.mean_displacement_error_x = mean_or_zero(ex);
  result.mean_displacement_error_p = mean_or_zero(ep);
  return result;
}

double direct_pair_duan(double kappa2) {
  require_kappa2(kappa2, "direct_pair_duan");
  GaussianState s = vacuum_state({"c1", "c2"});
  auto [outcome, pair] = probe_pair(s, s.mode("c1"), +1, s.mode("c2"), -1,
                                    std::sqrt(kappa2), [] { return 0.0; });
  Eigen::Vector4d sum_x(kInvSqrt2, 0.0, kInvSqrt2, 0.0);
  Eigen::Vector4d diff_p(0.0, kInvSqrt2, 0.0, -kInvSqrt2);
  return combination_variance(pair, sum_x) +
         combination_variance(pair, diff_p);
}

// ----- memory -----

MemoryRun memory_once(const MemoryParams& params, const NormalSource& draw) {
  if (!(params.squeeze_r >= 0.0)) {
    throw std::invalid_argument("memory: squeeze_r must be >= 0");
  }
  require_kappa2(params.kappa2_readout, "memory");
  if (!(params.kappa2_readout > 0.0)) {
    throw std::invalid_argument("memory: kappa2_readout must be > 0");
  }
  // Mapping pulse at unit coupling so that feedback of its outcome writes
  // the light quadrature onto cell 2 one-to-one.
  constexpr double kMapKappa = 1.0;
  const double readout_kappa = std::sqrt(params.kappa2_readout);

  // Cells 1 (+) and 2 (-) share an EPR pair with x1 + x2 → 0, p1 - p2 → 0.
  GaussianState s = vacuum_state({"L"});
  s = displace(s, s.mode("L"), params.light_x, params.light_p);
  s = append_two_mode_squeezed(s, params.squeeze_r, "c1", "c2");

  // Light through cell 1 (no bias field): X_L += p1, x1 += P_L.
  s = apply_qnd(s, s.mode("c1"), s.mode("L"), kMapKappa);
  auto [map, s1] = measure_x_with(s, s.mode("L"), draw());
  const double shift_p = -params.gain * map.value / kMapKappa;
  s1 = displace(s1, s1.mode("c2"), 0.0, shift_p);

  // Cell 1 now holds P_L in x1; rotate it into p1 and read it out strongly.
  s1 = rotate(s1, s1.mode("c1"), std::numbers::pi / 2.0);
  auto [s2, readout_light] = append_vacuum(s1, "R");
  s2 = apply_qnd(s2, s2.mode("c1"), readout_light, readout_kappa);
  auto [readout, s3] = measure_x_with(s2, readout_light, draw());
  const double shift_x = params.gain * readout.value / readout_kappa;
  s3 = displace(s3, s3.mode("c2"), shift_x, 0.0);

  // Cell 2 now carries (P_L, -X_L); a quarter turn restores (X_L, P_L).
  s3 = rotate(s3, s3.mode("c2"), std::numbers::pi / 2.0);
  GaussianState stored = s3.marginal({s3.mode("c2")});
  const double fidelity = coherent_fidelity(
      stored, Eigen::Vector2d(params.light_x, params.light_p));
  return MemoryRun{map.value, readout.value, shift_x, shift_p,
                   std::move(stored), fidelity};
}

ProtocolResult quantum_memory(const MemoryParams& params) {
  require_runs(params.n_runs, "memory");
  ProtocolResult result;
  result.protocol = "memory";
  result.parameters = {{"light_x", params.light_x},
                       {"light_p", params.light_p},
                       {"squeeze_r", params.squeeze_r},
                       {"kappa2_readout", params.kappa2_readout},
                       {"gain", params.gain}};
  result.outcome_names = {"map", "readout"};
  result.runs.resize(params.n_runs);
  std::vector<double> fid(params.n_runs), ex(params.n_runs), ep(params.n_runs);
  parallel_for(params.n_runs, params.threads, [&](std::size_t i) {
    Rng rng = make_stream(params.seed, i);
    const auto run = memory_once(params, stream_source(rng));
    fid[i] = run.fidelity;
    ex[i] = run.stored.mean()(0) - params.light_x;
    ep[i] = run.stored.mean()(1) - params.light_p;
    result.runs[i] = RunRecord{{run.map_outcome, run.readout_outcome},
                               run.shift_x,
                               run.shift_p,
                               run.fidelity};
  });
  result.n_runs = params.n_runs;
  result.mean_fidelity = mean_or_zero(fid);
  result.fidelity_stderr = stderr_of(fid);
  result.duan_sum_out = kNaN;
  result.mean_displacement_error_x = mean_or_zero(ex);
  result.mean_displacement_error_p = mean_or_zero(ep);
  return result;
}

void write_summary(std::ostream& out, const ProtocolResult& r) {
  out << "protocol=" << r.protocol << '\n';
  for (const auto& [key, value] : r.parameters) {
    out << key << '=' << csv::format_real(value) << '\n';
  }
  out << "n_runs=" << r.n_runs << '\n'
      << "mean_fidelity=" << csv::format_real(r.mean_fidelity) << '\n'
      << "fidelity_stderr=" << csv::format_real(r.fidelity_stderr) << '\n'
      << "duan_sum_out=" << csv::format_real(r.duan_sum_out) << '\n'
      << "mean_displacement_error_x="
      << csv::format_real(r.mean_displacement_error_x) << '\n'
      << "mean_displacement_error_p="
      << csv::format_real(r.mean_displacement_error_p) << '\n';
}

void write_runs_csv(std::ostream& out, const ProtocolResult& r) {
  out << "run";
  for (const auto& name : r.outcome_names) out << ',' << name;
  out << ",shift_x,shift_p," << (r.protocol == "swap" ? "duan" : "fidelity")
      << '\n';
  for (std::size_t i = 0; i < r.runs.size(); ++i) {
    const auto& run = r.runs[i];
    out << i;
    for (double v : run.outcomes) out << ',' << csv::format_real(v);
    out << ',' << csv::format_real(run.shift_x) << ','
        << csv::format_real(run.shift_p) << ','
        << csv::format_real(run.figure) << '\n';
  }
}

}  // namespace spinent::protocols
