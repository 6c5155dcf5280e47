#include "spinent/experiment.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include <fmt/format.h>

#include "spinent/csv.hpp"
#include "spinent/gaussian_state.hpp"
#include "spinent/parallel.hpp"
#include "spinent/physics.hpp"
#include "spinent/stats.hpp"

namespace spinent::experiment {

namespace {

void require_records(std::span<const CycleRecord> records, const char* what) {
  if (records.size() < 2) {
    throw std::invalid_argument(fmt::format("{}: need at least 2 cycles", what));
  }
}

// Sends one pulse through both atomic modes and reads out (X_L1, X_L2).
// Returns the outcomes and the state with the light modes removed.
std::pair<std::pair<double, double>, GaussianState> probe(
    const GaussianState& atoms, double kappa, Rng& rng) {
  auto [s1, l1] = append_vacuum(atoms, "L1");
  auto [s2, l2] = append_vacuum(s1, "L2");
  s2 = apply_qnd(s2, s2.mode("A1"), l1, kappa);
  s2 = apply_qnd(s2, s2.mode("A2"), l2, kappa);
  auto [out_a, s3] = measure_x(s2, l1, rng);
  auto [out_b, s4] = measure_x(s3, s3.mode("L2"), rng);
  return {{out_a.value, out_b.value}, std::move(s4)};
}

}  // namespace

std::vector<CycleRecord> run_cycles(const CycleConfig& config) {
  if (!(config.kappa2 >= 0.0) || !std::isfinite(config.kappa2)) {
    throw std::invalid_argument("run_cycles: kappa2 must be >= 0");
  }
  if (!(config.beta >= 0.0 && config.beta <= 1.0)) {
    throw std::invalid_argument("run_cycles: beta outside [0, 1]");
  }
  if (config.n_cycles == 0) {
    throw std::invalid_argument("run_cycles: n_cycles must be positive");
  }
  if (!(config.electronics_noise_var >= 0.0)) {
    throw std::invalid_argument("run_cycles: electronics noise must be >= 0");
  }
  const double kappa = std::sqrt(config.kappa2);
  const double elec_sd = std::sqrt(config.electronics_noise_var);
  const GaussianState prepared = vacuum_state({"A1", "A2"});

  std::vector<CycleRecord> records(config.n_cycles);
  parallel_for(config.n_cycles, config.threads, [&](std::size_t i) {
    Rng rng = make_stream(config.seed, i);
    auto [first, entangled] = probe(prepared, kappa, rng);
    GaussianState decayed =
        apply_beta_decay(entangled, entangled.mode("A1"), config.beta);
    decayed = apply_beta_decay(decayed, decayed.mode("A2"), config.beta);
    auto [second, verified] = probe(decayed, kappa, rng);

    CycleRecord& r = records[i];
    r = {first.first, first.second, second.first, second.second};
    if (elec_sd > 0.0) {
      std::normal_distribution<double> floor(0.0, elec_sd);
      r.a1 += floor(rng);
      r.b1 += floor(rng);
      r.a2 += floor(rng);
      r.b2 += floor(rng);
    }
  });
  return records;
}

std::vector<CycleRecord> run_cycles(double kappa2, double beta,
                                    std::size_t n_cycles, std::uint64_t seed,
                                    unsigned threads) {
  CycleConfig c;
  c.kappa2 = kappa2;
  c.beta = beta;
  c.n_cycles = n_cycles;
  c.seed = seed;
  c.threads = threads;
  return run_cycles(c);
}

AlphaEstimate optimal_alpha(std::span<const CycleRecord> records) {
  require_records(records, "optimal_alpha");
  double num = 0.0;
  double den = 0.0;
  for (const auto& r : records) {
    num += r.a1 * r.a2 + r.b1 * r.b2;
    den += r.a1 * r.a1 + r.b1 * r.b1;
  }
  if (den == 0.0) return {0.0, true};
  return {num / den, false};
}

std::pair<AlphaEstimate, AlphaEstimate> optimal_alpha_per_channel(
    std::span<const CycleRecord> records) {
  require_records(records, "optimal_alpha_per_channel");
  double num_a = 0.0, den_a = 0.0, num_b = 0.0, den_b = 0.0;
  for (const auto& r : records) {
    num_a += r.a1 * r.a2;
    den_a += r.a1 * r.a1;
    num_b += r.b1 * r.b2;
    den_b += r.b1 * r.b1;
  }
  auto make = [](double num, double den) {
    return den == 0.0 ? AlphaEstimate{0.0, true}
                      : AlphaEstimate{num / den, false};
  };
  return {make(num_a, den_a), make(num_b, den_b)};
}

double conditional_variance(std::span<const CycleRecord> records,
                            double alpha) {
  require_records(records, "conditional_variance");
  double s = 0.0;
  for (const auto& r : records) {
    const double da = r.a2 - alpha * r.a1;
    const double db = r.b2 - alpha * r.b1;
    s += da * da + db * db;
  }
  return s / static_cast<double>(records.size() - 1);
}

double conditional_variance_stderr(std::span<const CycleRecord> records,
                                   double alpha) {
  require_records(records, "conditional_variance_stderr");
  std::vector<double> q(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const double da = records[i].a2 - alpha * records[i].a1;
    const double db = records[i].b2 - alpha * records[i].b1;
    q[i] = da * da + db * db;
  }
  return std::sqrt(stats::variance(q) / static_cast<double>(q.size()));
}

CycleStats compute_stats(std::span<const CycleRecord> records, double kappa2,
                         double beta, double shot_level) {
  require_records(records, "compute_stats");
  const std::size_t n = records.size();
  std::vector<double> a1(n), b1(n), a2(n), b2(n);
  for (std::size_t i = 0; i < n; ++i) {
    a1[i] = records[i].a1;
    b1[i] = records[i].b1;
    a2[i] = records[i].a2;
    b2[i] = records[i].b2;
  }
  CycleStats s;
  s.n = n;
  s.kappa2 = kappa2;
  s.beta = beta;
  s.shot_level = shot_level;
  s.var1 = stats::variance(a1) + stats::variance(b1);
  s.var2 = stats::variance(a2) + stats::variance(b2);
  const auto alpha = optimal_alpha(records);
  s.alpha_star = alpha.alpha;
  s.alpha_degenerate = alpha.degenerate;
  s.cond_var = conditional_variance(records, s.alpha_star);
  s.cond_var_stderr = conditional_variance_stderr(records, s.alpha_star);
  s.atomic_var_inferred = kappa2 > 0.0
                              ? (s.cond_var - shot_level) / kappa2
                              : std::numeric_limits<double>::quiet_NaN();
  const auto v = entanglement_verdict(s);
  s.calibration_ok = v.calibration_ok;
  s.entangled = v.entangled;
  return s;
}

Verdict entanglement_verdict(const CycleStats& stats) {
  Verdict v;
  const double expected_var1 = stats.shot_level + stats.kappa2;
  const double var1_stderr =
      expected_var1 / std::sqrt(static_cast<double>(stats.n - 1));
  v.calibration_ok = std::abs(stats.var1 - expected_var1) <= 5.0 * var1_stderr;
  v.margin = expected_var1 - stats.cond_var;
  v.margin_stderr = stats.cond_var_stderr;
  v.entangled = v.calibration_ok && stats.kappa2 > 0.0 &&
                v.margin > kVerdictSigmas * v.margin_stderr;
  return v;
}

TheoryCurve theory_curves(double kappa2, double beta) {
  if (!(beta >= 0.0 && beta <= 1.0)) {
    throw std::invalid_argument("theory_curves: beta outside [0, 1]");
  }
  if (!(kappa2 >= 0.0)) {
    throw std::invalid_argument("theory_curves: kappa2 must be >= 0");
  }
  TheoryCurve t;
  t.atomic_var = (1.0 + (1.0 - beta * beta) * kappa2) / (1.0 + kappa2);
  t.cond_var = 1.0 + kappa2 * t.atomic_var;
  t.alpha = beta * kappa2 / (1.0 + kappa2);
  return t;
}

bool duan_spin_check(double varsum_y, double varsum_z, double j_x) {
  if (!(j_x > 0.0)) throw std::invalid_argument("duan_spin_check: j_x <= 0");
  return varsum_y + varsum_z < 2.0 * j_x;
}

double canonical_duan_from_spin(double varsum_y, double varsum_z, double j_x) {
  if (!(j_x > 0.0)) {
    throw std::invalid_argument("canonical_duan_from_spin: j_x <= 0");
  }
  return (varsum_y + varsum_z) / (2.0 * j_x);
}

std::vector<SweepRow> density_sweep(const SweepConfig& config) {
  std::vector<SweepRow> rows;
  rows.reserve(config.theta_deg.size());
  for (std::size_t i = 0; i < config.theta_deg.size(); ++i) {
    const double theta = config.theta_deg[i];
    if (!(theta >= 0.0)) {
      throw std::invalid_argument("density_sweep: theta must be >= 0");
    }
    CycleConfig cc;
    cc.kappa2 = physics::kappa2_experimental(theta);
    cc.beta = config.beta;
    cc.n_cycles = config.n_cycles;
    cc.seed = stream_seed(config.seed, i);
    cc.electronics_noise_var = config.electronics_noise_var;
    cc.threads = config.threads;
    const auto records = run_cycles(cc);
    CycleConfig shot = cc;
    shot.kappa2 = 0.0;
    const auto reference = run_cycles(shot);

    const double shot_level = 1.0 + 2.0 * config.electronics_noise_var;
    const auto s = compute_stats(records, cc.kappa2, cc.beta, shot_level);
    const auto ref = compute_stats(reference, 0.0, cc.beta, shot_level);
    const auto model = theory_curves(cc.kappa2, cc.beta);
    const auto ideal = theory_curves(cc.kappa2, 1.0);

    SweepRow row;
    row.theta_deg = theta;
    row.kappa2 = cc.kappa2;
    row.pn1 = s.var1 / ref.var1 - 1.0;
    row.pn2 = s.var2 / ref.var2 - 1.0;
    row.cond_var_minus_shot = s.cond_var / ref.cond_var - 1.0;
    row.alpha_star = s.alpha_star;
    row.theory_cond = model.cond_var - 1.0;
    row.theory_alpha = model.alpha;
    row.theory_cond_ideal = ideal.cond_var - 1.0;
    row.theory_alpha_ideal = ideal.alpha;
    rows.push_back(row);
  }
  return rows;
}

void write_cycles_csv(std::ostream& out,
                      std::span<const CycleRecord> records) {
  csv::Writer w(out, {"cycle_index", "a1", "b1", "a2", "b2"});
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    w.cell(i).cell(r.a1).cell(r.b1).cell(r.a2).cell(r.b2);
    w.end_row();
  }
}

void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows) {
  csv::Writer w(out, {"theta_deg", "kappa2", "pn1", "pn2",
                      "cond_var_minus_shot", "alpha_star", "theory_cond",
                      "theory_alpha", "theory_cond_ideal",
                      "theory_alpha_ideal"});
  for (const auto& r : rows) {
    w.cell(r.theta_deg)
        .cell(r.kappa2)
        .cell(r.pn1)
        .cell(r.pn2)
        .cell(r.cond_var_minus_shot)
        .cell(r.alpha_star)
        .cell(r.theory_cond)
        .cell(r.theory_alpha)
        .cell(r.theory_cond_ideal)
        .cell(r.theory_alpha_ideal);
    w.end_row();
  }
}

void write_summary(std::ostream& out, const CycleStats& s) {
  out << "n=" << s.n << '\n'
      << "kappa2=" << csv::format_real(s.kappa2) << '\n'
      << "beta=" << csv::format_real(s.beta) << '\n'
      << "var1=" << csv::format_real(s.var1) << '\n'
      << "var2=" << csv::format_real(s.var2) << '\n'
      << "alpha_star=" << csv::format_real(s.alpha_star) << '\n'
      << "cond_var=" << csv::format_real(s.cond_var) << '\n'
      << "atomic_var=" << csv::format_real(s.atomic_var_inferred) << '\n'
      << "entangled=" << (s.entangled ? "true" : "false") << '\n';
}

}  // namespace spinent::experiment
