#include "spinent/time_domain.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

#include "spinent/csv.hpp"
#include "spinent/stats.hpp"

namespace spinent::time_domain {

namespace {

// Rotating-frame spins of the two cells.
struct CellSpins {
  double jy1 = 0.0;
  double jz1 = 0.0;
  double jy2 = 0.0;
  double jz2 = 0.0;
};

}  // namespace

PulseSimulator::PulseSimulator(PulseSettings settings)
    : settings_(settings) {
  const auto& s = settings_;
  if (!(s.kappa >= 0.0) || !std::isfinite(s.kappa)) {
    throw std::invalid_argument("PulseSimulator: kappa must be >= 0");
  }
  if (!(s.omega_T > 0.0) || !(s.pulse_ms > 0.0) || !(s.s_x > 0.0) ||
      !(s.j_x > 0.0)) {
    throw std::invalid_argument(
        "PulseSimulator: omega_T, pulse_ms, s_x and j_x must be positive");
  }
  const double cycles = s.omega_T / (2.0 * physics::kPi);
  if (static_cast<double>(s.n_steps) < kMinStepsPerCycle * cycles ||
      s.n_steps == 0) {
    throw std::invalid_argument(fmt::format(
        "PulseSimulator: {} steps under-resolve {:.6g} Larmor periods (need "
        "at least {:.0f})",
        s.n_steps, cycles, std::ceil(kMinStepsPerCycle * cycles)));
  }

  dt_ = s.pulse_ms / static_cast<double>(s.n_steps);
  a_ = s.kappa / std::sqrt(s.j_x * s.s_x * s.pulse_ms);
  noise_sd_ = std::sqrt(0.5 * s.s_x * dt_);

  cos_.resize(s.n_steps);
  sin_.resize(s.n_steps);
  double cc = 0.0;
  double ss = 0.0;
  const double omega = s.omega_T / s.pulse_ms;
  for (std::size_t k = 0; k < s.n_steps; ++k) {
    const double phase = omega * dt_ * static_cast<double>(k);
    cos_[k] = std::cos(phase);
    sin_[k] = std::sin(phase);
    cc += cos_[k] * cos_[k];
    ss += sin_[k] * sin_[k];
  }
  // Exact discrete windows: Σcos²·dt replaces T/2.
  norm_cos_ = std::sqrt(s.s_x * dt_ * cc);
  norm_sin_ = std::sqrt(s.s_x * dt_ * ss);
}

template <class NextNoise>
PulseRun PulseSimulator::run(const AtomQuadratures& in, NextNoise&& next,
                             bool record_trace) const {
  const auto& s = settings_;
  const double root = std::sqrt(2.0 * s.j_x);
  const double jx1 = s.j_x;
  const double jx2 = s.two_cells ? -s.j_x : 0.0;

  // Invert X_A1 = (Jy1-Jy2)/√(2J), P_A1 = (Jz1+Jz2)/√(2J),
  //        X_A2 = -(Jz1-Jz2)/√(2J), P_A2 = (Jy1+Jy2)/√(2J).
  CellSpins j;
  j.jy1 = 0.5 * root * (in.p2 + in.x1);
  j.jy2 = 0.5 * root * (in.p2 - in.x1);
  j.jz1 = 0.5 * root * (in.p1 - in.x2);
  j.jz2 = 0.5 * root * (in.p1 + in.x2);

  PulseRun out;
  if (record_trace) {
    out.trace.dt_ms = dt_;
    out.trace.n_steps = s.n_steps;
    out.trace.sy_samples.reserve(s.n_steps);
    out.trace.jy_sum.reserve(s.n_steps);
    out.trace.jz_sum.reserve(s.n_steps);
    out.trace.jy_diff.reserve(s.n_steps);
    out.trace.jz_diff.reserve(s.n_steps);
  }

  const double readout = a_ * s.s_x * dt_;
  double sy_cos = 0.0;
  double sy_sin = 0.0;
  double sz_cos = 0.0;
  double sz_sin = 0.0;
  double sy_total = 0.0;
  for (std::size_t k = 0; k < s.n_steps; ++k) {
    const auto [dsy_in, dsz_in] = next(k);
    const double c = cos_[k];
    const double sn = sin_[k];
    const double sum_y = j.jy1 + j.jy2;
    const double sum_z = j.jz1 + j.jz2;

    const double dsy_out = dsy_in + readout * (sum_y * sn + sum_z * c);
    sy_cos += dsy_out * c;
    sy_sin += dsy_out * sn;
    sy_total += dsy_out;
    sz_cos += dsz_in * c;
    sz_sin += dsz_in * sn;

    if (record_trace) {
      out.trace.sy_samples.push_back(dsy_out / noise_sd_);
      out.trace.jy_sum.push_back(sum_y);
      out.trace.jz_sum.push_back(sum_z);
      out.trace.jy_diff.push_back(j.jy1 - j.jy2);
      out.trace.jz_diff.push_back(j.jz1 - j.jz2);
    }

    // Back-action of S_z on the transverse spins.
    const double kick_c = a_ * dsz_in * c;
    const double kick_s = a_ * dsz_in * sn;
    j.jy1 += jx1 * kick_c;
    j.jz1 += jx1 * kick_s;
    j.jy2 += jx2 * kick_c;
    j.jz2 += jx2 * kick_s;
  }

  out.lockin.x_l1 = sy_cos / norm_cos_;
  out.lockin.x_l2 = sy_sin / norm_sin_;
  out.p_l1 = sz_cos / norm_cos_;
  out.p_l2 = -sz_sin / norm_sin_;
  out.sy_integral = sy_total;
  out.atoms_out.x1 = (j.jy1 - j.jy2) / root;
  out.atoms_out.p1 = (j.jz1 + j.jz2) / root;
  out.atoms_out.x2 = -(j.jz1 - j.jz2) / root;
  out.atoms_out.p2 = (j.jy1 + j.jy2) / root;
  return out;
}

PulseRun PulseSimulator::simulate(const AtomQuadratures& atoms_in, Rng& rng,
                                  bool record_trace) const {
  std::normal_distribution<double> normal(0.0, noise_sd_);
  return run(
      atoms_in,
      [&](std::size_t) {
        const double sy = normal(rng);
        const double sz = normal(rng);
        return std::pair{sy, sz};
      },
      record_trace);
}

PulseRun PulseSimulator::integrate(const AtomQuadratures& atoms_in,
                                   const PulseNoise& noise,
                                   bool record_trace) const {
  if (noise.sy.size() != settings_.n_steps ||
      noise.sz.size() != settings_.n_steps) {
    throw std::invalid_argument("PulseSimulator::integrate: noise length");
  }
  return run(
      atoms_in,
      [&](std::size_t k) { return std::pair{noise.sy[k], noise.sz[k]}; },
      record_trace);
}

PulseNoise PulseSimulator::draw_noise(Rng& rng) const {
  std::normal_distribution<double> normal(0.0, noise_sd_);
  PulseNoise noise;
  noise.sy.resize(settings_.n_steps);
  noise.sz.resize(settings_.n_steps);
  for (std::size_t k = 0; k < settings_.n_steps; ++k) {
    noise.sy[k] = normal(rng);
    noise.sz[k] = normal(rng);
  }
  return noise;
}

PulseRun simulate_pulse(const PulseSettings& settings,
                        const AtomQuadratures& atoms_in, Rng& rng,
                        bool record_trace) {
  return PulseSimulator(settings).simulate(atoms_in, rng, record_trace);
}

AtomQuadratures sample_vacuum_atoms(Rng& rng) {
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  AtomQuadratures a;
  a.x1 = normal(rng);
  a.p1 = normal(rng);
  a.x2 = normal(rng);
  a.p2 = normal(rng);
  return a;
}

std::vector<double> shot_noise_scaling(const std::vector<double>& n_ph_list,
                                       std::uint64_t seed, std::size_t n_runs,
                                       std::size_t n_steps, unsigned threads) {
  if (n_ph_list.empty()) {
    throw std::invalid_argument("shot_noise_scaling: empty photon list");
  }
  if (n_runs < 2) throw std::invalid_argument("shot_noise_scaling: n_runs");
  std::vector<double> variances;
  variances.reserve(n_ph_list.size());
  for (std::size_t i = 0; i < n_ph_list.size(); ++i) {
    const double n_ph = n_ph_list[i];
    if (!(n_ph > 0.0)) {
      throw std::invalid_argument("shot_noise_scaling: n_ph must be > 0");
    }
    PulseSettings s;
    s.kappa = 0.0;
    s.omega_T = 2.0 * physics::kPi;
    s.n_steps = std::max<std::size_t>(n_steps, 100);
    s.pulse_ms = 1.0;
    s.s_x = 0.5 * n_ph;  // n_ph = 2 S_x T
    const PulseSimulator sim(s);
    std::vector<double> integrals(n_runs);
    const auto list_seed = stream_seed(seed, i);
    parallel_for(n_runs, threads, [&](std::size_t r) {
      Rng rng = make_stream(list_seed, r);
      integrals[r] = sim.simulate(AtomQuadratures{}, rng).sy_integral;
    });
    variances.push_back(stats::variance(integrals));
  }
  return variances;
}

double diff_noise_growth(const PulseSettings& settings, std::uint64_t seed,
                         std::size_t n_runs, unsigned threads) {
  if (n_runs < 2) throw std::invalid_argument("diff_noise_growth: n_runs");
  const PulseSimulator sim(settings);
  std::vector<double> x1(n_runs);
  parallel_for(n_runs, threads, [&](std::size_t r) {
    Rng rng = make_stream(seed, r);
    const auto atoms = sample_vacuum_atoms(rng);
    x1[r] = sim.simulate(atoms, rng).atoms_out.x1;
  });
  return stats::variance(x1);
}

JointMoments sample_joint_moments(const PulseSettings& settings,
                                  std::uint64_t seed, std::size_t n_runs,
                                  unsigned threads) {
  if (n_runs < 2) throw std::invalid_argument("sample_joint_moments: n_runs");
  const PulseSimulator sim(settings);
  constexpr std::size_t kDim = 6;
  std::vector<std::vector<double>> columns(kDim, std::vector<double>(n_runs));
  std::vector<double> drift(n_runs, 0.0);
  parallel_for(n_runs, threads, [&](std::size_t r) {
    Rng rng = make_stream(seed, r);
    const auto atoms = sample_vacuum_atoms(rng);
    const auto run = sim.simulate(atoms, rng, true);
    columns[0][r] = run.lockin.x_l1;
    columns[1][r] = run.lockin.x_l2;
    columns[2][r] = run.atoms_out.x1;
    columns[3][r] = run.atoms_out.p1;
    columns[4][r] = run.atoms_out.x2;
    columns[5][r] = run.atoms_out.p2;
    double d = 0.0;
    for (std::size_t k = 0; k < run.trace.n_steps; ++k) {
      d = std::max(d, std::abs(run.trace.jy_sum[k] - run.trace.jy_sum[0]));
      d = std::max(d, std::abs(run.trace.jz_sum[k] - run.trace.jz_sum[0]));
    }
    drift[r] = d;
  });

  JointMoments m;
  m.n_runs = n_runs;
  m.mean.resize(kDim);
  m.cov.assign(kDim, std::vector<double>(kDim));
  for (std::size_t i = 0; i < kDim; ++i) {
    m.mean[i] = stats::mean(columns[i]);
    for (std::size_t j = 0; j <= i; ++j) {
      m.cov[i][j] = m.cov[j][i] = stats::covariance(columns[i], columns[j]);
    }
  }
  m.max_spin_sum_drift = *std::max_element(drift.begin(), drift.end());
  return m;
}

void write_trace_csv(std::ostream& out, const PulseTrace& trace) {
  csv::Writer w(out, {"step", "t_ms", "sy_sample", "jy_sum", "jz_sum",
                      "jy_diff", "jz_diff"});
  for (std::size_t k = 0; k < trace.n_steps; ++k) {
    w.cell(k)
        .cell(trace.dt_ms * static_cast<double>(k))
        .cell(trace.sy_samples[k])
        .cell(trace.jy_sum[k])
        .cell(trace.jz_sum[k])
        .cell(trace.jy_diff[k])
        .cell(trace.jz_diff[k]);
    w.end_row();
  }
}

}  // namespace spinent::time_domain
