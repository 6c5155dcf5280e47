#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "spinent/experiment.hpp"
#include "spinent/gaussian_state.hpp"
#include "spinent/stats.hpp"

namespace {

using namespace spinent;
using namespace spinent::experiment;

struct Columns {
  std::vector<double> a1, b1, a2, b2;
};

Columns split(const std::vector<CycleRecord>& r) {
  Columns c;
  for (const auto& x : r) {
    c.a1.push_back(x.a1);
    c.b1.push_back(x.b1);
    c.a2.push_back(x.a2);
    c.b2.push_back(x.b2);
  }
  return c;
}

// Exact conditional P-variance sum of the two atomic modes after the first
// pulse and the decay, from the Gaussian engine.
double exact_atomic_sum(double kappa2, double beta) {
  const double kappa = std::sqrt(kappa2);
  GaussianState s = vacuum_state({"A1", "A2", "L1", "L2"});
  s = apply_qnd(s, s.mode("A1"), s.mode("L1"), kappa);
  s = apply_qnd(s, s.mode("A2"), s.mode("L2"), kappa);
  s = condition_x(s, s.mode("L1"), 0.0);
  s = condition_x(s, s.mode("L2"), 0.0);
  s = apply_beta_decay(s, s.mode("A1"), beta);
  s = apply_beta_decay(s, s.mode("A2"), beta);
  return duan_sum(s, s.mode("A1"), s.mode("A2"));
}

// ----- run_cycles -----

TEST(RunCycles, NoCouplingMeansNoCorrelation) {
  const std::size_t n = 20000;
  const auto c = split(run_cycles(0.0, 1.0, n, 1));
  EXPECT_LT(std::abs(stats::correlation(c.a1, c.a2)), 3.0 / std::sqrt(n));
  EXPECT_LT(std::abs(stats::correlation(c.b1, c.b2)), 3.0 / std::sqrt(n));
}

TEST(RunCycles, ProjectionNoiseAtUnitCoupling) {
  const auto s = compute_stats(run_cycles(1.0, 1.0, 100000, 2), 1.0, 1.0);
  EXPECT_NEAR(s.var1, 2.0, 0.02 * 2.0);
  EXPECT_NEAR(s.alpha_star, 0.5, 0.02);
  EXPECT_NEAR(s.cond_var, 1.5, 0.02 * 1.5);
  EXPECT_TRUE(s.entangled);
  EXPECT_TRUE(s.calibration_ok);
}

TEST(RunCycles, FullDecayMakesFirstPulseUseless) {
  const auto s = compute_stats(run_cycles(1.0, 0.0, 100000, 3), 1.0, 0.0);
  EXPECT_NEAR(s.alpha_star, 0.0, 0.02);
  EXPECT_NEAR(s.cond_var, 2.0, 0.02 * 2.0);
  EXPECT_FALSE(s.entangled);
}

TEST(RunCycles, PartialDecayConditionalVariance) {
  const auto s = compute_stats(run_cycles(1.0, 0.65, 100000, 4), 1.0, 0.65);
  // 1 + (1 + (1 - 0.65²))/2
  EXPECT_NEAR(s.cond_var, 1.789, 0.02 * 1.789);
}

TEST(RunCycles, IndependentOfThreadCount) {
  const auto a = run_cycles(0.7, 0.8, 3001, 9, 1);
  const auto b = run_cycles(0.7, 0.8, 3001, 9, 4);
  const auto c = run_cycles(0.7, 0.8, 3001, 9, 7);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].a1, b[i].a1);
    EXPECT_EQ(a[i].b2, b[i].b2);
    EXPECT_EQ(a[i].a2, c[i].a2);
    EXPECT_EQ(a[i].b1, c[i].b1);
  }
}

TEST(RunCycles, RejectsBadConfig) {
  EXPECT_THROW(run_cycles(1.0, 1.0, 0, 1), std::invalid_argument);
  EXPECT_THROW(run_cycles(1.0, 1.5, 10, 1), std::invalid_argument);
  EXPECT_THROW(run_cycles(-1.0, 1.0, 10, 1), std::invalid_argument);
  CycleConfig c;
  c.electronics_noise_var = -0.1;
  EXPECT_THROW(run_cycles(c), std::invalid_argument);
}

TEST(RunCycles, ElectronicsFloorRaisesShotLevel) {
  CycleConfig c;
  c.kappa2 = 1.0;
  c.n_cycles = 50000;
  c.seed = 5;
  c.electronics_noise_var = 0.1;
  const auto s = compute_stats(run_cycles(c), 1.0, 1.0, 1.2);
  EXPECT_NEAR(s.var1, 2.2, 0.02 * 2.2);
  EXPECT_TRUE(s.calibration_ok);
}

// ----- estimators -----

TEST(OptimalAlpha, IdenticalPulsesGiveOne) {
  std::vector<CycleRecord> r = {{1, 2, 1, 2}, {-0.5, 0.3, -0.5, 0.3}, {2, -1, 2, -1}};
  const auto a = optimal_alpha(r);
  EXPECT_DOUBLE_EQ(a.alpha, 1.0);
  EXPECT_FALSE(a.degenerate);
}

TEST(OptimalAlpha, ZeroFirstPulseIsDegenerate) {
  std::vector<CycleRecord> r = {{0, 0, 1, 2}, {0, 0, 3, 4}};
  const auto a = optimal_alpha(r);
  EXPECT_EQ(a.alpha, 0.0);
  EXPECT_TRUE(a.degenerate);
}

TEST(OptimalAlpha, IndependentPulsesGiveZero) {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> g;
  const std::size_t n = 20000;
  std::vector<CycleRecord> r(n);
  for (auto& x : r) x = {g(rng), g(rng), g(rng), g(rng)};
  EXPECT_LT(std::abs(optimal_alpha(r).alpha), 3.0 / std::sqrt(n));
}

TEST(OptimalAlpha, MinimizesConditionalVariance) {
  const auto r = run_cycles(2.0, 0.9, 5000, 6);
  const double a = optimal_alpha(r).alpha;
  const double best = conditional_variance(r, a);
  for (double d : {-0.05, -0.01, 0.01, 0.05}) {
    EXPECT_GT(conditional_variance(r, a + d), best);
  }
}

TEST(OptimalAlpha, PerChannelDiagnostic) {
  std::vector<CycleRecord> r = {{1, 1, 2, 0.5}, {2, -1, 4, -0.5}};
  const auto [a, b] = optimal_alpha_per_channel(r);
  EXPECT_DOUBLE_EQ(a.alpha, 2.0);
  EXPECT_DOUBLE_EQ(b.alpha, 0.5);
}

TEST(ConditionalVariance, HandComputed) {
  std::vector<CycleRecord> r = {{1, 0, 2, 1}, {0, 1, -1, 3}, {2, 2, 0, 0}};
  // α = 0: Σ(a2² + b2²)/(N-1) = (5 + 10 + 0)/2
  EXPECT_DOUBLE_EQ(conditional_variance(r, 0.0), 7.5);
  // α = 1: ((1)²+(1)² + (-1)²+(2)² + (-2)²+(-2)²)/2
  EXPECT_DOUBLE_EQ(conditional_variance(r, 1.0), 7.5);
  EXPECT_THROW(conditional_variance(std::vector<CycleRecord>(1), 0.0),
               std::invalid_argument);
}

TEST(CycleStatsInvariants, ConditionalBoundAndRepeatability) {
  const std::size_t n = 50000;
  const auto s = compute_stats(run_cycles(1.0, 1.0, n, 7), 1.0, 1.0);
  EXPECT_LE(s.cond_var, s.var2 + s.var1 * s.alpha_star * s.alpha_star);
  // var2 = var1 at β = 1; each is a sum of two variances of size (1+κ²)/2.
  const double sd = 2.0 * std::sqrt(2.0 / n);
  EXPECT_NEAR(s.var2, s.var1, 4.0 * sd);
  EXPECT_GE(s.alpha_star, 0.0);
  EXPECT_LE(s.alpha_star, 1.0);
}

TEST(CycleStatsInvariants, CalibrationIdentityOnGrid) {
  const std::size_t n = 20000;
  std::uint64_t seed = 100;
  for (double k2 : {0.1, 0.25, 0.5, 1.0, 2.0, 4.0}) {
    const auto s = compute_stats(run_cycles(k2, 1.0, n, ++seed), k2, 1.0);
    EXPECT_NEAR(s.var1 - 1.0, k2, 3.0 * std::sqrt(2.0 / n) * (1.0 + k2)) << k2;
  }
}

TEST(CycleStatsInvariants, AlphaConvergesToTheory) {
  const std::size_t n = 100000;
  std::uint64_t seed = 200;
  for (double beta : {1.0, 0.65}) {
    for (double k2 : {0.1, 0.25, 0.5, 1.0, 2.0, 4.0}) {
      const auto s = compute_stats(run_cycles(k2, beta, n, ++seed), k2, beta);
      EXPECT_NEAR(s.alpha_star, theory_curves(k2, beta).alpha, 0.02)
          << k2 << ' ' << beta;
    }
  }
}

TEST(CycleStatsInvariants, InferredVarianceMatchesExactEngine) {
  const std::size_t n = 100000;
  std::uint64_t seed = 300;
  for (double beta : {1.0, 0.65}) {
    for (double k2 : {0.5, 1.0, 2.0}) {
      const auto s = compute_stats(run_cycles(k2, beta, n, ++seed), k2, beta);
      EXPECT_NEAR(s.atomic_var_inferred, exact_atomic_sum(k2, beta),
                  4.0 * s.cond_var_stderr / k2)
          << k2 << ' ' << beta;
    }
  }
}

// ----- verdict -----

TEST(Verdict, MarginShrinksWithDecay) {
  const std::size_t n = 20000;
  double previous = 1e9;
  for (double beta : {1.0, 0.8, 0.6, 0.4, 0.2, 0.0}) {
    // Same seed for every β: common random numbers.
    const auto s = compute_stats(run_cycles(1.0, beta, n, 11), 1.0, beta);
    const double margin = entanglement_verdict(s).margin;
    EXPECT_LE(margin, previous) << beta;
    previous = margin;
  }
}

TEST(Verdict, LowCouplingStillEntangled) {
  const auto s = compute_stats(run_cycles(0.5, 0.65, 100000, 12), 0.5, 0.65);
  const auto v = entanglement_verdict(s);
  EXPECT_TRUE(v.entangled);
  EXPECT_GT(v.margin, kVerdictSigmas * v.margin_stderr);
}

TEST(Verdict, WithheldWhenFirstPulseMiscalibrated) {
  CycleStats s;
  s.n = 10000;
  s.kappa2 = 1.0;
  s.shot_level = 1.0;
  s.var1 = 2.5;  // far from 2
  s.cond_var = 1.2;
  s.cond_var_stderr = 0.01;
  const auto v = entanglement_verdict(s);
  EXPECT_FALSE(v.calibration_ok);
  EXPECT_FALSE(v.entangled);
  s.var1 = 2.01;
  EXPECT_TRUE(entanglement_verdict(s).entangled);
}

TEST(Verdict, NeverEntangledWithoutCoupling) {
  const auto s = compute_stats(run_cycles(0.0, 1.0, 20000, 13), 0.0, 1.0);
  EXPECT_FALSE(s.entangled);
  EXPECT_TRUE(std::isnan(s.atomic_var_inferred));
}

// ----- theory -----

TEST(Theory, IdealAndLimits) {
  const auto ideal = theory_curves(1.0, 1.0);
  EXPECT_DOUBLE_EQ(ideal.cond_var, 1.5);
  EXPECT_DOUBLE_EQ(ideal.alpha, 0.5);
  for (double k2 : {0.3, 1.0, 7.0}) {
    const auto t = theory_curves(k2, 0.0);
    EXPECT_DOUBLE_EQ(t.cond_var, 1.0 + k2);
    EXPECT_DOUBLE_EQ(t.alpha, 0.0);
  }
  const auto headline = theory_curves(1.449, 0.65);
  EXPECT_NEAR((headline.cond_var - 1.0) / 1.449, 0.75, 5e-4);
  EXPECT_NEAR(headline.atomic_var, exact_atomic_sum(1.449, 0.65), 1e-12);
  EXPECT_THROW(theory_curves(1.0, 1.2), std::invalid_argument);
}

TEST(Theory, MatchesExactEngineEverywhere) {
  for (double beta : {0.0, 0.3, 0.65, 1.0}) {
    for (double k2 : {0.1, 0.5, 1.0, 3.0, 10.0}) {
      EXPECT_NEAR(theory_curves(k2, beta).atomic_var, exact_atomic_sum(k2, beta),
                  1e-12);
    }
  }
}

// ----- spin-unit criterion -----

TEST(DuanSpin, Examples) {
  const double jx = 4e11;
  EXPECT_FALSE(duan_spin_check(jx, jx, jx));
  EXPECT_TRUE(duan_spin_check(0.4 * jx, 0.4 * jx, jx));
  EXPECT_THROW(duan_spin_check(1.0, 1.0, 0.0), std::invalid_argument);
}

TEST(DuanSpin, CanonicalUnitsAgree) {
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (int i = 0; i < 200; ++i) {
    const double jx = 1e10 * (1.0 + u(rng));
    const double vy = u(rng) * jx;
    const double vz = u(rng) * jx;
    EXPECT_EQ(duan_spin_check(vy, vz, jx), canonical_duan_from_spin(vy, vz, jx) < 1.0);
  }
  EXPECT_DOUBLE_EQ(canonical_duan_from_spin(1.0, 1.0, 1.0), 1.0);
}

// ----- sweep -----

TEST(Sweep, ZeroDensityRowIsExactlyZero) {
  SweepConfig c;
  c.theta_deg = {0.0};
  c.n_cycles = 2000;
  c.seed = 15;
  for (double beta : {0.65, 1.0, 0.0}) {
    c.beta = beta;
    const auto rows = density_sweep(c);
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_EQ(rows[0].kappa2, 0.0);
    EXPECT_EQ(rows[0].pn1, 0.0);
    EXPECT_EQ(rows[0].pn2, 0.0);
    EXPECT_EQ(rows[0].cond_var_minus_shot, 0.0);
    EXPECT_EQ(rows[0].theory_cond, 0.0);
  }
}

TEST(Sweep, ProjectionNoiseSlopeAndEntanglementAcrossDensities) {
  SweepConfig c;
  c.theta_deg = {2, 4, 6, 8, 10, 12, 14};
  c.beta = 0.65;
  c.n_cycles = 10000;
  c.seed = 16;
  const auto rows = density_sweep(c);
  std::vector<double> theta, pn1, pn2;
  for (const auto& r : rows) {
    theta.push_back(r.theta_deg);
    pn1.push_back(r.pn1);
    pn2.push_back(r.pn2);
    EXPECT_LT(r.cond_var_minus_shot, r.pn1) << r.theta_deg;
    EXPECT_LT(r.cond_var_minus_shot, r.pn2) << r.theta_deg;
    EXPECT_NEAR(r.kappa2, 0.1 * r.theta_deg, 1e-14);
    EXPECT_LE(r.theory_cond, r.kappa2);
    EXPECT_LT(r.theory_cond_ideal, r.theory_cond);
    // Second pulse sees the same noise as the first.
    EXPECT_NEAR(r.pn2, r.pn1, 4.0 * std::sqrt(2.0 / 10000) * (1 + r.kappa2));
  }
  const auto fit = stats::linear_fit(theta, pn1);
  EXPECT_NEAR(fit.slope, 0.10, 0.05 * 0.10);
}

TEST(Sweep, IndependentOfThreadCount) {
  SweepConfig c;
  c.theta_deg = {3, 9};
  c.n_cycles = 1500;
  c.seed = 17;
  c.threads = 1;
  const auto a = density_sweep(c);
  c.threads = 5;
  const auto b = density_sweep(c);
  std::ostringstream sa, sb;
  write_sweep_csv(sa, a);
  write_sweep_csv(sb, b);
  EXPECT_EQ(sa.str(), sb.str());
}

// ----- output -----

TEST(Output, CyclesCsvAndSummaryLayout) {
  const auto r = run_cycles(1.0, 1.0, 3, 18);
  std::ostringstream csv;
  write_cycles_csv(csv, r);
  std::istringstream in(csv.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "cycle_index,a1,b1,a2,b2");
  std::getline(in, line);
  EXPECT_EQ(line.rfind("0,", 0), 0u);

  std::ostringstream summary;
  write_summary(summary, compute_stats(r, 1.0, 1.0));
  std::istringstream sin(summary.str());
  std::vector<std::string> keys;
  while (std::getline(sin, line)) keys.push_back(line.substr(0, line.find('=')));
  const std::vector<std::string> expected = {"n",          "kappa2",   "beta",
                                             "var1",       "var2",     "alpha_star",
                                             "cond_var",   "atomic_var", "entangled"};
  EXPECT_EQ(keys, expected);

  std::ostringstream sweep;
  write_sweep_csv(sweep, std::vector<SweepRow>{});
  EXPECT_EQ(sweep.str(),
            "theta_deg,kappa2,pn1,pn2,cond_var_minus_shot,alpha_star,"
            "theory_cond,theory_alpha,theory_cond_ideal,theory_alpha_ideal\n");
}

}  // namespace
