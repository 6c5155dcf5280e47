#include "spinent/cli.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <cmath>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "spinent/csv.hpp"
#include "spinent/experiment.hpp"
#include "spinent/gaussian_state.hpp"
#include "spinent/physics.hpp"
#include "spinent/protocols.hpp"
#include "spinent/time_domain.hpp"

namespace spinent::cli {

namespace {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct Options {
  std::string command;
  std::string save_config;

  physics::PhysicalParams physical;
  std::optional<double> kappa2;
  std::optional<double> beta;
  std::optional<double> theta_deg;
  std::vector<double> theta_list = {2, 4, 6, 8, 10, 12, 14};
  std::size_t cycles = 10000;
  std::uint64_t seed = 0;
  std::string out;
  unsigned parallel = 1;
  double electronics_noise = 0.0;

  std::string protocol;
  double gain = 1.0;
  double squeeze_r = 2.0;
  double disp_x = 1.0;
  double disp_p = 1.0;
  std::optional<std::size_t> runs;

  std::vector<double> kappa_list = {0.5, 1.0, 2.0};
  double larmor_cycles = time_domain::kDefaultLarmorCycles;
  std::optional<std::size_t> steps;
  std::string trace;
};

std::unique_ptr<std::ofstream> open_output(const std::string& path) {
  auto file = std::make_unique<std::ofstream>(path, std::ios::binary);
  if (!*file) throw IoError(fmt::format("cannot open '{}' for writing", path));
  return file;
}

void finish_output(std::ofstream& file, const std::string& path) {
  file.flush();
  if (!file) throw IoError(fmt::format("write to '{}' failed", path));
}

// --- calibrate ---

void cmd_calibrate(const Options& o, std::ostream& out) {
  const auto& p = o.physical;
  p.validate();
  const auto cal = physics::calibrate(p);
  const double theta = o.theta_deg ? *o.theta_deg : std::abs(cal.theta_deg);
  if (!(theta >= 0.0)) throw UsageError("--theta-deg must be >= 0");

  const double k2_theory =
      physics::kappa2_theory(p.power_mW, p.pulse_ms, theta, p.detuning_MHz);
  const double k2_exp = physics::kappa2_experimental(theta);
  // The ratio of the two slopes does not depend on θ.
  const double ratio =
      physics::kappa2_theory(p.power_mW, p.pulse_ms, 1.0, p.detuning_MHz) /
      physics::kappa2_experimental(1.0);
  const double j_x = std::abs(physics::j_x_from_theta(theta, p));
  const double k2_model =
      physics::kappa2_model(cal.a_coupling, j_x, cal.s_x, cal.pulse_s);

  out << "theta_deg=" << csv::format_real(theta) << '\n'
      << "kappa2_theory=" << csv::format_real(k2_theory) << '\n'
      << "kappa2_theory_per_deg="
      << csv::format_real(
             physics::kappa2_theory(p.power_mW, p.pulse_ms, 1.0,
                                    p.detuning_MHz))
      << '\n'
      << "kappa2_exp=" << csv::format_real(k2_exp) << '\n'
      << "ratio=" << csv::format_real(ratio) << '\n'
      << "a=" << csv::format_real(cal.a_coupling) << '\n'
      << "J_x=" << csv::format_real(j_x) << '\n'
      << "S_x=" << csv::format_real(cal.s_x) << '\n'
      << "kappa2_model=" << csv::format_real(k2_model) << '\n'
      << "model_coefficient="
      << csv::format_real(physics::kappa2_theory_coefficient(p)) << '\n';
}

// --- run ---

double resolve_kappa2(const Options& o) {
  if (o.kappa2) {
    if (!(*o.kappa2 >= 0.0)) throw UsageError("--kappa2 must be >= 0");
    return *o.kappa2;
  }
  if (o.theta_deg) {
    o.physical.validate();
    return physics::kappa2_theory(o.physical.power_mW, o.physical.pulse_ms,
                                  *o.theta_deg, o.physical.detuning_MHz);
  }
  throw UsageError("coupling unresolved: give --kappa2 or --theta-deg");
}

void require_cycles(const Options& o) {
  if (o.cycles < 2) throw UsageError("--cycles must be at least 2");
}

void cmd_run(const Options& o, std::ostream& out) {
  require_cycles(o);
  experiment::CycleConfig config;
  config.kappa2 = resolve_kappa2(o);
  config.beta = o.beta.value_or(1.0);
  if (!(config.beta >= 0.0 && config.beta <= 1.0)) {
    throw UsageError("--beta must lie in [0, 1]");
  }
  config.n_cycles = o.cycles;
  config.seed = o.seed;
  config.electronics_noise_var = o.electronics_noise;
  config.threads = o.parallel;

  std::unique_ptr<std::ofstream> file;
  if (!o.out.empty()) file = open_output(o.out);
  const auto records = experiment::run_cycles(config);
  if (file) {
    experiment::write_cycles_csv(*file, records);
    finish_output(*file, o.out);
  }
  const auto stats = experiment::compute_stats(
      records, config.kappa2, config.beta, 1.0 + 2.0 * o.electronics_noise);
  experiment::write_summary(out, stats);
}

// --- sweep ---

void cmd_sweep(const Options& o, std::ostream& out) {
  require_cycles(o);
  if (o.theta_list.empty()) throw UsageError("--theta-list is empty");
  experiment::SweepConfig config;
  config.theta_deg = o.theta_list;
  config.beta = o.beta.value_or(config.beta);
  config.n_cycles = o.cycles;
  config.seed = o.seed;
  config.electronics_noise_var = o.electronics_noise;
  config.threads = o.parallel;

  std::unique_ptr<std::ofstream> file;
  if (!o.out.empty()) file = open_output(o.out);
  const auto rows = experiment::density_sweep(config);
  if (file) {
    experiment::write_sweep_csv(*file, rows);
    finish_output(*file, o.out);
  } else {
    experiment::write_sweep_csv(out, rows);
  }
}

// --- timedomain ---

constexpr double kCrossEngineTolerance = 0.03;
constexpr double kSpinDriftTolerance = 1e-10;
constexpr const char* kMomentNames[6] = {"X_L1", "X_L2", "X_A1",
                                         "P_A1", "X_A2", "P_A2"};

Eigen::MatrixXd reference_covariance(double kappa) {
  GaussianState s = vacuum_state({"A1", "A2", "L1", "L2"});
  s = apply_qnd(s, s.mode("A1"), s.mode("L1"), kappa);
  s = apply_qnd(s, s.mode("A2"), s.mode("L2"), kappa);
  const std::vector<Eigen::Index> rows = {4, 6, 0, 1, 2, 3};
  Eigen::MatrixXd c(6, 6);
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 6; ++j) c(i, j) = s.cov()(rows[i], rows[j]);
  }
  return c;
}

void cmd_timedomain(const Options& o, std::ostream& out) {
  const std::size_t runs = o.runs.value_or(2000);
  if (runs < 2) throw UsageError("--runs must be at least 2");
  if (!(o.larmor_cycles > 0.0)) throw UsageError("--larmor-cycles must be > 0");
  std::vector<double> kappas = o.kappa_list;
  if (o.kappa2) kappas = {std::sqrt(*o.kappa2)};
  if (kappas.empty()) throw UsageError("--kappa-list is empty");

  time_domain::PulseSettings base;
  base.omega_T = 2.0 * physics::kPi * o.larmor_cycles;
  base.n_steps = o.steps.value_or(static_cast<std::size_t>(
      std::ceil(o.larmor_cycles * time_domain::kMinStepsPerCycle)));
  base.pulse_ms = o.physical.pulse_ms;

  bool all_pass = true;
  out << "runs=" << runs << '\n'
      << "n_steps=" << base.n_steps << '\n'
      << "larmor_cycles=" << csv::format_real(o.larmor_cycles) << '\n'
      << "kappa,entry,time_domain,gaussian,abs_diff,tolerance,status\n";
  for (std::size_t k = 0; k < kappas.size(); ++k) {
    auto settings = base;
    settings.kappa = kappas[k];
    try {
      time_domain::PulseSimulator check(settings);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    const auto moments = time_domain::sample_joint_moments(
        settings, stream_seed(o.seed, k), runs, o.parallel);
    const auto ref = reference_covariance(settings.kappa);
    for (int i = 0; i < 6; ++i) {
      for (int j = i; j < 6; ++j) {
        const double tol =
            kCrossEngineTolerance * std::sqrt(ref(i, i) * ref(j, j));
        const double diff = std::abs(moments.cov[i][j] - ref(i, j));
        const bool pass = diff <= tol;
        all_pass = all_pass && pass;
        out << csv::format_real(settings.kappa) << ",cov(" << kMomentNames[i]
            << ' ' << kMomentNames[j] << ")," << csv::format_real(moments.cov[i][j])
            << ',' << csv::format_real(ref(i, j)) << ','
            << csv::format_real(diff) << ',' << csv::format_real(tol) << ','
            << (pass ? "pass" : "fail") << '\n';
      }
    }
    const bool drift_ok = moments.max_spin_sum_drift <= kSpinDriftTolerance;
    all_pass = all_pass && drift_ok;
    out << csv::format_real(settings.kappa) << ",spin_sum_drift,"
        << csv::format_real(moments.max_spin_sum_drift) << ",0,"
        << csv::format_real(moments.max_spin_sum_drift) << ','
        << csv::format_real(kSpinDriftTolerance) << ','
        << (drift_ok ? "pass" : "fail") << '\n';

    if (k == 0 && !o.trace.empty()) {
      auto file = open_output(o.trace);
      Rng rng = make_stream(o.seed, kappas.size());
      const time_domain::PulseSimulator sim(settings);
      const auto run =
          sim.simulate(time_domain::sample_vacuum_atoms(rng), rng, true);
      time_domain::write_trace_csv(*file, run.trace);
      finish_output(*file, o.trace);
    }
  }
  out << "overall=" << (all_pass ? "pass" : "fail") << '\n';
}

// --- protocol ---

void cmd_protocol(const Options& o, std::ostream& out) {
  protocols::ProtocolResult result;
  const double kappa2 = o.kappa2.value_or(100.0);
  if (o.protocol == "teleport") {
    protocols::TeleportParams p;
    p.input_x = o.disp_x;
    p.input_p = o.disp_p;
    p.kappa2 = kappa2;
    p.gain = o.gain;
    p.n_runs = o.runs.value_or(p.n_runs);
    p.seed = o.seed;
    p.threads = o.parallel;
    result = protocols::teleport_spin_state(p);
  } else if (o.protocol == "swap") {
    protocols::SwapParams p;
    p.kappa2 = kappa2;
    p.gain = o.gain;
    p.alice_shift_x = o.disp_x;
    p.alice_shift_p = o.disp_p;
    p.n_runs = o.runs.value_or(p.n_runs);
    p.seed = o.seed;
    p.threads = o.parallel;
    result = protocols::entanglement_swap(p);
  } else if (o.protocol == "memory") {
    protocols::MemoryParams p;
    p.light_x = o.disp_x;
    p.light_p = o.disp_p;
    p.squeeze_r = o.squeeze_r;
    p.kappa2_readout = kappa2;
    p.gain = o.gain;
    p.n_runs = o.runs.value_or(p.n_runs);
    p.seed = o.seed;
    p.threads = o.parallel;
    result = protocols::quantum_memory(p);
  } else {
    throw UsageError(fmt::format("unknown protocol '{}'", o.protocol));
  }
  std::unique_ptr<std::ofstream> file;
  if (!o.out.empty()) file = open_output(o.out);
  protocols::write_summary(out, result);
  if (file) {
    protocols::write_runs_csv(*file, result);
    finish_output(*file, o.out);
  }
}

const CLI::Validator kNonEmpty(
    [](std::string& v) { return v.empty() ? std::string("empty list entry") : std::string(); },
    "NONEMPTY");

void build_app(CLI::App& app, Options& o) {
  app.set_config("--config", "", "Read options from a key=value file");
  app.add_option("command", o.command, "calibrate | run | sweep | timedomain | protocol")
      ->required()
      ->check(CLI::IsMember(
          {"calibrate", "run", "sweep", "timedomain", "protocol"}));
  app.add_option("--save-config", o.save_config,
                 "Write the effective options to this file")
      ->configurable(false);

  auto& p = o.physical;
  app.add_option("--kappa2", o.kappa2, "Coupling strength κ² (overrides --theta-deg)");
  app.add_option("--beta", o.beta, "Atomic decay between pulses, in [0, 1]");
  app.add_option("--theta-deg", o.theta_deg, "DC Faraday angle in degrees");
  app.add_option("--power-mw", p.power_mW, "Probe power")->capture_default_str();
  app.add_option("--pulse-ms", p.pulse_ms, "Pulse duration")->capture_default_str();
  app.add_option("--detuning-mhz", p.detuning_MHz, "Probe detuning")
      ->capture_default_str();
  app.add_option("--wavelength-nm", p.wavelength_nm)->capture_default_str();
  app.add_option("--linewidth-mhz", p.linewidth_MHz)->capture_default_str();
  app.add_option("--area-cm2", p.area_eff_cm2, "Effective beam area")
      ->capture_default_str();
  app.add_option("--larmor-khz", p.larmor_kHz)->capture_default_str();
  app.add_option("--n-atoms", p.n_atoms, "Atoms per cell")->capture_default_str();

  app.add_option("--cycles", o.cycles, "Measurement cycles")->capture_default_str();
  app.add_option("--seed", o.seed)->capture_default_str();
  app.add_option("--out", o.out, "Output CSV path");
  app.add_option("--parallel", o.parallel, "Worker threads")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--electronics-noise", o.electronics_noise,
                 "Detector noise variance added per outcome")
      ->capture_default_str();
  app.add_option("--theta-list", o.theta_list, "Sweep grid in degrees")
      ->delimiter(',')
      ->check(kNonEmpty)
      ->capture_default_str();

  app.add_option("--protocol", o.protocol, "teleport | swap | memory");
  app.add_option("--gain", o.gain)->capture_default_str();
  app.add_option("--squeeze-r", o.squeeze_r, "Memory cell squeezing")
      ->capture_default_str();
  app.add_option("--disp-x", o.disp_x, "Input displacement, X")->capture_default_str();
  app.add_option("--disp-p", o.disp_p, "Input displacement, P")->capture_default_str();
  app.add_option("--runs", o.runs, "Monte Carlo repetitions");

  app.add_option("--kappa-list", o.kappa_list, "Couplings κ for timedomain")
      ->delimiter(',')
      ->check(kNonEmpty)
      ->capture_default_str();
  app.add_option("--larmor-cycles", o.larmor_cycles, "Larmor periods per pulse")
      ->capture_default_str();
  app.add_option("--steps", o.steps, "Time steps per pulse");
  app.add_option("--trace", o.trace, "Write one pulse trace CSV here");
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Simulator for measurement-induced entanglement of two atomic "
               "ensembles",
               "spinent"};
  Options o;
  build_app(app, o);
  try {
    app.parse(argc, argv);
  } catch (const CLI::FileError& e) {
    err << "error: " << e.what() << '\n';
    return kIo;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (!o.save_config.empty()) {
      auto file = open_output(o.save_config);
      *file << app.config_to_str(true, false);
      finish_output(*file, o.save_config);
    }
    if (o.command == "calibrate") {
      cmd_calibrate(o, out);
    } else if (o.command == "run") {
      cmd_run(o, out);
    } else if (o.command == "sweep") {
      cmd_sweep(o, out);
    } else if (o.command == "timedomain") {
      cmd_timedomain(o, out);
    } else {
      cmd_protocol(o, out);
    }
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kIo;
  } catch (const InvariantViolation& e) {
    err << "internal error: " << e.what() << '\n';
    return kInvariant;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kInvariant;
  }
  return kOk;
}

}  // namespace spinent::cli
