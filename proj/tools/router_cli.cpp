#include <iostream>

#include <CLI11.hpp>
#include <Eigen/Core>

#include "commands.hpp"
#include "router/error.hpp"

using namespace router::cli;

namespace {

void protocol_flags(CLI::App *cmd, ProtocolArgs &a)
{
  cmd->add_option("protocol", a.protocol, "Protocol name")->required();
  cmd->add_option("--pair", a.pair, "Qubit pair (bell), module (chevron_tuneup) or cavities (coherent_swap_sweep)")
    ->delimiter(',');
  cmd->add_option("--inter-ns", a.inter_ns, "Full-iSWAP duration of the main inter-module gate");
  cmd->add_option("--pump-ns", a.pump_ns, "Pump on-time for sweep-style protocols");
  cmd->add_option("--detuning-khz", a.detuning_kHz, "Pump detuning");
  cmd->add_option("--shape", a.shape, "Pump envelope: constant, gaussian, flat-top");
  cmd->add_option("--sigma-ns", a.sigma_ns, "Gaussian ramp width");
  cmd->add_flag("--drag{true}", a.drag, "DRAG-correct shaped pumps");
  cmd->add_option("--alpha", a.alpha, "Coherent amplitude for coherent_swap_sweep");
  cmd->add_option("--measure-ns", a.measure_ns, "Measurement window");
  cmd->add_flag("--no-frame-correction{false}", a.frame_correction, "Skip virtual-Z frame corrections");
  cmd->add_option("--options", a.options_file, "JSON options file (flags take precedence)");
}

void simulation_flags(CLI::App *cmd, ProtocolArgs &a)
{
  cmd->add_flag("--lossless{true}", a.lossless, "Drop all collapse operators");
  cmd->add_option("--cavity-dim", a.cavity_dim, "Fock truncation for every cavity");
  cmd->add_option("--sample-ns", a.sample_ns, "Extra uniform trajectory samples");
  cmd->add_option("--shift", a.shifts_MHz, "Static frame shift MODE=MHz (repeatable)");
}

} // namespace

int main(int argc, char **argv)
{
  CLI::App app{"Simulation and compilation tools for a parametric cavity router"};
  app.require_subcommand(1);
  GlobalOptions g;
  app.add_option("--device", g.device, std::string("Device description (default $") + kDeviceEnv + ")");
  app.add_option("--seed", g.seed, "Random seed");
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--tol", g.tol, "Integrator tolerance");
  app.add_flag("--strict-deterministic", g.strict_deterministic, "Single worker, fixed reduction order");
  app.add_option("--workers", g.workers, "Sweep worker count (default: available parallelism)");

  auto *validate = app.add_subcommand("validate", "Check a device description and its frequency plan");
  double eta = 0.1;
  auto *couplings = app.add_subcommand("couplings", "Effective couplings, gate times and fidelity estimates");
  couplings->add_option("--eta", eta, "Pump displacement used for estimated gate times");

  ProtocolArgs pa;
  std::optional<std::string> calibrate;
  auto *compile = app.add_subcommand("compile", "Compile a protocol to a pulse schedule");
  protocol_flags(compile, pa);
  simulation_flags(compile, pa);
  compile->add_option("--calibrate-kerr", calibrate, "Detuning sweep start:stop:steps (kHz) for Kerr calibration");

  ProtocolArgs sa;
  auto *sim = app.add_subcommand("simulate", "Compile, integrate and tomograph a protocol");
  protocol_flags(sim, sa);
  simulation_flags(sim, sa);
  sim->add_option("--shots", sa.shots, "Shots per tomography setting");
  sim->add_option("--boot", sa.n_boot, "Bootstrap resamples");
  sim->add_flag("--readout{true}", sa.readout, "Apply the device's readout errors in tomography");

  ProtocolArgs wa;
  std::vector<std::string> axes;
  auto *sweep = app.add_subcommand("sweep", "Grid sweep of a protocol");
  protocol_flags(sweep, wa);
  simulation_flags(sweep, wa);
  sweep->add_option("--axis", axes, "name=start:stop:steps (repeatable)")->required();

  LeakageArgs la;
  auto *leak = app.add_subcommand("leakage", "Waveguide leakage with and without DRAG");
  leak->add_option("--pair", la.pair, "Cavity pair")->delimiter(',');
  leak->add_option("--shape", la.shape, "gaussian or flat-top");
  leak->add_option("--sigma-ns", la.sigmas_ns, "Ramp widths")->delimiter(',');
  leak->add_option("--duration-ns", la.duration_ns, "Pulse duration");
  leak->add_option("--peak-mhz", la.peak_MHz, "Peak exchange rate");
  leak->add_option("--detuning-khz", la.detuning_kHz, "Pump detuning");
  leak->add_flag("--stark", la.stark, "Use the ac-Stark detuning");
  leak->add_flag("--lossy", la.lossy, "Include mode losses");

  std::string run;
  auto *report = app.add_subcommand("report", "Summarise a completed run directory");
  report->add_option("run_dir", run, "Run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (CLI::ParseError const &e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  if (g.strict_deterministic) Eigen::setNbThreads(1);
  try {
    if (*validate) return cmd_validate(g);
    if (*couplings) return cmd_couplings(g, eta);
    if (*compile) return cmd_compile(g, pa, calibrate);
    if (*sim) return cmd_simulate(g, sa);
    if (*sweep) return cmd_sweep(g, wa, axes);
    if (*leak) return cmd_leakage(g, la);
    if (*report) return cmd_report(g, run);
  } catch (router::Error const &e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.kind());
  } catch (std::ios_base::failure const &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (std::exception const &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
