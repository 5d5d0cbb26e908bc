#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "router/device.hpp"
#include "router/pulse.hpp"
#include "router/simulate.hpp"

namespace router::cli {

inline constexpr char const *kToolVersion = "router 0.1.0";
inline constexpr char const *kDeviceEnv = "ROUTER_DEVICE";

struct GlobalOptions
{
  std::string device; // empty: $ROUTER_DEVICE
  std::uint64_t seed = 1;
  std::string out;    // empty: stdout only where that makes sense
  double tol = 1e-8;
  bool strict_deterministic = false;
  unsigned workers = 0; // 0: hardware concurrency
};

std::filesystem::path resolve_device_path(GlobalOptions const &g);

/// SHA-256 of a file, lowercase hex.
std::string file_sha256(std::filesystem::path const &path);

/// Run record. Written before any result with complete = false, rewritten with
/// artifact hashes once the run succeeds.
class RunManifest
{
public:
  RunManifest(std::filesystem::path dir, std::string command, std::string protocol,
              std::filesystem::path const &device_path, GlobalOptions const &g, nlohmann::ordered_json options);

  void begin();
  /// Registers an artifact (relative to the run directory) for hashing and cleanup.
  std::filesystem::path artifact(std::string const &name);
  void finish();
  /// Removes registered artifacts and the manifest.
  void abandon() noexcept;

private:
  void write() const;

  std::filesystem::path dir_;
  nlohmann::ordered_json doc_;
  std::vector<std::string> artifacts_;
  bool complete_ = false;
};

// ---------------------------------------------------------------- couplings

struct CouplingRow
{
  std::string c_i;
  std::string c_j;
  double g_eff_MHz;
  std::optional<double> table_gate_ns;
  double estimated_gate_ns; // 1 / (4 eta g_eff); +inf when g_eff == 0
  double gamma2_per_us;
  double fidelity;          // from the table gate time when present
};

struct CouplingTable
{
  std::vector<CouplingRow> rows;
  double best;
  double worst;
  double mean;
};

CouplingTable coupling_table(DeviceConfig const &device, double eta);
void write_coupling_csv(std::ostream &out, CouplingTable const &t);

// ---------------------------------------------------------------- protocol options

/// Options a protocol run accepts; unset fields fall back to an options file,
/// then to device defaults.
struct ProtocolArgs
{
  std::string protocol;
  std::vector<std::string> pair;
  std::optional<double> inter_ns;
  std::optional<double> pump_ns;
  std::optional<double> detuning_kHz;
  std::optional<std::string> shape;
  std::optional<double> sigma_ns;
  std::optional<bool> drag;
  std::optional<double> alpha;
  std::optional<double> measure_ns;
  std::optional<bool> frame_correction;
  std::string options_file;
  // simulation
  std::optional<bool> lossless;
  std::optional<int> cavity_dim;
  std::optional<double> sample_ns;
  std::map<std::string, double> shifts_MHz;
  // tomography
  std::optional<long> shots;
  std::optional<long> n_boot;
  std::optional<bool> readout;
};

/// Applies the options file under the flags already set.
void merge_options_file(ProtocolArgs &args);
CompileOptions compile_options(ProtocolArgs const &args);
SimulationOptions simulation_options(ProtocolArgs const &args, DeviceConfig const &device, GlobalOptions const &g);
nlohmann::ordered_json to_json(ProtocolArgs const &args);

/// "name=start:stop:steps"
SweepAxis parse_axis(std::string const &spec);
void apply_axis_value(ProtocolArgs &args, std::string const &axis, double value);

// ---------------------------------------------------------------- commands

int cmd_validate(GlobalOptions const &g);
int cmd_couplings(GlobalOptions const &g, double eta);
int cmd_compile(GlobalOptions const &g, ProtocolArgs args, std::optional<std::string> calibrate_axis);
int cmd_simulate(GlobalOptions const &g, ProtocolArgs args);
int cmd_sweep(GlobalOptions const &g, ProtocolArgs args, std::vector<std::string> const &axes);

struct LeakageArgs
{
  std::vector<std::string> pair{"C1", "C2"};
  std::string shape = "gaussian";
  std::vector<double> sigmas_ns{5, 10, 20};
  std::optional<double> duration_ns;
  std::optional<double> peak_MHz;
  double detuning_kHz = 0;
  bool stark = false;
  bool lossy = false;
};
int cmd_leakage(GlobalOptions const &g, LeakageArgs const &args);
int cmd_report(GlobalOptions const &g, std::filesystem::path const &run_dir);

/// Observables recorded for one simulated cell: the target fidelity when the
/// protocol has one, and the excited population of every register qubit.
std::vector<std::pair<std::string, double>> cell_observables(PulseSchedule const &schedule,
                                                            SimulationResult const &result);

} // namespace router::cli
