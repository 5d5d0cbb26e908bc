#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "router/lindblad.hpp"
#include "router/pulse.hpp"

namespace router {

struct SimulationOptions
{
  IntegrationOptions integration;
  bool lossless = false;
  CoherencePolicy policy = CoherencePolicy::PhotonSwap;
  std::map<std::string, int> dims;                 // truncation overrides by mode id
  double sample_step_ns = 0;                       // extra uniform samples; 0 = step boundaries only
  std::map<std::string, double> static_shift_MHz;  // per-mode frame shifts, e.g. pump-induced Kerr
  std::vector<std::string> extra_modes;            // appended after the touched modes
  bool diagnostics = true;                         // eigen-check every sample
};

struct SimulationResult
{
  HilbertSpace space;
  Trajectory trajectory;  // samples across all integration pieces, time-ordered
  DensityMatrix recorded; // full state at the schedule's record time
  std::vector<std::string> register_modes;
  Eigen::MatrixXcd register_state; // recorded state reduced onto the measured qubits
  std::optional<double> fidelity;  // <target| register |target>
  StateDiagnostics worst{};        // max drift / residue, min eigenvalue over samples
};

/// Modes touched by the schedule in first-touch order, then `extra`; dims from the
/// device unless overridden.
HilbertSpace build_space(DeviceConfig const &device, PulseSchedule const &schedule,
                         std::vector<std::string> const &extra = {}, std::map<std::string, int> const &dims = {},
                         long cap = HilbertSpace::kDefaultCap);

/// Rotating-frame model for a lowered program on `space`.
HamiltonianModel build_model(HilbertSpace const &space, DriveProgram const &program,
                             std::map<std::string, double> const &static_shift_MHz = {});

/// Exact unitary of an instantaneous operation.
Operator instant_unitary(HilbertSpace const &space, InstantOp const &op);

/// Vacuum start, piecewise integration between instantaneous operations, state
/// recorded half-way into the measurement window.
SimulationResult simulate(PulseSchedule const &schedule, DeviceConfig const &device,
                          SimulationOptions const &options = {});

/// |target> over `qubits`, in the listed order.
Eigen::VectorXcd target_vector(TargetState const &target);

struct ToneCalibration
{
  std::string mode_a;
  std::string mode_b;
  double best_kHz;
  std::vector<double> grid_kHz;
  std::vector<double> transfer;
};

/// For every pumped pair in the schedule: single photon in the first cavity,
/// exchange step replayed at each grid detuning, population of the second
/// cavity at the end of the pulse. The optimum is refined by a parabola
/// through the best grid point and its neighbours.
std::vector<ToneCalibration> kerr_detuning_calibration(PulseSchedule const &schedule, DeviceConfig const &device,
                                                       SweepAxis const &range, SimulationOptions const &options = {});

} // namespace router
