#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "router/snail.hpp"

namespace router {

enum class ModeKind { Snail, Waveguide, Cavity, Qubit, Readout };
enum class T2Source { Ramsey, Echo, PhotonSwap, ProbeDecay };

/// Selects which measured (T1, T2) pair is used when a mode has several.
enum class CoherencePolicy { PhotonSwap, ProbeDecay, Primary };

std::string_view to_string(ModeKind k);
std::string_view to_string(T2Source s);

struct Coherence
{
  T2Source source;
  double T1_us;
  double T2_us;
};

struct ModeSpec
{
  std::string id;
  ModeKind kind;
  double frequency_GHz;
  double T1_us;
  double T2_us;
  T2Source t2_source;
  std::vector<Coherence> alternates; // other measured pairs, e.g. photon-swap for cavities
  std::optional<double> anharmonicity_MHz;
  int dim;

  /// Photon-swap / probe-decay policies fall back to the primary pair when
  /// that source was not measured for this mode.
  Coherence coherence(CoherencePolicy policy = CoherencePolicy::PhotonSwap) const;
};

struct CouplingEdge
{
  std::string mode_a;
  std::string mode_b;
  double g_MHz;
};

struct QubitModuleParams
{
  std::string id; // e.g. "M2"
  std::string qubit_id;
  std::string cavity_id;
  std::string readout_id; // may be empty
  double chi_qc_MHz;
  double measurement_fidelity;
  std::optional<double> intra_swap_time_ns; // derived when absent
};

/// Measured full-iSWAP duration for a cavity pair.
struct InterGateTime
{
  std::string c_i;
  std::string c_j;
  double iswap_ns;
};

struct PlanTolerances
{
  double mode_MHz = 1.0;
  double difference_MHz = 5.0;
  double min_spacing_MHz = 100.0;
};

/// Defaults used when compiling and simulating protocols.
struct ProtocolDefaults
{
  double measurement_time_ns = 2000.0;
  double qubit_pi_ns = 50.0;
  double intra_iswap_fidelity = 0.94; // sets derived intra-module durations
  double bell_inter_ns = 600.0;
  double parallel_inter_ns = 1300.0;
  double coherent_amplitude = 0.5;
};

struct DeviceConfig
{
  std::string name;
  std::vector<ModeSpec> modes;
  std::vector<CouplingEdge> edges;
  std::vector<QubitModuleParams> modules;
  SnailCircuit snail;
  std::optional<double> g_sss_override_MHz;
  std::vector<InterGateTime> inter_gates;
  PlanTolerances tolerances;
  ProtocolDefaults defaults;
  std::map<std::string, double> metadata; // measured-only comparison values

  ModeSpec const &mode(std::string_view id) const;
  ModeSpec const *find_mode(std::string_view id) const;
  QubitModuleParams const &module(std::string_view id) const;
  QubitModuleParams const *module_of(std::string_view mode_id) const;
  /// The waveguide adjacent to a cavity.
  std::string const &adjacent_waveguide(std::string_view cavity) const;
  CouplingEdge const &edge(std::string_view a, std::string_view b) const;
  std::optional<double> inter_gate_ns(std::string_view c_i, std::string_view c_j) const;
  std::vector<std::string> cavities() const;
  std::string const &snail_id() const;
};

/// Parses and validates a device description (JSON text).
DeviceConfig parse_device(std::string const &text);
DeviceConfig load_device(std::filesystem::path const &path);
/// Throws DomainError naming the offending field and mode.
void validate(DeviceConfig const &device);

struct PlanViolation
{
  char rule; // 'a'..'d'
  std::string detail;
  bool operator==(PlanViolation const &) const = default;
  auto operator<=>(PlanViolation const &) const = default;
};

struct PlanReport
{
  bool pass;
  std::vector<PlanViolation> violations; // sorted
  double max_pump_GHz;
  double lowest_router_mode_GHz;
};

PlanReport validate_frequency_plan(DeviceConfig const &device);

/// g / |Delta| for one edge; the sign of Delta = f_a - f_b is kept apart.
struct HybridizationRatio
{
  std::string mode_a;
  std::string mode_b;
  double ratio;
  int detuning_sign;
};

HybridizationRatio hybridization_ratio(DeviceConfig const &device, CouplingEdge const &edge);

struct EffectiveCoupling
{
  std::string c_i;
  std::string c_j;
  double g_eff_MHz;
  std::array<HybridizationRatio, 4> chain; // (c_i w_i), (w_i s), (w_j s), (c_j w_j)
};

/// g_sss from the override or, failing that, the SNAIL expansion.
double g_sss_MHz(DeviceConfig const &device);

/// 6 g_sss (g/D)_{c_i w_i} (g/D)_{w_i s} (g/D)_{w_j s} (g/D)_{c_j w_j}
EffectiveCoupling effective_cavity_coupling(DeviceConfig const &device, std::string_view c_i, std::string_view c_j);

/// T_phi from 1/T2 = 1/(2 T1) + 1/T_phi; +infinity when T2 == 2 T1.
double pure_dephasing_time(double T1_us, double T2_us);

/// (1/T2_i + 1/T2_j) / 2 in 1/us.
double averaged_decoherence_rate(DeviceConfig const &device, std::string_view a, std::string_view b,
                                 CoherencePolicy policy = CoherencePolicy::PhotonSwap);

/// 1 - Gamma2_avg T_gate, clamped to [0, 1].
double estimate_iswap_fidelity(DeviceConfig const &device, std::string_view c_i, std::string_view c_j,
                               double t_gate_ns, CoherencePolicy policy = CoherencePolicy::PhotonSwap);

double hybridized_decay_envelope(DeviceConfig const &device, std::string_view c_i, std::string_view c_j,
                                 double t_us, CoherencePolicy policy = CoherencePolicy::PhotonSwap);

/// Full intra-module iSWAP duration: configured, or (1 - F_intra) / Gamma2_avg(qubit, cavity).
double intra_swap_ns(DeviceConfig const &device, QubitModuleParams const &module);

} // namespace router
