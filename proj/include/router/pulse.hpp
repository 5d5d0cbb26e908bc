#pragma once

#include <complex>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "router/device.hpp"

namespace router {

using cplx = std::complex<double>;

enum class EnvelopeShape { Constant, Gaussian, FlatTop };

std::string_view to_string(EnvelopeShape s);
EnvelopeShape parse_envelope_shape(std::string_view s);

/// Pump envelope on [0, duration]. eps_x peaks at `amplitude_MHz`;
/// eps_y = drag_us * d eps_x / dt with t in us.
///
/// Gaussian: exp(-(t - T/2)^2 / 2 sigma^2) shifted and rescaled to vanish at
/// both ends. Flat-top: the same gaussian edge over a ramp of 2 sigma at each
/// side, flat in between.
struct Envelope
{
  EnvelopeShape shape = EnvelopeShape::Constant;
  double duration_ns = 0;
  double ramp_sigma_ns = 0;
  double amplitude_MHz = 1.0;
  double drag_us = 0;

  void validate() const;
  /// Normalised in-phase shape in [0, 1].
  double shape_at(double t_ns) const;
  /// d shape / dt in 1/us.
  double shape_rate(double t_ns) const;
  double eps_x(double t_ns) const { return amplitude_MHz * shape_at(t_ns); }
  double eps_y(double t_ns) const { return amplitude_MHz * drag_us * shape_rate(t_ns); }
  /// Integral of shape_at over the window, ns (adaptive Gauss-Kronrod; exact for constant).
  double area_ns() const;
  double ramp_ns() const { return 2 * ramp_sigma_ns; }
};

struct PumpTone
{
  std::string mode_a;
  std::string mode_b;
  double pump_GHz;
  double detuning_kHz;
  Envelope envelope;
  double start_ns;
};

/// Rotating-frame term, either an exchange `strength(t) a^dag b + h.c.` or a
/// single-mode drive `strength(t) a^dag + h.c.` (mode_b empty).
struct EffectiveDriveTerm
{
  std::string mode_a;
  std::string mode_b;
  double start_ns = 0;
  Envelope envelope;
  cplx peak_MHz{};  // strength when the envelope is at its peak
  double detuning_kHz = 0;
  double frame_phase = 0;
  std::string label;

  bool is_exchange() const { return !mode_b.empty(); }
  double stop_ns() const { return start_ns + envelope.duration_ns; }
  /// peak (shape + i drag shape') exp(i 2 pi delta (t - start)); zero outside the window.
  cplx strength(double t_ns) const;
};

/// Instantaneous ideal operations between master-equation intervals.
struct InstantOp
{
  enum class Kind { PhaseZ, ConditionalX };
  Kind kind;
  double time_ns;
  std::string mode;    // target
  std::string control; // ConditionalX only: cavity whose n == 1 flips the target
  double angle = 0;    // PhaseZ: |n> -> exp(i angle n) |n>
};

enum class StepKind { RotateQubit, DisplaceCavity, IntraIswap, InterIswap, VIswap, SelectivePi, Delay, Measure };

std::string_view to_string(StepKind k);

struct SequenceStep
{
  StepKind kind = StepKind::Delay;
  double start_ns = 0;
  double duration_ns = 0;
  /// rotate: {qubit}; displace: {cavity}; intra / selective_pi: {module};
  /// inter: {c_i, c_j}; v_iswap: {source, target1, target2}; measure: qubits.
  std::vector<std::string> targets;
  char axis = 'x';
  double angle = 0;    // rotation angle, or exchange angle theta for swaps
  double exponent = 0; // theta / (pi / 2) for swaps
  cplx amplitude{};    // displacement
  double rate_MHz = 0; // peak exchange rate G for pumped / intra steps
  double detuning_kHz = 0;
  Envelope envelope;
  std::string note;

  double end_ns() const { return start_ns + duration_ns; }
  /// Physical modes occupied; pump tones on the SNAIL superpose and are not a resource.
  std::vector<std::string> resources(DeviceConfig const &device) const;
};

struct SweepAxis
{
  std::string name; // "detuning_kHz", "duration_ns", "inter_ns"
  double start;
  double stop;
  int steps;
  std::vector<double> values() const;
};

/// Ideal target over the measured register, e.g. {"01", 1/sqrt2}, {"10", 1/sqrt2}.
struct TargetState
{
  std::vector<std::string> qubits;
  std::vector<std::pair<std::string, cplx>> amplitudes;
};

struct PulseSchedule
{
  std::string protocol;
  std::string device_name;
  std::vector<SequenceStep> steps;
  double total_duration_ns = 0;
  std::vector<std::string> measured;
  std::optional<TargetState> target;
  std::vector<SweepAxis> axes;

  /// Time at which the measured state is recorded (half the measurement window),
  /// or the total duration when nothing is measured.
  double record_time_ns() const;
  /// Step boundary times, sorted and unique.
  std::vector<double> boundaries() const;
};

struct DriveResult
{
  cplx eta;
  /// SNAIL displacement z(t) = z_minus e^{-i w_p t} + z_plus e^{i w_p t} (eps in GHz units).
  cplx z_minus;
  cplx z_plus;
};

/// eta = (eps_x + i eps_y) omega_s / (omega_d^2 - omega_s^2); eps in MHz, frequencies in GHz.
DriveResult eta_from_drive(double eps_x_MHz, double eps_y_MHz, double pump_GHz, double omega_s_GHz);

/// Constant envelope: t = p / (4 G). Result in ns for G in linear MHz.
double gate_time(double exponent, double G_MHz);
/// Constant envelope, rotation angle theta: t = theta / (2 pi G).
double gate_time_for_angle(double theta, double G_MHz);
/// Shaped envelope with fixed ramp: duration solving 2 pi G_peak * area = theta.
double gate_time_for_angle(double theta, double G_MHz, Envelope const &shape);
/// Peak rate that makes 2 pi G_peak * area = theta for the given envelope.
double calibrate_peak_rate(double theta, Envelope const &envelope);

struct CompileOptions
{
  std::vector<std::string> pair;              // bell qubits, chevron module or coherent-swap cavities
  std::optional<double> inter_ns;             // full-iSWAP duration override for the main inter-module gate
  std::optional<double> pump_duration_ns;     // variable pump on-time for sweep protocols
  double detuning_kHz = 0;
  EnvelopeShape shape = EnvelopeShape::Constant;
  double ramp_sigma_ns = 0;
  bool drag = false;
  std::optional<double> coherent_amplitude;
  std::optional<double> measurement_time_ns;
  bool frame_correction = true;
  std::vector<SweepAxis> axes;
};

std::vector<std::string> protocol_names();

/// Builds, schedules (as late as possible behind the critical path) and
/// frame-corrects a named protocol.
PulseSchedule compile_protocol(std::string const &name, DeviceConfig const &device, CompileOptions const &options = {});

/// Verifies per-resource non-overlap, terminal measurement and known modes.
void check_schedule(PulseSchedule const &schedule, DeviceConfig const &device);

/// Pump tones for all pumped steps, with below-band checks.
std::vector<PumpTone> pump_tones(PulseSchedule const &schedule, DeviceConfig const &device);

struct DriveProgram
{
  std::vector<EffectiveDriveTerm> terms;
  std::vector<InstantOp> instants;
  std::vector<std::string> modes; // first-touch order
  double end_ns = 0;
};

/// Rotating-wave reduction of a schedule to effective drive terms.
DriveProgram lower_schedule(PulseSchedule const &schedule, DeviceConfig const &device);

/// eps_y = -(d eps_x / dt) / (2 pi (Delta - delta)); Delta in MHz, delta in kHz.
Envelope drag_correct(Envelope const &envelope, double Delta_MHz, double delta_kHz);

struct StarkResult
{
  double delta_kHz;
  double partner_residual; // residual of the Delta_1 + delta partner condition, MHz
};

/// Smallest-|delta| root on [-5, 5] MHz of
///   delta/2 + Re(eta)^2 g_{c1 w2}^2 / (Delta2 - delta)^2 (-Delta2 + 3 delta / 2) = 0,
/// with the residual of the partner condition
///   delta/2 + Re(eta)^2 g_{c2 w1}^2 / (Delta1 + delta)^2 (Delta1 + 3 delta / 2).
StarkResult stark_detuning(cplx eta_peak, double g_c1w2_MHz, double g_c2w1_MHz, double Delta2_MHz,
                           double Delta1_MHz);

/// Serialisation with a stable field order (JSON text).
std::string serialize_schedule(PulseSchedule const &schedule);
PulseSchedule parse_schedule(std::string const &text);

} // namespace router
