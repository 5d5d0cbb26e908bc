#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "router/lindblad.hpp"
#include "router/pulse.hpp"

namespace router {

struct LeakageOptions
{
  /// Exchange rate at the envelope peak; default calibrates a full iSWAP over the envelope.
  std::optional<double> peak_rate_MHz;
  /// Leak coupling over exchange coupling, g_{c2 w1 s} / g_{c1 c2 s} and g_{c1 w2 s} / g_{c1 c2 s}.
  /// Default: 1 / (g/Delta) of the replaced cavity's own waveguide edge.
  std::optional<double> leak_ratio_1;
  std::optional<double> leak_ratio_2;
  bool lossless = true;
  IntegrationOptions integration;
  int samples = 400;
};

/// Frame with the pump detuning split +-delta/2 over the two cavities and the
/// waveguides offset by Delta_i = w_i - c_i:
///   H = d/2 (n_c1 - n_c2) + (d/2 + D1) n_w1 + (-d/2 + D2) n_w2
///     + G(t) [c1^dag c2 + k2 c1^dag w2 + k1 c2^dag w1] + h.c.
struct ExtendedFrameModel
{
  HilbertSpace space; // c1, c2, w1, w2
  std::string c1, c2, w1, w2;
  double delta_kHz = 0;
  double Delta1_MHz = 0;
  double Delta2_MHz = 0;
  double kappa1 = 0;
  double kappa2 = 0;
  double peak_rate_MHz = 0;
  Envelope envelope;

  double zeta1() const { return kappa1 * peak_rate_MHz / (Delta1_MHz + delta_kHz * 1e-3); }
  double zeta2() const { return kappa2 * peak_rate_MHz / (Delta2_MHz - delta_kHz * 1e-3); }
  /// Nearest leakage channel as (Delta, delta) arguments for drag_correct.
  std::pair<double, double> drag_channel() const;
  HamiltonianModel hamiltonian(Envelope const &envelope) const;
};

ExtendedFrameModel build_leakage_model(DeviceConfig const &device, PumpTone const &tone,
                                       LeakageOptions const &options = {});

struct LeakageReport
{
  double peak_w1 = 0;
  double peak_w2 = 0;
  double final_w1 = 0;
  double final_w2 = 0;
  double transfer = 0;          // c2 population at the end
  double phase_error = 0;       // |arg(<target|psi>)| against -i|c2>
  double excitation_drift = 0;  // max |N(t) - 1| (lossless)

  double peak() const { return std::max(peak_w1, peak_w2); }
  double residual() const { return final_w1 + final_w2; }
};

/// Source photon in c1; envelope replaces the model's (DRAG applied on the
/// nearest channel when requested). A vacuum reference branch is carried
/// along so the transfer phase is observable from the density matrix.
LeakageReport leakage_report(ExtendedFrameModel const &model, Envelope const &envelope, bool with_drag,
                             DeviceConfig const *device = nullptr, LeakageOptions const &options = {});

/// Header: setting,peak_leak,residual_leak,transfer_fidelity,phase_error
void write_leakage_csv(std::ostream &out, std::vector<std::pair<std::string, LeakageReport>> const &rows);

} // namespace router
