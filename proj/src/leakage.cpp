#include "router/leakage.hpp"

#include <cmath>
#include <numbers>
#include <ostream>

#include "router/error.hpp"

namespace router {

namespace {

double leak_ratio(DeviceConfig const &device, std::string const &cavity)
{
  std::string const &w = device.adjacent_waveguide(cavity);
  auto const r = hybridization_ratio(device, device.edge(cavity, w));
  if (!(r.ratio > 0)) throw DomainError("leakage: zero hybridization on " + cavity + "-" + w);
  return 1.0 / r.ratio;
}

} // namespace

std::pair<double, double> ExtendedFrameModel::drag_channel() const
{
  // c1^dag w2 sits at Delta2 - delta, c2^dag w1 at Delta1 + delta.
  double const d2 = Delta2_MHz - delta_kHz * 1e-3;
  double const d1 = Delta1_MHz + delta_kHz * 1e-3;
  if (kappa1 == 0 || (kappa2 != 0 && std::abs(d2) <= std::abs(d1))) return {Delta2_MHz, delta_kHz};
  return {Delta1_MHz, -delta_kHz};
}

HamiltonianModel ExtendedFrameModel::hamiltonian(Envelope const &env) const
{
  HamiltonianModel h(space);
  double const d = delta_kHz * 1e-3;
  h.add_frame_detuning(c1, d / 2);
  h.add_frame_detuning(c2, -d / 2);
  h.add_frame_detuning(w1, d / 2 + Delta1_MHz);
  h.add_frame_detuning(w2, -d / 2 + Delta2_MHz);
  if (peak_rate_MHz == 0) return h;
  EffectiveDriveTerm t;
  t.envelope = env;
  t.peak_MHz = peak_rate_MHz;
  auto g = [t](double s) { return t.strength(s); };
  double const T = env.duration_ns;
  h.add_exchange(c1, c2, g, 0, T, "c1^dag c2");
  if (kappa2 != 0) h.add_exchange(c1, w2, [g, k = kappa2](double s) { return k * g(s); }, 0, T, "c1^dag w2");
  if (kappa1 != 0) h.add_exchange(c2, w1, [g, k = kappa1](double s) { return k * g(s); }, 0, T, "c2^dag w1");
  return h;
}

ExtendedFrameModel build_leakage_model(DeviceConfig const &device, PumpTone const &tone, LeakageOptions const &options)
{
  auto const &a = device.mode(tone.mode_a);
  auto const &b = device.mode(tone.mode_b);
  if (a.kind != ModeKind::Cavity || b.kind != ModeKind::Cavity)
    throw DomainError("leakage: tone must address a cavity pair");
  ExtendedFrameModel m;
  m.c1 = a.id;
  m.c2 = b.id;
  m.w1 = device.adjacent_waveguide(m.c1);
  m.w2 = device.adjacent_waveguide(m.c2);
  m.space = HilbertSpace({{m.c1, 2}, {m.c2, 2}, {m.w1, 2}, {m.w2, 2}});
  m.delta_kHz = tone.detuning_kHz;
  m.Delta1_MHz = (device.mode(m.w1).frequency_GHz - a.frequency_GHz) * 1e3;
  m.Delta2_MHz = (device.mode(m.w2).frequency_GHz - b.frequency_GHz) * 1e3;
  m.kappa1 = options.leak_ratio_1.value_or(leak_ratio(device, m.c1));
  m.kappa2 = options.leak_ratio_2.value_or(leak_ratio(device, m.c2));
  m.envelope = tone.envelope;
  m.envelope.validate();
  if (tone.envelope.amplitude_MHz == 0)
    m.peak_rate_MHz = 0;
  else
    m.peak_rate_MHz = options.peak_rate_MHz.value_or(calibrate_peak_rate(std::numbers::pi / 2, m.envelope));
  return m;
}

LeakageReport leakage_report(ExtendedFrameModel const &model, Envelope const &envelope, bool with_drag,
                             DeviceConfig const *device, LeakageOptions const &options)
{
  Envelope env = envelope;
  if (with_drag) {
    auto const [D, d] = model.drag_channel();
    env = drag_correct(envelope, D, d);
  }
  env.validate();
  HamiltonianModel const h = model.hamiltonian(env);
  auto const &space = model.space;
  std::vector<CollapseOperator> collapse;
  if (!options.lossless) {
    if (!device) throw DomainError("leakage: lossy report needs the device coherence data");
    collapse = collapse_operators(*device, space);
  }

  long const vac = space.basis_index({0, 0, 0, 0});
  long const src = space.basis_index({1, 0, 0, 0});
  long const dst = space.basis_index({0, 1, 0, 0});
  long const lw1 = space.basis_index({0, 0, 1, 0});
  long const lw2 = space.basis_index({0, 0, 0, 1});
  Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(space.total_dim());
  psi(vac) = psi(src) = 1 / std::sqrt(2.0);

  int const n = std::max(options.samples, 2);
  std::vector<double> times;
  for (int i = 0; i <= n; ++i) times.push_back(env.duration_ns * i / n);
  Trajectory const tr = integrate(DensityMatrix::pure(psi), h, collapse, env.duration_ns, times, options.integration);

  LeakageReport r;
  for (auto const &s : tr.samples) {
    double const p1 = 2 * s.rho(lw1, lw1).real(), p2 = 2 * s.rho(lw2, lw2).real();
    r.peak_w1 = std::max(r.peak_w1, p1);
    r.peak_w2 = std::max(r.peak_w2, p2);
    double const total = 2 * (s.rho(src, src) + s.rho(dst, dst)).real() + p1 + p2;
    r.excitation_drift = std::max(r.excitation_drift, std::abs(total - 1));
  }
  auto const &rho = tr.final_state.rho;
  r.final_w1 = 2 * rho(lw1, lw1).real();
  r.final_w2 = 2 * rho(lw2, lw2).real();
  r.transfer = 2 * rho(dst, dst).real();
  // rho(dst, vac) = amp_dst conj(amp_vac) / 2, and the vacuum branch never moves.
  cplx const amp = 2.0 * rho(dst, vac);
  r.phase_error = std::abs(std::arg(amp * cplx(0, 1)));
  return r;
}

void write_leakage_csv(std::ostream &out, std::vector<std::pair<std::string, LeakageReport>> const &rows)
{
  out << "setting,peak_leak,residual_leak,transfer_fidelity,phase_error\n";
  out.precision(10);
  for (auto const &[name, r] : rows)
    out << name << ',' << r.peak() << ',' << r.residual() << ',' << r.transfer << ',' << r.phase_error << '\n';
}

} // namespace router
