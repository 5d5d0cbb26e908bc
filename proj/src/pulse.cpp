#include "router/pulse.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>
#include <json.hpp>

#include "router/error.hpp"

namespace router {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kHalfPi = kPi / 2;
constexpr double kDisplaceNs = 20.0;
constexpr cplx kI{0.0, 1.0};

double gauss(double x, double sigma) { return std::exp(-x * x / (2 * sigma * sigma)); }

} // namespace

// ---------------------------------------------------------------- envelopes

std::string_view to_string(EnvelopeShape s)
{
  switch (s) {
  case EnvelopeShape::Constant: return "constant";
  case EnvelopeShape::Gaussian: return "gaussian";
  case EnvelopeShape::FlatTop: return "flat-top";
  }
  return "?";
}

EnvelopeShape parse_envelope_shape(std::string_view s)
{
  for (auto k : {EnvelopeShape::Constant, EnvelopeShape::Gaussian, EnvelopeShape::FlatTop})
    if (to_string(k) == s) return k;
  throw DomainError("envelope: unknown shape '" + std::string(s) + "'");
}

void Envelope::validate() const
{
  if (!(duration_ns >= 0)) throw DomainError("envelope: duration must be non-negative");
  if (shape == EnvelopeShape::Constant) return;
  if (!(ramp_sigma_ns > 0)) throw DomainError("envelope: shaped pulses need ramp_sigma > 0");
  if (shape == EnvelopeShape::FlatTop && !(ramp_ns() < duration_ns / 2))
    throw DomainError("envelope: flat-top ramps must each occupy less than half the duration");
}

double Envelope::shape_at(double t) const
{
  if (t < 0 || t > duration_ns) return 0.0;
  switch (shape) {
  case EnvelopeShape::Constant: return 1.0;
  case EnvelopeShape::Gaussian: {
    double const g0 = gauss(duration_ns / 2, ramp_sigma_ns);
    return (gauss(t - duration_ns / 2, ramp_sigma_ns) - g0) / (1 - g0);
  }
  case EnvelopeShape::FlatTop: {
    double const r = ramp_ns();
    double const g0 = gauss(r, ramp_sigma_ns);
    double x = 0;
    if (t < r)
      x = t - r;
    else if (t > duration_ns - r)
      x = t - (duration_ns - r);
    else
      return 1.0;
    return (gauss(x, ramp_sigma_ns) - g0) / (1 - g0);
  }
  }
  return 0.0;
}

double Envelope::shape_rate(double t) const
{
  if (t < 0 || t > duration_ns) return 0.0;
  double x = 0, g0 = 0;
  switch (shape) {
  case EnvelopeShape::Constant: return 0.0;
  case EnvelopeShape::Gaussian:
    x = t - duration_ns / 2;
    g0 = gauss(duration_ns / 2, ramp_sigma_ns);
    break;
  case EnvelopeShape::FlatTop: {
    double const r = ramp_ns();
    g0 = gauss(r, ramp_sigma_ns);
    if (t < r)
      x = t - r;
    else if (t > duration_ns - r)
      x = t - (duration_ns - r);
    else
      return 0.0;
    break;
  }
  }
  double const s2 = ramp_sigma_ns * ramp_sigma_ns;
  return -x / s2 * gauss(x, ramp_sigma_ns) / (1 - g0) * 1e3;
}

double Envelope::area_ns() const
{
  if (duration_ns <= 0) return 0.0;
  if (shape == EnvelopeShape::Constant) return duration_ns;
  using boost::math::quadrature::gauss_kronrod;
  auto f = [this](double t) { return shape_at(t); };
  if (shape == EnvelopeShape::Gaussian) return gauss_kronrod<double, 31>::integrate(f, 0.0, duration_ns, 15, 1e-14);
  double const r = ramp_ns();
  double const edge = gauss_kronrod<double, 31>::integrate(f, 0.0, r, 15, 1e-14);
  return 2 * edge + (duration_ns - 2 * r);
}

cplx EffectiveDriveTerm::strength(double t_ns) const
{
  double const tau = t_ns - start_ns;
  if (tau < 0 || tau >= envelope.duration_ns) return 0.0;
  cplx const shape{envelope.shape_at(tau), envelope.drag_us * envelope.shape_rate(tau)};
  cplx s = peak_MHz * shape;
  if (detuning_kHz != 0) s *= std::exp(kI * (2 * kPi * detuning_kHz * 1e-3 * tau * 1e-3));
  return s;
}

// ---------------------------------------------------------------- drive relations

DriveResult eta_from_drive(double eps_x, double eps_y, double pump_GHz, double omega_s_GHz)
{
  if (std::abs(pump_GHz - omega_s_GHz) < 0.010) {
    std::ostringstream msg;
    msg << "pulse: pump at " << pump_GHz << " GHz is within 10 MHz of the SNAIL at " << omega_s_GHz << " GHz";
    throw DomainError(msg.str());
  }
  cplx const eps = cplx(eps_x, eps_y) * 1e-3;
  DriveResult r;
  r.eta = eps * omega_s_GHz / (pump_GHz * pump_GHz - omega_s_GHz * omega_s_GHz);
  r.z_minus = -(eps / 2.0) / (pump_GHz - omega_s_GHz);
  r.z_plus = (std::conj(eps) / 2.0) / (pump_GHz + omega_s_GHz);
  return r;
}

double gate_time(double exponent, double G_MHz)
{
  if (!(G_MHz > 0)) throw DomainError("gate_time: rate must be positive");
  return exponent / (4 * G_MHz) * 1e3;
}

double gate_time_for_angle(double theta, double G_MHz)
{
  if (!(G_MHz > 0)) throw DomainError("gate_time: rate must be positive");
  return theta / (2 * kPi * G_MHz) * 1e3;
}

double gate_time_for_angle(double theta, double G_MHz, Envelope const &shape)
{
  if (shape.shape == EnvelopeShape::Constant) return gate_time_for_angle(theta, G_MHz);
  if (!(G_MHz > 0)) throw DomainError("gate_time: rate must be positive");
  // Area grows monotonically with duration at fixed ramp; bracket then solve.
  double const target_area = theta / (2 * kPi * G_MHz) * 1e3;
  auto area_at = [&](double T) {
    Envelope e = shape;
    e.duration_ns = T;
    return e.area_ns() - target_area;
  };
  double lo = shape.shape == EnvelopeShape::FlatTop ? 2 * shape.ramp_ns() * (1 + 1e-9) : 1e-6;
  double hi = std::max(lo * 2, 2 * target_area + 4 * shape.ramp_ns());
  while (area_at(hi) < 0) hi *= 2;
  if (area_at(lo) > 0) throw DomainError("gate_time: requested angle is below the minimum shaped-pulse area");
  std::uintmax_t iters = 200;
  auto [a, b] = boost::math::tools::toms748_solve(area_at, lo, hi, boost::math::tools::eps_tolerance<double>(50),
                                                   iters);
  return 0.5 * (a + b);
}

double calibrate_peak_rate(double theta, Envelope const &envelope)
{
  double const area = envelope.area_ns();
  if (!(area > 0)) throw DomainError("pulse: envelope has zero area");
  return theta / (2 * kPi * area * 1e-3);
}

Envelope drag_correct(Envelope const &envelope, double Delta_MHz, double delta_kHz)
{
  double const denom = Delta_MHz - delta_kHz * 1e-3;
  if (std::abs(denom) < 1.0) throw DomainError("drag: |Delta - delta| below 1 MHz");
  Envelope out = envelope;
  out.drag_us = envelope.shape == EnvelopeShape::Constant ? 0.0 : -1.0 / (2 * kPi * denom);
  return out;
}

StarkResult stark_detuning(cplx eta_peak, double g12, double g21, double Delta2, double Delta1)
{
  double const r2 = std::pow(eta_peak.real(), 2);
  auto cond = [&](double d) { return d / 2 + r2 * g12 * g12 / std::pow(Delta2 - d, 2) * (-Delta2 + 1.5 * d); };
  auto partner = [&](double d) { return d / 2 + r2 * g21 * g21 / std::pow(Delta1 + d, 2) * (Delta1 + 1.5 * d); };

  if (r2 == 0) return {0.0, partner(0.0)};
  // Scan for sign changes away from the pole, keep the root of smallest magnitude.
  constexpr int kCells = 4000;
  double best = std::numeric_limits<double>::quiet_NaN();
  double prev_x = -5.0, prev = cond(prev_x);
  for (int i = 1; i <= kCells; ++i) {
    double const x = -5.0 + 10.0 * i / kCells;
    double const v = cond(x);
    bool const pole = (prev_x - Delta2) * (x - Delta2) <= 0;
    if (!pole && std::isfinite(prev) && std::isfinite(v) && ((prev <= 0) != (v <= 0))) {
      std::uintmax_t iters = 200;
      auto [a, b] = boost::math::tools::toms748_solve(cond, prev_x, x, prev, v,
                                                       boost::math::tools::eps_tolerance<double>(50), iters);
      double const root = 0.5 * (a + b);
      if (std::isnan(best) || std::abs(root) < std::abs(best)) best = root;
    }
    prev_x = x;
    prev = v;
  }
  if (std::isnan(best)) throw NumericError("stark_detuning: no root on [-5, 5] MHz");
  return {best * 1e3, partner(best)};
}

// ---------------------------------------------------------------- steps and schedules

std::string_view to_string(StepKind k)
{
  switch (k) {
  case StepKind::RotateQubit: return "rotate_qubit";
  case StepKind::DisplaceCavity: return "displace_cavity";
  case StepKind::IntraIswap: return "intra_iswap";
  case StepKind::InterIswap: return "inter_iswap";
  case StepKind::VIswap: return "v_iswap";
  case StepKind::SelectivePi: return "selective_pi";
  case StepKind::Delay: return "delay";
  case StepKind::Measure: return "measure";
  }
  return "?";
}

namespace {

StepKind parse_step_kind(std::string const &s)
{
  for (auto k : {StepKind::RotateQubit, StepKind::DisplaceCavity, StepKind::IntraIswap, StepKind::InterIswap,
                 StepKind::VIswap, StepKind::SelectivePi, StepKind::Delay, StepKind::Measure})
    if (to_string(k) == s) return k;
  throw IoError("schedule: unknown step kind '" + s + "'");
}

} // namespace

std::vector<std::string> SequenceStep::resources(DeviceConfig const &device) const
{
  switch (kind) {
  case StepKind::IntraIswap:
  case StepKind::SelectivePi: {
    auto const &m = device.module(targets.at(0));
    return {m.qubit_id, m.cavity_id};
  }
  case StepKind::Delay: return targets;
  default: return targets;
  }
}

std::vector<double> SweepAxis::values() const
{
  if (steps < 1) throw DomainError("sweep axis '" + name + "' needs at least one step");
  std::vector<double> v;
  for (int i = 0; i < steps; ++i) v.push_back(steps == 1 ? start : start + (stop - start) * i / (steps - 1));
  return v;
}

double PulseSchedule::record_time_ns() const
{
  for (auto const &s : steps)
    if (s.kind == StepKind::Measure) return s.start_ns + s.duration_ns / 2;
  return total_duration_ns;
}

std::vector<double> PulseSchedule::boundaries() const
{
  std::vector<double> b{0.0};
  for (auto const &s : steps) {
    b.push_back(s.start_ns);
    b.push_back(s.end_ns());
  }
  std::sort(b.begin(), b.end());
  b.erase(std::unique(b.begin(), b.end(), [](double x, double y) { return std::abs(x - y) < 1e-9; }), b.end());
  return b;
}

namespace {

// ---------------------------------------------------------------- ideal branch tracker

/// Ideal evolution of the computational branches; used only to find the
/// virtual-Z frame corrections that map the protocol output onto its target.
class BranchTracker
{
public:
  using Occupation = std::vector<int>;

  explicit BranchTracker(DeviceConfig const &d)
    : device_(d)
  {
    amp_[{}] = 1.0;
  }

  int index(std::string const &mode)
  {
    auto it = std::find(modes_.begin(), modes_.end(), mode);
    if (it != modes_.end()) return static_cast<int>(it - modes_.begin());
    modes_.push_back(mode);
    std::map<Occupation, cplx> next;
    for (auto &[occ, a] : amp_) {
      Occupation o = occ;
      o.push_back(0);
      next[o] = a;
    }
    amp_ = std::move(next);
    return static_cast<int>(modes_.size()) - 1;
  }

  void rotate(std::string const &q, char axis, double theta)
  {
    int const k = index(q);
    if (axis == 'z') {
      phase(q, theta);
      return;
    }
    double const c = std::cos(theta / 2), s = std::sin(theta / 2);
    // R_x = [[c, -i s], [-i s, c]], R_y = [[c, -s], [s, c]]
    Eigen::Matrix2cd u;
    if (axis == 'x')
      u << c, -kI * s, -kI * s, c;
    else
      u << c, -s, s, c;
    apply_local(k, u);
  }

  void phase(std::string const &mode, double angle)
  {
    int const k = index(mode);
    for (auto &[occ, a] : amp_) a *= std::exp(kI * angle * double(occ[k]));
  }

  void cond_x(std::string const &q, std::string const &c)
  {
    int const kq = index(q), kc = index(c);
    std::map<Occupation, cplx> next;
    for (auto const &[occ, a] : amp_) {
      Occupation o = occ;
      if (o[kc] == 1) {
        if (o[kq] > 1) throw DomainError("frame tracker: conditional flip outside the qubit subspace");
        o[kq] = 1 - o[kq];
      }
      next[o] += a;
    }
    amp_ = std::move(next);
  }

  /// exp(-i theta sum_t (s^dag t + s t^dag)) on the single-excitation sector of {source, targets}.
  void exchange(std::string const &source, std::vector<std::string> const &targets, double theta)
  {
    std::vector<int> ks{index(source)};
    for (auto const &t : targets) ks.push_back(index(t));
    int const m = static_cast<int>(ks.size());
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(m, m);
    for (int j = 1; j < m; ++j) h(0, j) = h(j, 0) = 1.0;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
    Eigen::VectorXcd ph(m);
    for (int j = 0; j < m; ++j) ph(j) = std::exp(-kI * theta * es.eigenvalues()(j));
    Eigen::MatrixXcd const u = es.eigenvectors().cast<cplx>() * ph.asDiagonal() * es.eigenvectors().transpose();

    std::map<Occupation, cplx> next;
    for (auto const &[occ, a] : amp_) {
      int total = 0, where = -1;
      for (int j = 0; j < m; ++j) {
        total += occ[ks[j]];
        if (occ[ks[j]] == 1) where = j;
      }
      if (total == 0) {
        next[occ] += a;
        continue;
      }
      if (total > 1) throw DomainError("frame tracker: multi-excitation branch in an exchange");
      for (int j = 0; j < m; ++j) {
        Occupation o = occ;
        for (int l = 0; l < m; ++l) o[ks[l]] = 0;
        o[ks[j]] = 1;
        next[o] += u(j, where) * a;
      }
    }
    amp_ = std::move(next);
  }

  /// The single nonzero branch where the listed modes carry `bits`, with the
  /// remaining modes' occupation returned in `rest`. Empty when there is no
  /// such branch or more than one (the register would not be pure).
  std::optional<cplx> amplitude(std::vector<std::string> const &qubits, std::string const &bits, Occupation &rest) const
  {
    std::vector<int> pos;
    for (auto const &q : qubits) {
      auto it = std::find(modes_.begin(), modes_.end(), q);
      pos.push_back(it == modes_.end() ? -1 : static_cast<int>(it - modes_.begin()));
    }
    std::optional<cplx> found;
    for (auto const &[occ, a] : amp_) {
      if (std::abs(a) < 1e-9) continue;
      bool match = true;
      for (std::size_t j = 0; j < qubits.size() && match; ++j)
        match = (pos[j] < 0 ? 0 : occ[pos[j]]) == bits[j] - '0';
      if (!match) continue;
      if (found) return std::nullopt;
      found = a;
      rest = occ;
      for (int p : pos)
        if (p >= 0) rest[p] = 0;
    }
    return found;
  }

private:
  void apply_local(int k, Eigen::Matrix2cd const &u)
  {
    std::map<Occupation, cplx> next;
    for (auto const &[occ, a] : amp_) {
      if (occ[k] > 1) throw DomainError("frame tracker: rotation outside the qubit subspace");
      for (int out = 0; out < 2; ++out) {
        Occupation o = occ;
        o[k] = out;
        next[o] += u(out, occ[k]) * a;
      }
    }
    amp_ = std::move(next);
  }

  DeviceConfig const &device_;
  std::vector<std::string> modes_;
  std::map<Occupation, cplx> amp_;
};

void track_step(BranchTracker &tr, SequenceStep const &s, DeviceConfig const &d)
{
  switch (s.kind) {
  case StepKind::RotateQubit: tr.rotate(s.targets[0], s.axis, s.angle); break;
  case StepKind::IntraIswap: {
    auto const &m = d.module(s.targets[0]);
    tr.exchange(m.qubit_id, {m.cavity_id}, s.angle);
    break;
  }
  case StepKind::InterIswap: tr.exchange(s.targets[0], {s.targets[1]}, s.angle); break;
  case StepKind::VIswap: tr.exchange(s.targets[0], {s.targets[1], s.targets[2]}, s.angle); break;
  case StepKind::SelectivePi: {
    auto const &m = d.module(s.targets[0]);
    tr.cond_x(m.qubit_id, m.cavity_id);
    break;
  }
  case StepKind::DisplaceCavity: throw DomainError("frame tracker: displacements are not tracked");
  case StepKind::Delay:
  case StepKind::Measure: break;
  }
}

/// Per-qubit phases phi_k with sum_k b_k phi_k + c = arg(target_b / actual_b) for every
/// target branch b (c a free global phase). Min-norm least squares; empty if inconsistent.
std::optional<std::vector<double>> frame_corrections(BranchTracker const &tr, TargetState const &target)
{
  int const n = static_cast<int>(target.qubits.size());
  int const rows = static_cast<int>(target.amplitudes.size());
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(rows, n + 1);
  Eigen::VectorXd rhs(rows);
  BranchTracker::Occupation first_rest;
  for (int r = 0; r < rows; ++r) {
    auto const &[bits, want] = target.amplitudes[r];
    BranchTracker::Occupation rest;
    auto const have_opt = tr.amplitude(target.qubits, bits, rest);
    if (!have_opt) return std::nullopt;
    if (r == 0)
      first_rest = rest;
    else if (rest != first_rest)
      return std::nullopt; // spectator modes entangled with the register
    cplx const have = *have_opt;
    for (int k = 0; k < n; ++k) A(r, k) = bits[k] == '1' ? 1.0 : 0.0;
    A(r, n) = 1.0;
    rhs(r) = std::arg(want / have);
  }
  Eigen::VectorXd x = A.completeOrthogonalDecomposition().solve(rhs);
  if ((A * x - rhs).norm() > 1e-9) return std::nullopt;
  return std::vector<double>(x.data(), x.data() + n);
}

// ---------------------------------------------------------------- protocol builder

struct Builder
{
  DeviceConfig const &d;
  CompileOptions const &o;
  std::vector<SequenceStep> steps;

  double full_inter_ns(std::string const &a, std::string const &b) const
  {
    auto t = d.inter_gate_ns(a, b);
    if (!t) throw DomainError("compile: missing gate-time calibration entry for " + a + "-" + b);
    return *t;
  }

  void rotate(std::string const &q, char axis, double theta)
  {
    SequenceStep s;
  s.kind = StepKind::RotateQubit;
    s.targets = {q};
    s.axis = axis;
    s.angle = theta;
    s.duration_ns = axis == 'z' ? 0.0 : d.defaults.qubit_pi_ns * std::abs(theta) / kPi;
    steps.push_back(s);
  }

  void displace(std::string const &c, cplx alpha)
  {
    SequenceStep s;
  s.kind = StepKind::DisplaceCavity;
    s.targets = {c};
    s.amplitude = alpha;
    s.duration_ns = kDisplaceNs;
    steps.push_back(s);
  }

  /// Intra-module exchange by angle theta at the module's calibrated full-swap rate.
  void intra(std::string const &module, double theta, std::string note = {})
  {
    auto const &m = d.module(module);
    double const full = intra_swap_ns(d, m);
    SequenceStep s;
  s.kind = StepKind::IntraIswap;
    s.targets = {module};
    s.angle = theta;
    s.exponent = theta / kHalfPi;
    s.rate_MHz = 1.0 / (4 * full * 1e-3);
    s.duration_ns = gate_time_for_angle(theta, s.rate_MHz);
    s.envelope = {EnvelopeShape::Constant, s.duration_ns, 0, 1.0, 0};
    s.note = std::move(note);
    steps.push_back(s);
  }

  Envelope pump_envelope(std::string const &a, std::string const &b) const
  {
    Envelope e{o.shape, 0, o.ramp_sigma_ns, 1.0, 0};
    if (o.drag && o.shape != EnvelopeShape::Constant) {
      // Correct against the nearer of the two leakage channels.
      double const D_a = (d.mode(d.adjacent_waveguide(a)).frequency_GHz - d.mode(a).frequency_GHz) * 1e3;
      double const D_b = (d.mode(d.adjacent_waveguide(b)).frequency_GHz - d.mode(b).frequency_GHz) * 1e3;
      if (std::abs(D_b) <= std::abs(D_a))
        e = drag_correct(e, D_b, o.detuning_kHz);
      else
        e = drag_correct(e, D_a, -o.detuning_kHz);
    }
    return e;
  }

  /// Pumped exchange. `full_ns` fixes the peak rate G = 1/(4 full); `on_ns`,
  /// when given, fixes the pump on-time instead of the angle.
  void inter(std::string const &a, std::string const &b, double theta, double full_ns, std::optional<double> on_ns = {},
             std::string note = {})
  {
    SequenceStep s;
  s.kind = StepKind::InterIswap;
    s.targets = {a, b};
    s.detuning_kHz = o.detuning_kHz;
    double const G = 1.0 / (4 * full_ns * 1e-3);
    s.envelope = pump_envelope(a, b);
    if (on_ns) {
      s.envelope.duration_ns = *on_ns;
      s.envelope.validate();
      s.rate_MHz = G;
      s.angle = 2 * kPi * G * s.envelope.area_ns() * 1e-3;
    } else {
      s.envelope.duration_ns = gate_time_for_angle(theta, G, s.envelope);
      s.envelope.validate();
      s.rate_MHz = calibrate_peak_rate(theta, s.envelope);
      s.angle = theta;
    }
    s.duration_ns = s.envelope.duration_ns;
    s.exponent = s.angle / kHalfPi;
    s.note = std::move(note);
    steps.push_back(s);
  }

  /// Two equal-rate tones from one source; the slower pair sets the common rate.
  void v_iswap(std::string const &src, std::string const &t1, std::string const &t2)
  {
    double const full = std::max(full_inter_ns(src, t1), full_inter_ns(src, t2));
    double const G = 1.0 / (4 * full * 1e-3);
    SequenceStep s;
    s.kind = StepKind::VIswap;
    s.targets = {src, t1, t2};
    s.rate_MHz = G;
    s.detuning_kHz = o.detuning_kHz;
    // Bright-mode rate sqrt(2) G: the source empties at 2 pi sqrt(2) G t = pi / 2.
    s.duration_ns = 1.0 / (4 * std::sqrt(2.0) * G) * 1e3;
    s.angle = 2 * kPi * G * s.duration_ns * 1e-3;
    s.exponent = s.angle / kHalfPi;
    s.envelope = {EnvelopeShape::Constant, s.duration_ns, 0, 1.0, 0};
    steps.push_back(s);
  }

  void selective_pi(std::string const &module)
  {
    auto const &m = d.module(module);
    if (!(std::abs(m.chi_qc_MHz) > 0)) throw DomainError("compile: selective pi needs a nonzero chi in " + module);
    SequenceStep s;
  s.kind = StepKind::SelectivePi;
    s.targets = {module};
    s.angle = kPi;
    s.duration_ns = 1.0 / std::abs(m.chi_qc_MHz) * 1e3;
    steps.push_back(s);
  }

  void measure(std::vector<std::string> qubits)
  {
    SequenceStep s;
  s.kind = StepKind::Measure;
    s.targets = std::move(qubits);
    s.duration_ns = o.measurement_time_ns.value_or(d.defaults.measurement_time_ns);
    steps.push_back(s);
  }
};

/// Global as-late-as-possible placement: the total duration comes from the
/// as-soon-as-possible critical path, then every step is pushed to the latest
/// start that still precedes its successors on shared resources.
double schedule_alap(std::vector<SequenceStep> &steps, DeviceConfig const &d)
{
  std::size_t const n = steps.size();
  std::vector<std::vector<std::string>> res(n);
  for (std::size_t i = 0; i < n; ++i) res[i] = steps[i].resources(d);
  auto shares = [&](std::size_t i, std::size_t j) {
    for (auto const &a : res[i])
      if (std::find(res[j].begin(), res[j].end(), a) != res[j].end()) return true;
    return false;
  };

  double total = 0;
  std::vector<double> asap_end(n);
  for (std::size_t i = 0; i < n; ++i) {
    double start = 0;
    for (std::size_t j = 0; j < i; ++j)
      if (shares(i, j)) start = std::max(start, asap_end[j]);
    asap_end[i] = start + steps[i].duration_ns;
    total = std::max(total, asap_end[i]);
  }
  for (std::size_t i = n; i-- > 0;) {
    double end = total;
    for (std::size_t j = i + 1; j < n; ++j)
      if (shares(i, j)) end = std::min(end, steps[j].start_ns);
    double const start = end - steps[i].duration_ns;
    steps[i].start_ns = std::abs(start) < 1e-9 ? 0.0 : start;
  }
  return total;
}

TargetState bell_target(std::string const &qa, std::string const &qb)
{
  double const r = 1 / std::sqrt(2.0);
  return {{qa, qb}, {{"01", r}, {"10", r}}};
}

} // namespace

std::vector<std::string> protocol_names()
{
  return {"coherent_swap_sweep", "fock_transfer", "bell", "parallel_swap", "parallel_bell",
          "v_swap_w_state", "ghz", "chevron_tuneup"};
}

PulseSchedule compile_protocol(std::string const &name, DeviceConfig const &d, CompileOptions const &o)
{
  Builder b{d, o, {}};
  PulseSchedule out;
  out.protocol = name;
  out.device_name = d.name;
  out.axes = o.axes;
  auto cavity_of = [&](std::string const &q) -> std::string const & {
    auto const *m = d.module_of(q);
    if (!m) throw DomainError("compile: " + q + " is not a module qubit");
    return m->cavity_id;
  };
  auto module_id = [&](std::string const &mode) -> std::string const & {
    auto const *m = d.module_of(mode);
    if (!m) throw DomainError("compile: " + mode + " belongs to no module");
    return m->id;
  };

  if (name == "coherent_swap_sweep") {
    std::string const src = o.pair.size() == 2 ? o.pair[0] : "C4";
    std::string const dst = o.pair.size() == 2 ? o.pair[1] : "C2";
    double const full = b.full_inter_ns(src, dst);
    double const alpha = o.coherent_amplitude.value_or(d.defaults.coherent_amplitude);
    b.displace(src, alpha);
    b.inter(dst, src, 0, full, o.pump_duration_ns.value_or(3000.0));
  } else if (name == "fock_transfer") {
    double const full = b.full_inter_ns("C2", "C4");
    b.rotate("Q2", 'x', kPi);
    b.intra("M2", kHalfPi);
    b.inter("C2", "C4", kHalfPi, o.inter_ns.value_or(full), o.pump_duration_ns);
    b.intra("M2", kHalfPi);
    b.intra("M4", kHalfPi);
    b.measure({"Q2", "Q4"});
  } else if (name == "bell") {
    std::string const qa = o.pair.size() == 2 ? o.pair[0] : "Q2";
    std::string const qb = o.pair.size() == 2 ? o.pair[1] : "Q4";
    std::string const &ca = cavity_of(qa), &cb = cavity_of(qb);
    b.full_inter_ns(ca, cb); // the pair must be calibrated even when the duration is overridden
    b.rotate(qa, 'x', kPi);
    b.intra(module_id(qa), kHalfPi / 2);
    b.inter(ca, cb, kHalfPi, o.inter_ns.value_or(d.defaults.bell_inter_ns));
    b.intra(module_id(qb), kHalfPi);
    b.measure({qa, qb});
    out.target = bell_target(qa, qb);
  } else if (name == "parallel_swap") {
    double const t = o.inter_ns.value_or(d.defaults.parallel_inter_ns);
    b.full_inter_ns("C2", "C4");
    b.full_inter_ns("C3", "C1");
    b.rotate("Q2", 'x', kPi);
    b.rotate("Q3", 'x', kPi);
    b.intra("M2", kHalfPi);
    b.intra("M3", kHalfPi);
    b.inter("C2", "C4", kHalfPi, t, o.pump_duration_ns);
    b.inter("C3", "C1", kHalfPi, t, o.pump_duration_ns);
    b.intra("M2", kHalfPi);
    b.intra("M4", kHalfPi);
    b.intra("M3", kHalfPi);
    b.measure({"Q2", "Q3", "Q4"});
  } else if (name == "parallel_bell") {
    double const t = o.inter_ns.value_or(d.defaults.parallel_inter_ns);
    b.full_inter_ns("C2", "C4");
    b.full_inter_ns("C3", "C1");
    b.rotate("Q2", 'x', kPi);
    b.intra("M2", kHalfPi / 2);
    b.inter("C2", "C4", kHalfPi, t);
    b.intra("M4", kHalfPi);
    b.rotate("Q3", 'x', kPi);
    b.intra("M3", kHalfPi);
    b.inter("C3", "C1", kHalfPi, t);
    b.measure({"Q2", "Q4"});
    out.target = bell_target("Q2", "Q4");
  } else if (name == "v_swap_w_state") {
    b.rotate("Q2", 'x', kPi);
    b.intra("M2", std::atan(std::sqrt(2.0)), "2/3");
    b.v_iswap("C2", "C3", "C4");
    b.intra("M3", kHalfPi);
    b.intra("M4", kHalfPi);
    b.measure({"Q2", "Q3", "Q4"});
    double const r = 1 / std::sqrt(3.0);
    out.target = TargetState{{"Q2", "Q3", "Q4"}, {{"100", r}, {"010", r}, {"001", r}}};
  } else if (name == "ghz") {
    b.rotate("Q2", 'x', kPi);
    b.intra("M2", kHalfPi / 2);
    b.inter("C2", "C3", kHalfPi, b.full_inter_ns("C2", "C3"));
    b.selective_pi("M3");
    b.rotate("Q2", 'x', kPi);
    b.inter("C3", "C4", kHalfPi, b.full_inter_ns("C3", "C4"));
    b.intra("M4", kHalfPi);
    b.measure({"Q2", "Q3", "Q4"});
    double const r = 1 / std::sqrt(2.0);
    out.target = TargetState{{"Q2", "Q3", "Q4"}, {{"000", r}, {"111", r}}};
  } else if (name == "chevron_tuneup") {
    std::string const module = o.pair.size() == 1 ? o.pair[0] : "M2";
    auto const &m = d.module(module);
    double const full = intra_swap_ns(d, m);
    b.rotate(m.qubit_id, 'x', kPi);
    double const on = o.pump_duration_ns.value_or(full);
    SequenceStep s;
    s.kind = StepKind::IntraIswap;
    s.targets = {module};
    s.rate_MHz = 1.0 / (4 * full * 1e-3);
    s.duration_ns = on;
    s.detuning_kHz = o.detuning_kHz;
    s.angle = 2 * kPi * s.rate_MHz * on * 1e-3;
    s.exponent = s.angle / kHalfPi;
    s.envelope = {EnvelopeShape::Constant, on, 0, 1.0, 0};
    b.steps.push_back(s);
    b.measure({m.qubit_id});
  } else {
    throw DomainError("compile: unknown protocol '" + name + "'");
  }

  out.total_duration_ns = schedule_alap(b.steps, d);
  std::stable_sort(b.steps.begin(), b.steps.end(),
                   [](SequenceStep const &x, SequenceStep const &y) { return x.start_ns < y.start_ns; });
  out.steps = std::move(b.steps);
  for (auto const &s : out.steps)
    if (s.kind == StepKind::Measure) out.measured = s.targets;

  if (out.target && o.frame_correction && o.detuning_kHz == 0) {
    BranchTracker tr(d);
    for (auto const &s : out.steps) track_step(tr, s, d);
    if (auto phis = frame_corrections(tr, *out.target)) {
      auto measure_it = std::find_if(out.steps.begin(), out.steps.end(),
                                     [](SequenceStep const &s) { return s.kind == StepKind::Measure; });
      double const at = measure_it->start_ns;
      std::vector<SequenceStep> frame;
      for (std::size_t k = 0; k < phis->size(); ++k) {
        double phi = std::remainder((*phis)[k], 2 * kPi);
        if (std::abs(phi) < 1e-12) continue;
        SequenceStep z;
  z.kind = StepKind::RotateQubit;
        z.targets = {out.target->qubits[k]};
        z.axis = 'z';
        z.angle = phi;
        z.start_ns = at;
        z.note = "frame";
        frame.push_back(z);
      }
      out.steps.insert(measure_it, frame.begin(), frame.end());
    }
  }
  check_schedule(out, d);
  return out;
}

void check_schedule(PulseSchedule const &sched, DeviceConfig const &d)
{
  std::map<std::string, std::vector<std::pair<double, double>>> busy;
  std::map<std::string, double> measured_at;
  double max_end = 0;
  for (auto const &s : sched.steps) {
    if (s.duration_ns < 0) throw DomainError("schedule: negative step duration");
    for (auto const &t : s.targets) {
      bool const known = (s.kind == StepKind::IntraIswap || s.kind == StepKind::SelectivePi) ? d.module_of(t) != nullptr ||
                                                                                                  [&] {
                                                                                                    for (auto const &m : d.modules)
                                                                                                      if (m.id == t) return true;
                                                                                                    return false;
                                                                                                  }()
                                                                                            : d.find_mode(t) != nullptr;
      if (!known) throw DomainError("schedule: step " + std::string(to_string(s.kind)) + " references unknown '" + t + "'");
    }
    for (auto const &r : s.resources(d)) {
      auto it = measured_at.find(r);
      if (it != measured_at.end() && s.start_ns >= it->second - 1e-9)
        throw DomainError("schedule: " + r + " used after its measurement");
      if (s.duration_ns > 0) {
        for (auto const &[a, b] : busy[r])
          if (s.start_ns < b - 1e-9 && a < s.end_ns() - 1e-9)
            throw DomainError("schedule: overlapping steps on " + r);
        busy[r].push_back({s.start_ns, s.end_ns()});
      }
    }
    if (s.kind == StepKind::Measure)
      for (auto const &q : s.targets) measured_at[q] = s.start_ns;
    max_end = std::max(max_end, s.end_ns());
  }
  if (std::abs(max_end - sched.total_duration_ns) > 1e-6)
    throw DomainError("schedule: total duration does not match the last step end");
}

std::vector<PumpTone> pump_tones(PulseSchedule const &sched, DeviceConfig const &d)
{
  double lowest = std::numeric_limits<double>::infinity();
  for (auto const &m : d.modes)
    if (m.kind == ModeKind::Cavity || m.kind == ModeKind::Waveguide || m.kind == ModeKind::Snail)
      lowest = std::min(lowest, m.frequency_GHz);
  std::vector<PumpTone> out;
  auto add = [&](std::string const &a, std::string const &b, SequenceStep const &s) {
    double const f = std::abs(d.mode(a).frequency_GHz - d.mode(b).frequency_GHz) + s.detuning_kHz * 1e-6;
    if (!(f > 0)) throw DomainError("pump: non-positive pump frequency for " + a + "-" + b);
    if (!(f + std::abs(s.detuning_kHz) * 1e-6 < lowest))
      throw DomainError("pump: tone for " + a + "-" + b + " is not below the lowest router mode");
    Envelope e = s.envelope;
    out.push_back({a, b, f, s.detuning_kHz, e, s.start_ns});
  };
  for (auto const &s : sched.steps) {
    if (s.kind == StepKind::InterIswap) add(s.targets[0], s.targets[1], s);
    if (s.kind == StepKind::VIswap) {
      add(s.targets[0], s.targets[1], s);
      add(s.targets[0], s.targets[2], s);
    }
  }
  return out;
}

DriveProgram lower_schedule(PulseSchedule const &sched, DeviceConfig const &d)
{
  DriveProgram p;
  auto touch = [&](std::string const &m) {
    if (std::find(p.modes.begin(), p.modes.end(), m) == p.modes.end()) p.modes.push_back(m);
  };
  auto exchange = [&](std::string const &a, std::string const &b, SequenceStep const &s, std::string label) {
    EffectiveDriveTerm t;
    t.mode_a = a;
    t.mode_b = b;
    t.start_ns = s.start_ns;
    t.envelope = s.envelope;
    t.envelope.duration_ns = s.duration_ns;
    t.peak_MHz = s.rate_MHz;
    t.detuning_kHz = s.detuning_kHz;
    t.frame_phase = -kHalfPi + 2 * kPi * s.detuning_kHz * 1e-3 * s.duration_ns * 1e-3;
    t.label = std::move(label);
    p.terms.push_back(t);
  };
  auto single = [&](std::string const &mode, SequenceStep const &s, cplx peak, std::string label) {
    EffectiveDriveTerm t;
    t.mode_a = mode;
    t.start_ns = s.start_ns;
    t.envelope = {EnvelopeShape::Constant, s.duration_ns, 0, 1.0, 0};
    t.peak_MHz = peak;
    t.label = std::move(label);
    p.terms.push_back(t);
  };

  for (auto const &s : sched.steps) {
    switch (s.kind) {
    case StepKind::RotateQubit: {
      auto const &q = s.targets[0];
      touch(q);
      if (s.axis == 'z') {
        p.instants.push_back({InstantOp::Kind::PhaseZ, s.start_ns, q, {}, s.angle});
        break;
      }
      if (s.duration_ns <= 0) throw DomainError("lower: finite rotation needs a duration");
      // 2 pi (W a^dag + h.c.) on a two-level mode is a rotation by 4 pi |W| t.
      double const w = s.angle / (4 * kPi * s.duration_ns * 1e-3);
      single(q, s, s.axis == 'x' ? cplx(w) : cplx(0, -w), "rot " + q);
      break;
    }
    case StepKind::DisplaceCavity: {
      auto const &c = s.targets[0];
      touch(c);
      int const dim = d.mode(c).dim;
      if (std::norm(s.amplitude) > dim / 4.0)
        throw DomainError("lower: |alpha|^2 exceeds dim/4 for " + c + ", raise its truncation");
      single(c, s, kI * s.amplitude / (2 * kPi * s.duration_ns * 1e-3), "disp " + c);
      break;
    }
    case StepKind::IntraIswap: {
      auto const &m = d.module(s.targets[0]);
      touch(m.qubit_id);
      touch(m.cavity_id);
      exchange(m.qubit_id, m.cavity_id, s, "intra " + m.id);
      break;
    }
    case StepKind::InterIswap:
      touch(s.targets[0]);
      touch(s.targets[1]);
      exchange(s.targets[0], s.targets[1], s, "inter " + s.targets[0] + s.targets[1]);
      break;
    case StepKind::VIswap:
      for (auto const &m : s.targets) touch(m);
      exchange(s.targets[0], s.targets[1], s, "v " + s.targets[0] + s.targets[1]);
      exchange(s.targets[0], s.targets[2], s, "v " + s.targets[0] + s.targets[2]);
      break;
    case StepKind::SelectivePi: {
      auto const &m = d.module(s.targets[0]);
      touch(m.qubit_id);
      touch(m.cavity_id);
      p.instants.push_back(
        {InstantOp::Kind::ConditionalX, s.start_ns + s.duration_ns / 2, m.qubit_id, m.cavity_id, kPi});
      break;
    }
    case StepKind::Delay: break;
    case StepKind::Measure:
      for (auto const &q : s.targets) touch(q);
      break;
    }
  }
  std::stable_sort(p.instants.begin(), p.instants.end(),
                   [](InstantOp const &a, InstantOp const &b) { return a.time_ns < b.time_ns; });
  p.end_ns = sched.record_time_ns();
  return p;
}

// ---------------------------------------------------------------- serialisation

namespace {

using ojson = nlohmann::ordered_json;

ojson envelope_json(Envelope const &e)
{
  ojson j;
  j["shape"] = std::string(to_string(e.shape));
  j["duration_ns"] = e.duration_ns;
  j["ramp_sigma_ns"] = e.ramp_sigma_ns;
  j["amplitude_MHz"] = e.amplitude_MHz;
  j["drag_us"] = e.drag_us;
  return j;
}

Envelope envelope_from(ojson const &j)
{
  Envelope e;
  e.shape = parse_envelope_shape(j.at("shape").get<std::string>());
  e.duration_ns = j.at("duration_ns").get<double>();
  e.ramp_sigma_ns = j.at("ramp_sigma_ns").get<double>();
  e.amplitude_MHz = j.at("amplitude_MHz").get<double>();
  e.drag_us = j.at("drag_us").get<double>();
  return e;
}

} // namespace

std::string serialize_schedule(PulseSchedule const &s)
{
  ojson j;
  j["format"] = "router-schedule/1";
  j["protocol"] = s.protocol;
  j["device"] = s.device_name;
  j["total_duration_ns"] = s.total_duration_ns;
  j["measured"] = s.measured;
  if (s.target) {
    ojson t;
    t["qubits"] = s.target->qubits;
    ojson amps = ojson::array();
    for (auto const &[bits, a] : s.target->amplitudes) amps.push_back({bits, a.real(), a.imag()});
    t["amplitudes"] = amps;
    j["target"] = t;
  }
  ojson axes = ojson::array();
  for (auto const &a : s.axes) axes.push_back({{"name", a.name}, {"start", a.start}, {"stop", a.stop}, {"steps", a.steps}});
  j["axes"] = axes;
  ojson steps = ojson::array();
  for (auto const &st : s.steps) {
    ojson js;
    js["kind"] = std::string(to_string(st.kind));
    js["start_ns"] = st.start_ns;
    js["duration_ns"] = st.duration_ns;
    js["targets"] = st.targets;
    js["axis"] = std::string(1, st.axis);
    js["angle"] = st.angle;
    js["exponent"] = st.exponent;
    js["amplitude"] = {st.amplitude.real(), st.amplitude.imag()};
    js["rate_MHz"] = st.rate_MHz;
    js["detuning_kHz"] = st.detuning_kHz;
    js["envelope"] = envelope_json(st.envelope);
    js["note"] = st.note;
    steps.push_back(js);
  }
  j["steps"] = steps;
  return j.dump(2) + "\n";
}

PulseSchedule parse_schedule(std::string const &text)
{
  ojson j;
  try {
    j = ojson::parse(text);
  } catch (ojson::parse_error const &e) {
    throw IoError(std::string("schedule: parse error: ") + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != "router-schedule/1") throw IoError("schedule: unsupported format");
    PulseSchedule s;
    s.protocol = j.at("protocol").get<std::string>();
    s.device_name = j.at("device").get<std::string>();
    s.total_duration_ns = j.at("total_duration_ns").get<double>();
    s.measured = j.at("measured").get<std::vector<std::string>>();
    if (j.contains("target")) {
      TargetState t;
      t.qubits = j["target"].at("qubits").get<std::vector<std::string>>();
      for (auto const &a : j["target"].at("amplitudes"))
        t.amplitudes.push_back({a.at(0).get<std::string>(), cplx(a.at(1).get<double>(), a.at(2).get<double>())});
      s.target = t;
    }
    for (auto const &a : j.at("axes"))
      s.axes.push_back({a.at("name").get<std::string>(), a.at("start").get<double>(), a.at("stop").get<double>(),
                        a.at("steps").get<int>()});
    for (auto const &js : j.at("steps")) {
      SequenceStep st;
  st.kind = parse_step_kind(js.at("kind").get<std::string>());
      st.start_ns = js.at("start_ns").get<double>();
      st.duration_ns = js.at("duration_ns").get<double>();
      st.targets = js.at("targets").get<std::vector<std::string>>();
      auto axis = js.at("axis").get<std::string>();
      st.axis = axis.empty() ? 'x' : axis[0];
      st.angle = js.at("angle").get<double>();
      st.exponent = js.at("exponent").get<double>();
      st.amplitude = {js.at("amplitude").at(0).get<double>(), js.at("amplitude").at(1).get<double>()};
      st.rate_MHz = js.at("rate_MHz").get<double>();
      st.detuning_kHz = js.at("detuning_kHz").get<double>();
      st.envelope = envelope_from(js.at("envelope"));
      st.note = js.at("note").get<std::string>();
      s.steps.push_back(std::move(st));
    }
    return s;
  } catch (ojson::exception const &e) {
    throw IoError(std::string("schedule: malformed document: ") + e.what());
  }
}

} // namespace router
