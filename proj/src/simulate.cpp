#include "router/simulate.hpp"

#include <algorithm>
#include <cmath>

#include "router/error.hpp"

namespace router {

HilbertSpace build_space(DeviceConfig const &device, PulseSchedule const &schedule, std::vector<std::string> const &extra,
                         std::map<std::string, int> const &dims, long cap)
{
  DriveProgram const prog = lower_schedule(schedule, device);
  std::vector<std::string> ids = prog.modes;
  for (auto const &m : extra)
    if (std::find(ids.begin(), ids.end(), m) == ids.end()) ids.push_back(m);
  std::vector<std::pair<std::string, int>> modes;
  for (auto const &id : ids) {
    auto it = dims.find(id);
    modes.emplace_back(id, it != dims.end() ? it->second : device.mode(id).dim);
  }
  return HilbertSpace(std::move(modes), cap);
}

HamiltonianModel build_model(HilbertSpace const &space, DriveProgram const &program,
                             std::map<std::string, double> const &static_shift_MHz)
{
  HamiltonianModel model(space);
  for (auto const &[mode, s] : static_shift_MHz)
    if (space.contains(mode) && s != 0) model.add_frame_detuning(mode, s);
  for (auto const &t : program.terms) {
    if (t.envelope.duration_ns <= 0) continue;
    auto f = [t](double time) { return t.strength(time); };
    if (t.is_exchange())
      model.add_exchange(t.mode_a, t.mode_b, f, t.start_ns, t.stop_ns(), t.label);
    else
      model.add_drive(t.mode_a, f, t.start_ns, t.stop_ns(), t.label);
  }
  return model;
}

Operator instant_unitary(HilbertSpace const &space, InstantOp const &op)
{
  long const n = space.total_dim();
  std::vector<Eigen::Triplet<cplx>> trip;
  trip.reserve(n);
  int const k = space.index_of(op.mode);
  if (op.kind == InstantOp::Kind::PhaseZ) {
    for (long i = 0; i < n; ++i) trip.emplace_back(i, i, std::exp(cplx(0, op.angle * space.occupation(i, k))));
  } else {
    int const c = space.index_of(op.control);
    long const s = space.stride(k);
    for (long i = 0; i < n; ++i) {
      int const q = space.occupation(i, k);
      if (space.occupation(i, c) == 1 && q < 2)
        trip.emplace_back(q == 0 ? i + s : i - s, i, cplx(1.0));
      else
        trip.emplace_back(i, i, cplx(1.0));
    }
  }
  Operator u(n, n);
  u.setFromTriplets(trip.begin(), trip.end());
  return u;
}

Eigen::VectorXcd target_vector(TargetState const &target)
{
  int const n = static_cast<int>(target.qubits.size());
  Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(1L << n);
  for (auto const &[bits, a] : target.amplitudes) {
    if (static_cast<int>(bits.size()) != n) throw DomainError("target: bit string length mismatch");
    psi(std::stol(bits, nullptr, 2)) += a;
  }
  double const norm = psi.norm();
  if (!(norm > 0)) throw DomainError("target: zero vector");
  return psi / norm;
}

namespace {

void track_worst(StateDiagnostics &w, Eigen::MatrixXcd const &rho, bool eig)
{
  if (eig) {
    auto const d = diagnose(rho);
    w.trace_drift = std::max(w.trace_drift, d.trace_drift);
    w.hermiticity_residue = std::max(w.hermiticity_residue, d.hermiticity_residue);
    w.min_eigenvalue = std::min(w.min_eigenvalue, d.min_eigenvalue);
  } else {
    w.trace_drift = std::max(w.trace_drift, std::abs(rho.trace() - cplx(1.0)));
    w.hermiticity_residue = std::max(w.hermiticity_residue, (rho - rho.adjoint()).cwiseAbs().maxCoeff());
  }
}

} // namespace

SimulationResult simulate(PulseSchedule const &schedule, DeviceConfig const &device, SimulationOptions const &options)
{
  DriveProgram const prog = lower_schedule(schedule, device);
  HilbertSpace space = build_space(device, schedule, options.extra_modes, options.dims);
  HamiltonianModel const model = build_model(space, prog, options.static_shift_MHz);
  std::vector<CollapseOperator> const collapse =
    options.lossless ? std::vector<CollapseOperator>{} : collapse_operators(device, space, options.policy);

  double const t_end = prog.end_ns;
  double const t_rec = schedule.record_time_ns();

  std::vector<double> samples = schedule.boundaries();
  samples.push_back(t_rec);
  if (options.sample_step_ns > 0)
    for (double t = 0; t < t_end; t += options.sample_step_ns) samples.push_back(t);
  std::erase_if(samples, [&](double t) { return t < 0 || t > t_end + 1e-9; });
  std::sort(samples.begin(), samples.end());
  samples.erase(std::unique(samples.begin(), samples.end(), [](double a, double b) { return std::abs(a - b) < 1e-9; }),
                samples.end());

  SimulationResult res;
  res.worst = {0, 0, 1};
  DensityMatrix rho = DensityMatrix::pure(fock_state(space, std::vector<int>(space.size(), 0)), 0.0);
  std::optional<DensityMatrix> recorded;

  // Pieces end at instantaneous operations; the operation acts on the state
  // at its time and the post-operation state is what later samples see.
  std::vector<double> cuts;
  for (auto const &op : prog.instants)
    if (op.time_ns < t_end) cuts.push_back(op.time_ns);
  cuts.push_back(t_end);

  std::size_t next_op = 0, next_sample = 0;
  for (double cut : cuts) {
    std::vector<double> piece_samples;
    while (next_sample < samples.size() && samples[next_sample] < cut - 1e-9) piece_samples.push_back(samples[next_sample++]);
    bool const final_piece = cut >= t_end;
    if (final_piece)
      while (next_sample < samples.size()) piece_samples.push_back(samples[next_sample++]);
    for (double &t : piece_samples) t = std::max(t, rho.time_ns);

    Trajectory tr = integrate(rho, model, collapse, cut, piece_samples, options.integration);
    res.trajectory.stats.accepted += tr.stats.accepted;
    res.trajectory.stats.rejected += tr.stats.rejected;
    res.trajectory.stats.rhs_evals += tr.stats.rhs_evals;
    res.trajectory.stats.max_trace_drift = std::max(res.trajectory.stats.max_trace_drift, tr.stats.max_trace_drift);
    for (auto &s : tr.samples) {
      if (!recorded && std::abs(s.time_ns - t_rec) < 1e-9) recorded = s;
      track_worst(res.worst, s.rho, options.diagnostics);
      res.trajectory.samples.push_back(std::move(s));
    }
    rho = tr.final_state;
    while (next_op < prog.instants.size() && prog.instants[next_op].time_ns <= cut + 1e-9 && !final_piece) {
      Operator const u = instant_unitary(space, prog.instants[next_op]);
      Eigen::MatrixXcd const x = u * rho.rho;
      rho.rho = (u * x.adjoint()).adjoint();
      ++next_op;
    }
  }
  res.trajectory.final_state = rho;
  track_worst(res.worst, rho.rho, options.diagnostics);
  if (!recorded) recorded = rho;
  res.recorded = *recorded;

  res.register_modes = schedule.target ? schedule.target->qubits : schedule.measured;
  std::erase_if(res.register_modes, [&](std::string const &m) { return !space.contains(m); });
  if (!res.register_modes.empty()) res.register_state = partial_trace(space, res.recorded.rho, res.register_modes);
  if (schedule.target) {
    Eigen::VectorXcd const psi = target_vector(*schedule.target);
    if (psi.size() != res.register_state.rows()) throw DomainError("simulate: register dims do not match the target");
    res.fidelity = (psi.adjoint() * res.register_state * psi)(0).real();
  }
  res.space = std::move(space);
  return res;
}

std::vector<ToneCalibration> kerr_detuning_calibration(PulseSchedule const &schedule, DeviceConfig const &device,
                                                       SweepAxis const &range, SimulationOptions const &options)
{
  std::vector<ToneCalibration> out;
  auto const grid = range.values();
  for (auto const &step : schedule.steps) {
    if (step.kind != StepKind::InterIswap) continue;
    auto const &a = step.targets[0];
    auto const &b = step.targets[1];
    std::vector<std::pair<std::string, int>> modes{{a, options.dims.count(a) ? options.dims.at(a) : device.mode(a).dim},
                                                   {b, options.dims.count(b) ? options.dims.at(b) : device.mode(b).dim}};
    HilbertSpace const space(modes);
    auto const collapse =
      options.lossless ? std::vector<CollapseOperator>{} : collapse_operators(device, space, options.policy);
    DensityMatrix const rho0 = DensityMatrix::pure(fock_state(space, {1, 0}), 0.0);
    Operator const nb = number(space, 1);

    ToneCalibration cal{a, b, 0, grid, {}};
    for (double d : grid) {
      DriveProgram prog;
      EffectiveDriveTerm t;
      t.mode_a = a;
      t.mode_b = b;
      t.envelope = step.envelope;
      t.envelope.duration_ns = step.duration_ns;
      t.peak_MHz = step.rate_MHz;
      t.detuning_kHz = d;
      prog.terms.push_back(t);
      HamiltonianModel const model = build_model(space, prog, options.static_shift_MHz);
      Trajectory const tr = integrate(rho0, model, collapse, step.duration_ns, {}, options.integration);
      cal.transfer.push_back(expectation(tr.final_state.rho, nb));
    }
    std::size_t const i = std::max_element(cal.transfer.begin(), cal.transfer.end()) - cal.transfer.begin();
    cal.best_kHz = grid[i];
    if (i > 0 && i + 1 < grid.size()) {
      double const y0 = cal.transfer[i - 1], y1 = cal.transfer[i], y2 = cal.transfer[i + 1];
      double const curv = y0 - 2 * y1 + y2;
      double const h = grid[i + 1] - grid[i];
      if (curv < 0) cal.best_kHz = grid[i] + 0.5 * h * (y0 - y2) / curv;
    }
    out.push_back(std::move(cal));
  }
  if (out.empty()) throw DomainError("kerr calibration: schedule has no inter-module exchange");
  return out;
}

} // namespace router
