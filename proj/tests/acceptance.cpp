// Acceptance runner: one PASS/FAIL line per criterion.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include <json.hpp>

#include "commands.hpp"
#include "oracles.hpp"
#include "router/device.hpp"
#include "router/leakage.hpp"
#include "router/lindblad.hpp"
#include "router/simulate.hpp"
#include "router/tomography.hpp"

using namespace router;
using Eigen::MatrixXcd;
using Eigen::VectorXcd;
using clk = std::chrono::steady_clock;

namespace {

std::filesystem::path const kDevice = std::filesystem::path(ROUTER_DATA_DIR) / "router4.json";

int failures = 0;

void line(int n, bool pass, std::string const &title, std::string const &detail, double seconds)
{
  std::printf("[%s] %2d %s: %s (%.1f s)\n", pass ? "PASS" : "FAIL", n, title.c_str(), detail.c_str(), seconds);
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string f(double v, int prec = 4)
{
  std::ostringstream s;
  s.precision(prec);
  s << v;
  return s.str();
}

void criterion(int n, std::string const &title, std::function<bool(std::string &)> const &body)
{
  auto const t0 = clk::now();
  std::string detail;
  bool pass = false;
  try {
    pass = body(detail);
  } catch (std::exception const &e) {
    detail += std::string(" error: ") + e.what();
  }
  line(n, pass, title, detail, std::chrono::duration<double>(clk::now() - t0).count());
}

bool within(double v, double target, double tol) { return std::abs(v - target) <= tol; }

cli::GlobalOptions globals()
{
  cli::GlobalOptions g;
  g.device = kDevice.string();
  return g;
}

SimulationResult run(DeviceConfig const &d, cli::ProtocolArgs a, PulseSchedule *schedule = nullptr)
{
  auto const s = compile_protocol(a.protocol, d, cli::compile_options(a));
  if (schedule) *schedule = s;
  return simulate(s, d, cli::simulation_options(a, d, globals()));
}

double first_observable(DeviceConfig const &d, cli::ProtocolArgs const &a)
{
  PulseSchedule s;
  auto const r = run(d, a, &s);
  return cli::cell_observables(s, r).front().second;
}

cli::ProtocolArgs protocol(std::string name)
{
  cli::ProtocolArgs a;
  a.protocol = std::move(name);
  return a;
}

// 1: analytic table ----------------------------------------------------------
bool analytic_table(std::string &out)
{
  auto const t0 = clk::now();
  auto const d = load_device(kDevice);
  auto const t = cli::coupling_table(d, 0.1);
  double const secs = std::chrono::duration<double>(clk::now() - t0).count();
  out = "best " + f(t.best) + ", worst " + f(t.worst) + ", mean " + f(t.mean) + ", " + f(secs * 1e3, 3) + " ms";
  return within(t.best, 0.982, 0.001) && within(t.worst, 0.947, 0.001) && within(t.mean, 0.969, 0.001) && secs < 1;
}

// 2: dilution ----------------------------------------------------------------
bool dilution(std::string &out)
{
  auto j = nlohmann::json::parse(std::ifstream(kDevice));
  j["g_sss_override_MHz"] = 10.0;
  auto set_mode = [&](std::string const &id, double ghz) {
    for (auto &m : j["modes"])
      if (m["id"] == id) m["frequency_GHz"] = ghz;
  };
  auto set_edge = [&](std::string const &a, std::string const &b, double g) {
    for (auto &e : j["edges"])
      if ((e["a"] == a && e["b"] == b) || (e["a"] == b && e["b"] == a)) e["g_MHz"] = g;
  };
  // every detuning 1 GHz, every bare coupling 100 MHz
  set_mode("S", 4.0);
  set_mode("W1", 5.0);
  set_mode("C1", 6.0);
  set_mode("W2", 3.0);
  set_mode("C2", 2.0);
  for (auto const &[a, b] : {std::pair{"S", "W1"}, {"W1", "C1"}, {"S", "W2"}, {"W2", "C2"}}) set_edge(a, b, 100.0);
  auto const d = parse_device(j.dump());
  auto const e = effective_cavity_coupling(d, "C1", "C2");
  double const ratio = std::abs(e.g_eff_MHz) / g_sss_MHz(d);
  double const rel = std::abs(ratio / 6e-4 - 1);
  out = "g_eff/g_sss = " + f(ratio, 17) + ", relative error " + f(rel, 3);
  return rel < 1e-12;
}

// 3: exchange tables ---------------------------------------------------------
bool exchange_tables(std::string &out)
{
  double worst_unitary = 0, worst_integrated = 0;
  int n = 0;
  for (auto const &c : oracles::exchange_table_cases()) {
    auto const &[a, b] = std::pair{c.space.modes()[0].first, c.space.modes()[1].first};
    VectorXcd const u = apply_exchange_unitary(c.initial, c.space, a, b, c.theta / exchange_angle(1));
    worst_unitary = std::max(worst_unitary, oracles::infidelity(u, c.expected));
    MatrixXcd const rho = oracles::integrate_exchange(c.space, c.initial, c.theta);
    worst_integrated = std::max(worst_integrated, 1 - oracles::state_fidelity(rho, c.expected));
    ++n;
  }
  // every (3,3) basis state against the exact unitary
  HilbertSpace const cc({{"a", 3}, {"b", 3}});
  for (long i = 0; i < cc.total_dim(); ++i) {
    VectorXcd psi = VectorXcd::Zero(cc.total_dim());
    psi(i) = 1;
    for (double p : {0.5, 1.0, 1.5, 2.0}) {
      double const th = exchange_angle(p);
      VectorXcd const u = apply_exchange_unitary(psi, cc, "a", "b", p);
      worst_integrated = std::max(worst_integrated, 1 - oracles::state_fidelity(oracles::integrate_exchange(cc, psi, th), u));
      ++n;
    }
  }
  out = std::to_string(n) + " cases, unitary max infidelity " + f(worst_unitary, 3) + ", integrated max " +
        f(worst_integrated, 3);
  return worst_unitary <= 1e-10 && worst_integrated <= 1e-6;
}

// 4: simulated fidelities ----------------------------------------------------
bool simulated_fidelities(std::string &out)
{
  auto const d = load_device(kDevice);
  double const bell = first_observable(d, protocol("bell"));
  auto b600 = protocol("bell");
  b600.inter_ns = 600;
  auto b1300 = protocol("bell");
  b1300.inter_ns = 1300;
  double const f600 = first_observable(d, b600);
  double const f1300 = first_observable(d, b1300);
  double const par = first_observable(d, protocol("parallel_bell"));

  // Fock transfer peak over the pump on-time
  double const full = d.inter_gate_ns("C2", "C4").value();
  double fock = 0, best_ns = 0;
  for (int k = 0; k <= 16; ++k) {
    auto a = protocol("fock_transfer");
    a.pump_ns = full * (0.6 + 0.05 * k);
    PulseSchedule s;
    auto const r = run(d, a, &s);
    for (auto const &[name, v] : cli::cell_observables(s, r))
      if (name == "P1_Q4" && v > fock) {
        fock = v;
        best_ns = *a.pump_ns;
      }
  }
  out = "bell " + f(bell) + " (0.772), fock peak " + f(fock) + " at " + f(best_ns) + " ns (0.725), parallel bell " +
        f(par) + " (0.684), bell@600 " + f(f600) + " (0.77), bell@1300 " + f(f1300) + " (0.68)";
  return within(bell, 0.772, 0.03) && within(fock, 0.725, 0.03) && within(par, 0.684, 0.03) &&
         within(f600, 0.77, 0.03) && within(f1300, 0.68, 0.03);
}

// 5: coherent-swap decay envelope --------------------------------------------
bool decay_envelope(std::string &out)
{
  auto const d = load_device(kDevice);
  CompileOptions co;
  co.pair = {"C4", "C2"};
  co.pump_duration_ns = 3000;
  auto const s = compile_protocol("coherent_swap_sweep", d, co);
  auto const pump = std::find_if(s.steps.begin(), s.steps.end(), [](auto const &st) { return st.kind == StepKind::InterIswap; });
  if (pump == s.steps.end()) throw std::runtime_error("no exchange step");
  SimulationOptions so;
  so.dims = {{"C2", 8}, {"C4", 8}};
  so.sample_step_ns = 50;
  auto const r = simulate(s, d, so);
  Operator const a2 = annihilation(r.space, r.space.index_of("C2"));
  Operator const a4 = annihilation(r.space, r.space.index_of("C4"));
  auto amplitude = [&](MatrixXcd const &rho) {
    cplx const x = (a2 * rho).trace(), y = (a4 * rho).trace();
    return std::sqrt(std::norm(x) + std::norm(y));
  };
  double a0 = -1, worst = 0;
  int n = 0;
  for (auto const &smp : r.trajectory.samples) {
    double const t = smp.time_ns - pump->start_ns;
    if (t < -1e-9 || t > 3000 + 1e-9) continue;
    double const amp = amplitude(smp.rho);
    if (a0 < 0) {
      a0 = amp;
      continue;
    }
    double const env = hybridized_decay_envelope(d, "C2", "C4", t * 1e-3);
    worst = std::max(worst, std::abs(amp / a0 / env - 1));
    ++n;
  }
  out = std::to_string(n) + " samples over 3 us, worst relative deviation " + f(worst, 3);
  return n > 10 && worst <= 0.02;
}

// 6: lossless exactness ------------------------------------------------------
bool lossless_exactness(std::string &out)
{
  auto const d = load_device(kDevice);
  SimulationOptions o;
  o.lossless = true;
  o.integration.tol = 1e-10;
  auto const bell = simulate(compile_protocol("bell", d), d, o);
  auto const ws = compile_protocol("v_swap_w_state", d);
  auto const w = simulate(ws, d, o);
  auto const v = std::find_if(ws.steps.begin(), ws.steps.end(), [](auto const &s) { return s.kind == StepKind::VIswap; });
  double source = 1;
  for (auto const &smp : w.trajectory.samples)
    if (std::abs(smp.time_ns - v->end_ns()) < 1e-9)
      source = expectation(smp.rho, number(w.space, w.space.index_of(v->targets[0])));
  out = "bell 1-F " + f(1 - *bell.fidelity, 3) + ", W F " + f(*w.fidelity, 8) + ", V source " + f(source, 3);
  return *bell.fidelity >= 1 - 1e-6 && *w.fidelity >= 0.999 && source < 1e-6;
}

// 7: solver invariants -------------------------------------------------------
bool analytic_decay(DeviceConfig const &d, std::string const &mode, double &worst)
{
  HilbertSpace const sp({{mode, 2}});
  VectorXcd psi(2);
  psi << 1 / std::sqrt(2.0), 1 / std::sqrt(2.0);
  auto const col = collapse_operators(d, sp, CoherencePolicy::ProbeDecay);
  HamiltonianModel const h(sp);
  std::vector<double> times;
  for (int k = 1; k <= 10; ++k) times.push_back(k * 2000.0);
  IntegrationOptions o;
  o.tol = 1e-10;
  auto const tr = integrate(DensityMatrix::pure(psi), h, col, times.back(), times, o);
  auto const &m = d.mode(mode);
  for (auto const &smp : tr.samples) {
    double const t = smp.time_ns * 1e-3;
    worst = std::max(worst, std::abs(smp.rho(1, 1).real() - 0.5 * std::exp(-t / m.T1_us)));
    worst = std::max(worst, std::abs(std::abs(smp.rho(0, 1)) - 0.5 * std::exp(-t / m.T2_us)));
  }
  return true;
}

bool solver_invariants(std::string &out)
{
  auto const d = load_device(kDevice);
  StateDiagnostics worst{0, 0, 1};
  for (auto const &name : protocol_names()) {
    auto const r = simulate(compile_protocol(name, d), d);
    worst.trace_drift = std::max(worst.trace_drift, r.worst.trace_drift);
    worst.hermiticity_residue = std::max(worst.hermiticity_residue, r.worst.hermiticity_residue);
    worst.min_eigenvalue = std::min(worst.min_eigenvalue, r.worst.min_eigenvalue);
  }
  double decay = 0;
  for (auto const &m : {"Q2", "C2", "C4"}) analytic_decay(d, m, decay);

  double trunc = 0;
  for (auto const &name : {"bell", "fock_transfer", "v_swap_w_state", "ghz"}) {
    auto a = protocol(name);
    a.cavity_dim = 3;
    double const f3 = first_observable(d, a);
    a.cavity_dim = 4;
    trunc = std::max(trunc, std::abs(first_observable(d, a) - f3));
  }
  out = "trace drift " + f(worst.trace_drift, 3) + ", hermiticity " + f(worst.hermiticity_residue, 3) + ", min eig " +
        f(worst.min_eigenvalue, 3) + ", T1/T2 max error " + f(decay, 3) + ", truncation 3->4 " + f(trunc, 3);
  return worst.trace_drift < 1e-6 && worst.hermiticity_residue < 1e-10 && worst.min_eigenvalue >= -1e-8 &&
         decay <= 1e-4 && trunc < 1e-6;
}

// 8: DRAG --------------------------------------------------------------------
bool drag(std::string &out)
{
  auto const d = load_device(kDevice);
  double const sigma = 5;
  Envelope const env{EnvelopeShape::Gaussian, 8 * sigma, sigma, 1.0, 0};
  PumpTone const tone{"C1", "C2", std::abs(d.mode("C1").frequency_GHz - d.mode("C2").frequency_GHz), 0, env, 0};
  LeakageOptions o;
  o.integration.tol = 1e-10;
  auto const m = build_leakage_model(d, tone, o);
  double const plain = leakage_report(m, env, false, nullptr, o).residual();
  double const corrected = leakage_report(m, env, true, nullptr, o).residual();
  out = "C1-C2 gaussian sigma 5 ns: residual " + f(plain) + " -> " + f(corrected) + " (" + f(plain / corrected, 3) + "x)";
  return plain >= 0.01 && corrected * 5 <= plain;
}

// 9: statistics --------------------------------------------------------------
bool statistics(std::string &out)
{
  std::mt19937_64 gen(2024);
  std::bernoulli_distribution coin(0.5);
  std::vector<double> x(10000);
  for (auto &v : x) v = coin(gen);
  double const sigma = bootstrap(x, 1000, 1).sigma;

  std::normal_distribution<double> nd;
  double round = 0;
  for (int k = 0; k < 100; ++k) {
    MatrixXcd a(4, 4);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) a(i, j) = cplx(nd(gen), nd(gen));
    MatrixXcd rho = a * a.adjoint();
    rho /= rho.trace().real();
    auto const rec = reconstruct(exact_measurements(rho, full_settings(2, 1), std::vector<ConfusionMatrix>(2)), 2);
    round = std::max(round, (rec.raw - rho).cwiseAbs().maxCoeff());
  }

  VectorXcd b = VectorXcd::Zero(4);
  b(1) = b(2) = 1 / std::sqrt(2.0);
  MatrixXcd const bell = b * b.adjoint();
  auto const rec = reconstruct(sample_measurements(bell, full_settings(2, 10000), std::vector<ConfusionMatrix>(2), 7), 2);
  double const fb = fidelity(rec.projected, bell);
  out = "bootstrap sigma " + f(sigma) + " (0.005), round trip " + f(round, 3) + ", sampled Bell F " + f(fb);
  return within(sigma, 0.005, 0.0005) && round <= 1e-10 && fb >= 0.99;
}

// 10: GHZ / W soft check -----------------------------------------------------
bool ghz_w(std::string &out)
{
  auto const d = load_device(kDevice);
  double const ghz = first_observable(d, protocol("ghz"));
  double const w = first_observable(d, protocol("v_swap_w_state"));
  out = "ghz " + f(ghz) + " (0.489 +- 0.06), W " + f(w) + " (0.534 +- 0.06)";
  return within(ghz, 0.489, 0.06) && within(w, 0.534, 0.06);
}

} // namespace

int main()
{
  criterion(1, "analytic fidelity table", analytic_table);
  criterion(2, "coupling dilution", dilution);
  criterion(3, "exchange-unitary oracle", exchange_tables);
  criterion(4, "simulated fidelities", simulated_fidelities);
  criterion(5, "decay envelope", decay_envelope);
  criterion(6, "lossless exactness", lossless_exactness);
  criterion(7, "solver invariants", solver_invariants);
  criterion(8, "DRAG efficacy", drag);
  criterion(9, "statistics", statistics);
  criterion(10, "GHZ and W soft check", ghz_w);
  std::printf("%d of 10 criteria passed\n", 10 - failures);
  return failures == 0 ? 0 : 1;
}
