#include "commands.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>

#include <openssl/evp.h>

#include "router/error.hpp"
#include "router/leakage.hpp"
#include "router/tomography.hpp"

namespace router::cli {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

std::string read_text(fs::path const &p)
{
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(fs::path const &p, std::string const &text)
{
  std::ofstream out(p, std::ios::binary);
  if (!out) throw IoError("cannot write " + p.string());
  out << text;
  if (!out) throw IoError("write failed for " + p.string());
}

std::ofstream open_out(fs::path const &p)
{
  std::ofstream out(p, std::ios::binary);
  if (!out) throw IoError("cannot write " + p.string());
  out.imbue(std::locale::classic());
  out.precision(12);
  return out;
}

fs::path run_dir(GlobalOptions const &g, std::string const &fallback)
{
  return g.out.empty() ? fs::path("out") / fallback : fs::path(g.out);
}

std::string fmt(double v, int prec = 6)
{
  if (std::isinf(v)) return "inf";
  std::ostringstream s;
  s.imbue(std::locale::classic());
  s << std::setprecision(prec) << v;
  return s.str();
}

} // namespace

fs::path resolve_device_path(GlobalOptions const &g)
{
  if (!g.device.empty()) return g.device;
  if (char const *env = std::getenv(kDeviceEnv); env && *env) return env;
  throw IoError(std::string("no device: pass --device or set ") + kDeviceEnv);
}

std::string file_sha256(fs::path const &path)
{
  std::string const data = read_text(path);
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr))
    throw IoError("sha256 failed for " + path.string());
  std::ostringstream s;
  for (unsigned i = 0; i < len; ++i) s << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return s.str();
}

// ---------------------------------------------------------------- manifest

RunManifest::RunManifest(fs::path dir, std::string command, std::string protocol, fs::path const &device_path,
                         GlobalOptions const &g, ojson options)
  : dir_(std::move(dir))
{
  doc_["format"] = "router-manifest/1";
  doc_["tool_version"] = kToolVersion;
  doc_["command"] = std::move(command);
  doc_["protocol"] = std::move(protocol);
  doc_["device"] = {{"path", fs::absolute(device_path).string()}, {"sha256", file_sha256(device_path)}};
  doc_["seed"] = g.seed;
  doc_["tol"] = g.tol;
  doc_["strict_deterministic"] = g.strict_deterministic;
  doc_["options"] = std::move(options);
  doc_["artifacts"] = ojson::array();
  doc_["complete"] = false;
}

void RunManifest::begin()
{
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) throw IoError("cannot create " + dir_.string() + ": " + ec.message());
  write();
}

fs::path RunManifest::artifact(std::string const &name)
{
  artifacts_.push_back(name);
  return dir_ / name;
}

void RunManifest::finish()
{
  if (file_sha256(doc_["device"]["path"].get<std::string>()) != doc_["device"]["sha256"].get<std::string>())
    throw IoError("device file changed during the run");
  auto arts = ojson::array();
  for (auto const &a : artifacts_) arts.push_back({{"path", a}, {"sha256", file_sha256(dir_ / a)}});
  doc_["artifacts"] = arts;
  doc_["complete"] = true;
  complete_ = true;
  write();
}

void RunManifest::abandon() noexcept
{
  std::error_code ec;
  for (auto const &a : artifacts_) fs::remove(dir_ / a, ec);
  fs::remove(dir_ / "manifest.json", ec);
}

void RunManifest::write() const { write_text(dir_ / "manifest.json", doc_.dump(2) + "\n"); }

// ---------------------------------------------------------------- couplings

CouplingTable coupling_table(DeviceConfig const &device, double eta)
{
  if (!(eta > 0)) throw DomainError("couplings: eta must be positive");
  CouplingTable t{};
  auto const cav = device.cavities();
  for (std::size_t i = 0; i < cav.size(); ++i)
    for (std::size_t j = i + 1; j < cav.size(); ++j) {
      auto const eff = effective_cavity_coupling(device, cav[i], cav[j]);
      CouplingRow r;
      r.c_i = cav[i];
      r.c_j = cav[j];
      r.g_eff_MHz = eff.g_eff_MHz;
      r.table_gate_ns = device.inter_gate_ns(cav[i], cav[j]);
      double const G = std::abs(eff.g_eff_MHz) * eta;
      r.estimated_gate_ns = G > 0 ? 1e3 / (4 * G) : std::numeric_limits<double>::infinity();
      r.gamma2_per_us = averaged_decoherence_rate(device, cav[i], cav[j]);
      double const tg = r.table_gate_ns.value_or(r.estimated_gate_ns);
      r.fidelity = std::isfinite(tg) ? estimate_iswap_fidelity(device, cav[i], cav[j], tg) : 0.0;
      t.rows.push_back(r);
    }
  if (t.rows.empty()) throw DomainError("couplings: device has fewer than two cavities");
  t.best = 0;
  t.worst = 1;
  double sum = 0;
  for (auto const &r : t.rows) {
    t.best = std::max(t.best, r.fidelity);
    t.worst = std::min(t.worst, r.fidelity);
    sum += r.fidelity;
  }
  t.mean = sum / t.rows.size();
  return t;
}

void write_coupling_csv(std::ostream &out, CouplingTable const &t)
{
  out << "c_i,c_j,g_eff_MHz,table_gate_ns,estimated_gate_ns,gamma2_per_us,fidelity\n";
  for (auto const &r : t.rows)
    out << r.c_i << ',' << r.c_j << ',' << fmt(r.g_eff_MHz, 10) << ','
        << (r.table_gate_ns ? fmt(*r.table_gate_ns, 10) : std::string("")) << ',' << fmt(r.estimated_gate_ns, 10) << ','
        << fmt(r.gamma2_per_us, 10) << ',' << fmt(r.fidelity, 10) << '\n';
}

// ---------------------------------------------------------------- options

void merge_options_file(ProtocolArgs &a)
{
  if (a.options_file.empty()) return;
  ojson j;
  try {
    j = ojson::parse(read_text(a.options_file));
  } catch (ojson::parse_error const &e) {
    throw IoError("options file: " + std::string(e.what()));
  }
  if (!j.is_object()) throw IoError("options file: top level must be an object");
  try {
    for (auto const &[key, v] : j.items()) {
      auto set = [&](auto &field) {
        using T = typename std::decay_t<decltype(field)>::value_type;
        if (!field) field = v.get<T>();
      };
      if (key == "pair") {
        if (a.pair.empty()) a.pair = v.get<std::vector<std::string>>();
      } else if (key == "inter_ns") set(a.inter_ns);
      else if (key == "pump_ns") set(a.pump_ns);
      else if (key == "detuning_kHz") set(a.detuning_kHz);
      else if (key == "shape") set(a.shape);
      else if (key == "sigma_ns") set(a.sigma_ns);
      else if (key == "drag") set(a.drag);
      else if (key == "alpha") set(a.alpha);
      else if (key == "measure_ns") set(a.measure_ns);
      else if (key == "frame_correction") set(a.frame_correction);
      else if (key == "lossless") set(a.lossless);
      else if (key == "cavity_dim") set(a.cavity_dim);
      else if (key == "sample_ns") set(a.sample_ns);
      else if (key == "shots") set(a.shots);
      else if (key == "n_boot") set(a.n_boot);
      else if (key == "readout") set(a.readout);
      else if (key == "shifts_MHz") {
        for (auto const &[m, s] : v.items())
          if (!a.shifts_MHz.count(m)) a.shifts_MHz[m] = s.get<double>();
      } else
        throw IoError("options file: unknown key '" + key + "'");
    }
  } catch (ojson::exception const &e) {
    throw IoError("options file: " + std::string(e.what()));
  }
}

CompileOptions compile_options(ProtocolArgs const &a)
{
  CompileOptions o;
  o.pair = a.pair;
  o.inter_ns = a.inter_ns;
  o.pump_duration_ns = a.pump_ns;
  o.detuning_kHz = a.detuning_kHz.value_or(0.0);
  if (a.shape) o.shape = parse_envelope_shape(*a.shape);
  o.ramp_sigma_ns = a.sigma_ns.value_or(0.0);
  o.drag = a.drag.value_or(false);
  o.coherent_amplitude = a.alpha;
  o.measurement_time_ns = a.measure_ns;
  o.frame_correction = a.frame_correction.value_or(true);
  return o;
}

SimulationOptions simulation_options(ProtocolArgs const &a, DeviceConfig const &device, GlobalOptions const &g)
{
  SimulationOptions s;
  s.integration.tol = g.tol;
  s.lossless = a.lossless.value_or(false);
  if (a.cavity_dim)
    for (auto const &m : device.modes)
      if (m.kind == ModeKind::Cavity) s.dims[m.id] = *a.cavity_dim;
  s.sample_step_ns = a.sample_ns.value_or(0.0);
  s.static_shift_MHz = a.shifts_MHz;
  return s;
}

ojson to_json(ProtocolArgs const &a)
{
  ojson j;
  j["protocol"] = a.protocol;
  j["pair"] = a.pair;
  auto opt = [&](char const *k, auto const &v) {
    if (v)
      j[k] = *v;
    else
      j[k] = nullptr;
  };
  opt("inter_ns", a.inter_ns);
  opt("pump_ns", a.pump_ns);
  opt("detuning_kHz", a.detuning_kHz);
  opt("shape", a.shape);
  opt("sigma_ns", a.sigma_ns);
  opt("drag", a.drag);
  opt("alpha", a.alpha);
  opt("measure_ns", a.measure_ns);
  opt("frame_correction", a.frame_correction);
  opt("lossless", a.lossless);
  opt("cavity_dim", a.cavity_dim);
  opt("sample_ns", a.sample_ns);
  opt("shots", a.shots);
  opt("n_boot", a.n_boot);
  opt("readout", a.readout);
  j["shifts_MHz"] = a.shifts_MHz;
  j["options_file"] = a.options_file;
  return j;
}

SweepAxis parse_axis(std::string const &spec)
{
  auto const eq = spec.find('=');
  if (eq == std::string::npos) throw DomainError("axis '" + spec + "': expected name=start:stop:steps");
  SweepAxis ax;
  ax.name = spec.substr(0, eq);
  std::string rest = spec.substr(eq + 1);
  std::replace(rest.begin(), rest.end(), ':', ' ');
  std::istringstream in(rest);
  in.imbue(std::locale::classic());
  if (!(in >> ax.start >> ax.stop >> ax.steps) || !(in >> std::ws).eof())
    throw DomainError("axis '" + spec + "': expected name=start:stop:steps");
  if (ax.steps < 1) throw DomainError("axis '" + spec + "': steps must be at least 1");
  static std::vector<std::string> const known{"detuning_kHz", "pump_ns", "duration_ns", "inter_ns",
                                              "measure_ns",   "sigma_ns", "alpha"};
  if (std::find(known.begin(), known.end(), ax.name) == known.end())
    throw DomainError("axis '" + ax.name + "' is not sweepable");
  return ax;
}

void apply_axis_value(ProtocolArgs &a, std::string const &axis, double v)
{
  if (axis == "detuning_kHz") a.detuning_kHz = v;
  else if (axis == "pump_ns" || axis == "duration_ns") a.pump_ns = v;
  else if (axis == "inter_ns") a.inter_ns = v;
  else if (axis == "measure_ns") a.measure_ns = v;
  else if (axis == "sigma_ns") a.sigma_ns = v;
  else if (axis == "alpha") a.alpha = v;
  else throw DomainError("axis '" + axis + "' is not sweepable");
}

std::vector<std::pair<std::string, double>> cell_observables(PulseSchedule const &schedule,
                                                            SimulationResult const &r)
{
  std::vector<std::pair<std::string, double>> out;
  if (r.fidelity) out.emplace_back("fidelity", *r.fidelity);
  int const n = static_cast<int>(r.register_modes.size());
  for (int q = 0; q < n; ++q) {
    double p = 0;
    for (long i = 0; i < r.register_state.rows(); ++i)
      if ((i >> (n - 1 - q)) & 1) p += r.register_state(i, i).real();
    out.emplace_back("P1_" + r.register_modes[q], p);
  }
  if (schedule.measured.empty()) {
    // Nothing measured: report cavity photon numbers at the end.
    for (int k = 0; k < r.space.size(); ++k)
      out.emplace_back("n_" + r.space.modes()[k].first,
                       expectation(r.trajectory.final_state.rho, number(r.space, k)));
  }
  return out;
}

// ---------------------------------------------------------------- validate / couplings

int cmd_validate(GlobalOptions const &g)
{
  auto const path = resolve_device_path(g);
  DeviceConfig const d = load_device(path);
  auto const rep = validate_frequency_plan(d);
  std::cout << "device " << d.name << ": " << d.modes.size() << " modes, " << d.edges.size() << " edges\n";
  std::cout << "max pump " << fmt(rep.max_pump_GHz) << " GHz, lowest router mode " << fmt(rep.lowest_router_mode_GHz)
            << " GHz\n";
  for (auto const &v : rep.violations) std::cout << "rule " << v.rule << ": " << v.detail << "\n";
  std::cout << (rep.pass ? "frequency plan ok\n" : "frequency plan violated\n");
  return rep.pass ? 0 : 1;
}

int cmd_couplings(GlobalOptions const &g, double eta)
{
  auto const path = resolve_device_path(g);
  DeviceConfig const d = load_device(path);
  auto const t = coupling_table(d, eta);
  std::cout << "g_sss = " << fmt(g_sss_MHz(d)) << " MHz, eta = " << eta << "\n";
  std::cout << std::left << std::setw(8) << "pair" << std::setw(14) << "g_eff_MHz" << std::setw(12) << "table_ns"
            << std::setw(14) << "est_ns" << std::setw(14) << "gamma2_/us" << "fidelity\n";
  for (auto const &r : t.rows)
    std::cout << std::setw(8) << (r.c_i + r.c_j) << std::setw(14) << fmt(r.g_eff_MHz) << std::setw(12)
              << (r.table_gate_ns ? fmt(*r.table_gate_ns) : std::string("-")) << std::setw(14)
              << (std::isfinite(r.estimated_gate_ns) ? fmt(r.estimated_gate_ns) : std::string("inf (no coupling)"))
              << std::setw(14) << fmt(r.gamma2_per_us) << fmt(r.fidelity, 4) << "\n";
  std::cout << "best " << fmt(t.best, 4) << "  worst " << fmt(t.worst, 4) << "  mean " << fmt(t.mean, 4) << "\n";
  if (!g.out.empty()) {
    RunManifest m(g.out, "couplings", "", path, g, {{"eta", eta}});
    m.begin();
    try {
      auto out = open_out(m.artifact("couplings.csv"));
      write_coupling_csv(out, t);
      out.close();
      m.finish();
    } catch (...) {
      m.abandon();
      throw;
    }
  }
  return 0;
}

// ---------------------------------------------------------------- compile

int cmd_compile(GlobalOptions const &g, ProtocolArgs a, std::optional<std::string> calibrate)
{
  auto const path = resolve_device_path(g);
  DeviceConfig const d = load_device(path);
  merge_options_file(a);
  PulseSchedule sched = compile_protocol(a.protocol, d, compile_options(a));

  std::vector<ToneCalibration> cal;
  if (calibrate) {
    SweepAxis const ax = parse_axis("detuning_kHz=" + *calibrate);
    cal = kerr_detuning_calibration(sched, d, ax, simulation_options(a, d, g));
    a.detuning_kHz = cal.front().best_kHz;
    sched = compile_protocol(a.protocol, d, compile_options(a));
    for (auto const &c : cal)
      std::cerr << "tone " << c.mode_a << "-" << c.mode_b << ": best detuning " << fmt(c.best_kHz) << " kHz\n";
  }
  auto const tones = pump_tones(sched, d);
  std::string const text = serialize_schedule(sched);
  if (g.out.empty()) {
    std::cout << text;
    return 0;
  }
  ojson opts = to_json(a);
  if (calibrate) opts["calibrate_kHz"] = *calibrate;
  RunManifest m(g.out, "compile", a.protocol, path, g, opts);
  m.begin();
  try {
    write_text(m.artifact("schedule.json"), text);
    auto out = open_out(m.artifact("tones.csv"));
    out << "mode_a,mode_b,pump_GHz,detuning_kHz,start_ns,duration_ns\n";
    for (auto const &t : tones)
      out << t.mode_a << ',' << t.mode_b << ',' << t.pump_GHz << ',' << t.detuning_kHz << ',' << t.start_ns << ','
          << t.envelope.duration_ns << '\n';
    out.close();
    if (!cal.empty()) {
      auto c = open_out(m.artifact("calibration.csv"));
      c << "mode_a,mode_b,detuning_kHz,transfer\n";
      for (auto const &t : cal)
        for (std::size_t i = 0; i < t.grid_kHz.size(); ++i)
          c << t.mode_a << ',' << t.mode_b << ',' << t.grid_kHz[i] << ',' << t.transfer[i] << '\n';
    }
    m.finish();
  } catch (...) {
    m.abandon();
    throw;
  }
  std::cout << "wrote " << (fs::path(g.out) / "schedule.json").string() << "\n";
  return 0;
}

// ---------------------------------------------------------------- simulate

namespace {

/// Multinomial resample of one setting's counts by sequential binomials.
std::vector<long> resample_counts(std::vector<long> const &counts, long shots, std::mt19937_64 &gen)
{
  std::vector<long> out(counts.size(), 0);
  long left = shots;
  double mass = 1.0;
  for (std::size_t k = 0; k < counts.size() && left > 0; ++k) {
    double const p = double(counts[k]) / shots;
    if (k + 1 == counts.size() || mass <= 0) {
      out[k] = left;
      break;
    }
    std::binomial_distribution<long> b(left, std::clamp(p / mass, 0.0, 1.0));
    out[k] = b(gen);
    left -= out[k];
    mass -= p;
  }
  return out;
}

double record_expectation(std::string const &pauli, std::vector<long> const &counts, long shots)
{
  int const n = static_cast<int>(pauli.size());
  double acc = 0;
  for (std::size_t rep = 0; rep < counts.size(); ++rep) {
    int parity = 0;
    for (int q = 0; q < n; ++q)
      if (pauli[q] != 'I') parity ^= (rep >> (n - 1 - q)) & 1;
    acc += (parity ? -1.0 : 1.0) * counts[rep];
  }
  return acc / shots;
}

} // namespace

int cmd_simulate(GlobalOptions const &g, ProtocolArgs a)
{
  auto const path = resolve_device_path(g);
  DeviceConfig const d = load_device(path);
  merge_options_file(a);
  fs::path const dir = run_dir(g, a.protocol);
  RunManifest m(dir, "simulate", a.protocol, path, g, to_json(a));
  m.begin();
  try {
    PulseSchedule const sched = compile_protocol(a.protocol, d, compile_options(a));
    write_text(m.artifact("schedule.json"), serialize_schedule(sched));

    SimulationResult const r = simulate(sched, d, simulation_options(a, d, g));

    std::vector<LinearOperator> obs;
    for (int k = 0; k < r.space.size(); ++k)
      obs.push_back({"n_" + r.space.modes()[k].first, number(r.space, k)});
    {
      auto out = open_out(m.artifact("trajectory.csv"));
      write_trajectory_csv(out, r.trajectory, obs);
    }
    write_snapshot(m.artifact("recorded_state.rho"), r.space, r.recorded);

    ojson report;
    report["protocol"] = a.protocol;
    report["seed"] = g.seed;
    report["record_time_ns"] = sched.record_time_ns();
    report["space"] = ojson::array();
    for (auto const &[id, dim] : r.space.modes()) report["space"].push_back({id, dim});
    report["register"] = r.register_modes;
    report["fidelity"] = r.fidelity ? ojson(*r.fidelity) : ojson(nullptr);
    report["observables"] = ojson::object();
    for (auto const &[k, v] : cell_observables(sched, r)) report["observables"][k] = v;
    report["diagnostics"] = {{"max_trace_drift", r.worst.trace_drift},
                             {"max_hermiticity_residue", r.worst.hermiticity_residue},
                             {"min_eigenvalue", r.worst.min_eigenvalue},
                             {"accepted_steps", r.trajectory.stats.accepted},
                             {"rejected_steps", r.trajectory.stats.rejected}};

    int const nq = static_cast<int>(r.register_modes.size());
    if (nq > 0 && nq <= 4) {
      std::vector<int> qdims(nq, 2);
      write_text(m.artifact("register_state.json"), density_matrix_json(r.register_state, qdims));

      std::vector<ConfusionMatrix> conf;
      for (auto const &q : r.register_modes)
        conf.push_back(a.readout.value_or(false) ? ConfusionMatrix::symmetric(d.module_of(q)->measurement_fidelity)
                                                 : ConfusionMatrix{});
      long const shots = a.shots.value_or(10000);
      auto const records = sample_measurements(r.register_state, full_settings(nq, shots), conf, g.seed);
      {
        auto out = open_out(m.artifact("tomography.csv"));
        write_tomography_csv(out, records);
      }
      Reconstruction const rec = reconstruct(records, nq);
      write_text(m.artifact("reconstructed_state.json"), density_matrix_json(rec.projected, qdims));
      {
        auto out = open_out(m.artifact("pauli_bars.csv"));
        out << "label,simulated,reconstructed\n";
        auto const sim = pauli_bars(r.register_state);
        auto const tom = pauli_bars(rec.projected);
        for (std::size_t i = 0; i < sim.size(); ++i)
          out << sim[i].label << ',' << sim[i].value << ',' << tom[i].value << '\n';
      }
      report["tomography"] = {{"shots", shots}, {"readout_errors", a.readout.value_or(false)}};
      if (sched.target) {
        Eigen::VectorXcd const psi = target_vector(*sched.target);
        Eigen::MatrixXcd const target = psi * psi.adjoint();
        double const f_tomo = fidelity(rec.projected, target);
        long const n_boot = a.n_boot.value_or(200);
        std::mt19937_64 gen(g.seed ^ 0x9e3779b97f4a7c15ULL);
        std::vector<double> boots;
        for (long b = 0; b < n_boot; ++b) {
          std::vector<TomographyRecord> rs = records;
          for (auto &rr : rs) {
            rr.counts = resample_counts(rr.counts, rr.setting.shots, gen);
            rr.expectation = record_expectation(rr.setting.pauli, rr.counts, rr.setting.shots);
          }
          boots.push_back(fidelity(reconstruct(rs, nq).projected, target));
        }
        // Spread of the resampled fidelities, scaled by sqrt(N / (N - 1)).
        double mu = 0;
        for (double v : boots) mu += v;
        mu /= boots.size();
        double ss = 0;
        for (double v : boots) ss += (v - mu) * (v - mu);
        double const s = std::sqrt(ss / (boots.size() - 1));
        report["tomography"]["fidelity"] = f_tomo;
        report["tomography"]["sigma"] = std::sqrt(double(shots) / (shots - 1)) * s;
        report["tomography"]["n_boot"] = n_boot;
      }
    }
    write_text(m.artifact("report.json"), report.dump(2) + "\n");
    m.finish();

    std::cout << a.protocol << ": ";
    if (r.fidelity) std::cout << "fidelity " << fmt(*r.fidelity, 4);
    if (report.contains("tomography") && report["tomography"].contains("fidelity"))
      std::cout << ", tomography " << fmt(report["tomography"]["fidelity"].get<double>(), 4) << " +- "
                << fmt(report["tomography"]["sigma"].get<double>(), 2);
    std::cout << "\n";
    for (auto const &[k, v] : report["observables"].items()) std::cout << "  " << k << " = " << fmt(v.get<double>(), 6) << "\n";
    std::cout << "wrote " << dir.string() << "\n";
  } catch (...) {
    m.abandon();
    throw;
  }
  return 0;
}

// ---------------------------------------------------------------- sweep

int cmd_sweep(GlobalOptions const &g, ProtocolArgs a, std::vector<std::string> const &axis_specs)
{
  auto const path = resolve_device_path(g);
  DeviceConfig const d = load_device(path);
  merge_options_file(a);
  if (axis_specs.empty()) throw DomainError("sweep: at least one --axis is required");
  std::vector<SweepAxis> axes;
  for (auto const &s : axis_specs) axes.push_back(parse_axis(s));
  std::vector<std::vector<double>> values;
  std::size_t cells = 1;
  for (auto const &ax : axes) {
    values.push_back(ax.values());
    cells *= values.back().size();
  }

  ojson opts = to_json(a);
  opts["axes"] = ojson::array();
  for (auto const &ax : axes) opts["axes"].push_back({{"name", ax.name}, {"start", ax.start}, {"stop", ax.stop}, {"steps", ax.steps}});
  fs::path const dir = run_dir(g, a.protocol + "_sweep");
  RunManifest m(dir, "sweep", a.protocol, path, g, opts);
  m.begin();
  try {
    auto coords = [&](std::size_t idx) {
      std::vector<double> c(axes.size());
      for (std::size_t k = axes.size(); k-- > 0;) {
        c[k] = values[k][idx % values[k].size()];
        idx /= values[k].size();
      }
      return c;
    };
    std::vector<std::vector<std::pair<std::string, double>>> results(cells);
    std::vector<std::string> errors(cells);
    std::atomic<std::size_t> next{0};
    auto work = [&] {
      for (std::size_t i; (i = next.fetch_add(1)) < cells;) {
        try {
          ProtocolArgs cell = a;
          auto const c = coords(i);
          for (std::size_t k = 0; k < axes.size(); ++k) apply_axis_value(cell, axes[k].name, c[k]);
          CompileOptions co = compile_options(cell);
          co.axes = axes;
          auto const sched = compile_protocol(cell.protocol, d, co);
          auto const r = simulate(sched, d, simulation_options(cell, d, g));
          results[i] = cell_observables(sched, r);
        } catch (std::exception const &e) {
          errors[i] = e.what();
        }
      }
    };
    unsigned workers = g.strict_deterministic ? 1u : (g.workers ? g.workers : std::thread::hardware_concurrency());
    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(cells)));
    std::vector<std::thread> pool;
    for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
    for (auto &t : pool) t.join();
    for (std::size_t i = 0; i < cells; ++i)
      if (!errors[i].empty()) throw NumericError("sweep cell " + std::to_string(i) + ": " + errors[i]);

    auto out = open_out(m.artifact("sweep.csv"));
    for (auto const &ax : axes) out << ax.name << ',';
    for (std::size_t k = 0; k < results[0].size(); ++k) out << (k ? "," : "") << results[0][k].first;
    out << '\n';
    for (std::size_t i = 0; i < cells; ++i) {
      for (double c : coords(i)) out << c << ',';
      for (std::size_t k = 0; k < results[i].size(); ++k) out << (k ? "," : "") << results[i][k].second;
      out << '\n';
    }
    out.close();
    ojson meta;
    meta["protocol"] = a.protocol;
    meta["shape"] = ojson::array();
    for (auto const &v : values) meta["shape"].push_back(v.size());
    meta["axes"] = opts["axes"];
    meta["observables"] = ojson::array();
    for (auto const &[k, v] : results[0]) meta["observables"].push_back(k);
    meta["cells"] = cells;
    write_text(m.artifact("sweep.json"), meta.dump(2) + "\n");
    m.finish();
    std::cout << "sweep " << a.protocol << ": " << cells << " cells, wrote " << dir.string() << "\n";
  } catch (...) {
    m.abandon();
    throw;
  }
  return 0;
}

// ---------------------------------------------------------------- leakage

int cmd_leakage(GlobalOptions const &g, LeakageArgs const &a)
{
  auto const path = resolve_device_path(g);
  DeviceConfig const d = load_device(path);
  if (a.pair.size() != 2) throw DomainError("leakage: --pair needs two cavities");
  LeakageOptions lo;
  lo.lossless = !a.lossy;
  lo.integration.tol = g.tol;
  lo.peak_rate_MHz = a.peak_MHz;

  std::vector<std::pair<std::string, LeakageReport>> rows;
  for (double sigma : a.sigmas_ns) {
    Envelope env{parse_envelope_shape(a.shape), 0, sigma, 1.0, 0};
    if (a.duration_ns)
      env.duration_ns = *a.duration_ns;
    else if (env.shape == EnvelopeShape::Gaussian)
      env.duration_ns = 8 * sigma;
    else
      env.duration_ns = d.inter_gate_ns(a.pair[0], a.pair[1]).value_or(1000.0);
    env.validate();
    PumpTone tone{a.pair[0], a.pair[1], std::abs(d.mode(a.pair[0]).frequency_GHz - d.mode(a.pair[1]).frequency_GHz),
                  a.detuning_kHz, env, 0};
    ExtendedFrameModel model = build_leakage_model(d, tone, lo);
    if (a.stark) {
      auto const st = stark_detuning(1.0, model.kappa2 * model.peak_rate_MHz, model.kappa1 * model.peak_rate_MHz,
                                     model.Delta2_MHz, model.Delta1_MHz);
      model.delta_kHz = st.delta_kHz;
    }
    std::string const tag = a.shape + "/sigma=" + fmt(sigma) + "/delta_kHz=" + fmt(model.delta_kHz);
    rows.emplace_back(tag + "/plain", leakage_report(model, env, false, &d, lo));
    rows.emplace_back(tag + "/drag", leakage_report(model, env, true, &d, lo));
  }
  write_leakage_csv(std::cout, rows);
  if (!g.out.empty()) {
    ojson opts{{"pair", a.pair},       {"shape", a.shape},   {"sigmas_ns", a.sigmas_ns},
               {"duration_ns", a.duration_ns ? ojson(*a.duration_ns) : ojson(nullptr)},
               {"peak_MHz", a.peak_MHz ? ojson(*a.peak_MHz) : ojson(nullptr)},
               {"detuning_kHz", a.detuning_kHz}, {"stark", a.stark}, {"lossy", a.lossy}};
    RunManifest m(g.out, "leakage", "", path, g, opts);
    m.begin();
    try {
      auto out = open_out(m.artifact("leakage.csv"));
      write_leakage_csv(out, rows);
      out.close();
      m.finish();
    } catch (...) {
      m.abandon();
      throw;
    }
  }
  return 0;
}

// ---------------------------------------------------------------- report

int cmd_report(GlobalOptions const &, fs::path const &dir)
{
  fs::path const mpath = dir / "manifest.json";
  if (!fs::exists(mpath)) throw IoError("incomplete run: no manifest in " + dir.string());
  ojson man;
  try {
    man = ojson::parse(read_text(mpath));
  } catch (ojson::parse_error const &e) {
    throw IoError("manifest: " + std::string(e.what()));
  }
  if (!man.value("complete", false)) throw IoError("incomplete run: manifest not finalised in " + dir.string());

  std::vector<std::string> warnings;
  for (auto const &art : man["artifacts"]) {
    fs::path const p = dir / art["path"].get<std::string>();
    if (!fs::exists(p))
      warnings.push_back("missing artifact " + art["path"].get<std::string>());
    else if (file_sha256(p) != art["sha256"].get<std::string>())
      warnings.push_back("integrity: " + art["path"].get<std::string>() + " does not match its recorded hash");
  }
  std::string const dev = man["device"]["path"].get<std::string>();
  if (!fs::exists(dev) || file_sha256(dev) != man["device"]["sha256"].get<std::string>())
    warnings.push_back("integrity: device file differs from the one used for the run");

  std::ostringstream md;
  md.imbue(std::locale::classic());
  md << "# Run summary: " << man["command"].get<std::string>();
  if (!man["protocol"].get<std::string>().empty()) md << " " << man["protocol"].get<std::string>();
  md << "\n\n";
  md << "- tool: " << man["tool_version"].get<std::string>() << "\n";
  md << "- device: `" << dev << "` (sha256 " << man["device"]["sha256"].get<std::string>().substr(0, 16) << "...)\n";
  md << "- seed: " << man["seed"].dump() << ", tol: " << man["tol"].dump()
     << ", strict-deterministic: " << man["strict_deterministic"].dump() << "\n";

  fs::path const rpath = dir / "report.json";
  if (fs::exists(rpath)) {
    ojson const r = ojson::parse(read_text(rpath));
    md << "\n## Results\n\n";
    if (!r["fidelity"].is_null()) md << "- simulated fidelity: " << fmt(r["fidelity"].get<double>(), 6) << "\n";
    if (r.contains("tomography") && r["tomography"].contains("fidelity"))
      md << "- tomography fidelity: " << fmt(r["tomography"]["fidelity"].get<double>(), 6) << " +- "
         << fmt(r["tomography"]["sigma"].get<double>(), 3) << " (" << r["tomography"]["shots"].dump() << " shots, "
         << r["tomography"]["n_boot"].dump() << " resamples)\n";
    for (auto const &[k, v] : r["observables"].items()) md << "- " << k << ": " << fmt(v.get<double>(), 6) << "\n";
    md << "\n## Solver diagnostics\n\n";
    for (auto const &[k, v] : r["diagnostics"].items()) md << "- " << k << ": " << v.dump() << "\n";
  }
  md << "\n## Artifacts\n\n";
  for (auto const &art : man["artifacts"]) md << "- [" << art["path"].get<std::string>() << "](" << art["path"].get<std::string>() << ")\n";
  if (!warnings.empty()) {
    md << "\n## Warnings\n\n";
    for (auto const &w : warnings) md << "- " << w << "\n";
  }
  write_text(dir / "summary.md", md.str());
  std::cout << md.str();
  for (auto const &w : warnings) std::cerr << "warning: " << w << "\n";
  return 0;
}

} // namespace router::cli
