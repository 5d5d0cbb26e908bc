#include "router/device.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

#include "router/error.hpp"

namespace router {

using nlohmann::json;

std::string_view to_string(ModeKind k)
{
  switch (k) {
  case ModeKind::Snail: return "snail";
  case ModeKind::Waveguide: return "waveguide";
  case ModeKind::Cavity: return "cavity";
  case ModeKind::Qubit: return "qubit";
  case ModeKind::Readout: return "readout";
  }
  return "?";
}

std::string_view to_string(T2Source s)
{
  switch (s) {
  case T2Source::Ramsey: return "ramsey";
  case T2Source::Echo: return "echo";
  case T2Source::PhotonSwap: return "photon-swap";
  case T2Source::ProbeDecay: return "probe-decay";
  }
  return "?";
}

namespace {

ModeKind parse_kind(std::string const &s)
{
  for (auto k : {ModeKind::Snail, ModeKind::Waveguide, ModeKind::Cavity, ModeKind::Qubit, ModeKind::Readout})
    if (to_string(k) == s) return k;
  throw DomainError("device: unknown mode kind '" + s + "'");
}

T2Source parse_source(std::string const &s)
{
  for (auto k : {T2Source::Ramsey, T2Source::Echo, T2Source::PhotonSwap, T2Source::ProbeDecay})
    if (to_string(k) == s) return k;
  throw DomainError("device: unknown t2_source '" + s + "'");
}

void check_keys(json const &obj, std::string const &where, std::initializer_list<char const *> allowed)
{
  if (!obj.is_object()) throw IoError("device: " + where + " must be an object");
  for (auto const &[key, _] : obj.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](char const *a) { return key == a; }))
      throw IoError("device: unknown key '" + key + "' in " + where);
  }
}

template <typename T>
T required(json const &obj, char const *key, std::string const &where)
{
  if (!obj.contains(key)) throw IoError("device: missing '" + std::string(key) + "' in " + where);
  try {
    return obj.at(key).get<T>();
  } catch (json::exception const &e) {
    throw IoError("device: bad value for '" + std::string(key) + "' in " + where + ": " + e.what());
  }
}

template <typename T>
T optional_or(json const &obj, char const *key, T fallback)
{
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (json::exception const &e) {
    throw IoError("device: bad value for '" + std::string(key) + "': " + e.what());
  }
}

void check_coherence(std::string const &id, double T1, double T2)
{
  if (!(T1 > 0)) throw DomainError("device: mode " + id + ": T1 must be positive");
  if (!(T2 > 0)) throw DomainError("device: mode " + id + ": T2 must be positive");
  if (T2 > 2 * T1 * (1 + 1e-9)) {
    std::ostringstream msg;
    msg << "device: mode " << id << ": T2 = " << T2 << " us exceeds 2*T1 = " << 2 * T1 << " us";
    throw DomainError(msg.str());
  }
}

bool is_pair(ModeKind a, ModeKind b, ModeKind x, ModeKind y) { return (a == x && b == y) || (a == y && b == x); }

} // namespace

Coherence ModeSpec::coherence(CoherencePolicy policy) const
{
  Coherence primary{t2_source, T1_us, T2_us};
  auto pick = [&](T2Source want) {
    if (t2_source == want) return primary;
    for (auto const &alt : alternates)
      if (alt.source == want) return alt;
    return primary;
  };
  switch (policy) {
  case CoherencePolicy::PhotonSwap: return pick(T2Source::PhotonSwap);
  case CoherencePolicy::ProbeDecay: return pick(T2Source::ProbeDecay);
  case CoherencePolicy::Primary: return primary;
  }
  return primary;
}

ModeSpec const *DeviceConfig::find_mode(std::string_view id) const
{
  auto it = std::find_if(modes.begin(), modes.end(), [&](auto const &m) { return m.id == id; });
  return it == modes.end() ? nullptr : &*it;
}

ModeSpec const &DeviceConfig::mode(std::string_view id) const
{
  if (auto const *m = find_mode(id)) return *m;
  throw DomainError("device: unknown mode '" + std::string(id) + "'");
}

QubitModuleParams const &DeviceConfig::module(std::string_view id) const
{
  for (auto const &m : modules)
    if (m.id == id) return m;
  throw DomainError("device: unknown module '" + std::string(id) + "'");
}

QubitModuleParams const *DeviceConfig::module_of(std::string_view mode_id) const
{
  for (auto const &m : modules)
    if (m.qubit_id == mode_id || m.cavity_id == mode_id) return &m;
  return nullptr;
}

std::string const &DeviceConfig::adjacent_waveguide(std::string_view cavity) const
{
  for (auto const &e : edges) {
    if (e.mode_a == cavity && mode(e.mode_b).kind == ModeKind::Waveguide) return e.mode_b;
    if (e.mode_b == cavity && mode(e.mode_a).kind == ModeKind::Waveguide) return e.mode_a;
  }
  throw DomainError("device: cavity '" + std::string(cavity) + "' has no adjacent waveguide");
}

CouplingEdge const &DeviceConfig::edge(std::string_view a, std::string_view b) const
{
  for (auto const &e : edges)
    if ((e.mode_a == a && e.mode_b == b) || (e.mode_a == b && e.mode_b == a)) return e;
  throw DomainError("device: no edge between '" + std::string(a) + "' and '" + std::string(b) + "'");
}

std::optional<double> DeviceConfig::inter_gate_ns(std::string_view c_i, std::string_view c_j) const
{
  for (auto const &g : inter_gates)
    if ((g.c_i == c_i && g.c_j == c_j) || (g.c_i == c_j && g.c_j == c_i)) return g.iswap_ns;
  return std::nullopt;
}

std::vector<std::string> DeviceConfig::cavities() const
{
  std::vector<std::string> out;
  for (auto const &m : modes)
    if (m.kind == ModeKind::Cavity) out.push_back(m.id);
  std::sort(out.begin(), out.end());
  return out;
}

std::string const &DeviceConfig::snail_id() const
{
  for (auto const &m : modes)
    if (m.kind == ModeKind::Snail) return m.id;
  throw DomainError("device: no snail mode");
}

void validate(DeviceConfig const &d)
{
  std::set<std::string> ids;
  for (auto const &m : d.modes) {
    if (m.id.empty()) throw DomainError("device: mode with empty id");
    if (!ids.insert(m.id).second) throw DomainError("device: duplicate mode id '" + m.id + "'");
    if (!(m.frequency_GHz > 0)) throw DomainError("device: mode " + m.id + ": frequency must be positive");
    check_coherence(m.id, m.T1_us, m.T2_us);
    for (auto const &alt : m.alternates) check_coherence(m.id, alt.T1_us, alt.T2_us);
    if (m.dim < 2) throw DomainError("device: mode " + m.id + ": dim must be at least 2");
  }

  std::map<std::string, int> waveguides_of_cavity, snails_of_waveguide;
  int snails = 0;
  for (auto const &m : d.modes) {
    if (m.kind == ModeKind::Cavity) waveguides_of_cavity[m.id] = 0;
    if (m.kind == ModeKind::Waveguide) snails_of_waveguide[m.id] = 0;
    if (m.kind == ModeKind::Snail) ++snails;
  }
  if (snails > 1) throw DomainError("device: topology: more than one snail mode");

  std::set<std::pair<std::string, std::string>> seen;
  for (auto const &e : d.edges) {
    if (e.mode_a == e.mode_b) throw DomainError("device: edge " + e.mode_a + "-" + e.mode_b + ": self-coupling");
    if (!(e.g_MHz > 0)) throw DomainError("device: edge " + e.mode_a + "-" + e.mode_b + ": g must be positive");
    auto const &a = d.mode(e.mode_a);
    auto const &b = d.mode(e.mode_b);
    auto key = std::minmax(e.mode_a, e.mode_b);
    if (!seen.insert({key.first, key.second}).second)
      throw DomainError("device: topology: duplicate edge " + e.mode_a + "-" + e.mode_b);
    if (is_pair(a.kind, b.kind, ModeKind::Waveguide, ModeKind::Cavity)) {
      auto const &cav = a.kind == ModeKind::Cavity ? a.id : b.id;
      ++waveguides_of_cavity[cav];
    } else if (is_pair(a.kind, b.kind, ModeKind::Snail, ModeKind::Waveguide)) {
      auto const &wg = a.kind == ModeKind::Waveguide ? a.id : b.id;
      ++snails_of_waveguide[wg];
    } else {
      throw DomainError("device: topology: edge " + e.mode_a + "-" + e.mode_b +
                        " must join snail-waveguide or waveguide-cavity");
    }
  }
  if (!d.edges.empty()) {
    for (auto const &[cav, n] : waveguides_of_cavity)
      if (n != 1)
        throw DomainError("device: topology: cavity " + cav + " couples to " + std::to_string(n) +
                          " waveguides (expected exactly one)");
    for (auto const &[wg, n] : snails_of_waveguide)
      if (n > 1) throw DomainError("device: topology: waveguide " + wg + " couples to the snail more than once");
    // Every waveguide that feeds a cavity must hang off the snail.
    for (auto const &e : d.edges) {
      for (auto const *id : {&e.mode_a, &e.mode_b}) {
        if (d.mode(*id).kind == ModeKind::Waveguide && snails_of_waveguide[*id] != 1)
          throw DomainError("device: topology: waveguide " + *id + " is not connected to the snail");
      }
    }
  }

  std::set<std::string> module_ids;
  for (auto const &m : d.modules) {
    if (!module_ids.insert(m.id).second) throw DomainError("device: duplicate module id '" + m.id + "'");
    if (d.mode(m.qubit_id).kind != ModeKind::Qubit)
      throw DomainError("device: module " + m.id + ": " + m.qubit_id + " is not a qubit");
    if (d.mode(m.cavity_id).kind != ModeKind::Cavity)
      throw DomainError("device: module " + m.id + ": " + m.cavity_id + " is not a cavity");
    if (!m.readout_id.empty() && d.mode(m.readout_id).kind != ModeKind::Readout)
      throw DomainError("device: module " + m.id + ": " + m.readout_id + " is not a readout mode");
    if (!(m.measurement_fidelity > 0.5 && m.measurement_fidelity <= 1))
      throw DomainError("device: module " + m.id + ": measurement_fidelity must lie in (0.5, 1]");
    if (m.intra_swap_time_ns && !(*m.intra_swap_time_ns > 0))
      throw DomainError("device: module " + m.id + ": intra_swap_time_ns must be positive");
  }
  for (auto const &g : d.inter_gates) {
    if (d.mode(g.c_i).kind != ModeKind::Cavity || d.mode(g.c_j).kind != ModeKind::Cavity)
      throw DomainError("device: inter_gates entry must name two cavities");
    if (!(g.iswap_ns > 0)) throw DomainError("device: inter_gates " + g.c_i + "-" + g.c_j + ": time must be positive");
  }
  if (d.g_sss_override_MHz && !std::isfinite(*d.g_sss_override_MHz))
    throw DomainError("device: g_sss_override_MHz must be finite");
  d.snail.validate();
}

DeviceConfig parse_device(std::string const &text)
{
  json doc;
  try {
    doc = json::parse(text);
  } catch (json::parse_error const &e) {
    throw IoError(std::string("device: parse error: ") + e.what());
  }
  check_keys(doc, "document",
             {"spec_version", "name", "modes", "edges", "modules", "snail", "g_sss_override_MHz", "inter_gates",
              "tolerances", "protocol_defaults", "metadata"});
  if (required<int>(doc, "spec_version", "document") != 1) throw IoError("device: unsupported spec_version");

  DeviceConfig d;
  d.name = optional_or<std::string>(doc, "name", "");

  for (auto const &jm : required<json>(doc, "modes", "document")) {
    check_keys(jm, "mode", {"id", "kind", "frequency_GHz", "T1_us", "T2_us", "t2_source", "alternates",
                            "anharmonicity_MHz", "dim"});
    ModeSpec m;
    m.id = required<std::string>(jm, "id", "mode");
    std::string const where = "mode " + m.id;
    m.kind = parse_kind(required<std::string>(jm, "kind", where));
    m.frequency_GHz = required<double>(jm, "frequency_GHz", where);
    m.T1_us = required<double>(jm, "T1_us", where);
    m.T2_us = required<double>(jm, "T2_us", where);
    m.t2_source = parse_source(required<std::string>(jm, "t2_source", where));
    if (jm.contains("alternates")) {
      for (auto const &ja : jm.at("alternates")) {
        check_keys(ja, where + " alternates", {"source", "T1_us", "T2_us"});
        m.alternates.push_back({parse_source(required<std::string>(ja, "source", where)),
                                required<double>(ja, "T1_us", where), required<double>(ja, "T2_us", where)});
      }
    }
    if (jm.contains("anharmonicity_MHz")) m.anharmonicity_MHz = required<double>(jm, "anharmonicity_MHz", where);
    m.dim = optional_or<int>(jm, "dim", m.kind == ModeKind::Qubit ? 2 : 3);
    d.modes.push_back(std::move(m));
  }

  if (doc.contains("edges")) {
    for (auto const &je : doc.at("edges")) {
      check_keys(je, "edge", {"a", "b", "g_MHz"});
      d.edges.push_back({required<std::string>(je, "a", "edge"), required<std::string>(je, "b", "edge"),
                         required<double>(je, "g_MHz", "edge")});
    }
  }

  if (doc.contains("modules")) {
    for (auto const &jm : doc.at("modules")) {
      check_keys(jm, "module", {"id", "qubit", "cavity", "readout", "chi_qc_MHz", "measurement_fidelity",
                                "intra_swap_time_ns"});
      QubitModuleParams m;
      m.id = required<std::string>(jm, "id", "module");
      std::string const where = "module " + m.id;
      m.qubit_id = required<std::string>(jm, "qubit", where);
      m.cavity_id = required<std::string>(jm, "cavity", where);
      m.readout_id = optional_or<std::string>(jm, "readout", "");
      m.chi_qc_MHz = required<double>(jm, "chi_qc_MHz", where);
      m.measurement_fidelity = required<double>(jm, "measurement_fidelity", where);
      if (jm.contains("intra_swap_time_ns")) m.intra_swap_time_ns = required<double>(jm, "intra_swap_time_ns", where);
      d.modules.push_back(std::move(m));
    }
  }

  {
    auto const js = required<json>(doc, "snail", "document");
    check_keys(js, "snail", {"L_J_nH", "C_pF", "alpha", "n_large", "flux", "convention"});
    d.snail.L_J_nH = required<double>(js, "L_J_nH", "snail");
    d.snail.C_pF = required<double>(js, "C_pF", "snail");
    d.snail.alpha = required<double>(js, "alpha", "snail");
    d.snail.n_large = optional_or<int>(js, "n_large", 3);
    d.snail.flux = required<double>(js, "flux", "snail");
    auto conv = optional_or<std::string>(js, "convention", "as-captioned");
    if (conv == "as-captioned")
      d.snail.convention = SnailConvention::AsCaptioned;
    else if (conv == "standard")
      d.snail.convention = SnailConvention::Standard;
    else
      throw DomainError("device: snail convention must be 'as-captioned' or 'standard'");
  }

  if (doc.contains("g_sss_override_MHz") && !doc.at("g_sss_override_MHz").is_null())
    d.g_sss_override_MHz = required<double>(doc, "g_sss_override_MHz", "document");

  if (doc.contains("inter_gates")) {
    for (auto const &jg : doc.at("inter_gates")) {
      check_keys(jg, "inter_gates entry", {"pair", "iswap_ns"});
      auto pair = required<std::vector<std::string>>(jg, "pair", "inter_gates entry");
      if (pair.size() != 2) throw IoError("device: inter_gates pair must have two entries");
      d.inter_gates.push_back({pair[0], pair[1], required<double>(jg, "iswap_ns", "inter_gates entry")});
    }
  }

  if (doc.contains("tolerances")) {
    auto const &jt = doc.at("tolerances");
    check_keys(jt, "tolerances", {"mode_MHz", "difference_MHz", "min_spacing_MHz"});
    d.tolerances.mode_MHz = optional_or(jt, "mode_MHz", d.tolerances.mode_MHz);
    d.tolerances.difference_MHz = optional_or(jt, "difference_MHz", d.tolerances.difference_MHz);
    d.tolerances.min_spacing_MHz = optional_or(jt, "min_spacing_MHz", d.tolerances.min_spacing_MHz);
  }

  if (doc.contains("protocol_defaults")) {
    auto const &jp = doc.at("protocol_defaults");
    check_keys(jp, "protocol_defaults", {"measurement_time_ns", "qubit_pi_ns", "intra_iswap_fidelity", "bell_inter_ns",
                                         "parallel_inter_ns", "coherent_amplitude"});
    auto &p = d.defaults;
    p.measurement_time_ns = optional_or(jp, "measurement_time_ns", p.measurement_time_ns);
    p.qubit_pi_ns = optional_or(jp, "qubit_pi_ns", p.qubit_pi_ns);
    p.intra_iswap_fidelity = optional_or(jp, "intra_iswap_fidelity", p.intra_iswap_fidelity);
    p.bell_inter_ns = optional_or(jp, "bell_inter_ns", p.bell_inter_ns);
    p.parallel_inter_ns = optional_or(jp, "parallel_inter_ns", p.parallel_inter_ns);
    p.coherent_amplitude = optional_or(jp, "coherent_amplitude", p.coherent_amplitude);
  }

  if (doc.contains("metadata")) {
    for (auto const &[k, v] : doc.at("metadata").items()) {
      if (!v.is_number()) throw IoError("device: metadata '" + k + "' must be numeric");
      d.metadata[k] = v.get<double>();
    }
  }

  validate(d);
  return d;
}

DeviceConfig load_device(std::filesystem::path const &path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("device: cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_device(buf.str());
}

PlanReport validate_frequency_plan(DeviceConfig const &d)
{
  PlanReport report{};
  auto const &tol = d.tolerances;

  // Work on id-sorted copies so the report does not depend on declaration order.
  std::vector<ModeSpec const *> modes;
  for (auto const &m : d.modes) modes.push_back(&m);
  std::sort(modes.begin(), modes.end(), [](auto *a, auto *b) { return a->id < b->id; });

  for (std::size_t i = 0; i < modes.size(); ++i)
    for (std::size_t j = i + 1; j < modes.size(); ++j) {
      double const gap = std::abs(modes[i]->frequency_GHz - modes[j]->frequency_GHz) * 1e3;
      if (gap < tol.mode_MHz)
        report.violations.push_back({'a', modes[i]->id + " and " + modes[j]->id + " within " +
                                              std::to_string(gap) + " MHz"});
    }

  struct Difference
  {
    std::string label;
    double GHz;
  };
  std::vector<Difference> diffs;
  std::vector<ModeSpec const *> cavities;
  for (auto *m : modes)
    if (m->kind == ModeKind::Cavity) cavities.push_back(m);
  for (std::size_t i = 0; i < cavities.size(); ++i)
    for (std::size_t j = i + 1; j < cavities.size(); ++j)
      diffs.push_back({cavities[i]->id + "-" + cavities[j]->id,
                       std::abs(cavities[i]->frequency_GHz - cavities[j]->frequency_GHz)});

  for (std::size_t i = 0; i < diffs.size(); ++i)
    for (std::size_t j = i + 1; j < diffs.size(); ++j) {
      double const gap = std::abs(diffs[i].GHz - diffs[j].GHz) * 1e3;
      if (gap < tol.difference_MHz)
        report.violations.push_back({'b', "difference " + diffs[i].label + " collides with " + diffs[j].label});
    }

  double lowest = std::numeric_limits<double>::infinity();
  for (auto *m : modes)
    if (m->kind == ModeKind::Cavity || m->kind == ModeKind::Waveguide || m->kind == ModeKind::Snail)
      lowest = std::min(lowest, m->frequency_GHz);
  report.lowest_router_mode_GHz = lowest;
  for (auto const &df : diffs) {
    report.max_pump_GHz = std::max(report.max_pump_GHz, df.GHz);
    if (!(df.GHz < lowest))
      report.violations.push_back({'c', "difference " + df.label + " not below lowest router mode"});
  }

  for (auto *c : cavities) {
    std::string adjacent;
    for (auto const &e : d.edges) {
      if (e.mode_a == c->id && d.mode(e.mode_b).kind == ModeKind::Waveguide) adjacent = e.mode_b;
      if (e.mode_b == c->id && d.mode(e.mode_a).kind == ModeKind::Waveguide) adjacent = e.mode_a;
    }
    for (auto *w : modes) {
      if (w->kind != ModeKind::Waveguide || w->id == adjacent) continue;
      double const gap = std::abs(c->frequency_GHz - w->frequency_GHz) * 1e3;
      if (gap < tol.min_spacing_MHz)
        report.violations.push_back({'d', c->id + " is " + std::to_string(gap) + " MHz from non-adjacent " + w->id});
    }
  }

  std::sort(report.violations.begin(), report.violations.end());
  report.pass = report.violations.empty();
  return report;
}

HybridizationRatio hybridization_ratio(DeviceConfig const &d, CouplingEdge const &e)
{
  double const delta_MHz = (d.mode(e.mode_a).frequency_GHz - d.mode(e.mode_b).frequency_GHz) * 1e3;
  if (std::abs(delta_MHz) < 10 * e.g_MHz) {
    std::ostringstream msg;
    msg << "device: degenerate detuning on " << e.mode_a << "-" << e.mode_b << ": |Delta| = " << std::abs(delta_MHz)
        << " MHz < 10 g = " << 10 * e.g_MHz << " MHz";
    throw DomainError(msg.str());
  }
  return {e.mode_a, e.mode_b, e.g_MHz / std::abs(delta_MHz), delta_MHz > 0 ? 1 : -1};
}

double g_sss_MHz(DeviceConfig const &d)
{
  if (d.g_sss_override_MHz) return *d.g_sss_override_MHz;
  return expand(d.snail).g_sss_MHz;
}

EffectiveCoupling effective_cavity_coupling(DeviceConfig const &d, std::string_view c_i, std::string_view c_j)
{
  if (c_i == c_j) throw DomainError("device: effective coupling needs two distinct cavities");
  for (auto c : {c_i, c_j})
    if (d.mode(c).kind != ModeKind::Cavity) throw DomainError("device: '" + std::string(c) + "' is not a cavity");

  auto const &s = d.snail_id();
  auto const &w_i = d.adjacent_waveguide(c_i);
  auto const &w_j = d.adjacent_waveguide(c_j);
  EffectiveCoupling out{std::string(c_i), std::string(c_j), 0.0,
                        {hybridization_ratio(d, d.edge(c_i, w_i)), hybridization_ratio(d, d.edge(w_i, s)),
                         hybridization_ratio(d, d.edge(w_j, s)), hybridization_ratio(d, d.edge(c_j, w_j))}};

  // Multiply in a pair-canonical order so (i, j) and (j, i) agree bit for bit.
  std::array<double, 4> r{};
  for (int k = 0; k < 4; ++k) r[k] = out.chain[k].ratio;
  if (c_j < c_i) std::reverse(r.begin(), r.end());
  out.g_eff_MHz = 6 * g_sss_MHz(d) * r[0] * r[1] * r[2] * r[3];
  return out;
}

double pure_dephasing_time(double T1, double T2)
{
  if (!(T1 > 0) || !(T2 > 0)) throw DomainError("pure_dephasing_time: T1 and T2 must be positive");
  if (T2 > 2 * T1 * (1 + 1e-9)) throw DomainError("pure_dephasing_time: T2 exceeds 2*T1");
  if (std::abs(T2 - 2 * T1) <= 1e-9 * 2 * T1) return std::numeric_limits<double>::infinity();
  return 1.0 / (1.0 / T2 - 1.0 / (2 * T1));
}

double averaged_decoherence_rate(DeviceConfig const &d, std::string_view a, std::string_view b, CoherencePolicy p)
{
  return 0.5 * (1.0 / d.mode(a).coherence(p).T2_us + 1.0 / d.mode(b).coherence(p).T2_us);
}

double estimate_iswap_fidelity(DeviceConfig const &d, std::string_view c_i, std::string_view c_j, double t_gate_ns,
                               CoherencePolicy p)
{
  double const f = 1.0 - averaged_decoherence_rate(d, c_i, c_j, p) * t_gate_ns * 1e-3;
  return std::clamp(f, 0.0, 1.0);
}

double hybridized_decay_envelope(DeviceConfig const &d, std::string_view c_i, std::string_view c_j, double t_us,
                                 CoherencePolicy p)
{
  return std::exp(-averaged_decoherence_rate(d, c_i, c_j, p) * t_us);
}

double intra_swap_ns(DeviceConfig const &d, QubitModuleParams const &m)
{
  if (m.intra_swap_time_ns) return *m.intra_swap_time_ns;
  double const rate = 0.5 * (1.0 / d.mode(m.qubit_id).coherence(CoherencePolicy::Primary).T2_us +
                             1.0 / d.mode(m.cavity_id).coherence(CoherencePolicy::PhotonSwap).T2_us);
  return (1.0 - d.defaults.intra_iswap_fidelity) / rate * 1e3;
}

} // namespace router
