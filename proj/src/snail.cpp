#include "router/snail.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include "router/error.hpp"

namespace router {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kPlanck = 6.62607015e-34;
constexpr double kCharge = 1.602176634e-19;
constexpr double kFluxQuantum = kPlanck / (2 * kCharge);

double external_phase(SnailCircuit const &c) { return 2 * kPi * c.flux; }

} // namespace

void SnailCircuit::validate() const
{
  auto fail = [](std::string const &what) { throw DomainError("snail: " + what); };
  if (!(L_J_nH > 0)) fail("L_J must be positive");
  if (!(C_pF > 0)) fail("C must be positive");
  if (!(alpha > 0 && alpha < 1)) fail("alpha must lie in (0, 1)");
  if (n_large < 2) fail("n_large must be at least 2");
  if (!(flux >= 0 && flux < 1)) fail("flux must lie in [0, 1)");
}

namespace snail {

double large_junction_energy_GHz(SnailCircuit const &c)
{
  double const phi0 = kFluxQuantum / (2 * kPi);
  double const ej = phi0 * phi0 / (c.L_J_nH * 1e-9) / kPlanck * 1e-9;
  return c.convention == SnailConvention::AsCaptioned ? ej / c.alpha : ej;
}

double charging_energy_GHz(SnailCircuit const &c)
{
  return kCharge * kCharge / (2 * c.C_pF * 1e-12) / kPlanck * 1e-9;
}

double potential(SnailCircuit const &c, double phi)
{
  double const n = c.n_large;
  return -c.alpha * std::cos(phi) - n * std::cos((external_phase(c) - phi) / n);
}

double potential_derivative(SnailCircuit const &c, double phi, int order)
{
  double const n = c.n_large;
  double const theta = (external_phase(c) - phi) / n;
  double const a = c.alpha;
  switch (order) {
  case 0: return potential(c, phi);
  case 1: return a * std::sin(phi) - std::sin(theta);
  case 2: return a * std::cos(phi) + std::cos(theta) / n;
  case 3: return -a * std::sin(phi) + std::sin(theta) / (n * n);
  case 4: return -a * std::cos(phi) - std::cos(theta) / (n * n * n);
  default: throw DomainError("snail: derivative order must be 0..4");
  }
}

} // namespace snail

double potential_minimum(SnailCircuit const &c, std::optional<double> seed)
{
  c.validate();
  double const n = c.n_large;
  double const start = seed.value_or(external_phase(c) * n / (n + c.alpha));
  auto U = [&](double phi) { return snail::potential(c, phi); };

  // Brent on a one-period bracket, then Newton polish on U' for a tight stationarity residual.
  auto [phi, value] = boost::math::tools::brent_find_minima(U, start - kPi, start + kPi, 52);
  (void)value;
  for (int it = 0; it < 20; ++it) {
    double const d1 = snail::potential_derivative(c, phi, 1);
    double const d2 = snail::potential_derivative(c, phi, 2);
    if (d2 <= 0) break;
    double const step = d1 / d2;
    phi -= step;
    if (std::abs(step) < 1e-15) break;
  }
  if (!(snail::potential_derivative(c, phi, 2) > 0) || std::abs(snail::potential_derivative(c, phi, 1)) > 1e-10) {
    std::ostringstream msg;
    msg << "snail: no potential minimum near phi = " << start << " (alpha = " << c.alpha << ", flux = " << c.flux << ")";
    throw NumericError(msg.str());
  }
  return phi;
}

ExpansionCoefficients expand(SnailCircuit const &c, std::optional<double> seed)
{
  ExpansionCoefficients out;
  out.phi_min = potential_minimum(c, seed);
  out.c2 = snail::potential_derivative(c, out.phi_min, 2) / 2;
  out.c3 = snail::potential_derivative(c, out.phi_min, 3) / 6;
  out.c4 = snail::potential_derivative(c, out.phi_min, 4) / 24;

  double const E = snail::large_junction_energy_GHz(c);
  double const Ec = snail::charging_energy_GHz(c);
  out.omega_s_GHz = 4 * std::sqrt(Ec * out.c2 * E);
  double const phi_zpf = std::pow(Ec / (out.c2 * E), 0.25);
  out.g_sss_MHz = out.c3 * E * std::pow(phi_zpf, 3) * 1e3;
  return out;
}

KerrFreePoint kerr_free_flux(SnailCircuit const &c)
{
  c.validate();
  auto c4_at = [&](double f) {
    SnailCircuit s = c;
    s.flux = f;
    return expand(s).c4;
  };
  // Scan for the first sign change, then bisect inside that cell.
  constexpr int kCells = 500;
  double const lo = 1e-6, hi = 0.5 - 1e-6;
  double prev_f = lo, prev = c4_at(lo);
  for (int i = 1; i <= kCells; ++i) {
    double const f = lo + (hi - lo) * i / kCells;
    double const v = c4_at(f);
    if ((prev < 0) != (v < 0)) {
      auto tol = [](double a, double b) { return std::abs(b - a) < 1e-7; };
      auto [a, b] = boost::math::tools::bisect(c4_at, prev_f, f, tol);
      double const flux = 0.5 * (a + b);
      SnailCircuit s = c;
      s.flux = flux;
      return {flux, expand(s).c3};
    }
    prev_f = f;
    prev = v;
  }
  std::ostringstream msg;
  msg << "snail: c4 keeps one sign on (0, 0.5) for alpha = " << c.alpha;
  throw DomainError(msg.str());
}

std::vector<FluxPoint> frequency_vs_flux(SnailCircuit const &c, std::span<double const> flux_grid)
{
  for (std::size_t i = 1; i < flux_grid.size(); ++i)
    if (!(flux_grid[i] > flux_grid[i - 1])) throw DomainError("snail: flux grid must be strictly increasing");

  std::vector<FluxPoint> curve;
  curve.reserve(flux_grid.size());
  std::optional<double> seed;
  double prev_flux = 0;
  for (double f : flux_grid) {
    SnailCircuit s = c;
    s.flux = f;
    try {
      // Shift the previous minimum by the change in external phase scaled as the default seed.
      std::optional<double> tracked;
      if (seed) tracked = *seed + 2 * kPi * (f - prev_flux) * c.n_large / (c.n_large + c.alpha);
      auto e = expand(s, tracked);
      seed = e.phi_min;
      prev_flux = f;
      curve.push_back({f, e.omega_s_GHz});
    } catch (Error const &) {
      curve.push_back({f, std::nullopt});
    }
  }
  return curve;
}

} // namespace router
