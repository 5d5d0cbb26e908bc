#pragma once

#include <optional>
#include <span>
#include <vector>

namespace router {

/// Which junction the inductance `L_J` refers to.
///
/// `AsCaptioned`: L_J is the small junction and each large junction carries
/// alpha * L_J, so the large-junction Josephson energy is E_J(L_J) / alpha.
/// `Standard`: L_J is the large-junction inductance, E_large = E_J(L_J).
/// The dimensionless potential is identical in both cases; only the energy
/// scale differs.
enum class SnailConvention { AsCaptioned, Standard };

struct SnailCircuit
{
  double L_J_nH = 3.44;
  double C_pF = 0.456;
  double alpha = 0.28;
  int n_large = 3;
  double flux = 0.0; // external flux in flux quanta, [0, 1)
  SnailConvention convention = SnailConvention::AsCaptioned;

  void validate() const;
};

/// Taylor coefficients of U(phi)/E_large about the potential minimum,
/// U(phi) = -alpha cos(phi) - n cos((2 pi flux - phi) / n).
struct ExpansionCoefficients
{
  double phi_min = 0;
  double c2 = 0, c3 = 0, c4 = 0;
  double omega_s_GHz = 0;
  double g_sss_MHz = 0;
};

namespace snail {

/// Large-junction Josephson energy in GHz (E/h).
double large_junction_energy_GHz(SnailCircuit const &c);
/// Charging energy e^2 / (2C) in GHz.
double charging_energy_GHz(SnailCircuit const &c);

/// Dimensionless potential and its first four phase derivatives.
double potential(SnailCircuit const &c, double phi);
double potential_derivative(SnailCircuit const &c, double phi, int order);

} // namespace snail

/// Local minimum of the potential. When `seed` is given the search is
/// bracketed around it (used for continuous well-tracking), otherwise it
/// starts from 2 pi flux n / (n + alpha).
double potential_minimum(SnailCircuit const &c, std::optional<double> seed = std::nullopt);

/// Expansion about the minimum.
///
/// omega_s = 4 sqrt(E_C c2 E_large), phi_zpf = (E_C / (c2 E_large))^(1/4) and
/// g_sss = c3 E_large phi_zpf^3, i.e. the coefficient of (s + s^dag)^3 when
/// phi = phi_zpf (s + s^dag).
ExpansionCoefficients expand(SnailCircuit const &c, std::optional<double> seed = std::nullopt);

struct KerrFreePoint
{
  double flux;
  double c3;
};

/// Flux in (0, 0.5) where c4 changes sign, bisected to 1e-6 flux quanta.
KerrFreePoint kerr_free_flux(SnailCircuit const &c);

struct FluxPoint
{
  double flux;
  std::optional<double> omega_s_GHz; // empty when no minimum was found
};

/// omega_s along a monotone flux grid, following one well continuously.
std::vector<FluxPoint> frequency_vs_flux(SnailCircuit const &c, std::span<double const> flux_grid);

} // namespace router
