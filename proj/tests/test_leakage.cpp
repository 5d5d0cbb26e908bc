#include <doctest.h>

#include <cmath>
#include <sstream>

#include "router/error.hpp"
#include "router/leakage.hpp"
#include "support.hpp"

using namespace router;
using testing::device;

namespace {

PumpTone tone(Envelope env, double detuning_kHz = 0, std::string a = "C1", std::string b = "C2")
{
  auto const &d = device();
  return PumpTone{a, b, std::abs(d.mode(a).frequency_GHz - d.mode(b).frequency_GHz), detuning_kHz, env, 0};
}

Envelope gaussian(double sigma) { return Envelope{EnvelopeShape::Gaussian, 8 * sigma, sigma, 1.0, 0}; }

LeakageOptions tight()
{
  LeakageOptions o;
  o.integration.tol = 1e-10;
  return o;
}

} // namespace

TEST_SUITE("leakage") {

TEST_CASE("model layout")
{
  auto const m = build_leakage_model(device(), tone(gaussian(20)));
  CHECK(m.w1 == "W1");
  CHECK(m.w2 == "W2");
  CHECK(m.Delta1_MHz == doctest::Approx((4.534 - 4.477662) * 1e3).epsilon(1e-12));
  CHECK(m.Delta2_MHz == doctest::Approx((4.936 - 4.8125) * 1e3).epsilon(1e-12));
  CHECK(m.space.total_dim() == 16);

  Envelope off = gaussian(20);
  off.amplitude_MHz = 0;
  auto const z = build_leakage_model(device(), tone(off));
  CHECK(z.peak_rate_MHz == 0);
  CHECK(z.hamiltonian(off).drives.empty());

  auto sym = m;
  sym.Delta2_MHz = sym.Delta1_MHz;
  sym.kappa2 = sym.kappa1;
  CHECK(sym.zeta1() == doctest::Approx(sym.zeta2()));

  LeakageOptions o;
  o.leak_ratio_1 = 0.0;
  o.leak_ratio_2 = 0.0;
  CHECK(build_leakage_model(device(), tone(gaussian(20)), o).hamiltonian(gaussian(20)).drives.size() == 1);
  CHECK_THROWS_AS(build_leakage_model(device(), tone(gaussian(20), 0, "C1", "Q2")), DomainError);
}

TEST_CASE("without leak terms the transfer is a clean iSWAP")
{
  LeakageOptions o = tight();
  o.leak_ratio_1 = 0.0;
  o.leak_ratio_2 = 0.0;
  auto const m = build_leakage_model(device(), tone(gaussian(20)), o);
  auto const r = leakage_report(m, gaussian(20), false, nullptr, o);
  CHECK(r.transfer == doctest::Approx(1).epsilon(1e-7));
  CHECK(r.phase_error < 1e-6);
  CHECK(r.peak() < 1e-12);
}

TEST_CASE("leakage grows quadratically with the drive")
{
  auto const env = gaussian(20);
  std::vector<double> peaks;
  for (double G : {0.02, 0.01}) {
    LeakageOptions o = tight();
    o.peak_rate_MHz = G;
    auto const m = build_leakage_model(device(), tone(env), o);
    peaks.push_back(leakage_report(m, env, false, nullptr, o).peak());
  }
  CHECK(peaks[0] / peaks[1] == doctest::Approx(4).epsilon(0.02));
}

TEST_CASE("excitation number is conserved in the lossless model")
{
  auto const o = tight();
  for (double sigma : {5.0, 20.0}) {
    auto const m = build_leakage_model(device(), tone(gaussian(sigma)), o);
    CHECK(leakage_report(m, gaussian(sigma), false, nullptr, o).excitation_drift < 1e-8);
    CHECK(leakage_report(m, gaussian(sigma), true, nullptr, o).excitation_drift < 1e-8);
  }
}

TEST_CASE("constant envelope is unaffected by DRAG")
{
  Envelope c{EnvelopeShape::Constant, 300, 0, 1.0, 0};
  auto const m = build_leakage_model(device(), tone(c));
  auto const a = leakage_report(m, c, false);
  auto const b = leakage_report(m, c, true);
  CHECK(a.final_w1 == b.final_w1);
  CHECK(a.final_w2 == b.final_w2);
  CHECK(a.transfer == b.transfer);
}

TEST_CASE("residual leakage falls as the ramp widens at fixed area")
{
  double prev = 1;
  for (double sigma : {5.0, 10.0, 20.0}) {
    auto const m = build_leakage_model(device(), tone(gaussian(sigma)));
    double const r = leakage_report(m, gaussian(sigma), false).residual();
    CHECK(r <= prev);
    prev = r;
  }
}

TEST_CASE("DRAG suppresses residual leakage fivefold")
{
  auto const env = gaussian(5);
  auto const m = build_leakage_model(device(), tone(env));
  auto const plain = leakage_report(m, env, false);
  auto const drag = leakage_report(m, env, true);
  REQUIRE(plain.residual() >= 0.01);
  CHECK(drag.residual() * 5 <= plain.residual());
}

TEST_CASE("ac-Stark detuning reduces the transfer phase error")
{
  auto const env = gaussian(100);
  auto m = build_leakage_model(device(), tone(env));
  auto const base = leakage_report(m, env, false);
  auto const st = stark_detuning(1.0, m.kappa2 * m.peak_rate_MHz, m.kappa1 * m.peak_rate_MHz, m.Delta2_MHz,
                                 m.Delta1_MHz);
  CHECK(st.delta_kHz != 0);
  m.delta_kHz = st.delta_kHz;
  auto const corrected = leakage_report(m, env, false);
  CHECK(corrected.phase_error < base.phase_error);
}

TEST_CASE("lossy runs need coherence data and leak population decays")
{
  auto const env = gaussian(5);
  auto const m = build_leakage_model(device(), tone(env));
  LeakageOptions lossy;
  lossy.lossless = false;
  CHECK_THROWS_AS(leakage_report(m, env, false, nullptr, lossy), DomainError);
  auto const r = leakage_report(m, env, false, &device(), lossy);
  auto const l = leakage_report(m, env, false);
  CHECK(r.residual() < l.residual());
}

TEST_CASE("csv layout")
{
  std::ostringstream out;
  write_leakage_csv(out, {{"gaussian/sigma=5/plain", LeakageReport{}}});
  CHECK(out.str().rfind("setting,peak_leak,residual_leak,transfer_fidelity,phase_error\n", 0) == 0);
}

} // TEST_SUITE
