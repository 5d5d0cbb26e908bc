#include <doctest.h>

#include <cmath>
#include <numbers>

#include "router/error.hpp"
#include "router/pulse.hpp"
#include "support.hpp"

using namespace router;
using testing::device;
using std::numbers::pi;

namespace {

// Composite Simpson over [0, T].
template <typename F>
double simpson(F f, double T, int n = 20000)
{
  double const h = T / n;
  double s = f(0) + f(T);
  for (int k = 1; k < n; ++k) s += (k % 2 ? 4 : 2) * f(k * h);
  return s * h / 3;
}

std::vector<StepKind> kinds(PulseSchedule const &s)
{
  std::vector<StepKind> out;
  for (auto const &st : s.steps)
    if (st.kind != StepKind::RotateQubit || st.axis != 'z') out.push_back(st.kind);
  return out;
}

} // namespace

TEST_SUITE("pulse") {

TEST_CASE("envelopes")
{
  Envelope g{EnvelopeShape::Gaussian, 400, 50, 1.0, 0};
  CHECK(g.shape_at(0) == doctest::Approx(0).epsilon(1e-15));
  CHECK(g.shape_at(400) == doctest::Approx(0).epsilon(1e-15));
  CHECK(g.shape_at(200) == doctest::Approx(1));
  CHECK(g.shape_at(-1) == 0);
  CHECK(g.shape_at(401) == 0);
  CHECK(g.area_ns() == doctest::Approx(simpson([&](double t) { return g.shape_at(t); }, 400)).epsilon(1e-10));

  Envelope f{EnvelopeShape::FlatTop, 1000, 20, 1.0, 0};
  CHECK(f.shape_at(500) == 1);
  CHECK(f.area_ns() == doctest::Approx(simpson([&](double t) { return f.shape_at(t); }, 1000)).epsilon(1e-9));
  // shape_rate is the derivative in 1/us
  for (double t : {10.0, 30.0, 970.0}) {
    double const h = 1e-4;
    double const num = (f.shape_at(t + h) - f.shape_at(t - h)) / (2 * h) * 1e3;
    CHECK(f.shape_rate(t) == doctest::Approx(num).epsilon(1e-6));
  }
  Envelope bad{EnvelopeShape::FlatTop, 100, 30, 1.0, 0};
  CHECK_THROWS_AS(bad.validate(), DomainError);
  CHECK(Envelope{EnvelopeShape::Constant, 100, 0, 1.0, 0}.area_ns() == 100);
}

TEST_CASE("drive displacement")
{
  auto const r = eta_from_drive(10, 0, 1.368269, 3.9149);
  CHECK(r.eta.imag() == 0);
  CHECK(r.eta.real() < 0);
  // eps enters in GHz so eta is dimensionless
  CHECK(r.eta.real() == doctest::Approx(10e-3 * 3.9149 / (1.368269 * 1.368269 - 3.9149 * 3.9149)));
  auto const r2 = eta_from_drive(20, 6, 1.368269, 3.9149);
  auto const r1 = eta_from_drive(10, 3, 1.368269, 3.9149);
  CHECK(std::abs(r2.eta) == doctest::Approx(2 * std::abs(r1.eta)));
  CHECK_THROWS_AS(eta_from_drive(10, 0, 3.91, 3.9149), DomainError);
}

TEST_CASE("gate times")
{
  double const G = 1e3 / (4 * 832.0);
  CHECK(G == doctest::Approx(0.3005).epsilon(1e-3));
  CHECK(gate_time(1, G) == doctest::Approx(832));
  CHECK(gate_time(2, G) == doctest::Approx(2 * gate_time(1, G)));
  CHECK(gate_time_for_angle(pi / 2, G) == doctest::Approx(832));
  CHECK(gate_time_for_angle(std::atan(std::sqrt(2.0)), 1.0) == doctest::Approx(1e3 * std::atan(std::sqrt(2.0)) / (2 * pi)));

  double sum = 0;
  for (auto const &g : device().inter_gates) sum += g.iswap_ns;
  CHECK(sum / 6 == doctest::Approx(763.8).epsilon(1e-4));

  Envelope shape{EnvelopeShape::FlatTop, 0, 40, 1.0, 0};
  double const T = gate_time_for_angle(pi / 2, 0.5, shape);
  shape.duration_ns = T;
  CHECK(2 * pi * 0.5 * shape.area_ns() * 1e-3 == doctest::Approx(pi / 2).epsilon(1e-9));
  Envelope gs{EnvelopeShape::Gaussian, 300, 40, 1.0, 0};
  double const peak = calibrate_peak_rate(pi / 2, gs);
  CHECK(2 * pi * peak * gs.area_ns() * 1e-3 == doctest::Approx(pi / 2).epsilon(1e-12));
}

TEST_CASE("DRAG correction")
{
  Envelope g{EnvelopeShape::Gaussian, 300, 40, 2.0, 0};
  auto const d = drag_correct(g, 56.3, 0);
  for (double t : {0.0, 50.0, 150.0, 299.0}) CHECK(d.eps_x(t) == g.eps_x(t));
  double const ix = simpson([&](double t) { return d.eps_x(t); }, 300);
  CHECK(ix == doctest::Approx(simpson([&](double t) { return g.eps_x(t); }, 300)));
  CHECK(std::abs(simpson([&](double t) { return d.eps_y(t); }, 300)) < 1e-10);
  for (double t : {20.0, 90.0, 140.0}) {
    CHECK(d.eps_y(t) == doctest::Approx(-d.eps_y(300 - t)).epsilon(1e-9));
    CHECK(d.eps_y(t) == doctest::Approx(-g.amplitude_MHz * g.shape_rate(t) / (2 * pi * 56.3)).epsilon(1e-12));
  }
  Envelope c{EnvelopeShape::Constant, 300, 0, 2.0, 0};
  auto const dc = drag_correct(c, 56.3, 0);
  for (double t : {0.0, 150.0, 299.0}) CHECK(dc.eps_y(t) == 0);
  CHECK_THROWS_AS(drag_correct(g, 0.5, 0), DomainError);
  CHECK_THROWS_AS(drag_correct(g, 10, 9500), DomainError);
}

TEST_CASE("ac-Stark detuning")
{
  CHECK(stark_detuning(0.0, 10, 10, 50, 60).delta_kHz == 0);
  for (double Delta : {50.0, 120.0}) {
    double const eta = 0.01, g = 40;
    double const x = eta * eta * g * g / (Delta * Delta);
    REQUIRE(x < 1e-3);
    auto const r = stark_detuning(eta, g, g, Delta, Delta);
    double const first = 2 * eta * eta * g * g / Delta; // MHz
    CHECK(r.delta_kHz * 1e-3 == doctest::Approx(first).epsilon(0.05));
    auto const flipped = stark_detuning(eta, g, g, -Delta, -Delta);
    CHECK(flipped.delta_kHz == doctest::Approx(-r.delta_kHz).epsilon(1e-9));
    // the root satisfies the condition it solves
    double const dl = r.delta_kHz * 1e-3;
    double const cond = dl / 2 + eta * eta * g * g / ((Delta - dl) * (Delta - dl)) * (-Delta + 1.5 * dl);
    CHECK(std::abs(cond) < 1e-9);
  }
}

TEST_CASE("protocol step sequences")
{
  auto const &d = device();
  auto const bell = compile_protocol("bell", d);
  CHECK(kinds(bell) == std::vector<StepKind>{StepKind::RotateQubit, StepKind::IntraIswap, StepKind::InterIswap,
                                             StepKind::IntraIswap, StepKind::Measure});
  CHECK(bell.steps[1].exponent == doctest::Approx(0.5));
  CHECK(bell.steps[2].targets == std::vector<std::string>{"C2", "C4"});

  auto const w = compile_protocol("v_swap_w_state", d);
  CHECK(kinds(w) == std::vector<StepKind>{StepKind::RotateQubit, StepKind::IntraIswap, StepKind::VIswap,
                                          StepKind::IntraIswap, StepKind::IntraIswap, StepKind::Measure});
  CHECK(w.steps[1].angle == doctest::Approx(std::atan(std::sqrt(2.0))));

  auto const ghz = compile_protocol("ghz", d);
  auto const k = kinds(ghz);
  auto const inter = std::find(k.begin(), k.end(), StepKind::InterIswap);
  auto const sel = std::find(k.begin(), k.end(), StepKind::SelectivePi);
  CHECK(inter != k.end());
  CHECK(sel != k.end());
  CHECK(inter < sel);

  for (auto const &name : protocol_names()) {
    CAPTURE(name);
    auto const s = compile_protocol(name, d);
    CHECK_NOTHROW(check_schedule(s, d));
    double end = 0;
    for (auto const &st : s.steps) end = std::max(end, st.end_ns());
    CHECK(s.total_duration_ns == doctest::Approx(end));
    CHECK(serialize_schedule(compile_protocol(name, d)) == serialize_schedule(s));
  }
  CHECK_THROWS_AS(compile_protocol("teleport", d), DomainError);
}

TEST_CASE("parallel swap uses two simultaneous tones")
{
  auto const &d = device();
  auto const s = compile_protocol("parallel_swap", d);
  auto const tones = pump_tones(s, d);
  REQUIRE(tones.size() >= 2);
  bool found = false;
  for (std::size_t i = 0; i < tones.size(); ++i)
    for (std::size_t j = i + 1; j < tones.size(); ++j)
      if (tones[i].start_ns < tones[j].start_ns + tones[j].envelope.duration_ns &&
          tones[j].start_ns < tones[i].start_ns + tones[i].envelope.duration_ns) {
        found = true;
        CHECK(tones[i].pump_GHz != doctest::Approx(tones[j].pump_GHz));
      }
  CHECK(found);
}

TEST_CASE("pumped exchange areas match the requested exponent")
{
  auto const &d = device();
  for (auto const &name : protocol_names()) {
    for (auto shape : {EnvelopeShape::Constant, EnvelopeShape::FlatTop}) {
      CompileOptions o;
      o.shape = shape;
      o.ramp_sigma_ns = shape == EnvelopeShape::FlatTop ? 20 : 0;
      auto const s = compile_protocol(name, d, o);
      auto const prog = lower_schedule(s, d);
      for (auto const &st : s.steps) {
        if (st.kind != StepKind::InterIswap) continue;
        for (auto const &t : prog.terms) {
          if (t.start_ns != st.start_ns || !t.is_exchange()) continue;
          if (!((t.mode_a == st.targets[0] && t.mode_b == st.targets[1]) ||
                (t.mode_a == st.targets[1] && t.mode_b == st.targets[0])))
            continue;
          // the drive window is half-open, so sample the closing edge from inside
          double const T = t.envelope.duration_ns;
          double const area = simpson([&](double x) { return std::abs(t.strength(t.start_ns + std::min(x, T * (1 - 1e-12)))); },
                                      T, 40000);
          CHECK(2 * pi * area * 1e-3 == doctest::Approx(st.exponent * pi / 2).epsilon(1e-6));
        }
      }
    }
  }
}

TEST_CASE("schedule round trip and ALAP layout")
{
  auto const &d = device();
  auto const s = compile_protocol("parallel_bell", d);
  auto const text = serialize_schedule(s);
  CHECK(serialize_schedule(parse_schedule(text)) == text);
  CHECK_THROWS_AS(parse_schedule("{}"), IoError);
  // every step starts at or after zero and the measurement is last per qubit
  for (auto const &st : s.steps) CHECK(st.start_ns >= 0);
  CHECK(s.record_time_ns() == doctest::Approx(s.total_duration_ns - d.defaults.measurement_time_ns / 2));
}

TEST_CASE("overlapping resources are rejected")
{
  auto const &d = device();
  auto s = compile_protocol("bell", d);
  auto clash = s.steps[2];
  clash.start_ns = s.steps[2].start_ns + 1;
  s.steps.push_back(clash);
  CHECK_THROWS_AS(check_schedule(s, d), DomainError);
}

} // TEST_SUITE
