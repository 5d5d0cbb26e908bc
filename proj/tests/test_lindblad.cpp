#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>
#include <sstream>

#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include "oracles.hpp"
#include "router/error.hpp"
#include "router/lindblad.hpp"
#include "support.hpp"

using namespace router;
using std::numbers::pi;

namespace {

Eigen::MatrixXcd dense(Operator const &op) { return Eigen::MatrixXcd(op); }

DeviceConfig single_mode_device(double T1, double T2)
{
  auto j = testing::device_json();
  auto &q = testing::mode_json(j, "Q2");
  q["T1_us"] = T1;
  q["T2_us"] = T2;
  q["alternates"] = nlohmann::json::array();
  return testing::parse(j);
}

} // namespace

TEST_SUITE("lindblad") {

TEST_CASE("Fock operators")
{
  HilbertSpace s({{"q", 2}, {"c", 4}});
  CHECK(s.total_dim() == 8);
  CHECK(s.basis_index({1, 2}) == 6);
  Eigen::MatrixXcd const a = dense(annihilation(s, 1));
  for (int n = 1; n < 4; ++n) {
    CHECK((a * fock_state(s, {0, n})).isApprox(std::sqrt(double(n)) * fock_state(s, {0, n - 1})));
  }
  CHECK((a.adjoint() * a).isApprox(dense(number(s, 1))));
  Eigen::MatrixXcd sx(2, 2);
  sx << 0, 1, 1, 0;
  Eigen::MatrixXcd const kron = dense(embed(s, 0, sx));
  CHECK(kron.isApprox(Eigen::MatrixXcd(Eigen::kroneckerProduct(sx, Eigen::MatrixXcd::Identity(4, 4)))));
  CHECK_THROWS_AS(HilbertSpace({{"a", 3}, {"b", 3}}, 8), DomainError);

  Eigen::VectorXcd const coh = coherent_state(20, cplx(0.7, -0.2));
  CHECK(coh.norm() == doctest::Approx(1));
  HilbertSpace one({{"c", 20}});
  CHECK(expectation(coh * coh.adjoint(), number(one, 0)) == doctest::Approx(std::norm(cplx(0.7, -0.2))).epsilon(1e-9));
}

TEST_CASE("partial trace")
{
  HilbertSpace s({{"a", 2}, {"b", 3}, {"c", 2}});
  Eigen::VectorXcd const psi = product_state({Eigen::Vector2cd(0.6, 0.8), coherent_state(3, 0.4), Eigen::Vector2cd(1, 0)});
  Eigen::MatrixXcd const rho = psi * psi.adjoint();
  Eigen::MatrixXcd const ra = partial_trace(s, rho, {"a"});
  Eigen::Vector2cd const a(0.6, 0.8);
  CHECK(ra.isApprox(a * a.adjoint(), 1e-12));
  Eigen::MatrixXcd const rca = partial_trace(s, rho, {"c", "a"});
  Eigen::VectorXcd const ca = product_state({Eigen::Vector2cd(1, 0), a});
  CHECK(rca.isApprox(ca * ca.adjoint(), 1e-12));
}

TEST_CASE("expectation values")
{
  HilbertSpace s({{"a", 2}, {"b", 2}});
  Eigen::VectorXcd bell = oracles::ket(s, {{{0, 1}, 1 / std::sqrt(2.0)}, {{1, 0}, 1 / std::sqrt(2.0)}});
  Eigen::MatrixXcd const rho = bell * bell.adjoint();
  Eigen::MatrixXcd z(2, 2);
  z << 1, 0, 0, -1;
  Eigen::MatrixXcd const zz = Eigen::kroneckerProduct(z, z);
  double im = 1;
  CHECK(expectation(rho, zz, &im) == doctest::Approx(-1));
  CHECK(std::abs(im) < 1e-12);
  CHECK(expectation(rho, Eigen::MatrixXcd(Eigen::MatrixXcd::Identity(4, 4))) == doctest::Approx(1));
  CHECK(expectation(rho, number(s, 0)) == doctest::Approx(0.5));
  CHECK_THROWS_AS(expectation(rho, Eigen::MatrixXcd(Eigen::MatrixXcd::Identity(3, 3))), DomainError);
}

TEST_CASE("exchange unitary against the matrix exponential")
{
  HilbertSpace s({{"a", 3}, {"b", 4}, {"c", 2}});
  Eigen::MatrixXcd const a = dense(annihilation(s, 0)), b = dense(annihilation(s, 1));
  Eigen::MatrixXcd const gen = a.adjoint() * b + a * b.adjoint();
  for (double theta : {0.3, pi / 4, 2.2}) {
    Eigen::MatrixXcd const ref = (cplx(0, -theta) * gen).exp();
    // the truncated generator is exponentiated within the truncated space in both cases
    CHECK((dense(exchange_unitary(s, "a", "b", theta)) - ref).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("exchange tables")
{
  for (auto const &c : oracles::exchange_table_cases()) {
    CAPTURE(c.name);
    Eigen::VectorXcd const out = apply_exchange_unitary(c.initial, c.space, "a", "b", c.theta / (pi / 2));
    CHECK(oracles::infidelity(out, c.expected) < 1e-10);
  }
  // exact phases where the tables are phase-exact
  HilbertSpace qq({{"a", 2}, {"b", 2}});
  Eigen::VectorXcd const out = apply_exchange_unitary(oracles::ket(qq, {{{1, 0}, 1.0}}), qq, "a", "b", 1.0);
  CHECK((out - oracles::ket(qq, {{{0, 1}, -oracles::I}})).norm() < 1e-12);
}

TEST_CASE("integration reproduces the exchange unitary on every (3,3) basis state")
{
  HilbertSpace s({{"a", 3}, {"b", 3}});
  for (double p : {0.5, 1.0, 1.5}) {
    for (long i = 0; i < s.total_dim(); ++i) {
      Eigen::VectorXcd e = Eigen::VectorXcd::Zero(9);
      e(i) = 1;
      Eigen::MatrixXcd const rho = oracles::integrate_exchange(s, e, p * pi / 2);
      Eigen::VectorXcd const ref = apply_exchange_unitary(e, s, "a", "b", p);
      CHECK(oracles::state_fidelity(rho, ref) > 1 - 1e-6);
    }
  }
}

TEST_CASE("two-mode exchange transfers fully at 1/(4G)")
{
  HilbertSpace s({{"a", 2}, {"b", 2}});
  HamiltonianModel h(s);
  double const G = 0.3;
  double const T = 1e3 / (4 * G);
  h.add_exchange("a", "b", [G](double) { return cplx(G); }, 0, T);
  std::vector<double> times;
  for (int k = 0; k <= 10; ++k) times.push_back(T * k / 10);
  auto const tr = integrate(DensityMatrix::pure(fock_state(s, {1, 0})), h, {}, T, times);
  long const i01 = s.basis_index({0, 1});
  for (auto const &smp : tr.samples) {
    double const expect = std::pow(std::sin(2 * pi * G * smp.time_ns * 1e-3), 2);
    CHECK(smp.rho(i01, i01).real() == doctest::Approx(expect).epsilon(1e-6));
  }
  CHECK(tr.final_state.rho(i01, i01).real() > 1 - 1e-6);
}

TEST_CASE("V configuration empties the source at 1/(4 sqrt2 G)")
{
  HilbertSpace s({{"s", 2}, {"t1", 2}, {"t2", 2}});
  HamiltonianModel h(s);
  double const G = 0.25;
  double const T = 1e3 / (4 * std::sqrt(2.0) * G);
  h.add_exchange("t1", "s", [G](double) { return cplx(G); }, 0, T);
  h.add_exchange("t2", "s", [G](double) { return cplx(G); }, 0, T);
  IntegrationOptions o;
  o.tol = 1e-10;
  auto const tr = integrate(DensityMatrix::pure(fock_state(s, {1, 0, 0})), h, {}, T, {}, o);
  auto const &r = tr.final_state.rho;
  CHECK(r(s.basis_index({1, 0, 0}), s.basis_index({1, 0, 0})).real() < 1e-8);
  CHECK(r(s.basis_index({0, 1, 0}), s.basis_index({0, 1, 0})).real() == doctest::Approx(0.5).epsilon(1e-7));
  CHECK(r(s.basis_index({0, 0, 1}), s.basis_index({0, 0, 1})).real() == doctest::Approx(0.5).epsilon(1e-7));
}

TEST_CASE("analytic T1 and T2 decay")
{
  auto const d = single_mode_device(60, 18);
  HilbertSpace s({{"Q2", 2}});
  auto const ops = collapse_operators(d, s);
  CHECK(ops.size() == 2);
  HamiltonianModel h(s);

  std::vector<double> times{10e3, 30e3, 60e3};
  auto const t1 = integrate(DensityMatrix::pure(fock_state(s, {1})), h, ops, 60e3, times);
  for (auto const &smp : t1.samples)
    CHECK(std::abs(smp.rho(1, 1).real() - std::exp(-smp.time_ns * 1e-3 / 60)) < 1e-4);
  CHECK(std::abs(t1.final_state.rho(1, 1).real() - std::exp(-1.0)) < 1e-4);

  Eigen::VectorXcd plus(2);
  plus << 1 / std::sqrt(2.0), 1 / std::sqrt(2.0);
  auto const t2 = integrate(DensityMatrix::pure(plus), h, ops, 36e3, {5e3, 18e3, 36e3});
  for (auto const &smp : t2.samples)
    CHECK(std::abs(2 * std::abs(smp.rho(0, 1)) - std::exp(-smp.time_ns * 1e-3 / 18)) < 1e-4);

  auto const d2 = single_mode_device(23, 46);
  CHECK(collapse_operators(d2, s).size() == 1);

  // H = 0, lossy mode from |1> at the default tolerance
  HilbertSpace c({{"C2", 3}});
  auto const tc = integrate(DensityMatrix::pure(fock_state(c, {1})), HamiltonianModel(c),
                            collapse_operators(testing::device(), c, CoherencePolicy::ProbeDecay), 20e3);
  CHECK(std::abs(tc.final_state.rho(1, 1).real() - std::exp(-20.0 / 23)) < 1e-6);
}

TEST_CASE("solver invariants and convergence")
{
  auto const &d = testing::device();
  HilbertSpace s({{"Q2", 2}, {"C2", 3}, {"C4", 3}});
  HamiltonianModel h(s);
  h.add_exchange("C2", "C4", [](double t) { return cplx(0.3 * std::sin(t * 1e-3), 0.1); }, 0, 2000);
  h.add_exchange("Q2", "C2", [](double) { return cplx(0.5); }, 100, 600);
  h.add_drive("Q2", [](double) { return cplx(0, 2.0); }, 0, 250);
  CHECK((dense(h.at(300)) - dense(h.at(300)).adjoint()).cwiseAbs().maxCoeff() < 1e-14);
  auto const ops = collapse_operators(d, s);
  std::vector<double> times;
  for (int k = 0; k <= 40; ++k) times.push_back(50.0 * k);
  IntegrationOptions loose;
  loose.tol = 1e-6;
  IntegrationOptions tight;
  tight.tol = 5e-7;
  auto const a = integrate(DensityMatrix::pure(fock_state(s, {0, 0, 0})), h, ops, 2000, times, loose);
  auto const b = integrate(DensityMatrix::pure(fock_state(s, {0, 0, 0})), h, ops, 2000, times, tight);
  REQUIRE(a.samples.size() == b.samples.size());
  for (std::size_t k = 0; k < a.samples.size(); ++k) {
    auto const diag = diagnose(a.samples[k].rho);
    CHECK(diag.trace_drift < 1e-6);
    CHECK(diag.hermiticity_residue < 1e-10);
    CHECK(diag.min_eigenvalue >= -1e-8);
    double const dp = (a.samples[k].rho.diagonal() - b.samples[k].rho.diagonal()).cwiseAbs().maxCoeff();
    CHECK(dp < 10 * loose.tol);
  }
}

TEST_CASE("trajectory csv and snapshots")
{
  HilbertSpace s({{"a", 2}, {"b", 3}});
  HamiltonianModel h(s);
  h.add_exchange("a", "b", [](double) { return cplx(1.0); }, 0, 100);
  auto const tr = integrate(DensityMatrix::pure(fock_state(s, {1, 0})), h, {}, 100, {0, 50, 100});
  std::ostringstream out;
  write_trajectory_csv(out, tr, {{"n_a", number(s, 0)}, {"n_b", number(s, 1)}});
  std::string const text = out.str();
  CHECK(text.rfind("time_ns,n_a,n_b\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 4);

  auto const path = std::filesystem::temp_directory_path() / "router_snapshot_test.rho";
  write_snapshot(path, s, tr.final_state);
  std::vector<int> dims;
  auto const back = read_snapshot(path, &dims);
  CHECK(dims == std::vector<int>{2, 3});
  CHECK(back.time_ns == tr.final_state.time_ns);
  CHECK((back.rho - tr.final_state.rho).cwiseAbs().maxCoeff() == 0);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(read_snapshot(path), IoError);
}

} // TEST_SUITE
