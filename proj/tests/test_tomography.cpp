#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include <json.hpp>

#include "router/error.hpp"
#include "router/tomography.hpp"

using namespace router;
using Eigen::MatrixXcd;
using Eigen::VectorXcd;
using cplx = std::complex<double>;

namespace {

MatrixXcd bell()
{
  VectorXcd v = VectorXcd::Zero(4);
  v(1) = v(2) = 1 / std::sqrt(2.0);
  return v * v.adjoint();
}

MatrixXcd random_state(int d, std::mt19937_64 &gen)
{
  std::normal_distribution<double> n;
  MatrixXcd a(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = cplx(n(gen), n(gen));
  MatrixXcd r = a * a.adjoint();
  return r / r.trace().real();
}

MatrixXcd random_unitary(int d, std::mt19937_64 &gen)
{
  std::normal_distribution<double> n;
  MatrixXcd a(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = cplx(n(gen), n(gen));
  return Eigen::HouseholderQR<MatrixXcd>(a).householderQ();
}

std::vector<ConfusionMatrix> perfect(int n) { return std::vector<ConfusionMatrix>(n); }

} // namespace

TEST_SUITE("tomography") {

TEST_CASE("Pauli labels and operators")
{
  auto const l = pauli_labels(2);
  CHECK(l.size() == 15);
  CHECK(l.front() == "IX");
  CHECK(l.back() == "ZZ");
  MatrixXcd const zi = pauli_operator("ZI");
  CHECK(zi(0, 0) == cplx(1));
  CHECK(zi(2, 2) == cplx(-1));
  CHECK_THROWS_AS(pauli_operator("ZQ"), DomainError);
}

TEST_CASE("Pauli bars")
{
  auto bars = pauli_bars(bell());
  auto value = [&](std::string const &k) {
    for (auto const &b : bars)
      if (b.label == k) return b.value;
    return 99.0;
  };
  CHECK(value("XX") == doctest::Approx(1));
  CHECK(value("YY") == doctest::Approx(1));
  CHECK(value("ZZ") == doctest::Approx(-1));
  CHECK(value("ZI") == doctest::Approx(0));
  for (auto const &b : pauli_bars(MatrixXcd::Identity(4, 4) / 4.0)) CHECK(b.value == doctest::Approx(0));
  MatrixXcd z00 = MatrixXcd::Zero(4, 4);
  z00(0, 0) = 1;
  bars = pauli_bars(z00);
  CHECK(value("ZI") == 1);
  CHECK(value("IZ") == 1);
  CHECK(value("ZZ") == 1);
  CHECK(value("XI") == 0);
}

TEST_CASE("sampling")
{
  MatrixXcd ground = MatrixXcd::Zero(2, 2);
  ground(0, 0) = 1;
  auto const r = sample_measurements(ground, {{"Z", 10000}}, perfect(1), 1);
  CHECK(r[0].expectation == 1);
  CHECK(r[0].counts[0] == 10000);

  auto const zz = sample_measurements(bell(), {{"ZZ", 10000}}, perfect(2), 5);
  CHECK(zz[0].expectation == -1);

  MatrixXcd excited = MatrixXcd::Zero(2, 2);
  excited(1, 1) = 1;
  auto const c = sample_measurements(excited, {{"Z", 10000}}, {ConfusionMatrix::symmetric(0.936)}, 9);
  CHECK(c[0].expectation == doctest::Approx(-(2 * 0.936 - 1)).epsilon(0.05));
  CHECK(std::abs(c[0].expectation + 0.872) < 4 * std::sqrt((1 - 0.872 * 0.872) / 10000));
  auto const ex = exact_measurements(excited, {{"Z", 1}}, {ConfusionMatrix::symmetric(0.936)});
  CHECK(ex[0].expectation == doctest::Approx(-0.872).epsilon(1e-12));

  // deterministic per seed, independent of the other settings
  auto const a = sample_measurements(bell(), full_settings(2, 500), perfect(2), 11);
  auto const b = sample_measurements(bell(), full_settings(2, 500), perfect(2), 11);
  for (std::size_t k = 0; k < a.size(); ++k) CHECK(a[k].counts == b[k].counts);
  auto const one = sample_measurements(bell(), {{a[3].setting.pauli, 500}}, perfect(2), 11 + 3);
  CHECK(one[0].counts == a[3].counts);

  CHECK_THROWS_AS(sample_measurements(MatrixXcd::Identity(6, 6) / 6.0, {{"Z", 1}}, perfect(1), 1), DomainError);
  ConfusionMatrix bad;
  bad.p << 0.4, 0.6, 0.6, 0.4;
  CHECK_THROWS_AS(bad.validate(), DomainError);
}

TEST_CASE("reconstruction")
{
  auto const exact = exact_measurements(bell(), full_settings(2, 1), perfect(2));
  auto const rec = reconstruct(exact, 2);
  CHECK((rec.raw - bell()).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((rec.projected - bell()).cwiseAbs().maxCoeff() < 1e-10);

  std::vector<TomographyRecord> zero;
  for (auto const &s : full_settings(2, 1)) zero.push_back({s, 0.0, {}});
  CHECK((reconstruct(zero, 2).raw - MatrixXcd::Identity(4, 4) / 4.0).cwiseAbs().maxCoeff() < 1e-15);

  std::mt19937_64 gen(42);
  for (int k = 0; k < 100; ++k) {
    MatrixXcd const rho = random_state(4, gen);
    auto const r = reconstruct(exact_measurements(rho, full_settings(2, 1), perfect(2)), 2);
    CHECK((r.raw - rho).cwiseAbs().maxCoeff() < 1e-10);
  }

  auto const sampled = reconstruct(sample_measurements(bell(), full_settings(2, 10000), perfect(2), 3), 2);
  CHECK(fidelity(sampled.projected, bell()) >= 0.99);

  auto partial = exact;
  partial.pop_back();
  CHECK_THROWS_AS(reconstruct(partial, 2), DomainError);
  CHECK_NOTHROW(reconstruct(partial, 2, true));
}

TEST_CASE("PSD projection")
{
  MatrixXcd m = MatrixXcd::Zero(3, 3);
  m(0, 0) = 0.7;
  m(1, 1) = 0.45;
  m(2, 2) = -0.15;
  MatrixXcd const p = project_psd(m);
  CHECK(p.trace().real() == doctest::Approx(1));
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(p);
  CHECK(es.eigenvalues().minCoeff() >= -1e-15);
  // simplex projection of (0.7, 0.45, -0.15) is (0.625, 0.375, 0)
  CHECK(p(0, 0).real() == doctest::Approx(0.625));
  CHECK(p(1, 1).real() == doctest::Approx(0.375));

  // clipping costs no more fidelity than the negativity it removes
  std::mt19937_64 gen(8);
  for (int k = 0; k < 20; ++k) {
    MatrixXcd const truth = random_state(4, gen);
    auto const rec = reconstruct(sample_measurements(truth, full_settings(2, 300), perfect(2), 100 + k), 2);
    Eigen::SelfAdjointEigenSolver<MatrixXcd> raw(rec.raw);
    double neg = 0;
    for (long i = 0; i < raw.eigenvalues().size(); ++i) neg += std::max(0.0, -raw.eigenvalues()(i));
    double const f_proj = fidelity(rec.projected, truth);
    double const f_raw = fidelity(project_psd(truth), truth); // 1
    CHECK(f_raw == doctest::Approx(1));
    double const overlap_raw = (rec.raw * truth).trace().real();
    CHECK(f_proj >= overlap_raw - 2 * neg - 1e-9);
  }
}

TEST_CASE("Uhlmann fidelity")
{
  MatrixXcd z0 = MatrixXcd::Zero(2, 2), z1 = MatrixXcd::Zero(2, 2);
  z0(0, 0) = 1;
  z1(1, 1) = 1;
  CHECK(fidelity(z0, z0) == doctest::Approx(1));
  CHECK(fidelity(z0, z1) == doctest::Approx(0));
  CHECK(fidelity(bell(), MatrixXcd::Identity(4, 4) / 4.0) == doctest::Approx(0.25));
  std::mt19937_64 gen(17);
  for (int k = 0; k < 30; ++k) {
    MatrixXcd const a = random_state(4, gen), b = random_state(4, gen), u = random_unitary(4, gen);
    double const f = fidelity(a, b);
    CHECK(fidelity(b, a) == doctest::Approx(f).epsilon(1e-10));
    CHECK(fidelity(u * a * u.adjoint(), u * b * u.adjoint()) == doctest::Approx(f).epsilon(1e-9));
  }
  MatrixXcd neg = z0;
  neg(1, 1) = -0.1;
  CHECK_THROWS_AS(fidelity(neg, z0), DomainError);
}

TEST_CASE("bootstrap")
{
  CHECK(bootstrap(std::vector<double>(50, 0.3), 200, 1).sigma < 1e-12);
  std::mt19937_64 gen(5);
  std::bernoulli_distribution coin(0.5);
  std::vector<double> sigmas;
  for (long n : {100L, 1000L, 10000L}) {
    std::vector<double> x(n);
    for (auto &v : x) v = coin(gen);
    auto const r = bootstrap(x, 1000, 7);
    sigmas.push_back(r.sigma);
    CHECK(r.sigma == doctest::Approx(std::sqrt(0.25 / n)).epsilon(0.10));
  }
  CHECK(sigmas[0] / sigmas[1] == doctest::Approx(std::sqrt(10.0)).epsilon(0.15));
  CHECK(sigmas[1] / sigmas[2] == doctest::Approx(std::sqrt(10.0)).epsilon(0.15));

  // N = 2 over {0, 1}: resample means 0, 1/2, 1/2, 1 give s = sqrt(1/8), sigma = 1/2
  auto const two = bootstrap({0.0, 1.0}, 200000, 3);
  CHECK(two.sigma == doctest::Approx(0.5).epsilon(0.01));
  CHECK_THROWS_AS(bootstrap({1.0}, 200, 1), DomainError);
  CHECK_THROWS_AS(bootstrap({1.0, 2.0}, 99, 1), DomainError);
}

TEST_CASE("serialisation")
{
  std::ostringstream out;
  write_tomography_csv(out, exact_measurements(bell(), full_settings(2, 100), perfect(2)));
  CHECK(out.str().rfind("setting,expectation,shots,sigma\nIX,", 0) == 0);
  auto const j = nlohmann::json::parse(density_matrix_json(bell(), {2, 2}));
  CHECK(j["dims"] == std::vector<int>{2, 2});
  CHECK(j["data"].size() == 16);
  CHECK(j["data"][5][0].get<double>() == doctest::Approx(0.5));
}

} // TEST_SUITE
