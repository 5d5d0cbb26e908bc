#include "router/tomography.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>
#include <random>

#include <json.hpp>

#include "router/error.hpp"

namespace router {

namespace {

using cplx = std::complex<double>;

Eigen::Matrix2cd single_pauli(char c)
{
  Eigen::Matrix2cd m;
  switch (c) {
  case 'I': m << 1, 0, 0, 1; break;
  case 'X': m << 0, 1, 1, 0; break;
  case 'Y': m << 0, cplx(0, -1), cplx(0, 1), 0; break;
  case 'Z': m << 1, 0, 0, -1; break;
  default: throw DomainError(std::string("tomography: bad Pauli label '") + c + "'");
  }
  return m;
}

/// Basis change taking the eigenbasis of the label into the computational basis.
Eigen::Matrix2cd basis_rotation(char c)
{
  double const r = 1 / std::sqrt(2.0);
  Eigen::Matrix2cd u;
  switch (c) {
  case 'X': u << r, r, r, -r; break;                              // H
  case 'Y': u << r, cplx(0, -r), r, cplx(0, r); break;            // H S^dag
  default: u.setIdentity(); break;
  }
  return u;
}

Eigen::MatrixXcd kron_all(std::vector<Eigen::Matrix2cd> const &f)
{
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Identity(1, 1);
  for (auto const &m : f) {
    Eigen::MatrixXcd next(out.rows() * 2, out.cols() * 2);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) next.block(i * out.rows(), j * out.cols(), out.rows(), out.cols()) = m(i, j) * out;
    out = std::move(next);
  }
  return out;
}

int qubit_count(Eigen::MatrixXcd const &rho)
{
  long const d = rho.rows();
  if (rho.cols() != d || d < 2 || (d & (d - 1)) != 0)
    throw DomainError("tomography: state is not on a qubit register (reduce cavity factors first)");
  return static_cast<int>(std::log2(static_cast<double>(d)) + 0.5);
}

} // namespace

ConfusionMatrix ConfusionMatrix::symmetric(double f)
{
  ConfusionMatrix c;
  c.p << f, 1 - f, 1 - f, f;
  c.validate();
  return c;
}

void ConfusionMatrix::validate() const
{
  for (int r = 0; r < 2; ++r) {
    if (std::abs(p.row(r).sum() - 1) > 1e-12) throw DomainError("confusion: rows must sum to 1");
    if (p(r, r) < 0.5 || p(r, 1 - r) < 0) throw DomainError("confusion: diagonal must be at least 0.5");
  }
}

Eigen::MatrixXcd pauli_operator(std::string const &label)
{
  std::vector<Eigen::Matrix2cd> f;
  // kron_all puts later factors in the more significant position.
  for (auto it = label.rbegin(); it != label.rend(); ++it) f.push_back(single_pauli(*it));
  return kron_all(f);
}

std::vector<std::string> pauli_labels(int n)
{
  std::vector<std::string> out;
  long const total = 1L << (2 * n);
  for (long k = 1; k < total; ++k) {
    std::string s(n, 'I');
    long v = k;
    for (int q = n - 1; q >= 0; --q) {
      s[q] = "IXYZ"[v % 4];
      v /= 4;
    }
    out.push_back(s);
  }
  return out;
}

namespace {

/// Outcome distribution over reported bit strings for one setting.
std::vector<double> outcome_probabilities(Eigen::MatrixXcd const &rho, int n, MeasurementSetting const &s,
                                          std::vector<ConfusionMatrix> const &confusion)
{
  if (static_cast<int>(s.pauli.size()) != n) throw DomainError("tomography: setting length differs from qubit count");
  if (s.pauli.find_first_not_of('I') == std::string::npos) throw DomainError("tomography: all-identity setting");
  if (s.shots < 1) throw DomainError("tomography: shots must be positive");
  long const d = 1L << n;
  std::vector<Eigen::Matrix2cd> f;
  for (auto it = s.pauli.rbegin(); it != s.pauli.rend(); ++it) f.push_back(basis_rotation(*it));
  Eigen::MatrixXcd const u = kron_all(f);
  Eigen::MatrixXcd const r = u * rho * u.adjoint();

  std::vector<double> p(d, 0.0);
  for (long t = 0; t < d; ++t) {
    double const pt = std::max(0.0, r(t, t).real());
    for (long rep = 0; rep < d; ++rep) {
      double w = 1;
      for (int q = 0; q < n; ++q) {
        int const bt = (t >> (n - 1 - q)) & 1, br = (rep >> (n - 1 - q)) & 1;
        w *= confusion[q].p(bt, br);
      }
      p[rep] += pt * w;
    }
  }
  return p;
}

double parity_expectation(std::string const &pauli, std::vector<double> const &weights)
{
  int const n = static_cast<int>(pauli.size());
  double acc = 0, total = 0;
  for (std::size_t rep = 0; rep < weights.size(); ++rep) {
    int parity = 0;
    for (int q = 0; q < n; ++q)
      if (pauli[q] != 'I') parity ^= (rep >> (n - 1 - q)) & 1;
    acc += (parity ? -1.0 : 1.0) * weights[rep];
    total += weights[rep];
  }
  return acc / total;
}

void check_confusion(std::vector<ConfusionMatrix> const &confusion, int n)
{
  if (static_cast<int>(confusion.size()) != n) throw DomainError("tomography: one confusion matrix per qubit");
  for (auto const &c : confusion) c.validate();
}

} // namespace

std::vector<TomographyRecord> sample_measurements(Eigen::MatrixXcd const &rho,
                                                  std::vector<MeasurementSetting> const &settings,
                                                  std::vector<ConfusionMatrix> const &confusion, std::uint64_t seed)
{
  int const n = qubit_count(rho);
  check_confusion(confusion, n);
  std::vector<TomographyRecord> out;
  for (std::size_t k = 0; k < settings.size(); ++k) {
    auto const &s = settings[k];
    auto const p = outcome_probabilities(rho, n, s, confusion);
    std::mt19937_64 gen(seed + k);
    std::discrete_distribution<long> dist(p.begin(), p.end());
    TomographyRecord rec{s, 0, std::vector<long>(p.size(), 0)};
    for (long i = 0; i < s.shots; ++i) ++rec.counts[dist(gen)];
    std::vector<double> w(rec.counts.begin(), rec.counts.end());
    rec.expectation = parity_expectation(s.pauli, w);
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<TomographyRecord> exact_measurements(Eigen::MatrixXcd const &rho,
                                                 std::vector<MeasurementSetting> const &settings,
                                                 std::vector<ConfusionMatrix> const &confusion)
{
  int const n = qubit_count(rho);
  check_confusion(confusion, n);
  std::vector<TomographyRecord> out;
  for (auto const &s : settings) {
    auto const p = outcome_probabilities(rho, n, s, confusion);
    out.push_back({s, parity_expectation(s.pauli, p), {}});
  }
  return out;
}

std::vector<MeasurementSetting> full_settings(int n_qubits, long shots)
{
  std::vector<MeasurementSetting> out;
  for (auto const &l : pauli_labels(n_qubits)) out.push_back({l, shots});
  return out;
}

Reconstruction reconstruct(std::vector<TomographyRecord> const &records, int n, bool allow_subset)
{
  if (n < 1) throw DomainError("tomography: need at least one qubit");
  std::map<std::string, double> ev;
  for (auto const &r : records) ev[r.setting.pauli] = r.expectation;
  long const d = 1L << n;
  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Identity(d, d);
  for (auto const &label : pauli_labels(n)) {
    auto it = ev.find(label);
    if (it == ev.end()) {
      if (!allow_subset) throw DomainError("tomography: missing setting " + label);
      continue;
    }
    rho += it->second * pauli_operator(label);
  }
  rho /= static_cast<double>(d);
  return {rho, project_psd(rho)};
}

Eigen::MatrixXcd project_psd(Eigen::MatrixXcd const &rho)
{
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (rho + rho.adjoint()));
  Eigen::VectorXd lam = es.eigenvalues() / es.eigenvalues().sum();
  // Euclidean projection of the spectrum onto the probability simplex.
  std::vector<double> s(lam.data(), lam.data() + lam.size());
  std::sort(s.begin(), s.end(), std::greater<>());
  double cum = 0, shift = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    cum += s[i];
    double const t = (cum - 1) / double(i + 1);
    if (s[i] - t > 0) shift = t;
  }
  for (long i = 0; i < lam.size(); ++i) lam(i) = std::max(lam(i) - shift, 0.0);
  return es.eigenvectors() * lam.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
}

namespace {

Eigen::MatrixXcd psd_sqrt(Eigen::MatrixXcd const &m, char const *what)
{
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (m + m.adjoint()));
  Eigen::VectorXd lam = es.eigenvalues();
  if (lam.minCoeff() < -1e-8) throw DomainError(std::string("fidelity: ") + what + " is not positive semidefinite");
  lam = lam.cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * lam.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
}

} // namespace

double fidelity(Eigen::MatrixXcd const &rho, Eigen::MatrixXcd const &sigma)
{
  if (rho.rows() != sigma.rows() || rho.cols() != sigma.cols()) throw DomainError("fidelity: dimension mismatch");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> check(0.5 * (sigma + sigma.adjoint()), Eigen::EigenvaluesOnly);
  if (check.eigenvalues().minCoeff() < -1e-8) throw DomainError("fidelity: second argument is not positive semidefinite");
  Eigen::MatrixXcd const s = psd_sqrt(rho, "first argument");
  Eigen::MatrixXcd const inner = s * sigma * s;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (inner + inner.adjoint()), Eigen::EigenvaluesOnly);
  double const tr = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  return std::clamp(tr * tr, 0.0, 1.0);
}

BootstrapResult bootstrap(std::vector<double> const &x, long n_boot, std::uint64_t seed)
{
  long const n = static_cast<long>(x.size());
  if (n < 2) throw DomainError("bootstrap: need at least two samples");
  if (n_boot < 100) throw DomainError("bootstrap: need at least 100 resamples");
  std::mt19937_64 gen(seed);
  std::uniform_int_distribution<long> pick(0, n - 1);
  std::vector<double> means(n_boot);
  for (auto &m : means) {
    double acc = 0;
    for (long i = 0; i < n; ++i) acc += x[pick(gen)];
    m = acc / n;
  }
  double const mu = std::accumulate(means.begin(), means.end(), 0.0) / n_boot;
  double ss = 0;
  for (double m : means) ss += (m - mu) * (m - mu);
  double const s = std::sqrt(ss / (n_boot - 1));
  double const est = std::accumulate(x.begin(), x.end(), 0.0) / n;
  return {est, std::sqrt(double(n) / (n - 1)) * s, n, n_boot};
}

std::vector<PauliBar> pauli_bars(Eigen::MatrixXcd const &rho)
{
  int const n = qubit_count(rho);
  std::vector<PauliBar> out;
  for (auto const &l : pauli_labels(n)) out.push_back({l, (rho * pauli_operator(l)).trace().real()});
  return out;
}

void write_tomography_csv(std::ostream &out, std::vector<TomographyRecord> const &records)
{
  out << "setting,expectation,shots,sigma\n";
  out.precision(10);
  for (auto const &r : records) {
    double const e = r.expectation;
    double const sigma = std::sqrt(std::max(0.0, 1 - e * e) / r.setting.shots);
    out << r.setting.pauli << ',' << e << ',' << r.setting.shots << ',' << sigma << '\n';
  }
}

std::string density_matrix_json(Eigen::MatrixXcd const &rho, std::vector<int> const &dims)
{
  nlohmann::ordered_json j;
  j["dims"] = dims;
  auto data = nlohmann::ordered_json::array();
  for (long r = 0; r < rho.rows(); ++r)
    for (long c = 0; c < rho.cols(); ++c) data.push_back({rho(r, c).real(), rho(r, c).imag()});
  j["data"] = data;
  return j.dump() + "\n";
}

} // namespace router
