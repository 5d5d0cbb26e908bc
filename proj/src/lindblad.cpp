#include "router/lindblad.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "router/error.hpp"

namespace router {

namespace {

constexpr double kTwoPi = 2 * std::numbers::pi;
constexpr cplx kI{0.0, 1.0};

Operator adjoint(Operator const &op) { return Operator(op.adjoint()); }

bool is_diagonal(Operator const &op)
{
  for (int k = 0; k < op.outerSize(); ++k)
    for (Operator::InnerIterator it(op, k); it; ++it)
      if (it.row() != it.col() && it.value() != cplx(0)) return false;
  return true;
}

/// At most one nonzero per row: C(i, src[i]) = w[i]. Covers a, a^dag and
/// their products with diagonals, which is every collapse operator we build.
struct Monomial
{
  std::vector<long> row, src;
  std::vector<cplx> w;
};

std::optional<Monomial> as_monomial(Operator const &op)
{
  std::vector<long> src(op.rows(), -1);
  std::vector<cplx> w(op.rows());
  for (int k = 0; k < op.outerSize(); ++k)
    for (Operator::InnerIterator it(op, k); it; ++it) {
      if (it.value() == cplx(0)) continue;
      if (src[it.row()] >= 0) return std::nullopt;
      src[it.row()] = it.col();
      w[it.row()] = it.value();
    }
  Monomial m;
  for (long i = 0; i < op.rows(); ++i)
    if (src[i] >= 0) {
      m.row.push_back(i);
      m.src.push_back(src[i]);
      m.w.push_back(w[i]);
    }
  return m;
}

/// Matrix-free Lindblad right-hand side in 1/us.
///
/// drho = K + K^dag + sum_j C_j rho C_j^dag + W o rho, with K = -i H_eff rho.
/// Since rho is Hermitian, K^dag = i rho H_eff^dag is formed as a dense-times-sparse
/// product, which Eigen runs column-wise and several times faster than the
/// sparse-times-dense form. Diagonal collapse operators act elementwise through
/// W; monomial ones through an index gather; anything else via sparse products.
class MasterEquation
{
public:
  MasterEquation(HamiltonianModel const &model, std::vector<CollapseOperator> const &collapse)
  {
    long const n = model.space.total_dim();
    Operator heff = model.static_part;
    std::vector<Eigen::VectorXcd> diag;
    for (auto const &c : collapse) {
      if (c.op.rows() != n) throw DomainError("lindblad: collapse operator '" + c.label + "' has wrong dimension");
      if (is_diagonal(c.op)) {
        diag.push_back(c.op.diagonal());
        continue;
      }
      Operator cdc = adjoint(c.op) * c.op;
      heff -= cplx(0, 0.5) * cdc;
      if (auto m = as_monomial(c.op))
        monomials_.push_back(std::move(*m));
      else
        jumps_.push_back({c.op, adjoint(c.op)});
    }
    b0_ = adjoint(heff);
    b0_.makeCompressed();
    if (!diag.empty()) {
      // W_ij = sum_k l_i conj(l_j) - |l_i|^2 / 2 - |l_j|^2 / 2
      w_ = Eigen::MatrixXcd::Zero(n, n);
      for (auto const &l : diag)
        for (long j = 0; j < n; ++j)
          for (long i = 0; i < n; ++i)
            w_(i, j) += l(i) * std::conj(l(j)) - 0.5 * std::norm(l(i)) - 0.5 * std::norm(l(j));
    }
    for (auto const &dr : model.drives) drives_.push_back({&dr, adjoint(dr.generator)});
  }

  /// Drives active anywhere inside (t0, t1); evaluated once per breakpoint segment.
  std::vector<int> active(double t0_ns, double t1_ns) const
  {
    double const mid = 0.5 * (t0_ns + t1_ns);
    std::vector<int> out;
    for (std::size_t k = 0; k < drives_.size(); ++k)
      if (drives_[k].drive->start_ns <= mid && mid < drives_[k].drive->stop_ns) out.push_back(static_cast<int>(k));
    return out;
  }

  void operator()(double t_ns, Eigen::MatrixXcd const &rho, std::vector<int> const &active,
                  Eigen::MatrixXcd &out) const
  {
    // out = i rho H_eff^dag, then out + out^dag.
    out.noalias() = rho * b0_;
    for (int k : active) {
      auto const &d = drives_[k];
      cplx const f = kTwoPi * d.drive->coefficient(t_ns);
      if (f == cplx(0)) continue;
      // H_drive = f G + conj(f) G^dag is Hermitian, so it enters H_eff^dag unchanged.
      out.noalias() += f * (rho * d.drive->generator);
      out.noalias() += std::conj(f) * (rho * d.adj);
    }
    out *= kI;
    out += out.adjoint().eval();
    for (auto const &m : monomials_) {
      std::size_t const cnt = m.row.size();
      for (std::size_t b = 0; b < cnt; ++b) {
        cplx const wb = std::conj(m.w[b]);
        cplx const *src = rho.col(m.src[b]).data();
        cplx *dst = out.col(m.row[b]).data();
        for (std::size_t a = 0; a < cnt; ++a) dst[m.row[a]] += m.w[a] * wb * src[m.src[a]];
      }
    }
    for (auto const &c : jumps_) {
      Eigen::MatrixXcd const x = rho * c.adj; // rho C^dag
      out.noalias() += c.op * x;
    }
    if (w_.size()) out.array() += w_.array() * rho.array();
  }

private:
  struct Drive
  {
    DriveComponent const *drive;
    Operator adj;
  };
  struct Jump
  {
    Operator op;
    Operator adj;
  };
  Operator b0_; // H_eff^dag without drives
  std::vector<Monomial> monomials_;
  std::vector<Jump> jumps_;
  Eigen::MatrixXcd w_;
  std::vector<Drive> drives_;
};

// Dormand-Prince 5(4) tableau and Hairer's dense-output coefficients.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784, a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200, e6 = 22.0 / 525,
                 e7 = -1.0 / 40;
constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                 d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                 d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

/// Max-norm rather than RMS: most entries of a density matrix are tiny, and an
/// RMS over them would dilute the error on the populated block.
double scaled_max(Eigen::MatrixXcd const &e, Eigen::MatrixXcd const &y0, Eigen::MatrixXcd const &y1, double tol)
{
  double worst = 0;
  long const n = e.size();
  cplx const *pe = e.data();
  cplx const *p0 = y0.data();
  cplx const *p1 = y1.data();
  for (long i = 0; i < n; ++i) {
    double const sc = tol + tol * std::sqrt(std::max(std::norm(p0[i]), std::norm(p1[i])));
    worst = std::max(worst, std::norm(pe[i]) / (sc * sc));
  }
  return std::sqrt(worst);
}

double trace_drift(Eigen::MatrixXcd const &rho, cplx reference) { return std::abs(rho.trace() - reference); }

} // namespace

DensityMatrix DensityMatrix::pure(Eigen::VectorXcd const &psi, double t_ns)
{
  return {psi * psi.adjoint(), t_ns};
}

HamiltonianModel::HamiltonianModel(HilbertSpace s)
  : space(std::move(s))
  , static_part(space.total_dim(), space.total_dim())
{
}

void HamiltonianModel::add_frame_detuning(std::string const &mode, double MHz)
{
  static_part += cplx(kTwoPi * MHz) * number(space, space.index_of(mode));
}

void HamiltonianModel::add_self_kerr(std::string const &mode, double K_MHz)
{
  Operator const a = annihilation(space, space.index_of(mode));
  Operator const ad = adjoint(a);
  static_part += cplx(kTwoPi * K_MHz / 2) * Operator(ad * ad * a * a);
}

void HamiltonianModel::add_cross_kerr(std::string const &a, std::string const &b, double chi_MHz)
{
  static_part += cplx(kTwoPi * chi_MHz) * Operator(number(space, space.index_of(a)) * number(space, space.index_of(b)));
}

void HamiltonianModel::add_exchange(std::string const &a, std::string const &b, std::function<cplx(double)> f,
                                    double start_ns, double stop_ns, std::string label)
{
  Operator const op_a = annihilation(space, space.index_of(a));
  Operator const op_b = annihilation(space, space.index_of(b));
  Operator g = adjoint(op_a) * op_b;
  if (label.empty()) label = a + "^dag " + b;
  drives.push_back({std::move(label), std::move(g), std::move(f), start_ns, stop_ns});
}

void HamiltonianModel::add_drive(std::string const &mode, std::function<cplx(double)> f, double start_ns, double stop_ns,
                                 std::string label)
{
  Operator g = adjoint(annihilation(space, space.index_of(mode)));
  if (label.empty()) label = mode + "^dag";
  drives.push_back({std::move(label), std::move(g), std::move(f), start_ns, stop_ns});
}

Operator HamiltonianModel::at(double t_ns) const
{
  Operator h = static_part;
  for (auto const &d : drives) {
    if (!(d.start_ns <= t_ns && t_ns < d.stop_ns)) continue;
    cplx const f = kTwoPi * d.coefficient(t_ns);
    h += f * d.generator + std::conj(f) * adjoint(d.generator);
  }
  return h;
}

std::vector<double> HamiltonianModel::breakpoints() const
{
  std::vector<double> out;
  for (auto const &d : drives) {
    out.push_back(d.start_ns);
    if (std::isfinite(d.stop_ns)) out.push_back(d.stop_ns);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<CollapseOperator> collapse_operators(DeviceConfig const &device, HilbertSpace const &space,
                                                 CoherencePolicy policy)
{
  std::vector<CollapseOperator> out;
  for (int k = 0; k < space.size(); ++k) {
    auto const &id = space.modes()[k].first;
    ModeSpec const *m = device.find_mode(id);
    if (!m) throw DomainError("lindblad: no coherence data for mode " + id);
    Coherence const coh = m->coherence(policy);
    out.push_back({"relax " + id, cplx(std::sqrt(1.0 / coh.T1_us)) * annihilation(space, k)});
    double const tphi = pure_dephasing_time(coh.T1_us, coh.T2_us);
    if (std::isfinite(tphi)) out.push_back({"dephase " + id, cplx(std::sqrt(2.0 / tphi)) * number(space, k)});
  }
  return out;
}

Trajectory integrate(DensityMatrix const &rho0, HamiltonianModel const &model,
                     std::vector<CollapseOperator> const &collapse, double t_end_ns,
                     std::vector<double> const &sample_times_ns, IntegrationOptions const &opts)
{
  long const n = model.space.total_dim();
  if (rho0.rho.rows() != n || rho0.rho.cols() != n) throw DomainError("lindblad: initial state has wrong dimension");
  if (t_end_ns < rho0.time_ns) throw DomainError("lindblad: end time precedes initial time");
  if (!(opts.tol > 0)) throw DomainError("lindblad: tolerance must be positive");

  MasterEquation const rhs(model, collapse);
  Trajectory out;
  cplx const trace0 = rho0.rho.trace();

  std::vector<double> samples = sample_times_ns;
  std::sort(samples.begin(), samples.end());
  for (double s : samples)
    if (s < rho0.time_ns - 1e-9 || s > t_end_ns + 1e-9) throw DomainError("lindblad: sample time outside span");
  std::size_t next_sample = 0;
  while (next_sample < samples.size() && samples[next_sample] <= rho0.time_ns) {
    out.samples.push_back({rho0.rho, samples[next_sample]});
    ++next_sample;
  }

  // Segment edges: span ends plus drive window edges strictly inside.
  std::vector<double> edges{rho0.time_ns};
  for (double b : model.breakpoints())
    if (b > rho0.time_ns && b < t_end_ns) edges.push_back(b);
  edges.push_back(t_end_ns);

  Eigen::MatrixXcd y = rho0.rho;
  Eigen::MatrixXcd k1(n, n), k2(n, n), k3(n, n), k4(n, n), k5(n, n), k6(n, n), k7(n, n), ynew(n, n), tmp(n, n);
  double const max_h = opts.max_step_ns * 1e-3;
  double h = 0; // us

  for (std::size_t seg = 0; seg + 1 < edges.size(); ++seg) {
    double const t_begin = edges[seg] * 1e-3, t_stop = edges[seg + 1] * 1e-3;
    if (t_stop - t_begin < 1e-12) continue; // rounding slivers between coincident edges
    auto const act = rhs.active(edges[seg], edges[seg + 1]);
    auto f = [&](double t_us, Eigen::MatrixXcd const &r, Eigen::MatrixXcd &dst) {
      rhs(t_us * 1e3, r, act, dst);
      ++out.stats.rhs_evals;
    };

    double t = t_begin;
    f(t, y, k1);
    if (h <= 0) {
      double const dy = std::max(scaled_max(k1, y, y, opts.tol), 1e-5);
      double const y0 = std::max(scaled_max(y, y, y, opts.tol), 1e-5);
      h = 0.01 * y0 / dy;
    }
    bool last = false;
    while (!last) {
      h = std::min(h, max_h);
      if (t + h >= t_stop || (t_stop - t - h) < 1e-12 * (t_stop - t_begin)) {
        h = t_stop - t;
        last = true;
      }
      if (h < 1e-14 * std::max(1.0, std::abs(t)))
        throw NumericError("lindblad: step size underflow at t = " + std::to_string(t * 1e3) + " ns");

      tmp = y + h * a21 * k1;
      f(t + c2 * h, tmp, k2);
      tmp = y + h * (a31 * k1 + a32 * k2);
      f(t + c3 * h, tmp, k3);
      tmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
      f(t + c4 * h, tmp, k4);
      tmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
      f(t + c5 * h, tmp, k5);
      tmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
      f(t + h, tmp, k6);
      ynew = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
      f(t + h, ynew, k7);
      tmp = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
      double const err = scaled_max(tmp, y, ynew, opts.tol);

      if (!std::isfinite(err)) throw NumericError("lindblad: non-finite error estimate");
      if (err > 1.0) {
        ++out.stats.rejected;
        h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
        last = false;
        if (out.stats.accepted + out.stats.rejected > opts.max_steps)
          throw NumericError("lindblad: step budget exhausted");
        continue;
      }
      ++out.stats.accepted;
      if (out.stats.accepted + out.stats.rejected > opts.max_steps) throw NumericError("lindblad: step budget exhausted");

      double const t_new = last ? t_stop : t + h;
      // Dense output for samples inside (t, t_new].
      if (next_sample < samples.size() && samples[next_sample] * 1e-3 <= t_new + 1e-15) {
        Eigen::MatrixXcd const ydiff = ynew - y;
        Eigen::MatrixXcd const bspl = h * k1 - ydiff;
        Eigen::MatrixXcd const r4 = ydiff - h * k7 - bspl;
        Eigen::MatrixXcd const r5 = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
        while (next_sample < samples.size() && samples[next_sample] * 1e-3 <= t_new + 1e-15) {
          double const th = std::clamp((samples[next_sample] * 1e-3 - t) / h, 0.0, 1.0);
          Eigen::MatrixXcd s = y + th * (ydiff + (1 - th) * (bspl + th * (r4 + (1 - th) * r5)));
          s = 0.5 * (s + s.adjoint()).eval();
          out.samples.push_back({std::move(s), samples[next_sample]});
          ++next_sample;
        }
      }

      y.swap(ynew);
      y = 0.5 * (y + y.adjoint()).eval();
      t = t_new;
      k1.swap(k7);

      double const drift = trace_drift(y, trace0);
      out.stats.max_trace_drift = std::max(out.stats.max_trace_drift, drift);
      if (!(drift <= opts.trace_limit)) {
        std::ostringstream msg;
        msg << "lindblad: trace drift " << drift << " exceeds " << opts.trace_limit << " at t = " << t * 1e3 << " ns";
        throw NumericError(msg.str());
      }
      double const grow = err > 0 ? 0.9 * std::pow(err, -0.2) : 5.0;
      h *= std::clamp(grow, 0.2, 5.0);
    }
  }
  while (next_sample < samples.size()) {
    out.samples.push_back({y, samples[next_sample]});
    ++next_sample;
  }
  out.final_state = {y, t_end_ns};
  return out;
}

Operator exchange_unitary(HilbertSpace const &space, std::string const &a, std::string const &b, double theta)
{
  int const ka = space.index_of(a), kb = space.index_of(b);
  if (ka == kb) throw DomainError("exchange: modes must differ");
  long const sa = space.stride(ka), sb = space.stride(kb);
  int const da = space.dim(ka), db = space.dim(kb);

  // Blocks keyed by (rest-of-space index, n_a + n_b); members ordered by n_a.
  std::map<std::pair<long, int>, std::vector<long>> blocks;
  for (long i = 0; i < space.total_dim(); ++i) {
    int const na = space.occupation(i, ka), nb = space.occupation(i, kb);
    blocks[{i - na * sa - nb * sb, na + nb}].push_back(i);
  }

  std::vector<Eigen::Triplet<cplx>> trip;
  for (auto const &[key, members] : blocks) {
    int const m = static_cast<int>(members.size());
    if (m == 1) {
      trip.emplace_back(members[0], members[0], 1.0);
      continue;
    }
    // a^dag b + a b^dag restricted to the block; member k has n_a = occupation.
    Eigen::MatrixXd j = Eigen::MatrixXd::Zero(m, m);
    for (int p = 0; p < m; ++p)
      for (int q = 0; q < m; ++q) {
        int const na_q = space.occupation(members[q], ka), nb_q = space.occupation(members[q], kb);
        int const na_p = space.occupation(members[p], ka);
        if (na_p == na_q + 1 && na_q + 1 < da && nb_q >= 1) j(p, q) = std::sqrt(double(na_q + 1) * nb_q);
        if (na_p + 1 == na_q && nb_q + 1 < db && na_q >= 1) j(p, q) = std::sqrt(double(na_q) * (nb_q + 1));
      }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(j);
    Eigen::VectorXcd phase(m);
    for (int p = 0; p < m; ++p) phase(p) = std::exp(-kI * theta * es.eigenvalues()(p));
    Eigen::MatrixXcd const v = es.eigenvectors().cast<cplx>();
    Eigen::MatrixXcd const u = v * phase.asDiagonal() * v.adjoint();
    for (int p = 0; p < m; ++p)
      for (int q = 0; q < m; ++q)
        if (std::abs(u(p, q)) > 0) trip.emplace_back(members[p], members[q], u(p, q));
  }
  Operator out(space.total_dim(), space.total_dim());
  out.setFromTriplets(trip.begin(), trip.end());
  return out;
}

Eigen::VectorXcd apply_exchange_unitary(Eigen::VectorXcd const &psi, HilbertSpace const &space, std::string const &a,
                                        std::string const &b, double exponent)
{
  if (psi.size() != space.total_dim()) throw DomainError("exchange: state has wrong dimension");
  return exchange_unitary(space, a, b, exchange_angle(exponent)) * psi;
}

DensityMatrix apply_exchange_unitary(DensityMatrix const &rho, HilbertSpace const &space, std::string const &a,
                                     std::string const &b, double exponent)
{
  if (rho.rho.rows() != space.total_dim()) throw DomainError("exchange: state has wrong dimension");
  Operator const u = exchange_unitary(space, a, b, exchange_angle(exponent));
  Eigen::MatrixXcd const x = u * rho.rho;
  return {(u * x.adjoint()).adjoint(), rho.time_ns};
}

double expectation(Eigen::MatrixXcd const &rho, Operator const &observable, double *imag_residue)
{
  if (observable.rows() != rho.rows() || observable.cols() != rho.cols())
    throw DomainError("expectation: dimension mismatch");
  // Tr(rho O) = sum_ij rho_ji O_ij
  cplx acc = 0;
  for (int k = 0; k < observable.outerSize(); ++k)
    for (Operator::InnerIterator it(observable, k); it; ++it) acc += rho(it.col(), it.row()) * it.value();
  if (imag_residue) *imag_residue = acc.imag();
  return acc.real();
}

double expectation(Eigen::MatrixXcd const &rho, Eigen::MatrixXcd const &observable, double *imag_residue)
{
  if (observable.rows() != rho.rows() || observable.cols() != rho.cols())
    throw DomainError("expectation: dimension mismatch");
  cplx const acc = (rho.transpose().array() * observable.array()).sum();
  if (imag_residue) *imag_residue = acc.imag();
  return acc.real();
}

StateDiagnostics diagnose(Eigen::MatrixXcd const &rho)
{
  StateDiagnostics d{};
  d.trace_drift = std::abs(rho.trace() - cplx(1.0));
  d.hermiticity_residue = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (rho + rho.adjoint()), Eigen::EigenvaluesOnly);
  d.min_eigenvalue = es.eigenvalues().minCoeff();
  return d;
}

void write_trajectory_csv(std::ostream &out, Trajectory const &traj, std::vector<LinearOperator> const &observables)
{
  out << "time_ns";
  for (auto const &o : observables) out << ',' << o.label;
  out << '\n';
  out.precision(12);
  for (auto const &s : traj.samples) {
    out << s.time_ns;
    for (auto const &o : observables) out << ',' << expectation(s.rho, o.matrix);
    out << '\n';
  }
}

namespace {

static_assert(std::endian::native == std::endian::little, "snapshot I/O assumes a little-endian host");

template <typename T>
void put(std::ostream &out, T v)
{
  out.write(reinterpret_cast<char const *>(&v), sizeof v);
}

template <typename T>
T get(std::istream &in)
{
  T v{};
  in.read(reinterpret_cast<char *>(&v), sizeof v);
  if (!in) throw IoError("snapshot: truncated file");
  return v;
}

} // namespace

void write_snapshot(std::filesystem::path const &path, HilbertSpace const &space, DensityMatrix const &rho)
{
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("snapshot: cannot write '" + path.string() + "'");
  out.write("RHO1", 4);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(space.size()));
  for (int d : space.dims()) put<std::uint32_t>(out, static_cast<std::uint32_t>(d));
  put<double>(out, rho.time_ns);
  long const n = rho.rho.rows();
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j) {
      put<double>(out, rho.rho(i, j).real());
      put<double>(out, rho.rho(i, j).imag());
    }
  if (!out) throw IoError("snapshot: write failed for '" + path.string() + "'");
}

DensityMatrix read_snapshot(std::filesystem::path const &path, std::vector<int> *dims)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("snapshot: cannot open '" + path.string() + "'");
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "RHO1", 4) != 0) throw IoError("snapshot: bad magic in '" + path.string() + "'");
  auto const modes = get<std::uint32_t>(in);
  long n = 1;
  std::vector<int> d;
  for (std::uint32_t k = 0; k < modes; ++k) {
    d.push_back(static_cast<int>(get<std::uint32_t>(in)));
    n *= d.back();
  }
  if (n > HilbertSpace::kDefaultCap) throw IoError("snapshot: dimension exceeds cap");
  DensityMatrix out;
  out.time_ns = get<double>(in);
  out.rho.resize(n, n);
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j) {
      double const re = get<double>(in);
      double const im = get<double>(in);
      out.rho(i, j) = {re, im};
    }
  if (dims) *dims = std::move(d);
  return out;
}

} // namespace router
