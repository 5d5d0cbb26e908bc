#include "router/fock.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "router/error.hpp"

namespace router {

HilbertSpace::HilbertSpace(std::vector<std::pair<std::string, int>> modes, long cap)
  : modes_(std::move(modes))
{
  for (std::size_t i = 0; i < modes_.size(); ++i) {
    if (modes_[i].second < 1) throw DomainError("hilbert space: mode " + modes_[i].first + " has dim < 1");
    for (std::size_t j = 0; j < i; ++j)
      if (modes_[j].first == modes_[i].first) throw DomainError("hilbert space: duplicate mode " + modes_[i].first);
  }
  stride_.assign(modes_.size(), 1);
  total_ = 1;
  for (int k = static_cast<int>(modes_.size()) - 1; k >= 0; --k) {
    stride_[k] = total_;
    total_ *= modes_[k].second;
    if (total_ > cap) {
      std::ostringstream msg;
      msg << "hilbert space: dimension product exceeds cap " << cap << " (";
      for (std::size_t i = 0; i < modes_.size(); ++i) msg << (i ? "x" : "") << modes_[i].second;
      msg << ")";
      throw DomainError(msg.str());
    }
  }
}

int HilbertSpace::index_of(std::string_view id) const
{
  for (std::size_t k = 0; k < modes_.size(); ++k)
    if (modes_[k].first == id) return static_cast<int>(k);
  throw DomainError("hilbert space: mode '" + std::string(id) + "' not in space");
}

bool HilbertSpace::contains(std::string_view id) const
{
  return std::any_of(modes_.begin(), modes_.end(), [&](auto const &m) { return m.first == id; });
}

std::vector<int> HilbertSpace::dims() const
{
  std::vector<int> d;
  for (auto const &m : modes_) d.push_back(m.second);
  return d;
}

long HilbertSpace::basis_index(std::vector<int> const &occ) const
{
  if (occ.size() != modes_.size()) throw DomainError("hilbert space: occupation list has wrong length");
  long idx = 0;
  for (std::size_t k = 0; k < occ.size(); ++k) {
    if (occ[k] < 0 || occ[k] >= modes_[k].second) throw DomainError("hilbert space: occupation out of range");
    idx += occ[k] * stride_[k];
  }
  return idx;
}

Eigen::VectorXcd fock_state(HilbertSpace const &space, std::vector<int> const &occupations)
{
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(space.total_dim());
  v(space.basis_index(occupations)) = 1.0;
  return v;
}

Eigen::VectorXcd coherent_state(int dim, cplx alpha)
{
  Eigen::VectorXcd v(dim);
  cplx amp = std::exp(-0.5 * std::norm(alpha));
  for (int n = 0; n < dim; ++n) {
    v(n) = amp;
    amp *= alpha / std::sqrt(double(n + 1));
  }
  return v / v.norm();
}

Eigen::VectorXcd product_state(std::vector<Eigen::VectorXcd> const &factors)
{
  Eigen::VectorXcd out = Eigen::VectorXcd::Ones(1);
  for (auto const &f : factors) {
    Eigen::VectorXcd next(out.size() * f.size());
    for (Eigen::Index i = 0; i < out.size(); ++i) next.segment(i * f.size(), f.size()) = out(i) * f;
    out = std::move(next);
  }
  return out;
}

Eigen::MatrixXcd partial_trace(HilbertSpace const &space, Eigen::MatrixXcd const &rho, std::vector<std::string> const &keep)
{
  std::vector<int> kept;
  for (auto const &id : keep) kept.push_back(space.index_of(id));
  long kdim = 1;
  for (int k : kept) kdim *= space.dim(k);

  std::vector<int> traced;
  for (int k = 0; k < space.size(); ++k)
    if (std::find(kept.begin(), kept.end(), k) == kept.end()) traced.push_back(k);

  // Reduced index of each full basis state and the index of its traced-out part.
  long const n = space.total_dim();
  std::vector<long> red(n), env(n);
  for (long i = 0; i < n; ++i) {
    long r = 0, e = 0;
    for (int k : kept) r = r * space.dim(k) + space.occupation(i, k);
    for (int k : traced) e = e * space.dim(k) + space.occupation(i, k);
    red[i] = r;
    env[i] = e;
  }
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(kdim, kdim);
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j)
      if (env[i] == env[j]) out(red[i], red[j]) += rho(i, j);
  return out;
}

} // namespace router
