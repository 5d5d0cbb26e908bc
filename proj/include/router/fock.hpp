#pragma once

#include <complex>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace router {

using cplx = std::complex<double>;

template <typename Scalar = cplx>
using SparseOp = Eigen::SparseMatrix<Scalar>;

/// Ordered tensor product of truncated Fock spaces. The first mode is the
/// most significant index (Kronecker order).
class HilbertSpace
{
public:
  static constexpr long kDefaultCap = 4096;

  HilbertSpace() = default;
  explicit HilbertSpace(std::vector<std::pair<std::string, int>> modes, long cap = kDefaultCap);

  std::vector<std::pair<std::string, int>> const &modes() const { return modes_; }
  long total_dim() const { return total_; }
  int size() const { return static_cast<int>(modes_.size()); }
  int index_of(std::string_view id) const;
  bool contains(std::string_view id) const;
  int dim(int k) const { return modes_[k].second; }
  std::vector<int> dims() const;
  /// Occupation of mode k in basis state `state`.
  int occupation(long state, int k) const { return static_cast<int>((state / stride_[k]) % modes_[k].second); }
  long stride(int k) const { return stride_[k]; }
  long basis_index(std::vector<int> const &occupations) const;

private:
  std::vector<std::pair<std::string, int>> modes_;
  std::vector<long> stride_;
  long total_ = 1;
};

/// Lowering operator of mode k, a|n> = sqrt(n)|n-1>, as a sparse matrix on the full space.
template <typename Scalar = cplx>
SparseOp<Scalar> annihilation(HilbertSpace const &space, int k)
{
  std::vector<Eigen::Triplet<Scalar>> trip;
  trip.reserve(space.total_dim());
  long const s = space.stride(k);
  for (long i = 0; i < space.total_dim(); ++i) {
    int const n = space.occupation(i, k);
    if (n > 0) trip.emplace_back(static_cast<int>(i - s), static_cast<int>(i), Scalar(std::sqrt(double(n))));
  }
  SparseOp<Scalar> a(space.total_dim(), space.total_dim());
  a.setFromTriplets(trip.begin(), trip.end());
  return a;
}

template <typename Scalar = cplx>
SparseOp<Scalar> number(HilbertSpace const &space, int k)
{
  std::vector<Eigen::Triplet<Scalar>> trip;
  for (long i = 0; i < space.total_dim(); ++i) {
    int const n = space.occupation(i, k);
    if (n > 0) trip.emplace_back(static_cast<int>(i), static_cast<int>(i), Scalar(n));
  }
  SparseOp<Scalar> op(space.total_dim(), space.total_dim());
  op.setFromTriplets(trip.begin(), trip.end());
  return op;
}

template <typename Scalar = cplx>
SparseOp<Scalar> identity(HilbertSpace const &space)
{
  SparseOp<Scalar> id(space.total_dim(), space.total_dim());
  id.setIdentity();
  return id;
}

/// Lifts a single-mode dense operator onto the full space.
template <typename Scalar = cplx>
SparseOp<Scalar> embed(HilbertSpace const &space, int k, Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> const &local)
{
  std::vector<Eigen::Triplet<Scalar>> trip;
  long const s = space.stride(k);
  for (long i = 0; i < space.total_dim(); ++i) {
    int const n = space.occupation(i, k);
    long const base = i - n * s;
    for (int m = 0; m < space.dim(k); ++m) {
      Scalar const v = local(m, n);
      if (v != Scalar(0)) trip.emplace_back(static_cast<int>(base + m * s), static_cast<int>(i), v);
    }
  }
  SparseOp<Scalar> op(space.total_dim(), space.total_dim());
  op.setFromTriplets(trip.begin(), trip.end());
  return op;
}

/// Basis vector |n_0, n_1, ...>.
Eigen::VectorXcd fock_state(HilbertSpace const &space, std::vector<int> const &occupations);

/// Coherent state of one mode, truncated to `dim` levels and renormalised.
Eigen::VectorXcd coherent_state(int dim, cplx alpha);

/// Kronecker product of per-mode state vectors in space order.
Eigen::VectorXcd product_state(std::vector<Eigen::VectorXcd> const &factors);

/// Partial trace keeping the listed modes, in the listed order.
Eigen::MatrixXcd partial_trace(HilbertSpace const &space, Eigen::MatrixXcd const &rho, std::vector<std::string> const &keep);

} // namespace router
