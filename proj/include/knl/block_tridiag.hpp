#pragma once

#include <vector>

#include <Eigen/Dense>

#include "knl/types.hpp"

namespace knl {

/// Block Thomas factorization of a symmetric block tridiagonal matrix
/// (complex symmetric for complex scalars; transposes, not adjoints). Blocks:
/// diag[i] on the diagonal, sub[i] at (i+1, i), sub[i]^T at (i, i+1). No
/// pivoting across blocks; a numerically singular Schur pivot throws
/// ShiftOnSpectrum.
template <class Scalar>
class BlockTridiagFactor {
 public:
  using M = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  BlockTridiagFactor(const std::vector<M>& diag, const std::vector<M>& sub)
      : subs_(sub) {
    const int m = static_cast<int>(diag.size());
    p_ = static_cast<int>(diag[0].rows());
    pivots_.reserve(m);
    lowers_.reserve(m > 0 ? m - 1 : 0);
    pivots_.emplace_back(checked_lu(diag[0]));
    for (int i = 1; i < m; ++i) {
      // L_i = sub_{i-1} S_{i-1}^{-1};  S_i = diag_i - L_i sub_{i-1}^T
      M li = pivots_.back().solve(sub[i - 1].transpose()).transpose();
      M s = diag[i] - li * sub[i - 1].transpose();
      lowers_.push_back(std::move(li));
      pivots_.emplace_back(checked_lu(s));
    }
  }

  int blocks() const { return static_cast<int>(pivots_.size()); }
  int block_size() const { return p_; }

  /// Solves (block tridiag) x = rhs, rhs of size (m*p) x k.
  M solve(const M& rhs) const {
    const int m = blocks();
    M y = rhs;
    for (int i = 1; i < m; ++i)
      y.middleRows(i * p_, p_) -=
          lowers_[i - 1] * y.middleRows((i - 1) * p_, p_);
    M x(rhs.rows(), rhs.cols());
    x.middleRows((m - 1) * p_, p_) =
        pivots_[m - 1].solve(y.middleRows((m - 1) * p_, p_));
    for (int i = m - 2; i >= 0; --i)
      x.middleRows(i * p_, p_) =
          pivots_[i].solve(y.middleRows(i * p_, p_) -
                           subs_[i].transpose() * x.middleRows((i + 1) * p_, p_));
    return x;
  }

 private:
  static Eigen::PartialPivLU<M> checked_lu(const M& s) {
    Eigen::PartialPivLU<M> lu(s);
    const auto u = lu.matrixLU().diagonal().cwiseAbs();
    if (!(u.minCoeff() > 1e-14 * u.maxCoeff())) throw ShiftOnSpectrum();
    return lu;
  }

  int p_;
  std::vector<M> subs_;
  std::vector<Eigen::PartialPivLU<M>> pivots_;
  std::vector<M> lowers_;
};

}  // namespace knl
