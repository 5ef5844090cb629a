#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <utility>

#include "knl/types.hpp"

namespace knl {

/// Relative tolerance below which a block is treated as rank deficient.
inline constexpr double kRankTol = 1e-10;

struct QrResult {
  Mat q;  // n x p, orthonormal columns
  Mat r;  // p x p, upper triangular with positive diagonal
  double smallest_sv = 0.0;
  double largest_sv = 0.0;
};

/// Thin Householder QR of a tall block with the sign convention that R has a
/// positive diagonal. Does not check rank.
inline QrResult block_qr_unchecked(const Mat& w) {
  const auto p = w.cols();
  Eigen::HouseholderQR<Mat> qr(w);
  Mat q = qr.householderQ() * Mat::Identity(w.rows(), p);
  Mat r = qr.matrixQR().topRows(p).triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < p; ++j) {
    if (r(j, j) < 0.0) {
      r.row(j) = -r.row(j);
      q.col(j) = -q.col(j);
    }
  }
  Eigen::JacobiSVD<Mat> svd(w);
  QrResult out{std::move(q), std::move(r),
               svd.singularValues().minCoeff(),
               svd.singularValues().maxCoeff()};
  return out;
}

/// QR of a full-rank block; throws RankDeficient when the smallest singular
/// value drops below kRankTol relative to the largest.
inline QrResult block_qr(const Mat& w) {
  if (w.rows() < w.cols())
    throw DimensionMismatch("block_qr expects a tall block");
  QrResult out = block_qr_unchecked(w);
  if (out.smallest_sv <= kRankTol * out.largest_sv)
    throw RankDeficient(out.smallest_sv);
  return out;
}

/// lambda_min(g2 - g1). Nonnegative iff g1 <= g2 in Loewner order.
inline double loewner_gap(const Mat& g1, const Mat& g2) {
  const double scale = std::max({g1.norm(), g2.norm(), 1.0});
  if ((g1 - g1.transpose()).norm() > 1e-12 * scale ||
      (g2 - g2.transpose()).norm() > 1e-12 * scale)
    throw NonHermitian();
  Eigen::SelfAdjointEigenSolver<Mat> es(g2 - g1, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

/// Sparse symmetric positive definite operator in compressed row form.
/// Symmetry of the stored pattern/values is checked at construction.
class SparseSpdOperator {
 public:
  using Sparse = Eigen::SparseMatrix<double, Eigen::RowMajor>;

  explicit SparseSpdOperator(Sparse a) : a_(std::move(a)) {
    if (a_.rows() != a_.cols())
      throw DimensionMismatch("operator must be square");
    Sparse at = Sparse(a_.transpose());
    const double scale = std::max(a_.norm(), 1.0);
    if ((Sparse(a_ - at)).norm() > 1e-14 * scale)
      throw DimensionMismatch("operator is not symmetric");
  }

  Eigen::Index n() const { return a_.rows(); }
  const Sparse& matrix() const { return a_; }

  Mat apply(const Mat& x) const {
    if (x.rows() != a_.cols())
      throw DimensionMismatch("apply: row count mismatch");
    return a_ * x;
  }

  /// 1-norm, used to scale residual tolerances.
  double norm1() const {
    Vec colsum = Vec::Zero(a_.cols());
    for (int k = 0; k < a_.outerSize(); ++k)
      for (Sparse::InnerIterator it(a_, k); it; ++it)
        colsum(it.col()) += std::abs(it.value());
    return colsum.maxCoeff();
  }

 private:
  Sparse a_;
};

}  // namespace knl
