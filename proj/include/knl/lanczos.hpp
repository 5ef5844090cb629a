#pragma once

#include <utility>
#include <vector>

#include "knl/core.hpp"
#include "knl/types.hpp"

namespace knl {

/// Result of m steps of the block Lanczos iteration. alphas[i] is the i-th
/// diagonal block, betas[i-1] the subdiagonal block beta_{i+1} (upper
/// triangular with positive diagonal). residual_q/residual_beta hold the
/// QR factors of the final residual block, obtained without an extra
/// multiplication by A; tail_full_rank records whether that QR met the rank
/// tolerance.
struct LanczosDecomposition {
  int m = 0;
  int p = 0;
  Eigen::Index n = 0;
  std::vector<Mat> alphas;  // m blocks, symmetric
  std::vector<Mat> betas;   // m-1 blocks: beta_2 .. beta_m
  Mat basis;                // n x (m*p) when kept, empty otherwise
  bool has_basis = false;
  Mat residual_q;     // n x p
  Mat residual_beta;  // p x p, beta_{m+1}
  bool tail_full_rank = false;
};

/// Orthonormalize the right-hand side block: b_raw = b * r_b. Transfer values
/// computed for the orthonormal b map back as r_b^T F r_b.
inline std::pair<Mat, Mat> normalize_rhs(const Mat& b_raw) {
  QrResult qr = block_qr(b_raw);
  return {std::move(qr.q), std::move(qr.r)};
}

/// Block Lanczos iteration for an SPD operator. The right-hand side is
/// orthonormalized internally, so the coefficients always correspond to an
/// orthonormal starting block (beta_1 = I).
///
/// reorth: two-pass classical Gram-Schmidt against all stored blocks. The
/// plain three-term recursion is exposed (reorth = false) since it converges
/// despite the loss of orthogonality.
inline LanczosDecomposition block_lanczos(const SparseSpdOperator& op,
                                          const Mat& b_raw, int m,
                                          bool reorth = true,
                                          bool keep_basis = false) {
  const Eigen::Index n = op.n();
  const int p = static_cast<int>(b_raw.cols());
  if (b_raw.rows() != n) throw DimensionMismatch("B row count != operator n");
  if (m < 1 || static_cast<Eigen::Index>(m) * p > n)
    throw DimensionMismatch("need 1 <= m and m*p <= n");

  LanczosDecomposition dec;
  dec.m = m;
  dec.p = p;
  dec.n = n;

  std::vector<Mat> qblocks;
  qblocks.reserve(m);
  qblocks.push_back(normalize_rhs(b_raw).first);

  auto reorthogonalize = [&](Mat& w) {
    for (int pass = 0; pass < 2; ++pass)
      for (const Mat& q : qblocks) w -= q * (q.transpose() * w);
  };

  Mat w = op.apply(qblocks[0]);
  Mat alpha = qblocks[0].transpose() * w;
  alpha = 0.5 * (alpha + alpha.transpose()).eval();
  w -= qblocks[0] * alpha;
  if (reorth) reorthogonalize(w);
  dec.alphas.push_back(alpha);

  for (int i = 2; i <= m; ++i) {
    QrResult qr = block_qr_unchecked(w);
    if (qr.smallest_sv <= kRankTol * std::max(qr.largest_sv, 1e-300))
      throw Breakdown(i);
    qblocks.push_back(qr.q);
    dec.betas.push_back(qr.r);
    w = op.apply(qblocks.back()) - qblocks[i - 2] * qr.r.transpose();
    alpha = qblocks.back().transpose() * w;
    alpha = 0.5 * (alpha + alpha.transpose()).eval();
    w -= qblocks.back() * alpha;
    if (reorth) reorthogonalize(w);
    dec.alphas.push_back(alpha);
  }

  QrResult tail = block_qr_unchecked(w);
  dec.residual_q = std::move(tail.q);
  dec.residual_beta = std::move(tail.r);
  dec.tail_full_rank =
      tail.smallest_sv > kRankTol * std::max(tail.largest_sv, 1e-300);

  if (keep_basis) {
    dec.basis.resize(n, static_cast<Eigen::Index>(m) * p);
    for (int i = 0; i < m; ++i)
      dec.basis.middleCols(static_cast<Eigen::Index>(i) * p, p) = qblocks[i];
    dec.has_basis = true;
  }
  return dec;
}

/// Dense (mp) x (mp) symmetric block tridiagonal matrix T_m.
inline Mat assemble_tridiagonal(const LanczosDecomposition& dec) {
  const int p = dec.p;
  const Eigen::Index dim = static_cast<Eigen::Index>(dec.m) * p;
  Mat t = Mat::Zero(dim, dim);
  for (int i = 0; i < dec.m; ++i)
    t.block(i * p, i * p, p, p) = dec.alphas[i];
  for (int i = 0; i + 1 < dec.m; ++i) {
    t.block((i + 1) * p, i * p, p, p) = dec.betas[i];
    t.block(i * p, (i + 1) * p, p, p) = dec.betas[i].transpose();
  }
  return t;
}

/// Leading k-step sub-decomposition of an m-step run. The discarded block
/// beta_{k+1} (and basis block k+1, when stored) becomes the tail of the
/// truncated chain, so checkpointed evaluations see the same residual data a
/// k-step run would produce.
inline LanczosDecomposition truncate(const LanczosDecomposition& dec, int k) {
  if (k < 1 || k > dec.m) throw DimensionMismatch("truncate: bad step count");
  if (k == dec.m) return dec;
  LanczosDecomposition out;
  out.m = k;
  out.p = dec.p;
  out.n = dec.n;
  out.alphas.assign(dec.alphas.begin(), dec.alphas.begin() + k);
  out.betas.assign(dec.betas.begin(), dec.betas.begin() + (k - 1));
  out.residual_beta = dec.betas[k - 1];
  out.tail_full_rank = true;
  if (dec.has_basis) {
    out.residual_q = dec.basis.middleCols(static_cast<Eigen::Index>(k) * dec.p,
                                          dec.p);
    out.basis = dec.basis.leftCols(static_cast<Eigen::Index>(k) * dec.p);
    out.has_basis = true;
  }
  return out;
}

}  // namespace knl
