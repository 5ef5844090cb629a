#pragma once

#include <utility>
#include <vector>

#include "knl/lanczos.hpp"
#include "knl/types.hpp"

namespace knl {

/// Stieltjes string parameters extracted from the Lanczos coefficients via
/// the block LDL^T factorization of T_m. gamma_hats[j] = kappa_hats[j]^T
/// kappa_hats[j]; both gammas and gamma_hats are SPD as long as the
/// iteration ran without breakdown. The optional tail (kappa_hat_{m+1},
/// gamma_hat_{m+1}) comes from beta_{m+1} at no extra cost.
struct StieltjesParams {
  int m = 0;
  int p = 0;
  std::vector<Mat> gammas;          // gamma_1 .. gamma_m
  std::vector<Mat> gamma_invs;      // their inverses, kept for the KN update
  std::vector<Mat> gamma_hats;      // gamma_hat_1 .. gamma_hat_m
  std::vector<Mat> kappa_hats;      // kappa_hat_1 .. kappa_hat_m
  std::vector<Mat> kappa_hat_invs;  // their inverses
  bool has_tail = false;
  Mat kappa_hat_tail;      // kappa_hat_{m+1}
  Mat kappa_hat_tail_inv;  // its inverse
  Mat gamma_hat_tail;      // gamma_hat_{m+1}
};

namespace detail {

// Inverts gamma_i^{-1}; throws SingularGamma when it is numerically singular
// or indefinite (possible in floating point; we stop rather than continue).
inline Mat invert_gamma_inv(const Mat& ginv, int index) {
  Mat sym = 0.5 * (ginv + ginv.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(sym, Eigen::EigenvaluesOnly);
  const double lmax = es.eigenvalues().cwiseAbs().maxCoeff();
  if (es.eigenvalues().minCoeff() <= 1e-12 * lmax) throw SingularGamma(index);
  return sym.inverse();
}

}  // namespace detail

/// Block LDL^T extraction of the Stieltjes parameters from a Lanczos
/// decomposition: kappa_hat_1 = I, gamma_1^{-1} = alpha_1, then
///   kappa_hat_i^{-1} = -gamma_{i-1} kappa_hat_{i-1}^T beta_i^T
///   gamma_i^{-1}     =  kappa_hat_i^T alpha_i kappa_hat_i - gamma_{i-1}^{-1}
/// for i = 2..m.
inline StieltjesParams extract_stieltjes(const LanczosDecomposition& dec,
                                         bool with_tail = false) {
  const int p = dec.p;
  StieltjesParams out;
  out.m = dec.m;
  out.p = p;

  Mat kappa = Mat::Identity(p, p);
  Mat kappa_inv = Mat::Identity(p, p);
  Mat gamma_inv = dec.alphas[0];
  out.kappa_hats.push_back(kappa);
  out.kappa_hat_invs.push_back(kappa_inv);
  out.gamma_invs.push_back(gamma_inv);
  out.gammas.push_back(detail::invert_gamma_inv(gamma_inv, 1));
  out.gamma_hats.push_back(Mat::Identity(p, p));

  for (int i = 2; i <= dec.m; ++i) {
    kappa_inv = -out.gammas.back() * out.kappa_hats.back().transpose() *
                dec.betas[i - 2].transpose();
    kappa = kappa_inv.inverse();
    gamma_inv = kappa_inv.transpose() * dec.alphas[i - 1] * kappa_inv -
                out.gamma_invs.back();
    out.kappa_hats.push_back(kappa);
    out.kappa_hat_invs.push_back(kappa_inv);
    out.gamma_invs.push_back(gamma_inv);
    out.gammas.push_back(detail::invert_gamma_inv(gamma_inv, i));
    out.gamma_hats.push_back(kappa.transpose() * kappa);
  }

  if (with_tail) {
    if (!dec.tail_full_rank) throw MissingTail();
    out.kappa_hat_tail_inv = -out.gammas.back() *
                             out.kappa_hats.back().transpose() *
                             dec.residual_beta.transpose();
    out.kappa_hat_tail = out.kappa_hat_tail_inv.inverse();
    out.gamma_hat_tail = out.kappa_hat_tail.transpose() * out.kappa_hat_tail;
    out.has_tail = true;
  }
  return out;
}

/// Recomposes the block tridiagonal matrix K_m^{-T} J_m Gamma_m^{-1} J_m^T
/// K_m^{-1} from the string parameters (the inverse of extract_stieltjes).
inline Mat reconstruct_tridiagonal(const StieltjesParams& params) {
  const int p = params.p;
  const Eigen::Index dim = static_cast<Eigen::Index>(params.m) * p;
  Mat t = Mat::Zero(dim, dim);
  for (int i = 0; i < params.m; ++i) {
    Mat diag = params.gamma_invs[i];
    if (i > 0) diag += params.gamma_invs[i - 1];
    t.block(i * p, i * p, p, p) = params.kappa_hat_invs[i].transpose() * diag *
                                  params.kappa_hat_invs[i];
    if (i > 0) {
      Mat off = -params.kappa_hat_invs[i].transpose() *
                params.gamma_invs[i - 1] * params.kappa_hat_invs[i - 1];
      t.block(i * p, (i - 1) * p, p, p) = off;
      t.block((i - 1) * p, i * p, p, p) = off.transpose();
    }
  }
  return t;
}

/// Pencil form (Z_m, Gamma_hat_m) with Z_m = J_m Gamma_m^{-1} J_m^T and
/// Gamma_hat_m = blkdiag(gamma_hat_1 .. gamma_hat_m). For shifts off the
/// negative real axis, E_1^T (Z + s Gamma_hat)^{-1} E_1 equals the Gauss
/// quadrature value.
inline std::pair<Mat, Mat> assemble_pencil(const StieltjesParams& params) {
  const int p = params.p;
  const Eigen::Index dim = static_cast<Eigen::Index>(params.m) * p;
  Mat z = Mat::Zero(dim, dim);
  Mat gh = Mat::Zero(dim, dim);
  for (int i = 0; i < params.m; ++i) {
    Mat diag = params.gamma_invs[i];
    if (i > 0) diag += params.gamma_invs[i - 1];
    z.block(i * p, i * p, p, p) = diag;
    if (i > 0) {
      z.block(i * p, (i - 1) * p, p, p) = -params.gamma_invs[i - 1];
      z.block((i - 1) * p, i * p, p, p) =
          -params.gamma_invs[i - 1].transpose();
    }
    gh.block(i * p, i * p, p, p) = params.gamma_hats[i];
  }
  return {std::move(z), std::move(gh)};
}

}  // namespace knl
