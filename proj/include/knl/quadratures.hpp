#pragma once

#include <string>
#include <vector>

#include "knl/block_tridiag.hpp"
#include "knl/lanczos.hpp"
#include "knl/stieltjes.hpp"
#include "knl/types.hpp"

namespace knl {

enum class Variant { Gauss, Radau, Average, KN, ExtendedKN, Reference };

inline const char* variant_name(Variant v) {
  switch (v) {
    case Variant::Gauss: return "gauss";
    case Variant::Radau: return "radau";
    case Variant::Average: return "average";
    case Variant::KN: return "kn";
    case Variant::ExtendedKN: return "extended_kn";
    case Variant::Reference: return "reference";
  }
  return "?";
}

/// p x p complex symmetric transfer-function value at one shift.
struct TransferSample {
  Complex s;
  CMat value;
  Variant variant = Variant::Gauss;
};

struct Terminator {
  enum class Kind { Dirichlet, Neumann, Impedance };
  Kind kind = Kind::Dirichlet;
  Mat phi;  // SPD, Impedance only

  static Terminator dirichlet() { return {Kind::Dirichlet, {}}; }
  static Terminator neumann() { return {Kind::Neumann, {}}; }
  static Terminator impedance(Mat phi) {
    return {Kind::Impedance, std::move(phi)};
  }
};

namespace detail {

inline CMat inv_checked(const CMat& a, int step) {
  Eigen::PartialPivLU<CMat> lu(a);
  const auto u = lu.matrixLU().diagonal().cwiseAbs();
  if (!(u.minCoeff() > 1e-14 * u.maxCoeff())) throw SingularStep(step);
  return lu.inverse();
}

/// Solves (block tridiag + sI) X = E_1 and returns the leading p x p block.
/// last_alpha, when nonempty, replaces the final diagonal block.
inline CMat resolvent_e1(const std::vector<Mat>& alphas,
                         const std::vector<Mat>& betas, Complex s,
                         const CMat& last_alpha = CMat()) {
  const int m = static_cast<int>(alphas.size());
  const int p = static_cast<int>(alphas[0].rows());
  std::vector<CMat> diag(m);
  std::vector<CMat> sub(betas.size());
  const CMat shift = s * CMat::Identity(p, p);
  for (int i = 0; i < m; ++i) diag[i] = alphas[i].cast<Complex>() + shift;
  if (last_alpha.size() > 0) diag[m - 1] = last_alpha + shift;
  for (size_t i = 0; i < betas.size(); ++i) sub[i] = betas[i].cast<Complex>();
  BlockTridiagFactor<Complex> fac(diag, sub);
  CMat rhs = CMat::Zero(static_cast<Eigen::Index>(m) * p, p);
  rhs.topRows(p) = CMat::Identity(p, p);
  return fac.solve(rhs).topRows(p);
}

}  // namespace detail

/// Block Gauss quadrature E_1^T (T_m + sI)^{-1} E_1 via a block tridiagonal
/// solve, O(m p^3).
inline TransferSample gauss_eval(const LanczosDecomposition& dec, Complex s) {
  return {s, detail::resolvent_e1(dec.alphas, dec.betas, s),
          Variant::Gauss};
}

/// Last diagonal block of the Gauss--Radau matrix: the phi -> 0 limit of the
/// Krein--Nudelman update, evaluated explicitly to avoid cancellation.
inline Mat radau_last_alpha(const LanczosDecomposition& dec,
                            const StieltjesParams& params) {
  const Mat& kinv = params.kappa_hat_invs.back();
  return dec.alphas.back() -
         kinv.transpose() * params.gamma_invs.back() * kinv;
}

/// Gauss--Radau quadrature: Neumann termination of the string, placing p
/// eigenvalues of the modified matrix at zero.
inline TransferSample radau_eval(const LanczosDecomposition& dec,
                                 const StieltjesParams& params, Complex s) {
  CMat last = radau_last_alpha(dec, params).cast<Complex>();
  return {s, detail::resolvent_e1(dec.alphas, dec.betas, s, last),
          Variant::Radau};
}

/// Krein--Nudelman last diagonal block
///   alpha_m - kappa_m^{-T} g (g + sqrt(s) phi)^{-1} g kappa_m^{-1},
/// g = gamma_m^{-1}. second_sheet evaluates with -sqrt(s) instead of the
/// principal branch.
inline CMat kn_last_alpha(const LanczosDecomposition& dec,
                          const StieltjesParams& params, const Mat& phi,
                          Complex s, bool second_sheet = false) {
  const int p = dec.p;
  Complex root = principal_sqrt(s);
  if (second_sheet) root = -root;
  const CMat g = params.gamma_invs.back().cast<Complex>();
  const CMat kinv = params.kappa_hat_invs.back().cast<Complex>();
  CMat mid = detail::inv_checked(g + root * phi.cast<Complex>(), dec.m);
  return dec.alphas.back().cast<Complex>() -
         kinv.transpose() * g * mid * g * kinv;
}

inline TransferSample kn_eval_tridiag(const LanczosDecomposition& dec,
                                      const StieltjesParams& params,
                                      const Mat& phi, Complex s,
                                      bool second_sheet = false) {
  CMat last = kn_last_alpha(dec, params, phi, s, second_sheet);
  return {s, detail::resolvent_e1(dec.alphas, dec.betas, s, last),
          Variant::KN};
}

/// Arithmetic mean of the Gauss and Gauss--Radau values.
inline TransferSample averaged_eval(const LanczosDecomposition& dec,
                                    const StieltjesParams& params, Complex s) {
  TransferSample g = gauss_eval(dec, s);
  TransferSample r = radau_eval(dec, params, s);
  return {s, 0.5 * (g.value + r.value), Variant::Average};
}

/// Truncated matricial Stieltjes continued fraction, evaluated by the
/// backward recursion C_i = (s gh_i + (gamma_i + C_{i+1})^{-1})^{-1}.
/// Dirichlet tail reproduces Gauss, Neumann (gamma_m-term dropped) reproduces
/// Gauss--Radau, impedance C_{m+1} = (phi sqrt(s))^{-1} gives Krein--Nudelman.
inline TransferSample sfraction_eval(const StieltjesParams& params, Complex s,
                                     const Terminator& term) {
  const int p = params.p;
  CMat c;
  int start;
  switch (term.kind) {
    case Terminator::Kind::Dirichlet:
      c = CMat::Zero(p, p);
      start = params.m;
      break;
    case Terminator::Kind::Neumann:
      c = detail::inv_checked(
          CMat(s * params.gamma_hats.back().cast<Complex>()), params.m);
      start = params.m - 1;
      break;
    case Terminator::Kind::Impedance: {
      const Complex root = principal_sqrt(s);
      c = detail::inv_checked(CMat(root * term.phi.cast<Complex>()),
                              params.m + 1);
      start = params.m;
      break;
    }
    default:
      throw Error("bad terminator");
  }
  for (int i = start; i >= 1; --i) {
    CMat inner = detail::inv_checked(
        CMat(params.gammas[i - 1].cast<Complex>() + c), i);
    c = detail::inv_checked(
        CMat(s * params.gamma_hats[i - 1].cast<Complex>() + inner), i);
  }
  Variant v = term.kind == Terminator::Kind::Dirichlet ? Variant::Gauss
              : term.kind == Terminator::Kind::Neumann ? Variant::Radau
                                                       : Variant::KN;
  return {s, c, v};
}

/// Extended Krein--Nudelman quadrature on the (m+1)p chain, with the extra
/// diagonal block
///   kappa_{m+1}^{-T} [g + xi^{-1} - xi^{-1}(xi^{-1} + sqrt(s) phi)^{-1}
///   xi^{-1}] kappa_{m+1}^{-1},  g = gamma_m^{-1}.
inline TransferSample extended_kn_eval(const LanczosDecomposition& dec,
                                       const StieltjesParams& params,
                                       const Mat& phi, const Mat& xi,
                                       Complex s) {
  if (!params.has_tail || !dec.tail_full_rank) throw MissingTail();
  const Complex root = principal_sqrt(s);
  const CMat g = params.gamma_invs.back().cast<Complex>();
  const CMat xi_inv = detail::inv_checked(xi.cast<Complex>(), dec.m + 1);
  const CMat kinv = params.kappa_hat_tail_inv.cast<Complex>();
  CMat mid =
      detail::inv_checked(CMat(xi_inv + root * phi.cast<Complex>()), dec.m + 1);
  CMat extra =
      kinv.transpose() * (g + xi_inv - xi_inv * mid * xi_inv) * kinv;

  std::vector<Mat> alphas = dec.alphas;
  alphas.push_back(Mat::Zero(dec.p, dec.p));  // replaced via last_alpha
  std::vector<Mat> betas = dec.betas;
  betas.push_back(dec.residual_beta);
  return {s, detail::resolvent_e1(alphas, betas, s, extra),
          Variant::ExtendedKN};
}

/// Closed form of the constant-coefficient S-fraction limit:
/// (gamma / 2s) sqrt(s (s + 4/(gamma gamma_hat))), principal branch.
inline Complex sqrt_terminator_closed(double gamma, double gamma_hat,
                                      Complex s) {
  return gamma / (2.0 * s) *
         principal_sqrt(s * (s + 4.0 / (gamma * gamma_hat)));
}

}  // namespace knl
