#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "knl/quadratures.hpp"

namespace knl {

/// Closed quadrature contour encircling the dense spectral window [-d, 0] of
/// -A at distance delta. Closure is encoded in the weights (uniform
/// arclength trapezoid rule on a closed rectangle).
struct Contour {
  std::vector<Complex> nodes;
  std::vector<double> weights;
  double d = 0.0;
  double delta = 0.0;
};

struct ContourPolicy {
  int n_pts = 128;
  int min_count = 0;  // 0: use max(20, 10 p^2)
};

/// Rectangle contour from the Ritz values (negative reals). The window
/// [-d, 0] spans all supplied Ritz values; delta is the median adjacent gap,
/// keeping the contour at a distance comparable with the spectral gaps.
inline Contour build_contour(std::vector<double> ritz_values, int p,
                             const ContourPolicy& policy = {}) {
  const int required =
      policy.min_count > 0 ? policy.min_count : std::max(20, 10 * p * p);
  if (static_cast<int>(ritz_values.size()) < required)
    throw TooFewRitzValues(static_cast<int>(ritz_values.size()), required);
  std::sort(ritz_values.begin(), ritz_values.end());

  Contour c;
  c.d = std::abs(ritz_values.front());
  std::vector<double> gaps;
  gaps.reserve(ritz_values.size() - 1);
  for (size_t i = 1; i < ritz_values.size(); ++i)
    gaps.push_back(ritz_values[i] - ritz_values[i - 1]);
  std::sort(gaps.begin(), gaps.end());
  const size_t g = gaps.size();
  c.delta = g % 2 == 1 ? gaps[g / 2] : 0.5 * (gaps[g / 2 - 1] + gaps[g / 2]);

  // rectangle corners (-d - delta) +- i delta, (+delta) +- i delta
  const double x0 = -c.d - c.delta;
  const double x1 = c.delta;
  const double w = x1 - x0;
  const double h = 2.0 * c.delta;
  const double perimeter = 2.0 * (w + h);
  const int n = policy.n_pts;
  c.nodes.reserve(n);
  c.weights.assign(n, perimeter / n);
  for (int k = 0; k < n; ++k) {
    double t = perimeter * k / n;
    double re, im;
    if (t < w) {  // bottom edge, left to right
      re = x0 + t;
      im = -c.delta;
    } else if (t < w + h) {  // right edge, up
      re = x1;
      im = -c.delta + (t - w);
    } else if (t < 2 * w + h) {  // top edge, right to left
      re = x1 - (t - w - h);
      im = c.delta;
    } else {  // left edge, down
      re = x0;
      im = c.delta - (t - 2 * w - h);
    }
    c.nodes.emplace_back(re, im);
  }
  return c;
}

/// Per-shift resolvent blocks reused across phi evaluations:
///   q1 = (T+sI)^{-1} E_1,  qm = (T+sI)^{-1} E_m,
///   f11 = E_1^T q1, f1m = E_m^T q1, fmm = E_m^T qm.
/// The string tail (gamma_m^{-1}, kappa_m^{-1}) is carried along so the
/// rank-p update can be formed per (phi, s).
struct SmwCache {
  struct Entry {
    Complex s;
    CMat q1, qm;
    CMat f11, f1m, fmm;
  };
  int m = 0;
  int p = 0;
  std::vector<Entry> entries;
  Mat gamma_m_inv;
  Mat kappa_m_inv;
};

inline SmwCache precompute_smw(const LanczosDecomposition& dec,
                               const StieltjesParams& params,
                               const Contour& contour) {
  SmwCache cache;
  cache.m = dec.m;
  cache.p = dec.p;
  cache.gamma_m_inv = params.gamma_invs.back();
  cache.kappa_m_inv = params.kappa_hat_invs.back();
  const int p = dec.p;
  const Eigen::Index dim = static_cast<Eigen::Index>(dec.m) * p;
  cache.entries.reserve(contour.nodes.size());
  for (Complex s : contour.nodes) {
    std::vector<CMat> diag(dec.m);
    std::vector<CMat> sub(dec.betas.size());
    const CMat shift = s * CMat::Identity(p, p);
    for (int i = 0; i < dec.m; ++i)
      diag[i] = dec.alphas[i].cast<Complex>() + shift;
    for (size_t i = 0; i < dec.betas.size(); ++i)
      sub[i] = dec.betas[i].cast<Complex>();
    BlockTridiagFactor<Complex> fac(diag, sub);
    CMat rhs = CMat::Zero(dim, 2 * p);
    rhs.topLeftCorner(p, p) = CMat::Identity(p, p);
    rhs.bottomRightCorner(p, p) = CMat::Identity(p, p);
    CMat sol = fac.solve(rhs);
    SmwCache::Entry e;
    e.s = s;
    e.q1 = sol.leftCols(p);
    e.qm = sol.rightCols(p);
    e.f11 = e.q1.topRows(p);
    e.f1m = e.q1.bottomRows(p);
    e.fmm = e.qm.bottomRows(p);
    cache.entries.push_back(std::move(e));
  }
  return cache;
}

/// Rank-p modified E_1 block via Sherman--Morrison--Woodbury:
///   F = f11 - f1m^T [(dalpha)^{-1} + fmm]^{-1} f1m.
/// dalpha = 0 returns the unmodified (Gauss) value.
inline CMat smw_eval(const SmwCache::Entry& entry, const CMat& delta_alpha) {
  if (delta_alpha.size() == 0 || delta_alpha.norm() == 0.0) return entry.f11;
  Eigen::PartialPivLU<CMat> lu(delta_alpha);
  auto u = lu.matrixLU().diagonal().cwiseAbs();
  if (!(u.minCoeff() > 1e-300)) throw SingularUpdate();
  CMat x = lu.inverse() + entry.fmm;
  Eigen::PartialPivLU<CMat> lux(x);
  auto ux = lux.matrixLU().diagonal().cwiseAbs();
  if (!(ux.minCoeff() > 1e-14 * ux.maxCoeff())) throw SingularUpdate();
  return entry.f11 - entry.f1m.transpose() * lux.solve(entry.f1m);
}

/// KN update Delta alpha(phi, s) = -kappa^{-T} g (g + sqrt(s) phi)^{-1} g
/// kappa^{-1} with g = gamma_m^{-1}, formed from the cached tail.
inline CMat kn_delta_alpha(const SmwCache& cache, const Mat& phi, Complex s) {
  const CMat g = cache.gamma_m_inv.cast<Complex>();
  const CMat kinv = cache.kappa_m_inv.cast<Complex>();
  CMat mid = detail::inv_checked(CMat(g + principal_sqrt(s) * phi.cast<Complex>()),
                                 cache.m);
  return -(kinv.transpose() * g * mid * g * kinv);
}

/// Relative energy-outflow objective
///   sum_k w_k || (Re F)^{-1/2} (Im F) (Re F)^{-1/2} ||_2
/// over the contour, with F the KN value at each node. Nodes where Re F is
/// not positive definite are skipped and counted.
inline double kn_objective(const SmwCache& cache, const Contour& contour,
                           double phi, int* skipped_out = nullptr) {
  const int p = cache.p;
  const Mat phi_mat = phi * Mat::Identity(p, p);
  double total = 0.0;
  int skipped = 0;
  for (size_t k = 0; k < cache.entries.size(); ++k) {
    CMat f = smw_eval(cache.entries[k], kn_delta_alpha(cache, phi_mat,
                                                       cache.entries[k].s));
    Mat re = 0.5 * (f.real() + f.real().transpose().eval());
    Mat im = 0.5 * (f.imag() + f.imag().transpose().eval());
    Eigen::SelfAdjointEigenSolver<Mat> es(re);
    if (es.eigenvalues().minCoeff() <= 0.0) {
      ++skipped;
      continue;
    }
    Mat rinv_sqrt = es.operatorInverseSqrt();
    Mat sym = rinv_sqrt * im * rinv_sqrt;
    Eigen::SelfAdjointEigenSolver<Mat> es2(sym, Eigen::EigenvaluesOnly);
    total += contour.weights[k] * es2.eigenvalues().cwiseAbs().maxCoeff();
  }
  if (skipped == static_cast<int>(cache.entries.size()))
    throw AllNodesSkipped();
  if (skipped_out) *skipped_out = skipped;
  return total;
}

struct PhiResult {
  double phi = 0.0;
  double objective_value = 0.0;
  std::vector<std::pair<double, double>> history;  // (phi, objective)
  std::optional<double> averaged_phi;
  int skipped_nodes = 0;
};

/// Maximizes kn_objective over log10(phi) with a two-point Nelder--Mead
/// simplex (reflection 1, expansion 2, contraction 0.5, shrink 0.5).
/// Terminates when the simplex diameter drops below 1e-3 log10 units or
/// after 200 evaluations.
inline PhiResult optimize_phi(const SmwCache& cache, const Contour& contour,
                              double init) {
  PhiResult result;
  int evals = 0;
  int skipped = 0;
  auto f = [&](double x) {
    ++evals;
    double phi = std::pow(10.0, x);
    double v = kn_objective(cache, contour, phi, &skipped);
    result.history.emplace_back(phi, v);
    return v;
  };

  double xb = std::log10(init);
  double xw = xb + 0.5;
  double fb = f(xb);
  double fw = f(xw);
  if (fw > fb) {
    std::swap(xb, xw);
    std::swap(fb, fw);
  }
  while (std::abs(xb - xw) >= 1e-3 && evals < 200) {
    double xr = xb + (xb - xw);
    double fr = f(xr);
    if (fr > fb) {
      double xe = xb + 2.0 * (xb - xw);
      double fe = f(xe);
      if (fe > fr) {
        xw = xe;
        fw = fe;
      } else {
        xw = xr;
        fw = fr;
      }
    } else if (fr > fw) {
      xw = xr;
      fw = fr;
    } else {
      double xc = xb + 0.5 * (xw - xb);
      double fc = f(xc);
      if (fc > fw) {
        xw = xc;
        fw = fc;
      } else {
        xw = xb + 0.5 * (xw - xb);  // shrink toward the best point
        fw = f(xw);
      }
    }
    if (fw > fb) {
      std::swap(xb, xw);
      std::swap(fb, fw);
    }
  }
  result.phi = std::pow(10.0, xb);
  result.objective_value = fb;
  result.skipped_nodes = skipped;
  return result;
}

/// Geometric mean of the last `window` phi values.
inline double average_phi(const std::vector<PhiResult>& history, int window) {
  if (history.empty()) throw EmptyHistory();
  if (window < 1) throw Error("average window must be >= 1");
  const int n = static_cast<int>(history.size());
  const int k = std::min(window, n);
  double acc = 0.0;
  for (int i = n - k; i < n; ++i) acc += std::log(history[i].phi);
  return std::exp(acc / k);
}

/// First-order (port-Hamiltonian) pencil: S skew-symmetric, D positive
/// semidefinite dissipation, M SPD. Solving (S + D + sqrt(s) M) x =
/// [E_1/sqrt(s); 0] gives E_1^T x = F^phi(s)/sqrt(s).
struct FirstOrderPencil {
  Mat skew;         // [[0, J],[-J^T, 0]]
  Mat dissipation;  // blkdiag(0, E_m phi^{-1} E_m^T)
  Mat mass;         // blkdiag(Gamma_hat, Gamma)
  int m = 0;
  int p = 0;
};

inline FirstOrderPencil assemble_first_order_pencil(
    const StieltjesParams& params, const Mat& phi) {
  const int p = params.p;
  const Eigen::Index dim = static_cast<Eigen::Index>(params.m) * p;
  Mat j = Mat::Zero(dim, dim);
  for (int i = 0; i < params.m; ++i) {
    j.block(i * p, i * p, p, p) = Mat::Identity(p, p);
    if (i > 0) j.block(i * p, (i - 1) * p, p, p) = -Mat::Identity(p, p);
  }
  FirstOrderPencil out;
  out.m = params.m;
  out.p = p;
  out.skew = Mat::Zero(2 * dim, 2 * dim);
  out.skew.topRightCorner(dim, dim) = j;
  out.skew.bottomLeftCorner(dim, dim) = -j.transpose();
  out.dissipation = Mat::Zero(2 * dim, 2 * dim);
  Eigen::PartialPivLU<Mat> lu(phi);
  if (!(lu.matrixLU().diagonal().cwiseAbs().minCoeff() > 0.0))
    throw SingularPencil();
  out.dissipation.block(2 * dim - p, 2 * dim - p, p, p) = lu.inverse();
  out.mass = Mat::Zero(2 * dim, 2 * dim);
  for (int i = 0; i < params.m; ++i) {
    out.mass.block(i * p, i * p, p, p) = params.gamma_hats[i];
    out.mass.block(dim + i * p, dim + i * p, p, p) = params.gammas[i];
  }
  return out;
}

/// Dense solve of the first-order pencil; returns E_1^T x = F^phi(s)/sqrt(s).
inline CMat solve_first_order(const FirstOrderPencil& pencil, Complex s) {
  const Complex root = principal_sqrt(s);
  const Eigen::Index dim2 = pencil.skew.rows();
  CMat a = pencil.skew.cast<Complex>() + pencil.dissipation.cast<Complex>() +
           root * pencil.mass.cast<Complex>();
  CMat rhs = CMat::Zero(dim2, pencil.p);
  rhs.topRows(pencil.p) = CMat::Identity(pencil.p, pencil.p) / root;
  Eigen::PartialPivLU<CMat> lu(a);
  auto u = lu.matrixLU().diagonal().cwiseAbs();
  if (!(u.minCoeff() > 1e-14 * u.maxCoeff())) throw SingularPencil();
  return lu.solve(rhs).topRows(pencil.p);
}

/// Stored/dissipated energy split: (Re, Im) of fhat/sqrt(s). Scalar (p = 1)
/// diagnostic.
inline std::pair<double, double> energy_split(const TransferSample& fhat,
                                              Complex s) {
  Complex w = fhat.value(0, 0) / principal_sqrt(s);
  return {w.real(), w.imag()};
}

}  // namespace knl
