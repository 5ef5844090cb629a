#pragma once

#include <vector>

#include "knl/problems.hpp"
#include "knl/quadratures.hpp"

namespace knl {

/// Time-harmonic field snapshot on the full grid (exterior nodes included,
/// so the geometric stretching is visible in plots).
struct StateSnapshot {
  GridSpec grid;
  Mat field;  // ny x nx
  double t = 0.0;
  double omega = 0.0;
  double epsilon = 0.0;
  Variant variant = Variant::Gauss;
};

/// State-space solution Q_m (T_variant(s) + sI)^{-1} E_1 with
/// s = (i omega + epsilon)^2. The KN variant carries the sqrt(s)-dependent
/// last-block modification evaluated at this shift.
inline CMat state_solution(const LanczosDecomposition& dec,
                           const StieltjesParams& params, Variant variant,
                           const Mat& phi, double omega, double epsilon) {
  if (!dec.has_basis) throw MissingBasis();
  const Complex s = Complex(epsilon, omega) * Complex(epsilon, omega);
  CMat last;
  switch (variant) {
    case Variant::Gauss:
      break;
    case Variant::Radau:
      last = radau_last_alpha(dec, params).cast<Complex>();
      break;
    case Variant::KN:
      last = kn_last_alpha(dec, params, phi, s);
      break;
    default:
      throw Error("state_solution: unsupported variant");
  }
  const int p = dec.p;
  std::vector<CMat> diag(dec.m);
  std::vector<CMat> sub(dec.betas.size());
  const CMat shift = s * CMat::Identity(p, p);
  for (int i = 0; i < dec.m; ++i) diag[i] = dec.alphas[i].cast<Complex>() + shift;
  if (last.size() > 0) diag[dec.m - 1] = last + shift;
  for (size_t i = 0; i < dec.betas.size(); ++i)
    sub[i] = dec.betas[i].cast<Complex>();
  BlockTridiagFactor<Complex> fac(diag, sub);
  CMat rhs = CMat::Zero(static_cast<Eigen::Index>(dec.m) * p, p);
  rhs.topRows(p) = CMat::Identity(p, p);
  return dec.basis.cast<Complex>() * fac.solve(rhs);
}

/// field = Re(state * e^{i omega t}) laid out on the grid. Uses the first
/// column of the state block.
inline StateSnapshot snapshot(const GridSpec& grid, const CMat& state,
                              double omega, double epsilon, double t,
                              Variant variant) {
  StateSnapshot snap;
  snap.grid = grid;
  snap.t = t;
  snap.omega = omega;
  snap.epsilon = epsilon;
  snap.variant = variant;
  const Complex phase = std::exp(Complex(0.0, omega * t));
  snap.field.resize(grid.ny(), grid.nx());
  for (int j = 0; j < grid.ny(); ++j)
    for (int i = 0; i < grid.nx(); ++i)
      snap.field(j, i) = (state(grid.node_index(i, j), 0) * phase).real();
  return snap;
}

/// rows = times, columns = nodes along the sampling line.
inline Mat cross_section_series(const CMat& state, double omega,
                                const std::vector<Eigen::Index>& line,
                                const std::vector<double>& times) {
  Mat out(static_cast<Eigen::Index>(times.size()),
          static_cast<Eigen::Index>(line.size()));
  for (size_t r = 0; r < times.size(); ++r) {
    const Complex phase = std::exp(Complex(0.0, omega * times[r]));
    for (size_t c = 0; c < line.size(); ++c)
      out(r, c) = (state(line[c], 0) * phase).real();
  }
  return out;
}

}  // namespace knl
