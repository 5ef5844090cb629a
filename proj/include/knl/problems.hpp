#pragma once

#include <cmath>
#include <functional>
#include <set>
#include <utility>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include "knl/core.hpp"
#include "knl/quadratures.hpp"

namespace knl {

/// Exterior grid steps in geometric progression: steps[k] = h * r^(k+1) with
/// r = exp(pi / sqrt(n_opt)). This progression gives exp(-pi sqrt(n_opt))
/// convergence of the exterior truncation.
inline std::vector<double> geometric_exterior_grid(double h, int n_opt) {
  std::vector<double> steps;
  steps.reserve(n_opt);
  const double r = std::exp(M_PI / std::sqrt(static_cast<double>(n_opt)));
  double step = h;
  for (int k = 0; k < n_opt; ++k) {
    step *= r;
    steps.push_back(step);
  }
  return steps;
}

/// Tensor grid: a uniform interior box surrounded by a geometric exterior
/// extension on all sides, Dirichlet at the outer boundary. Interior node i
/// sits at x = i * h, i = 0 .. interior_nx - 1.
struct GridSpec {
  int interior_nx = 0;
  int interior_ny = 0;  // 1 collapses the problem to 1-D
  double h = 1.0;
  int n_opt = 0;
  std::vector<double> steps_x, steps_y;  // full 1-D step arrays
  std::vector<double> coords_x, coords_y;  // unknown-node coordinates

  int nx() const { return static_cast<int>(coords_x.size()); }
  int ny() const { return static_cast<int>(coords_y.size()); }
  Eigen::Index n() const {
    return static_cast<Eigen::Index>(nx()) * ny();
  }
  Eigen::Index node_index(int i, int j) const {
    return static_cast<Eigen::Index>(j) * nx() + i;
  }
};

namespace detail {

inline void build_axis(int interior_n, double h, int n_opt,
                       std::vector<double>& steps,
                       std::vector<double>& coords) {
  const std::vector<double> ext = geometric_exterior_grid(h, n_opt);
  steps.clear();
  steps.insert(steps.end(), ext.rbegin(), ext.rend());
  for (int i = 0; i <= interior_n; ++i) steps.push_back(h);
  steps.insert(steps.end(), ext.begin(), ext.end());
  // unknown nodes: everything strictly between the two Dirichlet ends;
  // the first interior node lands at coordinate 0
  double left = 0.0;
  for (const double s : ext) left -= s;
  left -= h;
  coords.clear();
  double x = left;
  for (size_t k = 0; k + 1 < steps.size(); ++k) {
    x += steps[k];
    coords.push_back(x);
  }
}

}  // namespace detail

inline GridSpec make_grid(int interior_nx, int interior_ny, double h,
                          int n_opt) {
  GridSpec g;
  g.interior_nx = interior_nx;
  g.interior_ny = interior_ny;
  g.h = h;
  g.n_opt = n_opt;
  detail::build_axis(interior_nx, h, n_opt, g.steps_x, g.coords_x);
  if (interior_ny > 1)
    detail::build_axis(interior_ny, h, n_opt, g.steps_y, g.coords_y);
  else
    g.coords_y.assign(1, 0.0);
  return g;
}

/// Piecewise-constant conductivity map: a background value with axis-aligned
/// rectangular inclusions.
struct SigmaField {
  struct Inclusion {
    double x0, y0, x1, y1, value;
  };
  double background = 1.0;
  std::vector<Inclusion> inclusions;

  double operator()(double x, double y) const {
    double v = background;
    for (const auto& inc : inclusions)
      if (x >= inc.x0 && x <= inc.x1 && y >= inc.y0 && y <= inc.y1)
        v = inc.value;
    return v;
  }
};

struct DiffusionProblem {
  GridSpec grid;
  Vec sigma;  // sampled at unknown nodes
  SparseSpdOperator a;
};

/// Symmetrized 5-point discretization of -sigma^{-1/2} Laplace sigma^{-1/2}
/// on the tensor grid with Dirichlet outer boundary:
///   A = D_sigma^{-1/2} V^{-1/2} K V^{-1/2} D_sigma^{-1/2},
/// with K the sigma-free stiffness (three-point formula on nonuniform steps)
/// and V the diagonal of cell volumes. Reduces to the 5-point Laplacian/h^2
/// for sigma = 1 on a uniform grid, and scales as A(c sigma) = A(sigma)/c.
inline DiffusionProblem assemble_diffusion_2d(const GridSpec& grid,
                                              const SigmaField& sigma) {
  const int nx = grid.nx();
  const int ny = grid.ny();
  const bool two_d = grid.interior_ny > 1;
  const Eigen::Index n = grid.n();

  Vec sig(n);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const double v = sigma(grid.coords_x[i], grid.coords_y[j]);
      if (!(v > 0.0)) throw NonPositiveSigma();
      sig(grid.node_index(i, j)) = v;
    }

  auto cell = [](const std::vector<double>& steps, int i) {
    return 0.5 * (steps[i] + steps[i + 1]);
  };
  Vec vol(n);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i)
      vol(grid.node_index(i, j)) =
          cell(grid.steps_x, i) * (two_d ? cell(grid.steps_y, j) : 1.0);

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<size_t>(5 * n));
  auto scale = [&](Eigen::Index k) {
    return 1.0 / std::sqrt(vol(k) * sig(k));
  };
  auto add_pair = [&](Eigen::Index k, Eigen::Index k2, double coupling) {
    trips.emplace_back(k, k, coupling * scale(k) * scale(k));
    trips.emplace_back(k2, k2, coupling * scale(k2) * scale(k2));
    trips.emplace_back(k, k2, -coupling * scale(k) * scale(k2));
    trips.emplace_back(k2, k, -coupling * scale(k) * scale(k2));
  };
  for (int j = 0; j < ny; ++j) {
    const double cy = two_d ? cell(grid.steps_y, j) : 1.0;
    for (int i = 0; i < nx; ++i) {
      const double cx = cell(grid.steps_x, i);
      const Eigen::Index k = grid.node_index(i, j);
      // stiffness entries carry the transverse cell size; Dirichlet ends
      // contribute only to the diagonal
      if (i == 0)
        trips.emplace_back(k, k,
                           (cy / grid.steps_x[0]) * scale(k) * scale(k));
      if (i == nx - 1)
        trips.emplace_back(k, k,
                           (cy / grid.steps_x[nx]) * scale(k) * scale(k));
      if (i + 1 < nx)
        add_pair(k, grid.node_index(i + 1, j), cy / grid.steps_x[i + 1]);
      if (two_d) {
        if (j == 0)
          trips.emplace_back(k, k,
                             (cx / grid.steps_y[0]) * scale(k) * scale(k));
        if (j == ny - 1)
          trips.emplace_back(k, k,
                             (cx / grid.steps_y[ny]) * scale(k) * scale(k));
        if (j + 1 < ny)
          add_pair(k, grid.node_index(i, j + 1), cx / grid.steps_y[j + 1]);
      }
    }
  }
  SparseSpdOperator::Sparse a(n, n);
  a.setFromTriplets(trips.begin(), trips.end());
  return {grid, std::move(sig), SparseSpdOperator(std::move(a))};
}

/// Discrete delta sources: one unit column per location, placed at the
/// nearest interior node.
struct SourceSpec {
  std::vector<std::pair<double, double>> locations;
  std::vector<Eigen::Index> nodes;
  Mat b;  // n x p, orthonormal by construction
};

inline SourceSpec build_point_sources(
    const DiffusionProblem& problem,
    const std::vector<std::pair<double, double>>& locations) {
  const GridSpec& g = problem.grid;
  SourceSpec spec;
  spec.locations = locations;
  std::set<Eigen::Index> seen;
  const double x_max = (g.interior_nx - 1) * g.h;
  const double y_max = (g.interior_ny - 1) * g.h;
  for (const auto& [x, y] : locations) {
    if (x < 0.0 || x > x_max || y < 0.0 || y > y_max)
      throw OutsideInterior();
    auto nearest = [](const std::vector<double>& coords, double v) {
      int best = 0;
      for (size_t i = 1; i < coords.size(); ++i)
        if (std::abs(coords[i] - v) < std::abs(coords[best] - v))
          best = static_cast<int>(i);
      return best;
    };
    const Eigen::Index k =
        g.node_index(nearest(g.coords_x, x), nearest(g.coords_y, y));
    if (!seen.insert(k).second) throw DuplicateNode();
    spec.nodes.push_back(k);
  }
  spec.b = Mat::Zero(g.n(), static_cast<Eigen::Index>(spec.nodes.size()));
  for (size_t c = 0; c < spec.nodes.size(); ++c) spec.b(spec.nodes[c], c) = 1.0;
  return spec;
}

/// Ground-truth transfer value B^T (A + sI)^{-1} B via a sparse direct
/// factorization (LDL^T for real positive shifts, LU for complex ones).
inline TransferSample reference_transfer(const SparseSpdOperator& a,
                                         const Mat& b, Complex s) {
  const Eigen::Index n = a.n();
  if (b.rows() != n) throw DimensionMismatch("B row count != operator n");
  if (s.imag() == 0.0 && s.real() >= 0.0) {
    Eigen::SparseMatrix<double> shifted(a.matrix());
    shifted += Eigen::SparseMatrix<double>(
        Vec::Constant(n, s.real()).asDiagonal());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(shifted);
    if (solver.info() != Eigen::Success) throw SingularShift();
    Mat x = solver.solve(b);
    return {s, (b.transpose() * x).cast<Complex>(), Variant::Reference};
  }
  Eigen::SparseMatrix<Complex> shifted =
      a.matrix().cast<Complex>();
  shifted += Eigen::SparseMatrix<Complex>(
      CVec::Constant(n, s).asDiagonal());
  Eigen::SparseLU<Eigen::SparseMatrix<Complex>> solver;
  solver.compute(shifted);
  if (solver.info() != Eigen::Success) throw SingularShift();
  CMat x = solver.solve(b.cast<Complex>());
  return {s, b.transpose().cast<Complex>() * x, Variant::Reference};
}

}  // namespace knl
