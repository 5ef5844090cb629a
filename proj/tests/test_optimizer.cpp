#include "doctest.h"
#include "knl/optimizer.hpp"
#include "test_helpers.hpp"

using namespace knl;
using knl::testing::random_block;
using knl::testing::random_spd;
using knl::testing::sparse_from_dense;

namespace {

std::vector<double> ritz_of(const LanczosDecomposition& dec) {
  Mat t = assemble_tridiagonal(dec);
  Eigen::SelfAdjointEigenSolver<Mat> es(t, Eigen::EigenvaluesOnly);
  std::vector<double> out(es.eigenvalues().size());
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
    out[i] = -es.eigenvalues()(i);
  return out;
}

struct Setup {
  LanczosDecomposition dec;
  StieltjesParams params;
  Contour contour;
  SmwCache cache;
};

Setup make_setup(int n, int m, unsigned seed, int n_pts = 32) {
  Setup s;
  Mat a = random_spd(n, seed);
  Mat b = block_qr(random_block(n, 1, seed + 7)).q;
  s.dec = block_lanczos(sparse_from_dense(a), b, m);
  s.params = extract_stieltjes(s.dec);
  ContourPolicy policy;
  policy.n_pts = n_pts;
  s.contour = build_contour(ritz_of(s.dec), 1, policy);
  s.cache = precompute_smw(s.dec, s.params, s.contour);
  return s;
}

}  // namespace

TEST_CASE("build_contour: uniform Ritz ladder") {
  std::vector<double> ritz;
  for (int i = 0; i <= 20; ++i) ritz.push_back(-1.0 + i * 0.0495);
  ContourPolicy policy;
  policy.n_pts = 40;
  Contour c = build_contour(ritz, 1, policy);
  CHECK(c.d == doctest::Approx(1.0));
  CHECK(c.delta == doctest::Approx(0.0495));
  CHECK(c.nodes.size() == 40);
  const double w = (c.delta) - (-c.d - c.delta);
  const double perimeter = 2.0 * (w + 2.0 * c.delta);
  double total = 0.0;
  for (double wk : c.weights) total += wk;
  CHECK(total == doctest::Approx(perimeter));
  for (Complex z : c.nodes) {
    const bool on_horizontal = std::abs(std::abs(z.imag()) - c.delta) < 1e-12;
    const bool on_vertical = std::abs(z.real() - c.delta) < 1e-12 ||
                             std::abs(z.real() + c.d + c.delta) < 1e-12;
    CHECK((on_horizontal || on_vertical));
    CHECK(z.real() >= -c.d - c.delta - 1e-12);
    CHECK(z.real() <= c.delta + 1e-12);
  }
}

TEST_CASE("build_contour: rejects short Ritz lists") {
  std::vector<double> ritz(5, -1.0);
  CHECK_THROWS_AS(build_contour(ritz, 1), TooFewRitzValues);
  CHECK_THROWS_AS(build_contour(ritz, 2), TooFewRitzValues);
  ContourPolicy policy;
  policy.min_count = 3;
  CHECK_NOTHROW(build_contour({-1.0, -2.0, -3.0}, 2, policy));
}

TEST_CASE("smw_eval with zero update reproduces Gauss") {
  auto s = make_setup(60, 25, 3);
  for (size_t k = 0; k < s.cache.entries.size(); ++k) {
    CMat f = smw_eval(s.cache.entries[k], CMat());
    CMat g = gauss_eval(s.dec, s.contour.nodes[k]).value;
    CHECK((f - g).norm() <= 1e-11 * g.norm());
  }
}

TEST_CASE("smw_eval with the KN update matches the tridiagonal path") {
  auto s = make_setup(60, 25, 4);
  for (double phi : {1e-2, 1.0, 50.0}) {
    Mat phi_mat = phi * Mat::Identity(1, 1);
    for (size_t k = 0; k < s.cache.entries.size(); ++k) {
      Complex node = s.contour.nodes[k];
      CMat f = smw_eval(s.cache.entries[k],
                        kn_delta_alpha(s.cache, phi_mat, node));
      CMat g = kn_eval_tridiag(s.dec, s.params, phi_mat, node).value;
      CHECK((f - g).norm() <= 1e-10 * std::max(1.0, g.norm()));
    }
  }
}

TEST_CASE("kn_objective is positive and phi-dependent") {
  auto s = make_setup(60, 25, 5);
  int skipped = 0;
  double v1 = kn_objective(s.cache, s.contour, 0.1, &skipped);
  double v2 = kn_objective(s.cache, s.contour, 10.0, &skipped);
  CHECK(v1 > 0.0);
  CHECK(v2 > 0.0);
  CHECK(v1 != v2);
}

TEST_CASE("optimize_phi improves on a poor start and beats a coarse grid") {
  auto s = make_setup(60, 25, 6);
  PhiResult r = optimize_phi(s.cache, s.contour, 1e-3);
  CHECK(r.phi > 0.0);
  CHECK(r.history.size() >= 2);
  double init_obj = kn_objective(s.cache, s.contour, 1e-3);
  CHECK(r.objective_value >= init_obj - 1e-12);
  // a coarse dyadic grid should not beat the optimizer by much
  double best_grid = 0.0;
  for (double phi = 1e-4; phi <= 1e4; phi *= 4.0)
    best_grid = std::max(best_grid, kn_objective(s.cache, s.contour, phi));
  CHECK(r.objective_value >= 0.9 * best_grid);
}

TEST_CASE("average_phi") {
  std::vector<PhiResult> hist(3);
  hist[0].phi = 1.0;
  hist[1].phi = 4.0;
  hist[2].phi = 16.0;
  CHECK(average_phi(hist, 3) == doctest::Approx(4.0));
  CHECK(average_phi(hist, 2) == doctest::Approx(8.0));
  CHECK(average_phi(hist, 10) == doctest::Approx(4.0));  // clamps to size
  CHECK_THROWS_AS(average_phi({}, 3), EmptyHistory);
}

TEST_CASE("first-order pencil structure") {
  Mat a = random_spd(40, 8);
  Mat b = block_qr(random_block(40, 2, 15)).q;
  auto dec = block_lanczos(sparse_from_dense(a), b, 4);
  auto params = extract_stieltjes(dec);
  Mat phi2 = 0.7 * Mat::Identity(2, 2);
  auto pencil = assemble_first_order_pencil(params, phi2);
  CHECK((pencil.skew + pencil.skew.transpose()).norm() == 0.0);
  Eigen::SelfAdjointEigenSolver<Mat> esd(pencil.dissipation,
                                         Eigen::EigenvaluesOnly);
  CHECK(esd.eigenvalues().minCoeff() >= 0.0);
  Eigen::SelfAdjointEigenSolver<Mat> esm(pencil.mass, Eigen::EigenvaluesOnly);
  CHECK(esm.eigenvalues().minCoeff() > 0.0);
}

TEST_CASE("first-order pencil solve equals the KN transfer value") {
  SUBCASE("worked single-mass string") {
    Mat a2 = 2.0 * Mat::Identity(2, 2);
    auto dec = block_lanczos(sparse_from_dense(a2), random_block(2, 1, 5), 1);
    auto params = extract_stieltjes(dec);
    Mat phi = 0.5 * Mat::Identity(1, 1);
    auto pencil = assemble_first_order_pencil(params, phi);
    Complex s(1.5, 0.0);
    CMat x = solve_first_order(pencil, s);
    CMat f = kn_eval_tridiag(dec, params, phi, s).value;
    CHECK(std::abs(x(0, 0) - f(0, 0) / principal_sqrt(s)) < 1e-13);
  }
  SUBCASE("random block chains") {
    for (unsigned seed : {21u, 22u}) {
      Mat a = random_spd(50, seed);
      Mat b = block_qr(random_block(50, 2, seed + 9)).q;
      auto dec = block_lanczos(sparse_from_dense(a), b, 5);
      auto params = extract_stieltjes(dec);
      Mat phi = 1.3 * Mat::Identity(2, 2);
      auto pencil = assemble_first_order_pencil(params, phi);
      for (Complex s : {Complex(0.4, 0.0), Complex(1.0, 2.0)}) {
        CMat x = solve_first_order(pencil, s);
        CMat f = kn_eval_tridiag(dec, params, phi, s).value;
        CHECK((x - f / principal_sqrt(s)).norm() <=
              1e-10 * std::max(1.0, f.norm()));
      }
    }
  }
}

TEST_CASE("energy_split: dissipated part is negative in the upper half plane") {
  auto s = make_setup(60, 25, 30);
  Mat phi = Mat::Identity(1, 1);
  Complex shift(0.5, 1.5);
  auto sample = kn_eval_tridiag(s.dec, s.params, phi, shift);
  auto [stored, dissipated] = energy_split(sample, shift);
  CHECK(std::isfinite(stored));
  CHECK(std::isfinite(dissipated));
  Complex w = sample.value(0, 0) / principal_sqrt(shift);
  CHECK(stored == doctest::Approx(w.real()));
  CHECK(dissipated == doctest::Approx(w.imag()));
}
