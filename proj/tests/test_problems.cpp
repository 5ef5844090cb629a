#include <cstdio>

#include "doctest.h"
#include "knl/matrix_market.hpp"
#include "knl/problems.hpp"
#include "test_helpers.hpp"

using namespace knl;

TEST_CASE("geometric_exterior_grid") {
  auto steps = geometric_exterior_grid(0.5, 4);
  REQUIRE(steps.size() == 4);
  const double r = std::exp(M_PI / 2.0);
  CHECK(steps[0] == doctest::Approx(0.5 * r));
  for (int k = 1; k < 4; ++k)
    CHECK(steps[k] / steps[k - 1] == doctest::Approx(r));
}

TEST_CASE("make_grid: node layout") {
  GridSpec g = make_grid(5, 3, 0.25, 3);
  CHECK(g.nx() == 5 + 2 * 3);
  CHECK(g.ny() == 3 + 2 * 3);
  CHECK(g.n() == g.nx() * g.ny());
  // interior nodes sit at i * h starting at 0
  for (int i = 0; i < 5; ++i)
    CHECK(g.coords_x[3 + i] == doctest::Approx(0.25 * i));
  // exterior is mirrored
  CHECK(g.coords_x.front() ==
        doctest::Approx(-(g.coords_x.back() - 0.25 * 4)).epsilon(1e-12));
  // steps array is symmetric
  for (size_t k = 0; k < g.steps_x.size(); ++k)
    CHECK(g.steps_x[k] ==
          doctest::Approx(g.steps_x[g.steps_x.size() - 1 - k]));
}

TEST_CASE("make_grid: 1-D collapse") {
  GridSpec g = make_grid(8, 1, 1.0, 2);
  CHECK(g.ny() == 1);
  CHECK(g.coords_y.size() == 1);
  CHECK(g.steps_y.empty());
}

TEST_CASE("assemble_diffusion_2d: uniform 1-D interior is (-1,2,-1)/h^2") {
  const double h = 0.5;
  GridSpec g = make_grid(6, 1, h, 2);
  auto prob = assemble_diffusion_2d(g, SigmaField{});
  Mat a = Mat(prob.a.matrix());
  const int i0 = 2;  // first interior node
  for (int i = i0 + 1; i < i0 + 5; ++i) {
    CHECK(a(i, i) == doctest::Approx(2.0 / (h * h)));
    CHECK(a(i, i - 1) == doctest::Approx(-1.0 / (h * h)));
    CHECK(a(i, i + 1) == doctest::Approx(-1.0 / (h * h)));
  }
}

TEST_CASE("assemble_diffusion_2d: uniform 2-D interior is the 5-point stencil") {
  const double h = 0.25;
  GridSpec g = make_grid(6, 6, h, 2);
  auto prob = assemble_diffusion_2d(g, SigmaField{});
  Mat a = Mat(prob.a.matrix());
  // a node well inside the uniform region
  const Eigen::Index k = g.node_index(2 + 3, 2 + 3);
  CHECK(a(k, k) == doctest::Approx(4.0 / (h * h)));
  CHECK(a(k, k - 1) == doctest::Approx(-1.0 / (h * h)));
  CHECK(a(k, k + 1) == doctest::Approx(-1.0 / (h * h)));
  CHECK(a(k, k - g.nx()) == doctest::Approx(-1.0 / (h * h)));
  CHECK(a(k, k + g.nx()) == doctest::Approx(-1.0 / (h * h)));
}

TEST_CASE("assemble_diffusion_2d: scaling law A(c sigma) = A(sigma)/c") {
  GridSpec g = make_grid(4, 4, 1.0, 2);
  SigmaField s1;
  s1.background = 1.0;
  s1.inclusions.push_back({0.5, 0.5, 2.5, 2.5, 7.0});
  SigmaField s3 = s1;
  s3.background *= 3.0;
  s3.inclusions[0].value *= 3.0;
  Mat a1 = Mat(assemble_diffusion_2d(g, s1).a.matrix());
  Mat a3 = Mat(assemble_diffusion_2d(g, s3).a.matrix());
  CHECK((a3 - a1 / 3.0).norm() < 1e-13 * a1.norm());
}

TEST_CASE("assemble_diffusion_2d: SPD") {
  GridSpec g = make_grid(5, 4, 0.5, 3);
  SigmaField s;
  s.inclusions.push_back({0.0, 0.0, 1.0, 1.0, 10.0});
  auto prob = assemble_diffusion_2d(g, s);
  Mat a = Mat(prob.a.matrix());
  CHECK((a - a.transpose()).norm() == 0.0);
  Eigen::SelfAdjointEigenSolver<Mat> es(a, Eigen::EigenvaluesOnly);
  CHECK(es.eigenvalues().minCoeff() > 0.0);
}

TEST_CASE("assemble_diffusion_2d: rejects non-positive sigma") {
  GridSpec g = make_grid(3, 3, 1.0, 2);
  SigmaField s;
  s.inclusions.push_back({0.0, 0.0, 1.0, 1.0, -1.0});
  CHECK_THROWS_AS(assemble_diffusion_2d(g, s), NonPositiveSigma);
}

TEST_CASE("build_point_sources") {
  GridSpec g = make_grid(6, 6, 1.0, 2);
  auto prob = assemble_diffusion_2d(g, SigmaField{});
  SUBCASE("nearest-node snapping and orthonormal B") {
    auto spec = build_point_sources(prob, {{0.1, 0.2}, {3.4, 4.9}});
    CHECK(spec.nodes[0] == g.node_index(2, 2));
    CHECK(spec.nodes[1] == g.node_index(2 + 3, 2 + 5));
    CHECK((spec.b.transpose() * spec.b - Mat::Identity(2, 2)).norm() == 0.0);
  }
  SUBCASE("rejects exterior locations") {
    CHECK_THROWS_AS(build_point_sources(prob, {{-1.0, 0.0}}), OutsideInterior);
    CHECK_THROWS_AS(build_point_sources(prob, {{0.0, 5.4}}), OutsideInterior);
  }
  SUBCASE("rejects coincident snapped nodes") {
    CHECK_THROWS_AS(build_point_sources(prob, {{1.0, 1.0}, {1.1, 0.9}}),
                    DuplicateNode);
  }
}

TEST_CASE("reference_transfer matches a dense solve") {
  GridSpec g = make_grid(4, 4, 1.0, 2);
  auto prob = assemble_diffusion_2d(g, SigmaField{});
  auto spec = build_point_sources(prob, {{1.0, 1.0}, {3.0, 2.0}});
  Mat a = Mat(prob.a.matrix());
  for (Complex s : {Complex(0.5, 0.0), Complex(2.0, 3.0)}) {
    CMat lhs = a.cast<Complex>() + s * CMat::Identity(a.rows(), a.cols());
    CMat expect = spec.b.cast<Complex>().transpose() *
                  lhs.lu().solve(spec.b.cast<Complex>());
    CMat got = reference_transfer(prob.a, spec.b, s).value;
    CHECK((got - expect).norm() <= 1e-11 * expect.norm());
  }
}

TEST_CASE("exterior truncation error decays with n_opt") {
  // the transfer value at a fixed interior source converges as the exterior
  // extension deepens; deeper grids must be closer to the deepest one
  auto value_at = [](int n_opt) {
    GridSpec g = make_grid(9, 1, 1.0, n_opt);
    auto prob = assemble_diffusion_2d(g, SigmaField{});
    auto spec = build_point_sources(prob, {{4.0, 0.0}});
    return reference_transfer(prob.a, spec.b, Complex(1e-4, 0.0))
        .value(0, 0)
        .real();
  };
  const double deep = value_at(25);
  const double err4 = std::abs(value_at(4) - deep);
  const double err9 = std::abs(value_at(9) - deep);
  const double err16 = std::abs(value_at(16) - deep);
  CHECK(err9 < err4);
  CHECK(err16 < err9);
}

TEST_CASE("matrix market round trip") {
  GridSpec g = make_grid(4, 3, 0.5, 2);
  SigmaField s;
  s.inclusions.push_back({0.0, 0.0, 1.0, 0.5, 5.0});
  auto prob = assemble_diffusion_2d(g, s);
  const std::string path = "mm_roundtrip_test.mtx";
  save_matrix_market(path, prob.a);
  auto loaded = load_matrix_market(path);
  CHECK((Mat(loaded.matrix()) - Mat(prob.a.matrix())).norm() == 0.0);
  std::remove(path.c_str());
}

TEST_CASE("dense block round trip") {
  Mat b = knl::testing::random_block(7, 3, 77);
  const std::string path = "mm_block_test.mtx";
  save_dense_block(path, b);
  Mat loaded = load_dense_block(path);
  CHECK((loaded - b).norm() == 0.0);
  std::remove(path.c_str());
}
