#include "common.hpp"

#include "doctest.h"

using namespace flexbc;
using namespace flexbc::testing;

TEST_CASE("open grid excludes the end points") {
  const auto g = open_grid(-1.0, 0.0, 3);
  REQUIRE(g.size() == 3);
  CHECK(g[0] == doctest::Approx(-0.75));
  CHECK(g[2] == doctest::Approx(-0.25));
}

TEST_CASE("spectral radius and conditioning") {
  Mat T(2, 2);
  T << 0.5, 1.0, 0.0, 0.25;
  const auto info = spectral_radius(T);
  CHECK(info.sigma == doctest::Approx(0.5));
  CHECK(info.diagonalizable);
  CHECK(info.kappa >= 1.0);
  Mat J(2, 2);
  J << 0.3, 1.0, 0.0, 0.3;
  CHECK(!spectral_radius(J).diagonalizable);
  CHECK(spectral_radius_only(Mat(0, 0)) == 0.0);
}

TEST_CASE("chain theory checks") {
  for (int M : {3, 8})
    for (double k2 : {-0.05, -0.2}) {
      const auto rep = verify_1d_theory(M, 1.0, k2);
      for (const auto& it : rep.items) CHECK_MESSAGE(it.passed, it.name << " = " << it.value);
      CHECK(rep.passed());
    }
  CHECK_THROWS_AS(verify_1d_theory(3, 1.0, 0.1), std::invalid_argument);
  CHECK(lu_last_pivot(5, 1.0, -0.1) < 0);
}

TEST_CASE("chain scan") {
  const auto pts = stab1d_scan(4, 1.0, {-0.3, -0.1, 0.05});
  REQUIRE(pts.size() == 3);
  CHECK(!pts[0].stable);
  CHECK(std::isnan(pts[0].sigma));
  CHECK(pts[1].stable);
  CHECK(pts[1].sigma_opt <= pts[1].sigma);
  CHECK(pts[1].alpha_opt > 0);
  CHECK(pts[2].sigma < 1.0);
}

TEST_CASE("harmonic atomistic model converges in one correction") {
  // With identical operators the pad block is nilpotent of order two.
  Chain1d ch(5, 15, 1.0, 0.0);
  const Vec zero = Vec::Zero(static_cast<Eigen::Index>(ch.d.size()));
  const auto T = assemble_T(ch.sys.hessian_blocks(zero), ch.sys.free_sites(), ch.ws);
  const Mat P = T.Tpp();
  CHECK((P * P).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("dense and boundary assemblies agree") {
  Chain1d ch(4, 14, 1.0, -0.12);
  const Vec zero = Vec::Zero(static_cast<Eigen::Index>(ch.d.size()));
  const auto lin = ch.sys.hessian_blocks(zero);
  const auto T = assemble_T(lin, ch.sys.free_sites(), ch.ws, ch.d.c);
  const Mat D = dense_Tcp(lin, ch.h, ch.d, 0.9);
  CHECK((T.Tcp(0.9) - D).cwiseAbs().maxCoeff() < 1e-9 * D.cwiseAbs().maxCoeff());
  CHECK(schur_cc(ch.h, ch.d).rows() == static_cast<Eigen::Index>(ch.d.c.size()));
}

TEST_CASE("error bound holds") {
  const auto rep = error_bound_1d(4, 16, 1.0, -0.15, 20);
  CHECK(rep.holds);
  CHECK(rep.measured.size() == rep.bound.size());
  CHECK(rep.sigma < 1.0);
}
