#include "common.hpp"

#include "doctest.h"

using namespace flexbc;
using namespace flexbc::testing;

namespace {

double fd_force_error(const AtomisticSystem& sys, const Vec& u) {
  const int dm = sys.dim();
  const Vec f = sys.forces(u);
  Vec fd(f.size());
  const double h = 1e-5;
  for (std::size_t s = 0; s < sys.free_sites().size(); ++s)
    for (int c = 0; c < dm; ++c) {
      const Eigen::Index g = static_cast<Eigen::Index>(sys.free_sites()[s]) * dm + c;
      Vec up = u, um = u;
      up[g] += h;
      um[g] -= h;
      fd[static_cast<Eigen::Index>(s) * dm + c] = -(sys.energy(up) - sys.energy(um)) / (2 * h);
    }
  return (fd - f).norm() / f.norm();
}

}  // namespace

TEST_CASE("morse pair derivatives") {
  const auto m = morse_model();
  double d1 = 0, d2 = 0;
  CHECK(m.pair(m.morse.r0, &d1, &d2) == doctest::Approx(-m.morse.D));
  CHECK(d1 == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(d2 == doctest::Approx(2 * m.morse.D * m.morse.a * m.morse.a));
  const double r = 1.1, h = 1e-6;
  m.pair(r, &d1, &d2);
  CHECK(d1 == doctest::Approx((m.pair(r + h) - m.pair(r - h)) / (2 * h)).epsilon(1e-7));
}

TEST_CASE("stress-free spacing") {
  const double ell = ell0();
  CHECK(ell == doctest::Approx(0.978).epsilon(2e-3));
  const auto m = morse_model();
  CHECK(m.bulk_site_energy() < 0);
  const auto d = disc(m, 8, 3);
  AtomisticSystem sys(m, d);
  const Vec zero = Vec::Zero(2 * static_cast<Eigen::Index>(d.size()));
  CHECK(sys.forces(zero).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(sys.region_energy(zero, sys.free_sites()) == doctest::Approx(0.0).epsilon(1e-10));
}

TEST_CASE("rigid translation is force free") {
  const auto m = morse_model();
  const auto d = disc(m, 8, 3);
  AtomisticSystem sys(m, d);
  Vec u(2 * static_cast<Eigen::Index>(d.size()));
  for (std::size_t k = 0; k < d.size(); ++k) u.segment(2 * k, 2) = Vec2(0.3, -0.2);
  CHECK(sys.forces(u).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("forces match finite differences") {
  SUBCASE("morse") {
    const auto m = morse_model();
    const auto d = disc(m, 7, 3.5);
    AtomisticSystem sys(m, d);
    CHECK(fd_force_error(sys, random_vec(2 * static_cast<Eigen::Index>(d.size()), 1, 0.05)) < 1e-6);
  }
  SUBCASE("chain") {
    const auto m = AtomisticModel::chain1d(1.0, -0.2);
    const auto d = decompose(build_disc_domain(m.basis, 10), m.basis, 10, 4, m.r_cut);
    AtomisticSystem sys(m, d);
    CHECK(fd_force_error(sys, random_vec(static_cast<Eigen::Index>(d.size()), 2)) < 1e-6);
  }
}

TEST_CASE("quadratic model reproduces the ground-state hessian") {
  const auto m = morse_model();
  const auto K = m.ground_state_stencil();
  CHECK(K.row_sum_defect() < 1e-10);
  const auto q = AtomisticModel::quadratic(K, m.basis);
  const auto d = disc(m, 7, 3.5);
  AtomisticSystem a(m, d), b(q, d);
  const Vec zero = Vec::Zero(2 * static_cast<Eigen::Index>(d.size()));
  const auto ha = a.hessian_blocks(zero), hb = b.hessian_blocks(zero);
  CHECK((ha.aa - hb.aa).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((ha.ap - hb.ap).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(ha.positive_definite);
  CHECK((ha.aa - ha.aa.transpose()).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("sparse and dense hessians agree") {
  const auto m = morse_model();
  const auto d = disc(m, 7, 3.5);
  AtomisticSystem sys(m, d);
  const Vec u = random_vec(2 * static_cast<Eigen::Index>(d.size()), 9, 0.03);
  const Mat dense = sys.hessian_blocks(u).aa;
  const Mat sparse = Mat(sys.hessian_sparse(u));
  CHECK((dense - sparse).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("force evaluations are counted") {
  const auto m = morse_model();
  const auto d = disc(m, 7, 3.5);
  AtomisticSystem sys(m, d);
  const Vec zero = Vec::Zero(2 * static_cast<Eigen::Index>(d.size()));
  const long before = sys.force_evals();
  sys.forces(zero);
  sys.forces(zero);
  CHECK(sys.force_evals() == before + 2);
}

TEST_CASE("minimiser relaxes a displaced pad") {
  const auto m = morse_model();
  const auto d = disc(m, 8, 3.5);
  AtomisticSystem sys(m, d);
  for (auto kind : {MinimizerKind::newton, MinimizerKind::cg}) {
    Vec u = Vec::Zero(2 * static_cast<Eigen::Index>(d.size()));
    for (int id : d.p) u[2 * id] = 0.01 * d.sites[id].x.y();
    const Vec f = Vec::Zero(u.size());
    MinimizeOptions o;
    o.method = kind;
    const auto r = minimize_atomistic(sys, u, f, 1e-10, o);
    CHECK_MESSAGE(r.converged, (kind == MinimizerKind::cg ? "cg " : "newton ") << r.iterations << " " << r.fnorm);
    CHECK(sys.forces(u).cwiseAbs().maxCoeff() < 1e-10);
    // Simple shear is an exact equilibrium of the bulk.
    for (int id : sys.free_sites()) CHECK(u[2 * id] == doctest::Approx(0.01 * d.sites[id].x.y()).epsilon(1e-6));
  }
}
