#include "common.hpp"

#include "doctest.h"

using namespace flexbc;
using namespace flexbc::testing;

namespace {

double dense_error(const DomainDecomposition& d, const HarmonicStencil& h, const GreenTable& g, unsigned seed) {
  const int dm = d.dim();
  DbemWorkspace ws(d, h, g, false);
  const Mat Lll = stencil_block_dense(h.K, d, d.l, d.l);
  const Mat Llo = stencil_block_dense(h.K, d, d.l, d.o);
  const Vec ub = random_vec(static_cast<Eigen::Index>(d.o.size()) * dm, seed);
  const Vec r = random_vec(static_cast<Eigen::Index>(d.l.size()) * dm, seed + 1);
  const Vec ref = Lll.partialPivLu().solve(r - Llo * ub);
  return (ws.solve(d.l, ub, d.l, r) - ref).norm() / ref.norm();
}

}  // namespace

TEST_CASE("chain boundary solve matches the dense Dirichlet problem") {
  Chain1d ch(5, 20, 1.0, -0.2);
  for (unsigned s = 1; s <= 5; ++s) CHECK(dense_error(ch.d, ch.h, ch.g, 10 * s) < 1e-9);
}

TEST_CASE("hexagonal boundary solve matches the dense Dirichlet problem") {
  const auto m = morse_model();
  const auto h = build_harmonic_stencil(m);
  const auto d = disc(m, 10, 3);
  const auto g = gf_2d_table(h, m.basis, max_separation(d));
  for (unsigned s = 1; s <= 3; ++s) CHECK(dense_error(d, h, g, 10 * s) < 1e-9);

  DbemWorkspace ws(d, h, g, false);
  SUBCASE("affine boundary data is reproduced") {
    Vec ub(2 * static_cast<Eigen::Index>(d.o.size())), u_exact(2 * static_cast<Eigen::Index>(d.l.size()));
    Mat2 F;
    F << 0.02, -0.01, 0.005, 0.03;
    for (std::size_t k = 0; k < d.o.size(); ++k) ub.segment(2 * k, 2) = F * d.sites[d.o[k]].x;
    for (std::size_t k = 0; k < d.l.size(); ++k) u_exact.segment(2 * k, 2) = F * d.sites[d.l[k]].x;
    const Vec u = ws.solve(d.l, ub, d.l, Vec::Zero(u_exact.size()));
    CHECK((u - u_exact).cwiseAbs().maxCoeff() < 1e-10);
  }
  SUBCASE("boundary operator") {
    const auto t = ws.prepare(d.p);
    const Vec ub = random_vec(2 * static_cast<Eigen::Index>(d.o.size()), 5);
    const Vec u = ws.solve(t, ub, d.l, Vec::Zero(2 * static_cast<Eigen::Index>(d.l.size())));
    CHECK((ws.boundary_operator(t) * ub - u).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("infinite mode is the plain green function") {
  const auto m = morse_model();
  const auto h = build_harmonic_stencil(m);
  const auto d = disc(m, 8, 3);
  const auto g = gf_2d_table(h, m.basis, max_separation(d));
  DbemWorkspace ws(d, h, g, true);
  CHECK(ws.infinite());
  const Vec r = random_vec(2 * static_cast<Eigen::Index>(d.i.size()), 4);
  CHECK((ws.solve(d.p, Vec(), d.i, r) - green_apply(g, d, d.p, d.i, r)).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS(ws.solve_boundary_forces(Vec::Zero(2)));
}
