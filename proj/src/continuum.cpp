#include "flexbc/continuum.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace flexbc {

namespace {

int cidx(int i, int J, int k, int L) { return ((i * 2 + J) * 2 + k) * 2 + L; }

std::array<double, 16> cauchy_born_tensor(const Stencil& K, const BravaisBasis& basis) {
  std::array<double, 16> C{};
  const int d = basis.dim;
  const double vol = basis.cell_volume();
  for (const auto& e : K.entries) {
    const Vec2 rho = basis.position(e.rho);
    for (int i = 0; i < d; ++i)
      for (int J = 0; J < d; ++J)
        for (int k = 0; k < d; ++k)
          for (int L = 0; L < d; ++L)
            C[cidx(i, J, k, L)] += -0.5 * e.K(i, k) * rho(J) * rho(L) / vol;
  }
  return C;
}

void check_acoustic(const std::array<double, 16>& C, int d) {
  if (d == 1) {
    if (!(C[0] > 0.0)) throw std::invalid_argument("unstable continuum: non-positive stiffness");
    return;
  }
  for (int s = 0; s < 360; ++s) {
    const double t = s * std::numbers::pi / 180.0;
    const Vec2 n(std::cos(t), std::sin(t));
    Mat2 A = Mat2::Zero();
    for (int i = 0; i < 2; ++i)
      for (int k = 0; k < 2; ++k)
        for (int J = 0; J < 2; ++J)
          for (int L = 0; L < 2; ++L) A(i, k) += C[cidx(i, J, k, L)] * n(J) * n(L);
    Eigen::SelfAdjointEigenSolver<Mat2> es(0.5 * (A + A.transpose()));
    if (!(es.eigenvalues().minCoeff() > 0.0))
      throw std::invalid_argument("unstable continuum: acoustic tensor not positive definite");
  }
}

void add_entry(Stencil& K, LatticeCoord rho, const Mat2& k) {
  for (auto& e : K.entries)
    if (e.rho == rho) {
      e.K += k;
      return;
    }
  K.entries.push_back({rho, k});
}

Stencil localise_2d(const std::array<double, 16>& C, const BravaisBasis& basis) {
  Stencil K;
  K.dim = 2;
  const double area = 0.5 * basis.cell_volume();
  const std::array<std::array<LatticeCoord, 3>, 2> shapes{{{{{0, 0}, {1, 0}, {0, 1}}},
                                                         {{{1, 0}, {1, 1}, {0, 1}}}}};
  for (int bi = -2; bi <= 1; ++bi)
    for (int bj = -2; bj <= 1; ++bj)
      for (const auto& shape : shapes) {
        std::array<LatticeCoord, 3> nodes;
        int origin = -1;
        for (int q = 0; q < 3; ++q) {
          nodes[q] = shape[q] + LatticeCoord{bi, bj};
          if (nodes[q] == LatticeCoord{0, 0}) origin = q;
        }
        if (origin < 0) continue;
        Eigen::Matrix2d E;  // edge vectors
        const Vec2 x0 = basis.position(nodes[0]);
        E.col(0) = basis.position(nodes[1]) - x0;
        E.col(1) = basis.position(nodes[2]) - x0;
        const Eigen::Matrix2d Einv = E.inverse();
        std::array<Vec2, 3> grad;
        grad[1] = Einv.row(0).transpose();
        grad[2] = Einv.row(1).transpose();
        grad[0] = -grad[1] - grad[2];
        for (int m = 0; m < 3; ++m) {
          Mat2 blk = Mat2::Zero();
          for (int i = 0; i < 2; ++i)
            for (int k = 0; k < 2; ++k)
              for (int J = 0; J < 2; ++J)
                for (int L = 0; L < 2; ++L)
                  blk(i, k) += area * C[cidx(i, J, k, L)] * grad[origin](J) * grad[m](L);
          add_entry(K, LatticeCoord{0, 0} - nodes[m], blk);
        }
      }
  return K;
}

}  // namespace

HarmonicStencil build_harmonic_stencil(const AtomisticModel& model) {
  const Stencil knl = model.ground_state_stencil();
  HarmonicStencil h;
  h.C = cauchy_born_tensor(knl, model.basis);
  check_acoustic(h.C, model.dim());
  if (model.dim() == 1) {
    const double ell = model.basis.ell;
    const double kb = h.C[0] / ell;
    Mat2 c = Mat2::Zero(), s = Mat2::Zero();
    c(0, 0) = 2.0 * kb;
    s(0, 0) = -kb;
    h.K.dim = 1;
    h.K.entries = {{{0, 0}, c}, {{1, 0}, s}, {{-1, 0}, s}};
    h.kbar = kb;
    return h;
  }
  h.K = localise_2d(h.C, model.basis);
  return h;
}

HarmonicStencil harmonic_from_stencil(const Stencil& K, const BravaisBasis& basis) {
  HarmonicStencil h;
  h.K = K;
  h.C = cauchy_born_tensor(K, basis);
  if (K.dim == 1) {
    const Mat2* k1 = K.find({1, 0});
    h.kbar = k1 ? -(*k1)(0, 0) : 0.0;
  }
  return h;
}

Vec apply_block(const HarmonicStencil& h, const DomainDecomposition& d, const IndexSet& x_set,
                const IndexSet& y_set, const Vec& v) {
  return stencil_block(h.K, d, x_set, y_set) * v;
}

}  // namespace flexbc
