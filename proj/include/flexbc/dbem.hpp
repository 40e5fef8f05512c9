#pragma once

#include "flexbc/green.hpp"

namespace flexbc {

// Precomputed Green/force-operator rows for a fixed set of evaluation sites.
struct DbemTargets {
  IndexSet sites;
  Mat G_xo;  // G^{x|o}
  Mat F_xo;  // F^{x|o}
};

// Boundary system of the finite harmonic problem, factorised once per geometry.
class DbemWorkspace {
 public:
  DbemWorkspace(const DomainDecomposition& d, const HarmonicStencil& h, const GreenTable& g,
                bool infinite);

  bool infinite() const { return infinite_; }
  const DomainDecomposition& decomposition() const { return *d_; }
  const HarmonicStencil& stencil() const { return *h_; }
  const GreenTable& green() const { return *g_; }

  // f^o = -(G^{o|o})^{-1} (I - F^{o|o}) g
  Vec solve_boundary_forces(const Vec& g) const;
  DbemTargets prepare(const IndexSet& targets) const;

  // u = G[r] + F^{x|o}[ubar - u_inf] - G^{x|o}[f^o], evaluated on `targets`.
  // `r` lives on `src`; ubar on o (ignored in infinite mode).
  Vec solve(const DbemTargets& targets, const Vec& ubar_o, const IndexSet& src, const Vec& r) const;
  Vec solve(const IndexSet& targets, const Vec& ubar_o, const IndexSet& src, const Vec& r) const;

  // B^{x|o} = F^{x|o} + G^{x|o} (G^{o|o})^{-1} (I - F^{o|o})
  Mat boundary_operator(const DbemTargets& targets) const;
  // Relative residual of the last boundary solve check (for diagnostics).
  double boundary_condition() const { return cond_estimate_; }

 private:
  const DomainDecomposition* d_;
  const HarmonicStencil* h_;
  const GreenTable* g_;
  bool infinite_;
  Mat G_oo_, F_oo_;
  Eigen::PartialPivLU<Mat> lu_;
  double cond_estimate_ = 0.0;
};

}  // namespace flexbc
