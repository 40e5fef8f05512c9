#include "flexbc/dbem.hpp"

#include <stdexcept>

namespace flexbc {

DbemWorkspace::DbemWorkspace(const DomainDecomposition& d, const HarmonicStencil& h,
                             const GreenTable& g, bool infinite)
    : d_(&d), h_(&h), g_(&g), infinite_(infinite) {
  if (infinite_) return;
  G_oo_ = green_block(g, d, d.o, d.o);
  F_oo_ = force_operator_block(g, h, d, d.o);
  lu_.compute(G_oo_);
  const double rc = lu_.rcond();
  cond_estimate_ = rc > 0 ? 1.0 / rc : std::numeric_limits<double>::infinity();
  if (!(rc > 1e-14)) throw std::runtime_error("dbem: singular boundary system");
}

Vec DbemWorkspace::solve_boundary_forces(const Vec& g) const {
  if (infinite_) throw std::logic_error("dbem: no boundary in infinite mode");
  const Vec w = g - F_oo_ * g;
  return -lu_.solve(w);
}

DbemTargets DbemWorkspace::prepare(const IndexSet& targets) const {
  DbemTargets t;
  t.sites = targets;
  if (!infinite_) {
    t.G_xo = green_block(*g_, *d_, targets, d_->o);
    t.F_xo = force_operator_block(*g_, *h_, *d_, targets);
  }
  return t;
}

Vec DbemWorkspace::solve(const DbemTargets& targets, const Vec& ubar_o, const IndexSet& src,
                         const Vec& r) const {
  Vec u = green_apply(*g_, *d_, targets.sites, src, r);
  if (infinite_) return u;
  const Vec u_inf_o = green_apply(*g_, *d_, d_->o, src, r);
  const Vec gdata = ubar_o.size() ? Vec(ubar_o - u_inf_o) : Vec(-u_inf_o);
  const Vec fo = solve_boundary_forces(gdata);
  u += targets.F_xo * gdata - targets.G_xo * fo;
  return u;
}

Vec DbemWorkspace::solve(const IndexSet& targets, const Vec& ubar_o, const IndexSet& src,
                         const Vec& r) const {
  return solve(prepare(targets), ubar_o, src, r);
}

Mat DbemWorkspace::boundary_operator(const DbemTargets& targets) const {
  const int n = static_cast<int>(targets.sites.size()) * d_->dim();
  if (infinite_) return Mat::Zero(n, static_cast<Eigen::Index>(d_->o.size()) * d_->dim());
  const Mat I = Mat::Identity(G_oo_.rows(), G_oo_.cols());
  return targets.F_xo + targets.G_xo * lu_.solve(I - F_oo_);
}

}  // namespace flexbc
