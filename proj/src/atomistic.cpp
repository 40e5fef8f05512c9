#include "flexbc/atomistic.hpp"

#include <cmath>
#include <stdexcept>

namespace flexbc {

AtomisticModel AtomisticModel::morse2d(const MorseParams& p, const BravaisBasis& basis, int shells) {
  if (!(p.D > 0 && p.a > 0 && p.r0 > 0)) throw std::invalid_argument("morse: parameters must be positive");
  if (basis.dim != 2) throw std::invalid_argument("morse2d requires a 2D basis");
  AtomisticModel m;
  m.kind = ModelKind::morse2d;
  m.basis = basis;
  m.morse = p;
  m.shells = shells;
  m.r_cut = basis.shell_radii(shells).back();
  m.neighbours = basis.offsets_within(m.r_cut);
  return m;
}

AtomisticModel AtomisticModel::chain1d(double k1, double k2) {
  Stencil K;
  K.dim = 1;
  auto entry = [](int i, double v) {
    Mat2 k = Mat2::Zero();
    k(0, 0) = v;
    return Stencil::Entry{{i, 0}, k};
  };
  K.entries = {entry(0, 2.0 * (k1 + k2)), entry(1, -k1), entry(-1, -k1), entry(2, -k2), entry(-2, -k2)};
  return quadratic(std::move(K), BravaisBasis::chain(1.0));
}

AtomisticModel AtomisticModel::quadratic(Stencil K, const BravaisBasis& basis) {
  AtomisticModel m;
  m.kind = ModelKind::quadratic;
  m.basis = basis;
  m.quad = std::move(K);
  for (const auto& e : m.quad.entries)
    if (!(e.rho == LatticeCoord{0, 0})) m.neighbours.push_back(e.rho);
  m.r_cut = m.quad.reach(basis);
  return m;
}

double AtomisticModel::pair(double r, double* d1, double* d2) const {
  const double e1 = std::exp(-morse.a * (r - morse.r0));
  const double e2 = e1 * e1;
  if (d1) *d1 = morse.D * (-2.0 * morse.a * e2 + 2.0 * morse.a * e1);
  if (d2) *d2 = morse.D * (4.0 * morse.a * morse.a * e2 - 2.0 * morse.a * morse.a * e1);
  return morse.D * (e2 - 2.0 * e1);
}

namespace {

Mat2 pair_hessian(const AtomisticModel& m, const Vec2& x) {
  const double r = x.norm();
  double d1 = 0, d2 = 0;
  m.pair(r, &d1, &d2);
  const Vec2 n = x / r;
  const Mat2 nn = n * n.transpose();
  return d2 * nn + (d1 / r) * (Mat2::Identity() - nn);
}

}  // namespace

Stencil AtomisticModel::ground_state_stencil() const {
  if (kind == ModelKind::quadratic) return quad;
  Stencil K;
  K.dim = 2;
  Mat2 diag = Mat2::Zero();
  for (const auto& rho : neighbours) {
    const Mat2 k = -pair_weight * pair_hessian(*this, basis.position(rho));
    K.entries.push_back({rho, k});
    diag -= k;
  }
  K.entries.insert(K.entries.begin(), {{0, 0}, diag});
  return K;
}

double AtomisticModel::bulk_site_energy() const {
  if (kind == ModelKind::quadratic) return 0.0;
  double e = 0.0;
  for (const auto& rho : neighbours) e += pair(basis.position(rho).norm());
  return e;
}

double morse_equilibrium_spacing(const MorseParams& p, int shells) {
  const auto unit = BravaisBasis::hexagonal(1.0);
  AtomisticModel m = AtomisticModel::morse2d(p, unit, shells);
  auto virial = [&](double ell) {
    double s = 0.0;
    for (const auto& rho : m.neighbours) {
      const double r = unit.position(rho).norm() * ell;
      double d1 = 0;
      m.pair(r, &d1);
      s += d1 * r;
    }
    return s;
  };
  double lo = 0.5 * p.r0, hi = 1.5 * p.r0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (virial(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

AtomisticSystem::AtomisticSystem(const AtomisticModel& model, const DomainDecomposition& d)
    : model_(model), d_(&d) {
  if (model.dim() != d.dim()) throw std::invalid_argument("model and domain dimensions differ");
  free_ = d.active_a();
  free_index_.assign(d.size(), -1);
  for (std::size_t k = 0; k < free_.size(); ++k) free_index_[free_[k]] = static_cast<int>(k);

  if (model.kind == ModelKind::quadratic) {
    for (int id : d.a)
      if (!d.active[id]) throw std::invalid_argument("quadratic model does not support vacancies");
    lff_ = stencil_block(model.quad, d, free_, free_);
    lfp_ = stencil_block(model.quad, d, free_, d.p);
    return;
  }
  for (std::size_t s = 0; s < free_.size(); ++s) {
    const LatticeCoord n = d.sites[free_[s]].n;
    for (const auto& rho : model.neighbours) {
      const int t = d.find(n + rho);
      if (t < 0) throw std::invalid_argument("atomistic neighbourhood leaves the domain");
      if (!d.active[t]) continue;
      const int tf = free_index_[t];
      if (tf >= 0 && tf <= static_cast<int>(s)) continue;  // count free pairs once
      if (tf < 0 && !set_contains(d.p, t)) throw std::invalid_argument("neighbour outside pad");
      bonds_.push_back({static_cast<int>(s), t, tf});
    }
  }
}

void AtomisticSystem::check_separation(double r) const {
  if (!(r > 1e-12 * model_.basis.ell)) throw std::runtime_error("singular configuration");
}

double AtomisticSystem::energy(const Vec& u) const {
  if (model_.kind == ModelKind::quadratic) {
    const Vec uf = gather(u, free_, dim());
    const Vec up = gather(u, d_->p, dim());
    return 0.5 * uf.dot(lff_ * uf) + uf.dot(lfp_ * up);
  }
  double e = 0.0;
  for (const auto& b : bonds_) {
    const int s = free_[b.s];
    const Vec2 x = d_->sites[b.t].x + u.segment<2>(2 * b.t) - d_->sites[s].x - u.segment<2>(2 * s);
    const double r = x.norm();
    check_separation(r);
    e += model_.pair_weight * model_.pair(r);
  }
  return e;
}

double AtomisticSystem::energy_and_gradient(const Vec& u, Vec& grad) const {
  ++evals_;
  if (model_.kind == ModelKind::quadratic) {
    const Vec uf = gather(u, free_, dim());
    const Vec up = gather(u, d_->p, dim());
    const Vec lpu = lfp_ * up;
    grad = lff_ * uf + lpu;
    return 0.5 * uf.dot(lff_ * uf) + uf.dot(lpu);
  }
  grad.setZero(ndof());
  double e = 0.0;
  for (const auto& b : bonds_) {
    const int s = free_[b.s];
    const Vec2 x = d_->sites[b.t].x + u.segment<2>(2 * b.t) - d_->sites[s].x - u.segment<2>(2 * s);
    const double r = x.norm();
    check_separation(r);
    double d1 = 0;
    e += model_.pair_weight * model_.pair(r, &d1);
    const Vec2 f = model_.pair_weight * d1 * x / r;
    grad.segment<2>(2 * b.s) -= f;
    if (b.t_free >= 0) grad.segment<2>(2 * b.t_free) += f;
  }
  return e;
}

Vec AtomisticSystem::forces(const Vec& u, const Vec* fext) const {
  Vec g;
  energy_and_gradient(u, g);
  Vec f = -g;
  if (fext && fext->size() > 0) f += gather(*fext, free_, dim());
  return f;
}

double AtomisticSystem::site_energy(const Vec& u, int id) const {
  const int dm = dim();
  if (!d_->active[id]) return 0.0;
  if (model_.kind == ModelKind::quadratic) {
    Vec acc = Vec::Zero(dm);
    for (const auto& e : model_.quad.entries) {
      const int nb = d_->find(d_->sites[id].n - e.rho);
      if (nb < 0) continue;
      acc += e.K.topLeftCorner(dm, dm) * u.segment(static_cast<Eigen::Index>(nb) * dm, dm);
    }
    return 0.5 * u.segment(static_cast<Eigen::Index>(id) * dm, dm).dot(acc);
  }
  double e = 0.0;
  for (const auto& rho : model_.neighbours) {
    const int t = d_->find(d_->sites[id].n + rho);
    if (t < 0) throw std::invalid_argument("site energy: neighbourhood leaves the domain");
    if (!d_->active[t]) continue;
    const Vec2 x = d_->sites[t].x + u.segment<2>(2 * t) - d_->sites[id].x - u.segment<2>(2 * id);
    const double r = x.norm();
    check_separation(r);
    e += model_.pair(r);
  }
  return e;
}

double AtomisticSystem::region_energy(const Vec& u, const IndexSet& set) const {
  const double e0 = model_.bulk_site_energy();
  double e = 0.0;
  for (int id : set)
    if (d_->active[id]) e += site_energy(u, id) - e0;
  return e;
}

LinearizedBlocks AtomisticSystem::hessian_blocks(const Vec& u) const {
  LinearizedBlocks out;
  const int dm = dim();
  if (model_.kind == ModelKind::quadratic) {
    out.aa = Mat(lff_);
    out.ap = Mat(lfp_);
  } else {
    out.aa.setZero(ndof(), ndof());
    out.ap.setZero(ndof(), static_cast<Eigen::Index>(d_->p.size()) * dm);
    std::vector<int> pad_index(d_->size(), -1);
    for (std::size_t k = 0; k < d_->p.size(); ++k) pad_index[d_->p[k]] = static_cast<int>(k);
    for (const auto& b : bonds_) {
      const int s = free_[b.s];
      const Vec2 x = d_->sites[b.t].x + u.segment<2>(2 * b.t) - d_->sites[s].x - u.segment<2>(2 * s);
      check_separation(x.norm());
      const Mat2 H = model_.pair_weight * pair_hessian(model_, x);
      out.aa.block<2, 2>(2 * b.s, 2 * b.s) += H;
      if (b.t_free >= 0) {
        out.aa.block<2, 2>(2 * b.t_free, 2 * b.t_free) += H;
        out.aa.block<2, 2>(2 * b.s, 2 * b.t_free) -= H;
        out.aa.block<2, 2>(2 * b.t_free, 2 * b.s) -= H;
      } else {
        out.ap.block<2, 2>(2 * b.s, 2 * pad_index[b.t]) -= H;
      }
    }
  }
  Eigen::LLT<Mat> llt(out.aa);
  out.positive_definite = llt.info() == Eigen::Success;
  return out;
}

SpMat AtomisticSystem::hessian_sparse(const Vec& u) const {
  if (model_.kind == ModelKind::quadratic) return lff_;
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(bonds_.size() * 16);
  auto add = [&](int r, int c, const Mat2& H) {
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) trips.emplace_back(2 * r + a, 2 * c + b, H(a, b));
  };
  for (const auto& b : bonds_) {
    const int s = free_[b.s];
    const Vec2 x = d_->sites[b.t].x + u.segment<2>(2 * b.t) - d_->sites[s].x - u.segment<2>(2 * s);
    check_separation(x.norm());
    const Mat2 H = model_.pair_weight * pair_hessian(model_, x);
    add(b.s, b.s, H);
    if (b.t_free >= 0) {
      add(b.t_free, b.t_free, H);
      add(b.s, b.t_free, -H);
      add(b.t_free, b.s, -H);
    }
  }
  SpMat h(ndof(), ndof());
  h.setFromTriplets(trips.begin(), trips.end());
  return h;
}

}  // namespace flexbc
