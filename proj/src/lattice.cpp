#include "flexbc/lattice.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <stdexcept>

namespace flexbc {

namespace {

constexpr double kRelSlack = 1e-9;

// Angle in [0, 2pi) so that ordering starts on the positive x axis.
double polar_angle(const Vec2& x) {
  double t = std::atan2(x.y(), x.x());
  if (t < 0.0) t += 2.0 * std::numbers::pi;
  if (t >= 2.0 * std::numbers::pi - 1e-12) t = 0.0;
  return t;
}

void sort_sites(std::vector<Site>& s, const BravaisBasis& basis) {
  const double tol = kRelSlack * basis.ell;
  if (basis.dim == 1) {
    std::sort(s.begin(), s.end(), [](const Site& x, const Site& y) { return x.n.i < y.n.i; });
    return;
  }
  std::sort(s.begin(), s.end(), [tol](const Site& x, const Site& y) {
    const double rx = x.x.norm(), ry = y.x.norm();
    if (std::abs(rx - ry) > tol) return rx < ry;
    const double tx = polar_angle(x.x), ty = polar_angle(y.x);
    if (std::abs(tx - ty) > 1e-12) return tx < ty;
    return std::tie(x.n.i, x.n.j) < std::tie(y.n.i, y.n.j);
  });
}

// Integer box that covers a disc of the given radius.
int box_extent(const BravaisBasis& basis, double radius) {
  if (basis.dim == 1) return static_cast<int>(std::ceil(radius / basis.v1.norm())) + 1;
  Eigen::Matrix2d B;
  B.col(0) = basis.v1;
  B.col(1) = basis.v2;
  const Eigen::Matrix2d Binv = B.inverse();
  const double scale = std::max(Binv.row(0).norm(), Binv.row(1).norm());
  return static_cast<int>(std::ceil(radius * scale)) + 1;
}

}  // namespace

BravaisBasis BravaisBasis::chain(double ell) {
  BravaisBasis b;
  b.dim = 1;
  b.v1 = {ell, 0.0};
  b.v2 = {0.0, 0.0};
  b.ell = ell;
  return b;
}

BravaisBasis BravaisBasis::hexagonal(double ell) {
  BravaisBasis b;
  b.dim = 2;
  b.v1 = {ell, 0.0};
  b.v2 = {0.5 * ell, 0.5 * std::sqrt(3.0) * ell};
  b.ell = ell;
  return b;
}

double BravaisBasis::cell_volume() const {
  if (dim == 1) return v1.norm();
  return std::abs(v1.x() * v2.y() - v1.y() * v2.x());
}

std::vector<LatticeCoord> BravaisBasis::offsets_within(double radius) const {
  std::vector<Site> found;
  const int m = box_extent(*this, radius);
  const double lim = radius * (1.0 + kRelSlack);
  const int jm = dim == 1 ? 0 : m;
  for (int i = -m; i <= m; ++i)
    for (int j = -jm; j <= jm; ++j) {
      if (i == 0 && j == 0) continue;
      const LatticeCoord n{i, j};
      const Vec2 x = position(n);
      if (x.norm() <= lim) found.push_back({n, x});
    }
  sort_sites(found, *this);
  std::vector<LatticeCoord> out;
  out.reserve(found.size());
  for (const auto& s : found) out.push_back(s.n);
  return out;
}

std::vector<double> BravaisBasis::shell_radii(int count) const {
  std::vector<double> radii;
  double probe = 2.0 * ell;
  while (true) {
    radii.clear();
    for (const auto& n : offsets_within(probe)) {
      const double r = position(n).norm();
      if (radii.empty() || r > radii.back() * (1.0 + kRelSlack)) radii.push_back(r);
    }
    if (static_cast<int>(radii.size()) >= count + 1) break;
    probe *= 1.5;
  }
  radii.resize(count);
  return radii;
}

std::vector<Site> build_disc_domain(const BravaisBasis& basis, double r) {
  if (!(r > 0.0)) throw std::invalid_argument("empty domain: radius must be positive");
  if (r < basis.v1.norm() * (1.0 - kRelSlack)) throw std::invalid_argument("empty domain");
  std::vector<Site> sites{{{0, 0}, Vec2::Zero()}};
  for (const auto& n : basis.offsets_within(r)) sites.push_back({n, basis.position(n)});
  sort_sites(sites, basis);
  return sites;
}

std::int64_t pack_coord(LatticeCoord n) {
  return (static_cast<std::int64_t>(n.i) << 32) ^ static_cast<std::uint32_t>(n.j);
}

int DomainDecomposition::find(LatticeCoord n) const {
  auto it = lookup.find(pack_coord(n));
  return it == lookup.end() ? -1 : it->second;
}

IndexSet DomainDecomposition::active_a() const {
  IndexSet out;
  for (int id : a)
    if (active[id]) out.push_back(id);
  return out;
}

std::uint32_t DomainDecomposition::membership(int id) const {
  std::uint32_t m = 0;
  auto tag = [&](const IndexSet& s, std::uint32_t bit) {
    if (set_contains(s, id)) m |= bit;
  };
  tag(l, kInL);
  tag(a, kInA);
  tag(c, kInC);
  tag(p, kInP);
  tag(pp, kInPPrime);
  tag(i, kInI);
  tag(ip, kInIPlus);
  tag(o, kInO);
  tag(op, kInOPlus);
  if (!active[id]) m |= kInactive;
  return m;
}

void DomainDecomposition::write_csv(std::ostream& os) const {
  os << "id,x,y,set_memberships\n";
  char buf[128];
  for (std::size_t k = 0; k < sites.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%u\n", k, sites[k].x.x(), sites[k].x.y(),
                  membership(static_cast<int>(k)));
    os << buf;
  }
}

IndexSet set_union(const IndexSet& x, const IndexSet& y) {
  IndexSet out;
  std::set_union(x.begin(), x.end(), y.begin(), y.end(), std::back_inserter(out));
  return out;
}

IndexSet set_difference(const IndexSet& x, const IndexSet& y) {
  IndexSet out;
  std::set_difference(x.begin(), x.end(), y.begin(), y.end(), std::back_inserter(out));
  return out;
}

bool set_contains(const IndexSet& x, int id) { return std::binary_search(x.begin(), x.end(), id); }

IndexSet neighbours_of(const DomainDecomposition& d, const IndexSet& of, const IndexSet& within,
                       double radius) {
  const auto offs = d.basis.offsets_within(radius);
  std::vector<char> hit(d.sites.size(), 0);
  for (int id : of)
    for (const auto& o : offs) {
      const int nb = d.find(d.sites[id].n + o);
      if (nb >= 0) hit[nb] = 1;
    }
  IndexSet out;
  for (int id : within)
    if (hit[id]) out.push_back(id);
  return out;
}

DomainDecomposition decompose(const std::vector<Site>& sites, const BravaisBasis& basis, double r,
                              double r_a, double atomistic_cutoff) {
  if (!(r_a < r)) throw std::invalid_argument("decompose: r_a must be smaller than r");
  const double nn = basis.v1.norm();
  if (atomistic_cutoff < nn * (1.0 - kRelSlack))
    throw std::invalid_argument("decompose: cutoff below nearest-neighbour distance");

  DomainDecomposition d;
  d.basis = basis;
  d.r = r;
  d.r_a = r_a;
  d.r_cut = atomistic_cutoff;
  d.r_h = nn;
  d.sites = sites;
  d.n_lambda = static_cast<int>(sites.size());
  for (int k = 0; k < d.n_lambda; ++k) d.lookup.emplace(pack_coord(sites[k].n), k);

  const auto nn_offs = basis.offsets_within(nn);
  auto ring_outside = [&](int first, int last) {
    std::vector<Site> ring;
    std::unordered_map<std::int64_t, int> seen;
    for (int k = first; k < last; ++k)
      for (const auto& o : nn_offs) {
        const LatticeCoord n = d.sites[k].n + o;
        if (d.find(n) >= 0 || seen.count(pack_coord(n))) continue;
        seen.emplace(pack_coord(n), 1);
        ring.push_back({n, basis.position(n)});
      }
    sort_sites(ring, basis);
    const int start = static_cast<int>(d.sites.size());
    for (const auto& s : ring) {
      d.lookup.emplace(pack_coord(s.n), static_cast<int>(d.sites.size()));
      d.sites.push_back(s);
    }
    IndexSet ids(ring.size());
    for (std::size_t k = 0; k < ring.size(); ++k) ids[k] = start + static_cast<int>(k);
    return ids;
  };
  d.o = ring_outside(0, d.n_lambda);
  const int o_end = static_cast<int>(d.sites.size());
  d.op = ring_outside(d.o.empty() ? o_end : d.o.front(), o_end);
  d.active.assign(d.sites.size(), 1);

  const double ra_lim = r_a * (1.0 + kRelSlack);
  for (int k = 0; k < d.n_lambda; ++k) {
    d.l.push_back(k);
    (d.sites[k].x.norm() <= ra_lim ? d.a : d.c).push_back(k);
  }
  d.lb = set_union(d.l, d.o);
  d.p = neighbours_of(d, d.a, d.c, atomistic_cutoff);
  d.pp = neighbours_of(d, d.p, d.a, atomistic_cutoff);
  d.i = neighbours_of(d, d.c, d.a, nn);
  d.ip = neighbours_of(d, d.i, d.c, nn);

  if (set_difference(d.a, set_union(d.pp, d.i)).empty())
    spdlog::warn("decompose: atomistic core has no interior sites (r_a={})", r_a);
  return d;
}

DomainDecomposition remove_defect_atoms(DomainDecomposition decomp, const DefectSpec& defect) {
  for (const auto& n : defect.vacancies) {
    const int id = decomp.find(n);
    if (id < 0 || !set_contains(decomp.a, id))
      throw std::invalid_argument("defect site outside the atomistic region");
    if (set_contains(decomp.i, id)) throw std::invalid_argument("defect too close to interface");
    decomp.active[id] = 0;
  }
  return decomp;
}

DefectSpec microcrack_defect(int per_row, int rows) {
  DefectSpec d;
  const int start = -per_row / 2;
  for (int j = 0; j < rows; ++j)
    for (int i = start; i < start + per_row; ++i) d.vacancies.push_back({i, j});
  return d;
}

}  // namespace flexbc
