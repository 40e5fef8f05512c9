#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

namespace flexbc {

using Vec2 = Eigen::Vector2d;
using IndexSet = std::vector<int>;

struct LatticeCoord {
  int i = 0;
  int j = 0;
  friend bool operator==(const LatticeCoord&, const LatticeCoord&) = default;
  LatticeCoord operator+(const LatticeCoord& o) const { return {i + o.i, j + o.j}; }
  LatticeCoord operator-(const LatticeCoord& o) const { return {i - o.i, j - o.j}; }
  LatticeCoord operator-() const { return {-i, -j}; }
};

struct BravaisBasis {
  int dim = 1;
  Vec2 v1{1.0, 0.0};
  Vec2 v2{0.0, 0.0};
  double ell = 1.0;

  static BravaisBasis chain(double ell = 1.0);
  static BravaisBasis hexagonal(double ell);

  Vec2 position(LatticeCoord n) const { return n.i * v1 + n.j * v2; }
  // Area (2D) or length (1D) of the unit cell.
  double cell_volume() const;
  // Nonzero lattice vectors with |rho| <= radius (small relative slack), deterministic order.
  std::vector<LatticeCoord> offsets_within(double radius) const;
  // Radii of the distinct neighbour shells, ascending.
  std::vector<double> shell_radii(int count) const;
};

struct Site {
  LatticeCoord n;
  Vec2 x;
};

// Lattice sites with |x| <= r, ordered by (radius, angle) in 2D and by coordinate in 1D.
std::vector<Site> build_disc_domain(const BravaisBasis& basis, double r);

// Bit flags used by the debug CSV dump.
enum SetBit : std::uint32_t {
  kInL = 1u << 0,
  kInA = 1u << 1,
  kInC = 1u << 2,
  kInP = 1u << 3,
  kInPPrime = 1u << 4,
  kInI = 1u << 5,
  kInIPlus = 1u << 6,
  kInO = 1u << 7,
  kInOPlus = 1u << 8,
  kInactive = 1u << 9,
};

struct DomainDecomposition {
  BravaisBasis basis;
  double r = 0.0;
  double r_a = 0.0;
  double r_cut = 0.0;  // atomistic interaction radius
  double r_h = 0.0;    // harmonic (nearest-neighbour) radius
  std::vector<Site> sites;  // Λ first, then o, then o+
  int n_lambda = 0;
  std::vector<char> active;

  IndexSet l, lb, a, c, p, pp, i, ip, o, op;

  int dim() const { return basis.dim; }
  int find(LatticeCoord n) const;
  std::size_t size() const { return sites.size(); }
  // Active a-sites: the free atomistic degrees of freedom.
  IndexSet active_a() const;
  std::uint32_t membership(int id) const;
  void write_csv(std::ostream& os) const;

  std::unordered_map<std::int64_t, int> lookup;
};

std::int64_t pack_coord(LatticeCoord n);

// Index sets around a disc of radius r with atomistic core r_a.
DomainDecomposition decompose(const std::vector<Site>& sites, const BravaisBasis& basis, double r,
                              double r_a, double atomistic_cutoff);

// Sites removed from the atomistic model (given in lattice coordinates).
struct DefectSpec {
  std::vector<LatticeCoord> vacancies;
};

DomainDecomposition remove_defect_atoms(DomainDecomposition decomp, const DefectSpec& defect);

// Horizontal crack: `rows` stacked rows of `per_row` vacancies next to the origin (hexagonal lattice).
DefectSpec microcrack_defect(int per_row, int rows);

// Sorted union / intersection / difference helpers on id sets.
IndexSet set_union(const IndexSet& x, const IndexSet& y);
IndexSet set_difference(const IndexSet& x, const IndexSet& y);
bool set_contains(const IndexSet& x, int id);

// Sites of `within` that lie within `radius` of some site in `of`.
IndexSet neighbours_of(const DomainDecomposition& d, const IndexSet& of, const IndexSet& within,
                       double radius);

}  // namespace flexbc
