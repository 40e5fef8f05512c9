#pragma once

#include "flexbc/continuum.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace flexbc {

// Lattice Green function of the 1D nearest-neighbour chain: -|rho| / (2 kbar).
double gf_1d(long rho, double kbar);

struct GreenBuildOptions {
  int grid = 512;          // Brillouin-zone grid per direction (raised if too small for r_max)
  bool use_cache = true;
  std::string cache_dir;   // empty: environment override or default location
  bool verify = true;      // identity check after construction
};

// G(rho) tabulated on integer lattice offsets, normalised so that G(0) = 0.
class GreenTable {
 public:
  static GreenTable exact_1d(double kbar);

  int dim() const { return dim_; }
  int extent() const { return m_; }
  int grid() const { return grid_; }
  double r_max() const { return r_max_; }
  std::uint64_t stencil_hash() const { return hash_; }
  const std::string& normalization() const { return normalization_; }
  bool covers(LatticeCoord rho) const;
  // Throws "extend r_max" outside the tabulated range.
  Mat2 at(LatticeCoord rho) const;

 private:
  friend GreenTable build_green_2d(const HarmonicStencil&, const BravaisBasis&, double, int);
  friend bool load_green_cache(const std::string&, GreenTable&);
  friend void save_green_cache(const std::string&, const GreenTable&);
  friend GreenTable gf_2d_table(const HarmonicStencil&, const BravaisBasis&, double,
                                const GreenBuildOptions&);
  int dim_ = 1;
  int m_ = 0;
  int grid_ = 0;
  double r_max_ = 0.0;
  double kbar_ = 0.0;
  std::uint64_t hash_ = 0;
  std::string normalization_ = "G0_zero";
  std::vector<double> data_;  // xx, xy, yy per offset
};


// Directory used for cached tables: $FLEXBC_GREEN_CACHE, else ~/.cache/flexbc.
std::string green_cache_dir(const GreenBuildOptions& opts = {});

// Brillouin-zone trapezoid on a periodic grid with a quadratic background correction that
// restores L_h G = delta exactly for separations that do not wrap around the grid.
GreenTable gf_2d_table(const HarmonicStencil& h, const BravaisBasis& basis, double r_max,
                       const GreenBuildOptions& opts = {});

// Relative residual of (G L_h)[v] - v over `samples` random v supported on a small patch.
double green_identity_residual(const GreenTable& g, const HarmonicStencil& h,
                               const BravaisBasis& basis, int samples, unsigned seed);

Mat green_block(const GreenTable& g, const DomainDecomposition& d, const IndexSet& x_set,
                const IndexSet& y_set);
Vec green_apply(const GreenTable& g, const DomainDecomposition& d, const IndexSet& x_set,
                const IndexSet& y_set, const Vec& f);
// F^{x|o}[v] = G^{x|o+} L_h^{o+|o}[v]
Vec force_operator_apply(const GreenTable& g, const HarmonicStencil& h, const DomainDecomposition& d,
                         const IndexSet& x_set, const Vec& v_o);
Mat force_operator_block(const GreenTable& g, const HarmonicStencil& h, const DomainDecomposition& d,
                         const IndexSet& x_set);

// Largest lattice separation between sites of a decomposition (plus the o+ layer).
double max_separation(const DomainDecomposition& d);

}  // namespace flexbc
