#pragma once

#include "flexbc/atomistic.hpp"
#include "flexbc/stencil.hpp"

#include <array>

namespace flexbc {

struct HarmonicStencil {
  Stencil K;
  // Elastic tensor per unit volume, C[i][J][k][L] flattened as ((i*2+J)*2+k)*2+L.
  std::array<double, 16> C{};
  double kbar = 0.0;  // 1D effective stiffness
  int dim() const { return K.dim; }
};

// Cauchy-Born + piecewise-linear localisation of the ground-state force constants.
HarmonicStencil build_harmonic_stencil(const AtomisticModel& model);

// Wraps a stencil that is already local (nearest-neighbour) as a harmonic stencil.
HarmonicStencil harmonic_from_stencil(const Stencil& K, const BravaisBasis& basis);

// L_h^{x|y}[v]
Vec apply_block(const HarmonicStencil& h, const DomainDecomposition& d, const IndexSet& x_set,
                const IndexSet& y_set, const Vec& v);

}  // namespace flexbc
