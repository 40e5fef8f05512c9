#pragma once

#include "flexbc/lattice.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstdint>
#include <vector>

namespace flexbc {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using Mat2 = Eigen::Matrix2d;
using SpMat = Eigen::SparseMatrix<double>;

// Translation-invariant force-constant kernel: (L v)(x) = sum_rho K(rho) v(x - rho).
struct Stencil {
  int dim = 1;
  struct Entry {
    LatticeCoord rho;
    Mat2 K;  // only the leading dim x dim block is meaningful
  };
  std::vector<Entry> entries;

  const Mat2* find(LatticeCoord rho) const;
  double reach(const BravaisBasis& basis) const;
  std::uint64_t hash() const;
  // Largest deviation of sum_rho K(rho) from zero.
  double row_sum_defect() const;
};

// Block of a stencil operator between two site sets of a decomposition, as a sparse matrix
// with dim x dim blocks (rows: x_set, cols: y_set).
SpMat stencil_block(const Stencil& K, const DomainDecomposition& d, const IndexSet& x_set,
                    const IndexSet& y_set);
Mat stencil_block_dense(const Stencil& K, const DomainDecomposition& d, const IndexSet& x_set,
                        const IndexSet& y_set);

// Gather/scatter between a global per-site field (dim values per site) and a set.
Vec gather(const Vec& global, const IndexSet& set, int dim);
void scatter(Vec& global, const IndexSet& set, const Vec& vals, int dim);
void scatter_add(Vec& global, const IndexSet& set, const Vec& vals, int dim);

}  // namespace flexbc
