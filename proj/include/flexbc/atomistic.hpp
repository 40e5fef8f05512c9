#pragma once

#include "flexbc/lattice.hpp"
#include "flexbc/stencil.hpp"

#include <string>
#include <vector>

namespace flexbc {

struct MorseParams {
  double D = 1.0;
  double a = 4.4;
  double r0 = 1.0;
};

enum class ModelKind { morse2d, quadratic };

// Pair Morse potential on a Bravais lattice, or a quadratic model defined by a stencil
// (the 1D two-neighbour chain is the quadratic model with the chain stencil).
struct AtomisticModel {
  ModelKind kind = ModelKind::quadratic;
  BravaisBasis basis;
  MorseParams morse;
  int shells = 6;
  // Each pair enters the site energies of both partners.
  double pair_weight = 2.0;
  Stencil quad;
  std::vector<LatticeCoord> neighbours;  // interaction offsets (nonzero)
  double r_cut = 0.0;

  static AtomisticModel morse2d(const MorseParams& p, const BravaisBasis& basis, int shells = 6);
  static AtomisticModel chain1d(double k1, double k2);
  static AtomisticModel quadratic(Stencil K, const BravaisBasis& basis);

  int dim() const { return basis.dim; }
  // Morse pair potential and its first two radial derivatives.
  double pair(double r, double* d1 = nullptr, double* d2 = nullptr) const;
  // Nonlocal force constants at the undeformed lattice (K_hnl).
  Stencil ground_state_stencil() const;
  // Site energy of a bulk site in the undeformed lattice.
  double bulk_site_energy() const;
};

// Lattice constant at which the truncated Morse lattice is stress free.
double morse_equilibrium_spacing(const MorseParams& p, int shells = 6);

struct LinearizedBlocks {
  Mat aa;  // L_hnl^{a|a} over active a-sites
  Mat ap;  // L_hnl^{a|p}
  bool positive_definite = true;
};

// The atomistic subproblem of a decomposition: free DOFs are the active a-sites, the pad
// (p-sites) is clamped. Displacements are global per-site vectors of length dim * size.
class AtomisticSystem {
 public:
  AtomisticSystem(const AtomisticModel& model, const DomainDecomposition& d);

  const AtomisticModel& model() const { return model_; }
  const DomainDecomposition& decomposition() const { return *d_; }
  const IndexSet& free_sites() const { return free_; }
  const IndexSet& pad_sites() const { return d_->p; }
  int dim() const { return model_.dim(); }
  int ndof() const { return static_cast<int>(free_.size()) * dim(); }

  // Internal energy of all interactions involving a free site; gradient on the free DOFs.
  double energy(const Vec& u) const;
  double energy_and_gradient(const Vec& u, Vec& grad) const;
  // -dE/du + f_ext on the free DOFs (counted as one force evaluation).
  Vec forces(const Vec& u, const Vec* fext = nullptr) const;
  double site_energy(const Vec& u, int id) const;
  // Sum of site energies over the active sites of `set`, relative to the bulk ground state.
  double region_energy(const Vec& u, const IndexSet& set) const;

  LinearizedBlocks hessian_blocks(const Vec& u) const;
  SpMat hessian_sparse(const Vec& u) const;

  long force_evals() const { return evals_; }
  void count_force_eval() const { ++evals_; }

 private:
  struct Bond {
    int s;  // free site (local index into free_)
    int t;  // global id
    int t_free;  // local index if t is free, else -1
  };
  void check_separation(double r) const;

  AtomisticModel model_;
  const DomainDecomposition* d_;
  IndexSet free_;
  std::vector<int> free_index_;
  std::vector<Bond> bonds_;
  SpMat lff_, lfp_;  // quadratic model blocks
  mutable long evals_ = 0;
};

}  // namespace flexbc
