#pragma once

#include "flexbc/atomistic.hpp"

namespace flexbc {

enum class MinimizerKind { newton, cg };

struct MinimizeOptions {
  MinimizerKind method = MinimizerKind::newton;
  int max_iter = 2000;
};

struct MinimizeResult {
  bool converged = false;
  int iterations = 0;
  double fnorm = 0.0;  // max-norm of the residual force at return
  long force_evals = 0;
};

// Minimizes E^a(u) - f_ext.u over the free DOFs of `sys` (pad stays fixed). `u` is the global
// displacement vector; only free entries change. Stops when the max-norm of the force < tol.
MinimizeResult minimize_atomistic(const AtomisticSystem& sys, Vec& u, const Vec& fext, double tol,
                                  const MinimizeOptions& opts = {});

}  // namespace flexbc
