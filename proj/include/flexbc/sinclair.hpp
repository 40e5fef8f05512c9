#pragma once

#include "flexbc/atomistic.hpp"
#include "flexbc/dbem.hpp"
#include "flexbc/minimize.hpp"

#include <functional>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace flexbc {

enum class RelaxMode { none, static_alpha, dynamic };
enum class DynVariant { freeze_hessian, refresh_hessian };

using ToleranceSchedule = std::vector<std::pair<double, double>>;  // (TOL, TOL_a)

ToleranceSchedule default_schedule();

struct SincOptions {
  bool use_initial_guess = false;
  RelaxMode relax = RelaxMode::none;
  double alpha = 1.0;
  DynVariant dyn = DynVariant::freeze_hessian;
  ToleranceSchedule schedule = default_schedule();
  int max_iter = 200;
  int divergence_window = 5;
  MinimizeOptions inner;
  // Rate fit: records from the last `fit_stages` stages, skipping iterations k < fit_skip.
  int fit_stages = 2;
  int fit_skip = 2;
  // Predict the next atomistic iterate from the linearised response to the pad update.
  bool predictor = true;
  // Keep the full field on Λ^c at the end (one extra boundary solve).
  bool reconstruct_continuum = false;
  // Called after every global iteration with the current displacement.
  std::function<void(int, const Vec&)> on_iterate;
};

struct IterationRecord {
  int k = 0;
  double fnorm_a = 0.0;
  double fnorm_c = 0.0;
  double alpha = 1.0;
  double energy = 0.0;
  long n_force_evals = 0;
  int stage = 0;
};

struct RateFit {
  bool fitted = false;
  double rate = 0.0;
  double r2 = 0.0;
  int points = 0;
};

struct ConvergenceReport {
  std::vector<IterationRecord> records;
  std::string status = "stalled";  // converged | stalled | diverged
  Vec u;                           // final displacement (global per-site vector)
  RateFit fit;
  long n_force = 0;
  int n_iter = 0;
  double final_energy = 0.0;
};

// f_inh = L_h^{i+|a}[u_new - u_old]
Vec inhomogeneous_force(const HarmonicStencil& h, const DomainDecomposition& d, const Vec& u_new,
                        const Vec& u_old);

// argmin over alpha in (0, 2] of || w13 + alpha * w2m3 ||_inf, ties toward alpha = 1.
double dyn_relax_alpha(const Vec& w13, const Vec& w2m3);

RateFit fit_rate(const std::vector<IterationRecord>& records, int first_stage, int skip);

class SincSolver {
 public:
  SincSolver(const AtomisticSystem& atoms, const DbemWorkspace& ws, Vec ubar_o, Vec f_ext);
  ConvergenceReport run(const SincOptions& opts) const;
  // Elastic initial guess DBEM(ubar, f_ext) on all of Λ.
  Vec elastic_guess() const;
  // Residual L_h[u] - f_ext on Λ^{i+}.
  Vec continuum_residual(const Vec& u) const;
  const IndexSet& tracked() const { return tracked_; }

 private:
  const AtomisticSystem& atoms_;
  const DbemWorkspace& ws_;
  Vec ubar_o_;
  Vec fext_;
  IndexSet fext_support_;
  IndexSet tracked_;
  IndexSet ip_nbhd_;
  SpMat L_ip_;  // L_h^{i+|NN(i+)}
  DbemTargets targets_;
};

void write_history_csv(std::ostream& os, const ConvergenceReport& r);
std::string summary_json(const ConvergenceReport& r);

}  // namespace flexbc
