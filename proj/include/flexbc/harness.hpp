#pragma once

#include "flexbc/sinclair.hpp"
#include "flexbc/spectral.hpp"

#include <limits>
#include <memory>
#include <string>
#include <vector>

namespace flexbc {

enum class ExperimentKind { point_force, microcrack, fig5 };
enum class OuterBoundary { zero, lattice_gf, continuum_log };

struct ExperimentSpec {
  std::string name;
  ExperimentKind kind = ExperimentKind::point_force;
  // Lengths in units of the lattice constant.
  double r_a = 5.0;
  double r = 50.0;
  MorseParams morse;
  double ell = 0.978;  // nominal; the lattice is built at the stress-free spacing of the potential
  int shells = 6;
  bool default_defect = true;  // microcrack: use microcrack_pattern()
  DefectSpec defect;
  OuterBoundary boundary = OuterBoundary::lattice_gf;
  double load = 1e-3;  // point force in units of D * a
  // point_force: sinc, relax; microcrack: sinc, dyn1, dyn2
  std::vector<std::string> variants;
  SincOptions opts;
  bool reference = false;
  double r_ref = 37.5;
  double ref_tol = 1e-7;
  // fig5
  int scan_M = 10;
  int scan_points = 200;
  double scan_k1 = 1.0;
  double scan_lo = -0.25, scan_hi = 0.25;
  GreenBuildOptions gf;
  unsigned seed = 20190601;
};

// Default vacancy pattern of the microcrack: a row of five atoms through the origin with a row
// of three on top.
DefectSpec microcrack_pattern();

// Lattice decomposition of a 2D experiment (infinite: only a thin continuum shell is kept).
DomainDecomposition experiment_domain(const ExperimentSpec& spec, bool infinite);

// Geometry, models and Green/DBEM data of one 2D experiment. Not movable (internal references).
class Setup2d {
 public:
  // linear: quadratic model from the ground-state force constants. infinite: no outer boundary.
  Setup2d(const ExperimentSpec& spec, bool linear, bool infinite);
  Setup2d(const Setup2d&) = delete;
  Setup2d& operator=(const Setup2d&) = delete;

  double ell = 0.0;
  BravaisBasis basis;
  AtomisticModel morse;
  AtomisticModel model;  // model actually solved (morse or its linearisation)
  HarmonicStencil h;
  DomainDecomposition d;
  GreenTable g;
  std::unique_ptr<DbemWorkspace> ws;
  std::unique_ptr<AtomisticSystem> sys;
};

struct VariantResult {
  std::string name;
  double alpha = 1.0;  // static alpha used (1 unless relaxed)
  ConvergenceReport report;
};

struct ExperimentResult {
  std::string name;
  ExperimentKind kind = ExperimentKind::point_force;
  int n_atomistic = 0;
  std::vector<VariantResult> runs;
  // Spectral data (point force: ground state; microcrack: at the final Sinc state).
  double sigma = std::numeric_limits<double>::quiet_NaN();
  double sigma_opt = std::numeric_limits<double>::quiet_NaN();
  double alpha_opt = std::numeric_limits<double>::quiet_NaN();
  double kappa = std::numeric_limits<double>::quiet_NaN();
  // Reference comparison
  double energy = std::numeric_limits<double>::quiet_NaN();
  double energy_ref = std::numeric_limits<double>::quiet_NaN();
  double energy_error = std::numeric_limits<double>::quiet_NaN();
  int ref_atoms = 0;
  long ref_force_evals = 0;
  double cost_ratio = std::numeric_limits<double>::quiet_NaN();
  std::vector<ScanPoint> curve;
  double seconds = 0.0;
  std::vector<std::string> warnings;

  bool ok() const;  // every run converged
  const VariantResult* find(const std::string& variant) const;
};

struct ReferenceResult {
  int atoms = 0;
  long force_evals = 0;
  bool converged = false;
  Vec u;
  double energy = 0.0;  // core energy within r_core
};

ExperimentResult run_point_force(const ExperimentSpec& spec);
ExperimentResult run_microcrack(const ExperimentSpec& spec);
ExperimentResult run_fig5_scan(const ExperimentSpec& spec);
ExperimentResult run_experiment(const ExperimentSpec& spec);

// Fully atomistic disc of radius r_ref (units of ell) with zero far field around the defect.
// The energy is taken over the sites lying within r_core (units of ell).
ReferenceResult run_reference(const ExperimentSpec& spec, double r_core);

// Core energy used for the reference comparison: site energies of the active atoms with
// |x| <= r_core relative to the perfect crystal.
double core_energy(const AtomisticSystem& sys, const Vec& u, double r_core_abs);

// 5 x 5 grid of (M, k2) with k1 = 1 checked by the stab1d verification suite.
const std::vector<int>& stab1d_suite_M();
const std::vector<double>& stab1d_suite_k2();
std::vector<VerifyReport> run_stab1d_suite();

std::string to_string(ExperimentKind k);
std::string to_string(OuterBoundary b);

void write_curve_csv(std::ostream& os, const std::vector<ScanPoint>& pts);
std::string result_json(const ExperimentResult& r);

}  // namespace flexbc
