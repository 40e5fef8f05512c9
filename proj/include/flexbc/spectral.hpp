#pragma once

#include "flexbc/atomistic.hpp"
#include "flexbc/dbem.hpp"

#include <string>
#include <vector>

namespace flexbc {

// S^{c|c} = L_h^{c|c} - L_h^{c|a} (L_h^{a|a})^{-1} L_h^{a|c}, zero Dirichlet data on o.
Mat schur_cc(const HarmonicStencil& h, const DomainDecomposition& d);
// (S^{c|c})^{-1} restricted to rows x and source sites y: G^{x|y} - B^{x|o} G^{o|y}.
Mat schur_inverse_block(const DbemWorkspace& ws, const IndexSet& x, const IndexSet& y);
Vec schur_inverse_apply(const DbemWorkspace& ws, const IndexSet& x, const IndexSet& y, const Vec& f);

// Error propagation of one Sinclair step, restricted to the pad columns.
struct IterationOperatorBlocks {
  int dim = 1;
  IndexSet rows;  // continuum sites of the c-blocks
  IndexSet pad;
  IndexSet free;  // atomistic sites of T^{a|p}
  Mat Tap;        // -(L^{aa})^{-1} L^{a|p}
  Mat T1, T2, T3;
  Mat T1_inf, T2_inf, T3_inf;  // infinite-lattice (Green function) parts
  Mat T1_hat, T2_hat, T3_hat;  // boundary corrections

  Mat Tcp(double alpha = 1.0) const { return T1 + alpha * T2 + (1.0 - alpha) * T3; }
  Mat Tcp_tilde(double alpha = 1.0) const {
    return T1_inf + alpha * T2_inf + (1.0 - alpha) * T3_inf;
  }
  Mat Tcp_hat(double alpha = 1.0) const {
    return T1_hat + alpha * T2_hat + (1.0 - alpha) * T3_hat;
  }
  Mat Tpp(double alpha = 1.0) const { return pad_rows(Tcp(alpha)); }
  Mat Tpp_tilde(double alpha = 1.0) const { return pad_rows(Tcp_tilde(alpha)); }
  Mat Tpp_hat(double alpha = 1.0) const { return pad_rows(Tcp_hat(alpha)); }

  std::vector<int> pad_in_rows;
  Mat pad_rows(const Mat& m) const;
};

// rows must contain the pad. Throws "unstable atomistic state" if L^{aa} is singular.
IterationOperatorBlocks assemble_T(const LinearizedBlocks& lin, const IndexSet& free,
                                   const DbemWorkspace& ws, const IndexSet& rows);
IterationOperatorBlocks assemble_T(const LinearizedBlocks& lin, const IndexSet& free,
                                   const DbemWorkspace& ws);

// Same block from the dense Schur complement (small, defect-free problems only).
Mat dense_Tcp(const LinearizedBlocks& lin, const HarmonicStencil& h, const DomainDecomposition& d,
              double alpha = 1.0);

struct SpectralInfo {
  double sigma = 0.0;
  double kappa = 1.0;  // ||Q|| ||Q^{-1}|| in the 2-norm
  bool diagonalizable = true;
  Eigen::VectorXcd eigenvalues;
};
SpectralInfo spectral_radius(const Mat& T);
double spectral_radius_only(const Mat& T);

struct AlphaOpt {
  double alpha = 1.0;
  double sigma = 0.0;
  double sigma_unrelaxed = 0.0;
};
AlphaOpt alpha_opt_static(const IterationOperatorBlocks& T);

// T_e[u_ref] on `rows`: (S^{c|c})^{-1} (L_nl - L_h)^{c|.} u_ref for a linear nonlocal model.
Vec modeling_error_apply(const DbemWorkspace& ws, const Stencil& K_nl, const Vec& u_ref,
                         const IndexSet& rows);

// One-dimensional chain, atomistic core {-M..M}, continuum out to N.
struct Chain1d {
  Chain1d(int M, int N, double k1, double k2);
  Chain1d(const Chain1d&) = delete;
  Chain1d& operator=(const Chain1d&) = delete;
  int M, N;
  double k1, k2;
  AtomisticModel model;
  DomainDecomposition d;
  HarmonicStencil h;
  GreenTable g;
  DbemWorkspace ws;
  AtomisticSystem sys;
};

struct ScanPoint {
  double ratio = 0.0;
  double sigma = 0.0;
  double sigma_opt = 0.0;
  double alpha_opt = 1.0;
  bool stable = true;
};
// N defaults to 2M + 10.
std::vector<ScanPoint> stab1d_scan(int M, double k1, const std::vector<double>& ratios, int N = 0);
std::vector<double> open_grid(double lo, double hi, int n);  // n interior points of (lo, hi)

struct CheckItem {
  std::string name;
  double value = 0.0;
  double limit = 0.0;
  bool passed = false;
  bool gating = true;
};
struct VerifyReport {
  int M = 0;
  double k1 = 1.0, k2 = 0.0;
  std::vector<CheckItem> items;
  bool passed() const;
};
// N defaults to M + 6; the boundary corrections grow with N and so does their roundoff.
VerifyReport verify_1d_theory(int M, double k1, double k2, int N = 0);

// Last pivot of the unpivoted LU of L^{aa} with its first row and last column removed.
double lu_last_pivot(int M, double k1, double k2);

// Closed-form entries of the 4x4 inhomogeneous pad block in terms of (L^{aa})^{-1}.
Mat tilde_pp_closed_form(int M, double k1, double k2, const Mat& Linv);

struct ErrorBoundReport {
  double sigma = 0.0;
  double kappa = 1.0;
  double te_norm = 0.0;
  std::vector<double> measured;  // ||u_ref - u_k|| on the pad
  std::vector<double> bound;
  bool holds = true;
};
// Runs the linear chain from the elastic guess and checks the a priori bound on the pad block.
ErrorBoundReport error_bound_1d(int M, int N, double k1, double k2, int iterations);

}  // namespace flexbc
