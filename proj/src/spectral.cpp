#include "flexbc/spectral.hpp"

#include "flexbc/sinclair.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

namespace flexbc {

namespace {

std::vector<int> positions_of(const IndexSet& in, const IndexSet& sub) {
  std::vector<int> pos;
  pos.reserve(sub.size());
  for (int id : sub) {
    auto it = std::lower_bound(in.begin(), in.end(), id);
    if (it == in.end() || *it != id) throw std::invalid_argument("site set is not a subset");
    pos.push_back(static_cast<int>(it - in.begin()));
  }
  return pos;
}

Mat pick_rows(const Mat& m, const std::vector<int>& pos, int dim) {
  Mat out(static_cast<Eigen::Index>(pos.size()) * dim, m.cols());
  for (std::size_t k = 0; k < pos.size(); ++k)
    out.middleRows(static_cast<Eigen::Index>(k) * dim, dim) =
        m.middleRows(static_cast<Eigen::Index>(pos[k]) * dim, dim);
  return out;
}

double golden_min(const std::function<double(double)>& f, double lo, double hi, double tol) {
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
  double f1 = f(x1), f2 = f(x2);
  while (hi - lo > tol) {
    if (f1 <= f2) {
      hi = x2, x2 = x1, f2 = f1;
      x1 = hi - gr * (hi - lo), f1 = f(x1);
    } else {
      lo = x1, x1 = x2, f1 = f2;
      x2 = lo + gr * (hi - lo), f2 = f(x2);
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

Mat schur_cc(const HarmonicStencil& h, const DomainDecomposition& d) {
  const Mat Laa = stencil_block_dense(h.K, d, d.a, d.a);
  const Mat Lac = stencil_block_dense(h.K, d, d.a, d.c);
  const Mat Lca = stencil_block_dense(h.K, d, d.c, d.a);
  const Mat Lcc = stencil_block_dense(h.K, d, d.c, d.c);
  Eigen::PartialPivLU<Mat> lu(Laa);
  if (!(lu.rcond() > 1e-14)) throw std::runtime_error("schur: singular harmonic atomistic block");
  return Lcc - Lca * lu.solve(Lac);
}

Mat schur_inverse_block(const DbemWorkspace& ws, const IndexSet& x, const IndexSet& y) {
  const auto& d = ws.decomposition();
  Mat out = green_block(ws.green(), d, x, y);
  if (!ws.infinite()) {
    const Mat B = ws.boundary_operator(ws.prepare(x));
    out -= B * green_block(ws.green(), d, d.o, y);
  }
  return out;
}

Vec schur_inverse_apply(const DbemWorkspace& ws, const IndexSet& x, const IndexSet& y, const Vec& f) {
  return ws.solve(x, Vec(), y, f);
}

Mat IterationOperatorBlocks::pad_rows(const Mat& m) const {
  return pick_rows(m, pad_in_rows, dim);
}

IterationOperatorBlocks assemble_T(const LinearizedBlocks& lin, const IndexSet& free,
                                   const DbemWorkspace& ws, const IndexSet& rows) {
  const auto& d = ws.decomposition();
  const auto& K = ws.stencil().K;
  const int dm = d.dim();
  IterationOperatorBlocks T;
  T.dim = dm;
  T.rows = rows;
  T.pad = d.p;
  T.free = free;
  T.pad_in_rows = positions_of(rows, d.p);

  Eigen::PartialPivLU<Mat> lu(lin.aa);
  if (lin.aa.rows() == 0 || !(lu.rcond() > 1e-14)) throw std::runtime_error("unstable atomistic state");
  const Mat Y = lu.solve(lin.ap);  // (L^{aa})^{-1} L^{a|p}
  T.Tap = -Y;
  const Mat Yi = pick_rows(Y, positions_of(free, d.i), dm);

  const Mat Gi = green_block(ws.green(), d, rows, d.i);
  const Mat Gip = green_block(ws.green(), d, rows, d.ip);
  const Mat Lip = stencil_block_dense(K, d, d.i, d.p);
  const Mat Lipp = stencil_block_dense(K, d, d.ip, d.p);
  const Mat Lipi = stencil_block_dense(K, d, d.ip, d.i);
  const Mat src1 = Lip;
  const Mat src2 = Lipi * Yi;
  const Mat src3 = Lipp;

  T.T1_inf = Gi * src1;
  T.T2_inf = Gip * src2;
  T.T3_inf = Gip * src3;
  if (ws.infinite()) {
    T.T1_hat = Mat::Zero(T.T1_inf.rows(), T.T1_inf.cols());
    T.T2_hat = T.T3_hat = T.T1_hat;
  } else {
    const Mat B = ws.boundary_operator(ws.prepare(rows));
    const Mat Goi = green_block(ws.green(), d, d.o, d.i);
    const Mat Goip = green_block(ws.green(), d, d.o, d.ip);
    T.T1_hat = -B * (Goi * src1);
    T.T2_hat = -B * (Goip * src2);
    T.T3_hat = -B * (Goip * src3);
  }
  T.T1 = T.T1_inf + T.T1_hat;
  T.T2 = T.T2_inf + T.T2_hat;
  T.T3 = T.T3_inf + T.T3_hat;
  return T;
}

IterationOperatorBlocks assemble_T(const LinearizedBlocks& lin, const IndexSet& free,
                                   const DbemWorkspace& ws) {
  return assemble_T(lin, free, ws, ws.decomposition().p);
}

Mat dense_Tcp(const LinearizedBlocks& lin, const HarmonicStencil& h, const DomainDecomposition& d,
              double alpha) {
  const int dm = d.dim();
  if (lin.aa.rows() != static_cast<Eigen::Index>(d.a.size()) * dm)
    throw std::invalid_argument("dense_Tcp: atomistic block must cover all of a");
  const Mat S = schur_cc(h, d);
  Mat Lcp = stencil_block_dense(h.K, d, d.c, d.p);
  Mat Lca = stencil_block_dense(h.K, d, d.c, d.a);
  for (int k : positions_of(d.c, d.ip)) {
    Lcp.middleRows(static_cast<Eigen::Index>(k) * dm, dm) *= alpha;
    Lca.middleRows(static_cast<Eigen::Index>(k) * dm, dm) *= alpha;
  }
  Eigen::PartialPivLU<Mat> lu(lin.aa);
  const Mat Y = lu.solve(lin.ap);
  Mat I = Mat::Zero(S.rows(), Lcp.cols());
  const auto pp = positions_of(d.c, d.p);
  for (std::size_t k = 0; k < pp.size(); ++k)
    I.block(static_cast<Eigen::Index>(pp[k]) * dm, static_cast<Eigen::Index>(k) * dm, dm, dm).setIdentity();
  return I - Eigen::PartialPivLU<Mat>(S).solve(Lcp - Lca * Y);
}

SpectralInfo spectral_radius(const Mat& T) {
  SpectralInfo info;
  if (T.rows() == 0) return info;
  Eigen::EigenSolver<Mat> es(T, true);
  if (es.info() != Eigen::Success) throw std::runtime_error("eigen decomposition failed");
  info.eigenvalues = es.eigenvalues();
  info.sigma = info.eigenvalues.cwiseAbs().maxCoeff();
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(es.eigenvectors());
  const auto& s = svd.singularValues();
  const double smin = s(s.size() - 1), smax = s(0);
  if (!(smin > 1e-12 * smax)) {
    info.diagonalizable = false;
    info.kappa = std::numeric_limits<double>::infinity();
  } else {
    info.kappa = smax / smin;
  }
  return info;
}

double spectral_radius_only(const Mat& T) {
  if (T.rows() == 0) return 0.0;
  Eigen::EigenSolver<Mat> es(T, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

AlphaOpt alpha_opt_static(const IterationOperatorBlocks& T) {
  const Mat A = T.pad_rows(T.T1 + T.T3);
  const Mat B = T.pad_rows(T.T2 - T.T3);
  auto sigma = [&](double a) { return spectral_radius_only(A + a * B); };
  AlphaOpt out;
  out.sigma_unrelaxed = sigma(1.0);
  constexpr int kGrid = 64;
  double best_a = 1.0, best = out.sigma_unrelaxed;
  for (int j = 1; j <= kGrid; ++j) {
    const double a = 2.0 * j / kGrid;
    const double v = sigma(a);
    if (v < best) best = v, best_a = a;
  }
  const double lo = std::max(1e-9, best_a - 2.0 / kGrid), hi = std::min(2.0, best_a + 2.0 / kGrid);
  const double a = golden_min(sigma, lo, hi, 1e-6);
  const double v = sigma(a);
  if (v < best) best = v, best_a = a;
  if (out.sigma_unrelaxed <= best + 1e-12) best_a = 1.0, best = out.sigma_unrelaxed;
  out.alpha = best_a;
  out.sigma = best;
  return out;
}

Vec modeling_error_apply(const DbemWorkspace& ws, const Stencil& K_nl, const Vec& u_ref,
                         const IndexSet& rows) {
  const auto& d = ws.decomposition();
  const int dm = d.dim();
  const Vec ub = gather(u_ref, d.lb, dm);
  const Vec s = stencil_block(K_nl, d, d.c, d.lb) * ub - stencil_block(ws.stencil().K, d, d.c, d.lb) * ub;
  return ws.solve(rows, Vec(), d.c, s);
}

Chain1d::Chain1d(int M_, int N_, double k1_, double k2_)
    : M(M_),
      N(N_),
      k1(k1_),
      k2(k2_),
      model(AtomisticModel::chain1d(k1_, k2_)),
      d(decompose(build_disc_domain(BravaisBasis::chain(1.0), N_), BravaisBasis::chain(1.0), N_, M_,
                  2.0)),
      h(build_harmonic_stencil(model)),
      g(GreenTable::exact_1d(h.kbar)),
      ws(d, h, g, false),
      sys(model, d) {}

std::vector<double> open_grid(double lo, double hi, int n) {
  std::vector<double> out;
  out.reserve(n);
  for (int j = 1; j <= n; ++j) out.push_back(lo + (hi - lo) * j / (n + 1));
  return out;
}

std::vector<ScanPoint> stab1d_scan(int M, double k1, const std::vector<double>& ratios, int N) {
  if (N <= 0) N = 2 * M + 10;
  std::vector<ScanPoint> out;
  for (double r : ratios) {
    ScanPoint pt;
    pt.ratio = r;
    const double k2 = r * k1;
    if (!(k1 + 4 * k2 > 0)) {
      pt.stable = false;
      pt.sigma = pt.sigma_opt = std::numeric_limits<double>::quiet_NaN();
      pt.alpha_opt = std::numeric_limits<double>::quiet_NaN();
      out.push_back(pt);
      continue;
    }
    Chain1d ch(M, N, k1, k2);
    const Vec zero = Vec::Zero(static_cast<Eigen::Index>(ch.d.size()));
    const auto T = assemble_T(ch.sys.hessian_blocks(zero), ch.sys.free_sites(), ch.ws);
    const auto opt = alpha_opt_static(T);
    pt.sigma = opt.sigma_unrelaxed;
    pt.sigma_opt = opt.sigma;
    pt.alpha_opt = opt.alpha;
    pt.stable = pt.sigma < 1.0;
    out.push_back(pt);
  }
  return out;
}

bool VerifyReport::passed() const {
  return std::all_of(items.begin(), items.end(), [](const CheckItem& c) { return c.passed || !c.gating; });
}

double lu_last_pivot(int M, double k1, double k2) {
  const int Na = 2 * M + 1;
  const int K = Na - 1;
  const double k = k1 + k2;
  Mat L = Mat::Zero(Na, Na);
  for (int i = 0; i < Na; ++i)
    for (int j = 0; j < Na; ++j) {
      const int s = std::abs(i - j);
      L(i, j) = s == 0 ? 2 * k : s == 1 ? -k1 : s == 2 ? -k2 : 0.0;
    }
  Mat A = L.block(1, 0, K, K);
  // Doolittle without pivoting.
  for (int c = 0; c < K - 1; ++c) {
    if (A(c, c) == 0.0) throw std::runtime_error("lu_last_pivot: zero pivot");
    for (int r = c + 1; r < K; ++r) {
      const double l = A(r, c) / A(c, c);
      if (l != 0.0) A.row(r).tail(K - c) -= l * A.row(c).tail(K - c);
    }
  }
  return A(K - 1, K - 1);
}

Mat tilde_pp_closed_form(int M, double k1, double k2, const Mat& Linv) {
  const int Na = static_cast<int>(Linv.rows());
  const double L11 = Linv(0, 0), L12 = Linv(0, 1), L1N = Linv(0, Na - 1), L1N1 = Linv(0, Na - 2);
  const double m3 = 2.0 * M + 3.0, m1 = M + 1.0;
  Mat T(4, 4);
  T(0, 0) = T(3, 3) = -k2 * (L11 + m3 * L1N) / 2;
  T(0, 1) = T(3, 2) = -k1 * (L11 + m3 * L1N) / 2 - k2 * (L12 + m3 * L1N1) / 2 + 1;
  T(0, 2) = T(3, 1) = -k1 * (m3 * L11 + L1N) / 2 - k2 * (m3 * L12 + L1N1) / 2 + M + 1;
  T(0, 3) = T(3, 0) = -k2 * (m3 * L11 + L1N) / 2;
  T(1, 0) = T(2, 3) = -m1 * k2 * L1N;
  T(1, 1) = T(2, 2) = -m1 * k2 * L1N1 - m1 * k1 * L1N + 0.5;
  T(1, 2) = T(2, 1) = -m1 * k1 * L11 - m1 * k2 * L12 + M + 0.5;
  T(1, 3) = T(2, 0) = -m1 * k2 * L11;
  return T;
}

VerifyReport verify_1d_theory(int M, double k1, double k2, int N) {
  if (!(k1 > 0 && k2 < 0 && k1 + 4 * k2 > 0))
    throw std::invalid_argument("verify_1d_theory: need k1 > 0, -k1/4 < k2 < 0");
  VerifyReport rep;
  rep.M = M, rep.k1 = k1, rep.k2 = k2;
  auto add = [&](std::string name, double value, double limit, bool ok, bool gating = true) {
    rep.items.push_back({std::move(name), value, limit, ok, gating});
  };

  Chain1d ch(M, N > 0 ? N : M + 6, k1, k2);
  const auto& d = ch.d;
  const Vec zero = Vec::Zero(static_cast<Eigen::Index>(d.size()));
  const auto lin = ch.sys.hessian_blocks(zero);
  const auto T = assemble_T(lin, ch.sys.free_sites(), ch.ws, d.c);
  const Mat Linv = lin.aa.inverse();
  const int Na = static_cast<int>(Linv.rows());
  const double L11 = Linv(0, 0), L12 = Linv(0, 1), L1N = Linv(0, Na - 1), L1N1 = Linv(0, Na - 2);

  // Nilpotency of the homogeneous part, continuum rows.
  const Mat hat_pp = T.Tpp_hat();
  const Mat hat_hat = T.Tcp_hat() * hat_pp;
  const Mat tilde_hat = T.Tcp_tilde() * hat_pp;
  const double nil1 = hat_hat.cwiseAbs().maxCoeff(), nil2 = tilde_hat.cwiseAbs().maxCoeff();
  add("hat*hat = 0", nil1, 1e-12, nil1 < 1e-12);
  add("tilde*hat = 0", nil2, 1e-12, nil2 < 1e-12);

  add("inverse (1,1) > 0", L11, 0.0, L11 > 0);
  add("inverse (1,Na) > 0", L1N, 0.0, L1N > 0);
  const double b1 = L1N1 / L1N, b1_lim = 3.0 - 3.0 / (2.0 * M + 1.0);
  add("ratio (1,Na-1)/(1,Na) bound", b1, b1_lim, b1 < b1_lim);
  const double b2 = L11 / L1N;
  add("ratio (1,1)/(1,Na) > 1", b2, 1.0, b2 > 1.0);

  const Mat tp = T.Tpp_tilde();
  const Mat J = Mat::Identity(4, 4).rowwise().reverse();
  const double scale = std::max(1.0, tp.cwiseAbs().maxCoeff());
  const double centro = (J * tp * J - tp).cwiseAbs().maxCoeff() / scale;
  add("tilde pad block centrosymmetric", centro, 1e-9, centro < 1e-9);
  Eigen::JacobiSVD<Mat> svd(tp);
  const auto& sv = svd.singularValues();
  int rank = 0;
  for (int j = 0; j < sv.size(); ++j) rank += sv(j) > 1e-10 * sv(0);
  add("tilde pad block rank", rank, 2, rank == 2);
  const auto info = spectral_radius(tp);
  int zeros = 0;
  for (int j = 0; j < info.eigenvalues.size(); ++j) zeros += std::abs(info.eigenvalues(j)) < 1e-9 * scale;
  add("tilde pad block zero eigenvalues", zeros, 2, zeros == 2);

  const double id_hom =
      -(M + 1.0) * (k1 * (L11 - L1N) + k2 * (L12 - L1N1)) - (M + 2.0) * k2 * (L11 - L1N) + M;
  add("homogeneous deformation identity", std::abs(id_hom), 1e-9, std::abs(id_hom) < 1e-9);
  const double id_c = (k1 + k2) * (L11 + L1N) + k2 * (L12 + L1N1) - 1.0;
  add("companion identity", std::abs(id_c), 1e-9, std::abs(id_c) < 1e-9);

  const double lambda21 = -k2 * (L11 + L1N);
  const double dl = std::abs(lambda21 - info.sigma);
  add("lambda21 = sigma(tilde)", dl, 1e-9, dl < 1e-9);
  const double sigma_full = spectral_radius_only(T.Tpp());
  const double ds = std::abs(sigma_full - info.sigma);
  add("sigma(T) = sigma(tilde)", ds, 1e-9, ds < 1e-9);
  add("sigma < 1", sigma_full, 1.0, sigma_full < 1.0);

  const double e = (tilde_pp_closed_form(M, k1, k2, Linv) - tp).cwiseAbs().maxCoeff() / scale;
  add("closed-form tilde entries", e, 1e-9, e < 1e-9);
  return rep;
}

ErrorBoundReport error_bound_1d(int M, int N, double k1, double k2, int iterations) {
  Chain1d ch(M, N, k1, k2);
  const auto& d = ch.d;
  const Eigen::Index n = static_cast<Eigen::Index>(d.size());
  Vec f = Vec::Zero(n);
  f[d.find({0, 0})] = 1.0;
  f[d.find({M / 2, 0})] = -0.4;
  f[d.find({-M / 2 - 1, 0})] = 0.25;

  // Reference: nonlocal operator on all of Λ, zero outside.
  const Mat Ll = stencil_block_dense(ch.model.quad, d, d.l, d.l);
  Vec u_ref = Vec::Zero(n);
  scatter(u_ref, d.l, Ll.ldlt().solve(gather(f, d.l, 1)), 1);

  const Vec zero = Vec::Zero(n);
  const auto T = assemble_T(ch.sys.hessian_blocks(zero), ch.sys.free_sites(), ch.ws);
  const auto info = spectral_radius(T.Tpp());
  const Vec te = modeling_error_apply(ch.ws, ch.model.quad, u_ref, d.p);

  ErrorBoundReport rep;
  rep.sigma = info.sigma;
  rep.kappa = info.kappa;
  rep.te_norm = te.norm();

  SincSolver solver(ch.sys, ch.ws, Vec::Zero(static_cast<Eigen::Index>(d.o.size())), f);
  const Vec e0 = gather(u_ref - solver.elastic_guess(), d.p, 1);
  SincOptions opts;
  opts.use_initial_guess = true;
  opts.schedule = {{0.0, 1e-11}};
  opts.max_iter = iterations + 1;
  opts.divergence_window = std::numeric_limits<int>::max();
  opts.predictor = false;
  std::vector<double> measured;
  opts.on_iterate = [&](int, const Vec& u) { measured.push_back(gather(u_ref - u, d.p, 1).norm()); };
  solver.run(opts);

  const double s = rep.sigma, kap = rep.kappa;
  for (std::size_t k = 0; k < measured.size(); ++k) {
    const double sk = std::pow(s, static_cast<double>(k + 1));
    const double b = sk * kap * e0.norm() + (1.0 - sk) / (1.0 - s) * kap * rep.te_norm;
    rep.measured.push_back(measured[k]);
    rep.bound.push_back(b);
    if (measured[k] > b * (1.0 + 1e-12) + 1e-14) rep.holds = false;
  }
  return rep;
}

}  // namespace flexbc
