// Acceptance checks: one PASS/FAIL line per criterion.
#include "flexbc/config.hpp"
#include "flexbc/harness.hpp"

#include <spdlog/spdlog.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace flexbc;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double rel(const Vec& a, const Vec& b) { return (a - b).norm() / std::max(b.norm(), 1e-300); }

SincOptions exact_opts() {
  SincOptions o;
  o.schedule = {{1e-12, 1e-14}};
  o.predictor = false;
  return o;
}

// 1. Two-step convergence with L_hnl = L_h
Outcome two_steps() {
  std::string detail;
  bool ok = true;
  {
    Chain1d ch(5, 20, 1.0, 0.0);
    Vec f = Vec::Zero(static_cast<Eigen::Index>(ch.d.size()));
    f[ch.d.find({0, 0})] = 1e-2;
    f[ch.d.find({2, 0})] = -5e-3;
    const Vec ub = Vec::Constant(static_cast<Eigen::Index>(ch.d.o.size()), 1e-2);
    SincSolver s(ch.sys, ch.ws, ub, f);
    const auto r = s.run(exact_opts());
    const auto& last = r.records.back();
    const double res = std::max(last.fnorm_a, last.fnorm_c);
    ok = ok && r.status == "converged" && r.n_iter == 2 && res < 1e-12;
    detail += fmt("1D: %d iterations, residual %.2e", r.n_iter, res);
  }
  {
    MorseParams mp;
    const double ell = morse_equilibrium_spacing(mp);
    const auto basis = BravaisBasis::hexagonal(ell);
    const auto h = build_harmonic_stencil(AtomisticModel::morse2d(mp, basis));
    const auto model = AtomisticModel::quadratic(h.K, basis);
    const auto d = decompose(build_disc_domain(basis, 12 * ell), basis, 12 * ell, 4 * ell, model.r_cut);
    GreenBuildOptions go;
    const auto g = gf_2d_table(h, basis, max_separation(d), go);
    DbemWorkspace ws(d, h, g, false);
    AtomisticSystem sys(model, d);
    Vec f = Vec::Zero(2 * static_cast<Eigen::Index>(d.size()));
    f[2 * d.find({0, 0})] = 1e-2;
    f[2 * d.find({1, 1}) + 1] = -4e-3;
    const Vec ub = Vec::Constant(2 * static_cast<Eigen::Index>(d.o.size()), 1e-3);
    SincSolver s(sys, ws, ub, f);
    const auto r = s.run(exact_opts());
    const auto& last = r.records.back();
    const double res = std::max(last.fnorm_a, last.fnorm_c);
    ok = ok && r.status == "converged" && r.n_iter == 2 && res < 1e-12;
    detail += fmt("; 2D: %d iterations, residual %.2e", r.n_iter, res);
  }
  return {ok, detail};
}

// 2. Stability of the chain over the admissible interval
Outcome stability_1d() {
  bool ok = true;
  std::string detail;
  const auto grid = open_grid(-0.2499, 0.0, 200);
  for (int M : {2, 5, 10, 25}) {
    double worst = 0;
    for (const auto& p : stab1d_scan(M, 1.0, grid)) worst = std::max(worst, p.sigma);
    ok = ok && worst < 1.0;
    detail += fmt("max sigma M=%d %.4f; ", M, worst);
  }
  const double near_edge = stab1d_scan(10, 1.0, {-0.24}).front().sigma;
  const double near_zero = stab1d_scan(10, 1.0, {-1e-4}).front().sigma;
  ok = ok && near_edge > 0.9 && near_zero < 1e-3;
  detail += fmt("sigma(-0.24) %.4f (> 0.9), sigma(-1e-4) %.2e (< 1e-3)", near_edge, near_zero);
  return {ok, detail};
}

// 3. Optimal static relaxation, M = 10
Outcome static_relaxation() {
  std::vector<double> ratios;
  for (int j = 0; j <= 18; ++j) ratios.push_back(-0.1 + 0.005 * j);
  double worst = 0;
  double at = 0;
  for (const auto& p : stab1d_scan(10, 1.0, ratios)) {
    const double q = p.sigma_opt / p.sigma;
    if (q > worst) worst = q, at = p.ratio;
  }
  return {worst <= 0.1, fmt("max sigma_opt/sigma %.4f at k2/k1=%.3f over %zu points", worst, at, ratios.size())};
}

// 4. Rate sharpness for the point force
Outcome rate_sharpness() {
  ExperimentSpec s = default_spec(ExperimentKind::point_force);
  s.name = "point_force";
  const auto r = run_point_force(s);
  const auto* sinc = r.find("sinc");
  const auto* relax = r.find("relax");
  if (!sinc || !relax) return {false, "missing variant"};
  auto in = [](const RateFit& f, double top) { return f.fitted && f.rate >= top - 0.05 && f.rate <= top; };
  const bool ok = r.ok() && in(sinc->report.fit, r.sigma) && in(relax->report.fit, r.sigma_opt);
  return {ok, fmt("sinc rate %.6f vs sigma %.6f; relax rate %.6f vs sigma_opt %.6f", sinc->report.fit.rate,
                  r.sigma, relax->report.fit.rate, r.sigma_opt)};
}

// 5. Microcrack table
Outcome microcrack_table() {
  const double ra[] = {4, 5, 7};
  const double sig[] = {0.52, 0.42, 0.29}, sopt[] = {0.38, 0.30, 0.18};
  const int nit[] = {34, 24, 17};
  const double de[] = {0.3, 0.2, 0.064};
  bool ok = true;
  std::string detail;
  for (int k = 0; k < 3; ++k) {
    ExperimentSpec s = default_spec(ExperimentKind::microcrack);
    s.name = "microcrack";
    s.r_a = ra[k];
    s.reference = true;
    const auto r = run_microcrack(s);
    const auto* a = r.find("sinc");
    const auto* b = r.find("dyn1");
    const auto* c = r.find("dyn2");
    const bool band_s = std::abs(r.sigma - sig[k]) <= 0.08;
    const bool band_o = std::abs(r.sigma_opt - sopt[k]) <= 0.08;
    const bool band_n = a && std::abs(a->report.n_iter - nit[k]) <= 0.25 * nit[k];
    const bool order = a && b && c && c->report.n_iter <= b->report.n_iter && b->report.n_iter <= a->report.n_iter;
    const bool energy = r.energy_error >= de[k] / 2 && r.energy_error <= de[k] * 2;
    const bool row = r.ok() && band_s && band_o && band_n && order && energy;
    ok = ok && row;
    detail += fmt("r_a=%g: sigma %.3f%s sigma_opt %.3f%s N(sinc/dyn1/dyn2) %d/%d/%d%s%s |dE| %.3g%s; ", ra[k],
                  r.sigma, band_s ? "" : "!", r.sigma_opt, band_o ? "" : "!", a ? a->report.n_iter : -1,
                  b ? b->report.n_iter : -1, c ? c->report.n_iter : -1, band_n ? "" : "!",
                  order ? "" : " (order!)", r.energy_error, energy ? "" : "!");
    detail += fmt("cost ratio %.1f; ", r.cost_ratio);
  }
  return {ok, detail};
}

// 6. DBEM against a dense Dirichlet solve
double dbem_error(const DomainDecomposition& d, const HarmonicStencil& h, const GreenTable& g, int instances,
                  unsigned seed) {
  const int dm = d.dim();
  DbemWorkspace ws(d, h, g, false);
  const Mat Lll = stencil_block_dense(h.K, d, d.l, d.l);
  const Mat Llo = stencil_block_dense(h.K, d, d.l, d.o);
  const Eigen::PartialPivLU<Mat> lu(Lll);
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> U(-1, 1);
  double worst = 0;
  for (int t = 0; t < instances; ++t) {
    Vec ub(static_cast<Eigen::Index>(d.o.size()) * dm), r(static_cast<Eigen::Index>(d.l.size()) * dm);
    for (auto& x : ub) x = U(rng);
    for (auto& x : r) x = U(rng);
    const Vec u_dense = lu.solve(r - Llo * ub);
    const Vec u = ws.solve(d.l, ub, d.l, r);
    worst = std::max(worst, rel(u, u_dense));
  }
  return worst;
}

Outcome dbem_exactness() {
  Chain1d ch(5, 20, 1.0, -0.1);
  const double e1 = dbem_error(ch.d, ch.h, ch.g, 20, 11);
  MorseParams mp;
  const double ell = morse_equilibrium_spacing(mp);
  const auto basis = BravaisBasis::hexagonal(ell);
  const auto model = AtomisticModel::morse2d(mp, basis);
  const auto h = build_harmonic_stencil(model);
  const auto d = decompose(build_disc_domain(basis, 15 * ell), basis, 15 * ell, 5 * ell, model.r_cut);
  const auto g = gf_2d_table(h, basis, max_separation(d));
  const double e2 = dbem_error(d, h, g, 20, 12);
  return {e1 < 1e-9 && e2 < 1e-9, fmt("max relative error 1D %.2e, 2D %.2e", e1, e2)};
}

// 7. Green identity
Outcome green_identity() {
  const auto model1 = AtomisticModel::chain1d(1.0, -0.1);
  const auto h1 = build_harmonic_stencil(model1);
  const double r1 = green_identity_residual(GreenTable::exact_1d(h1.kbar), h1, model1.basis, 10, 7);
  MorseParams mp;
  const auto basis = BravaisBasis::hexagonal(morse_equilibrium_spacing(mp));
  const auto h2 = build_harmonic_stencil(AtomisticModel::morse2d(mp, basis));
  const auto g2 = gf_2d_table(h2, basis, 40 * basis.ell);
  const double r2 = green_identity_residual(g2, h2, basis, 10, 8);
  return {r1 < 1e-12 && r2 < 1e-8, fmt("1D %.2e (< 1e-12), 2D %.2e (< 1e-8)", r1, r2)};
}

// 8. Verification suite
Outcome verification_suite() {
  int items = 0, failed = 0;
  std::string first;
  for (const auto& rep : run_stab1d_suite())
    for (const auto& it : rep.items) {
      if (!it.gating) continue;
      ++items;
      if (!it.passed) {
        ++failed;
        if (first.empty()) first = fmt(" (first: M=%d k2=%g %s = %.3g)", rep.M, rep.k2, it.name.c_str(), it.value);
      }
    }
  return {failed == 0, fmt("%d of %d items failed on the 5 x 5 grid%s", failed, items, first.c_str())};
}

// 9. Dense Schur vs DBEM assembly
Outcome schur_equivalence() {
  double worst = 0;
  {
    Chain1d ch(5, 20, 1.0, -0.15);
    const Vec zero = Vec::Zero(static_cast<Eigen::Index>(ch.d.size()));
    const auto lin = ch.sys.hessian_blocks(zero);
    const auto T = assemble_T(lin, ch.sys.free_sites(), ch.ws, ch.d.c);
    for (double a : {1.0, 0.7, 1.3}) {
      const Mat D = dense_Tcp(lin, ch.h, ch.d, a);
      worst = std::max(worst, (T.Tcp(a) - D).cwiseAbs().maxCoeff() / D.cwiseAbs().maxCoeff());
    }
  }
  double worst2 = 0;
  {
    MorseParams mp;
    const double ell = morse_equilibrium_spacing(mp);
    const auto basis = BravaisBasis::hexagonal(ell);
    const auto morse = AtomisticModel::morse2d(mp, basis);
    const auto h = build_harmonic_stencil(morse);
    const auto model = AtomisticModel::quadratic(morse.ground_state_stencil(), basis);
    const auto d = decompose(build_disc_domain(basis, 11 * ell), basis, 11 * ell, 4 * ell, model.r_cut);
    const auto g = gf_2d_table(h, basis, max_separation(d));
    DbemWorkspace ws(d, h, g, false);
    AtomisticSystem sys(model, d);
    const auto lin = sys.hessian_blocks(Vec::Zero(2 * static_cast<Eigen::Index>(d.size())));
    const auto T = assemble_T(lin, sys.free_sites(), ws, d.c);
    for (double a : {1.0, 0.8}) {
      const Mat D = dense_Tcp(lin, h, d, a);
      worst2 = std::max(worst2, (T.Tcp(a) - D).cwiseAbs().maxCoeff() / D.cwiseAbs().maxCoeff());
    }
  }
  return {worst < 1e-9 && worst2 < 1e-9, fmt("max relative difference 1D %.2e, 2D %.2e", worst, worst2)};
}

// 10. A priori error bound
Outcome error_bound() {
  const auto rep = error_bound_1d(5, 20, 1.0, -0.1, 30);
  double margin = 0;
  for (std::size_t k = 0; k < rep.measured.size(); ++k) margin = std::max(margin, rep.measured[k] / rep.bound[k]);
  return {rep.holds && rep.measured.size() >= 31,
          fmt("%zu iterates, max measured/bound %.3f, sigma %.4f, kappa %.3g", rep.measured.size(), margin,
              rep.sigma, rep.kappa)};
}

// 11. Finite-difference consistency of forces and Hessians
struct FdErr {
  double force = 0, hess = 0;
};

FdErr fd_check(const AtomisticModel& model, const DomainDecomposition& d, double amp, unsigned seed) {
  AtomisticSystem sys(model, d);
  const int dm = model.dim();
  const auto& free = sys.free_sites();
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> U(-amp, amp);
  FdErr e;
  for (int t = 0; t < 20; ++t) {
    Vec u(static_cast<Eigen::Index>(d.size()) * dm);
    for (auto& x : u) x = U(rng);
    const Vec f = sys.forces(u);
    const Mat H = sys.hessian_blocks(u).aa;
    Vec f_fd(f.size());
    Mat H_fd(H.rows(), H.cols());
    const double step = 1e-5;
    for (std::size_t s = 0; s < free.size(); ++s)
      for (int c = 0; c < dm; ++c) {
        const Eigen::Index g = static_cast<Eigen::Index>(free[s]) * dm + c;
        const Eigen::Index j = static_cast<Eigen::Index>(s) * dm + c;
        Vec up = u, um = u;
        up[g] += step;
        um[g] -= step;
        f_fd[j] = -(sys.energy(up) - sys.energy(um)) / (2 * step);
        H_fd.col(j) = -(sys.forces(up) - sys.forces(um)) / (2 * step);
      }
    e.force = std::max(e.force, rel(f_fd, f));
    e.hess = std::max(e.hess, (H_fd - H).norm() / H.norm());
  }
  return e;
}

Outcome fd_consistency() {
  const auto chain = AtomisticModel::chain1d(1.0, -0.15);
  const auto cb = BravaisBasis::chain(1.0);
  const auto dc = decompose(build_disc_domain(cb, 12), cb, 12, 5, chain.r_cut);
  const auto e1 = fd_check(chain, dc, 0.2, 3);

  MorseParams mp;
  const double ell = morse_equilibrium_spacing(mp);
  const auto basis = BravaisBasis::hexagonal(ell);
  const auto morse = AtomisticModel::morse2d(mp, basis);
  const auto d2 = decompose(build_disc_domain(basis, 7 * ell), basis, 7 * ell, 3.5 * ell, morse.r_cut);
  const auto e2 = fd_check(morse, d2, 0.05, 4);
  const auto quad = AtomisticModel::quadratic(morse.ground_state_stencil(), basis);
  const auto e3 = fd_check(quad, d2, 0.05, 5);
  const double worst = std::max({e1.force, e1.hess, e2.force, e2.hess, e3.force, e3.hess});
  return {worst < 1e-6, fmt("chain %.1e/%.1e, morse %.1e/%.1e, quadratic %.1e/%.1e (force/hessian)", e1.force,
                            e1.hess, e2.force, e2.hess, e3.force, e3.hess)};
}

// 12. Initial-guess independence of the fitted rate
Outcome initial_guess() {
  double rate[2] = {0, 0};
  bool fitted = true;
  for (int k = 0; k < 2; ++k) {
    ExperimentSpec s = default_spec(ExperimentKind::microcrack);
    s.name = "microcrack";
    s.r_a = 5;
    s.variants = {"sinc"};
    s.opts.use_initial_guess = k == 1;
    const auto r = run_microcrack(s);
    fitted = fitted && r.ok() && r.runs.front().report.fit.fitted;
    rate[k] = r.runs.front().report.fit.rate;
  }
  const double d = std::abs(rate[0] - rate[1]) / rate[0];
  return {fitted && d < 0.1, fmt("rate u0=0 %.6f, elastic guess %.6f, relative difference %.2e", rate[0], rate[1], d)};
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_level(spdlog::level::warn);
  std::set<int> only;
  for (int k = 1; k < argc; ++k) only.insert(std::atoi(argv[k]));

  struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> all = {
      {1, "two-step convergence", 1, two_steps},
      {2, "1D stability", 30, stability_1d},
      {3, "optimal static relaxation", 60, static_relaxation},
      {4, "rate sharpness", 600, rate_sharpness},
      {5, "microcrack table", 1200, microcrack_table},
      {6, "DBEM exactness", 60, dbem_exactness},
      {7, "Green identity", 1e9, green_identity},
      {8, "verification suite", 30, verification_suite},
      {9, "Schur/DBEM equivalence", 1e9, schur_equivalence},
      {10, "error bound", 1e9, error_bound},
      {11, "gradient/Hessian consistency", 1e9, fd_consistency},
      {12, "initial-guess independence", 1e9, initial_guess},
  };
  int failures = 0;
  for (const auto& c : all) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double t = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = t < c.budget_s;
    const bool pass = o.pass && in_time;
    failures += !pass;
    std::printf("criterion %2d %s: %s  %s  [%.2f s%s]\n", c.id, c.name, pass ? "PASS" : "FAIL", o.detail.c_str(), t,
                in_time ? "" : ", over budget");
    std::fflush(stdout);
  }
  return failures ? 1 : 0;
}
