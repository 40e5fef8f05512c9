#include "flexbc/sinclair.hpp"

#include "json.hpp"
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace flexbc {

namespace {

double max_norm(const Vec& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

IndexSet nonzero_sites(const Vec& global, int dim) {
  IndexSet out;
  const int n = static_cast<int>(global.size()) / dim;
  for (int k = 0; k < n; ++k)
    if (!global.segment(static_cast<Eigen::Index>(k) * dim, dim).isZero(0.0)) out.push_back(k);
  return out;
}

// Local positions of `sub` inside the sorted set `in` (every element must be present).
std::vector<int> positions(const IndexSet& in, const IndexSet& sub) {
  std::vector<int> pos;
  pos.reserve(sub.size());
  for (int id : sub) {
    auto it = std::lower_bound(in.begin(), in.end(), id);
    if (it == in.end() || *it != id) throw std::logic_error("positions: missing site");
    pos.push_back(static_cast<int>(it - in.begin()));
  }
  return pos;
}

Vec pick(const Vec& v, const std::vector<int>& pos, int dim) {
  Vec out(static_cast<Eigen::Index>(pos.size()) * dim);
  for (std::size_t k = 0; k < pos.size(); ++k)
    out.segment(static_cast<Eigen::Index>(k) * dim, dim) =
        v.segment(static_cast<Eigen::Index>(pos[k]) * dim, dim);
  return out;
}

}  // namespace

ToleranceSchedule default_schedule() {
  ToleranceSchedule s;
  for (int e = 0; e <= 7; ++e) s.emplace_back(std::pow(10.0, -e), std::pow(10.0, -e - 2));
  return s;
}

Vec inhomogeneous_force(const HarmonicStencil& h, const DomainDecomposition& d, const Vec& u_new,
                        const Vec& u_old) {
  const int dm = d.dim();
  const Vec du = gather(u_new - u_old, d.a, dm);
  return stencil_block(h.K, d, d.ip, d.a) * du;
}

double dyn_relax_alpha(const Vec& w13, const Vec& w2m3) {
  if (w2m3.size() == 0 || max_norm(w2m3) == 0.0) return 1.0;
  auto h = [&](double a) { return max_norm(w13 + a * w2m3); };
  constexpr int kGrid = 64;
  double best_a = 1.0, best = h(1.0);
  for (int j = 1; j <= kGrid; ++j) {
    const double a = 2.0 * j / kGrid;
    const double v = h(a);
    if (v < best) best = v, best_a = a;
  }
  // Golden-section refinement around the best grid point (objective is convex).
  double lo = std::max(1e-12, best_a - 2.0 / kGrid), hi = std::min(2.0, best_a + 2.0 / kGrid);
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
  double f1 = h(x1), f2 = h(x2);
  while (hi - lo > 1e-6) {
    if (f1 <= f2) {
      hi = x2, x2 = x1, f2 = f1;
      x1 = hi - gr * (hi - lo), f1 = h(x1);
    } else {
      lo = x1, x1 = x2, f1 = f2;
      x2 = lo + gr * (hi - lo), f2 = h(x2);
    }
  }
  const double a = 0.5 * (lo + hi);
  const double fa = h(a);
  if (fa < best) best = fa, best_a = a;
  const double scale = std::max(1e-300, max_norm(w13) + max_norm(w2m3));
  if (h(1.0) <= best + 1e-12 * scale) return 1.0;
  return best_a;
}

RateFit fit_rate(const std::vector<IterationRecord>& records, int first_stage, int skip) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& r : records) {
    const double res = std::max(r.fnorm_a, r.fnorm_c);
    if (r.stage >= first_stage && r.k >= skip && res > 0) pts.emplace_back(r.k, std::log(res));
  }
  if (pts.size() < 3) {
    pts.clear();
    const std::size_t n = records.size();
    for (std::size_t j = n >= 3 ? n - 3 : 0; j < n; ++j) {
      const double res = std::max(records[j].fnorm_a, records[j].fnorm_c);
      if (res > 0) pts.emplace_back(records[j].k, std::log(res));
    }
  }
  RateFit fit;
  fit.points = static_cast<int>(pts.size());
  if (pts.size() < 3) return fit;
  double sx = 0, sy = 0;
  for (auto [x, y] : pts) sx += x, sy += y;
  const double n = static_cast<double>(pts.size());
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (auto [x, y] : pts) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
    syy += (y - my) * (y - my);
  }
  const double slope = sxy / sxx;
  fit.rate = std::exp(slope);
  fit.r2 = syy > 0 ? sxy * sxy / (sxx * syy) : 1.0;
  fit.fitted = fit.r2 > 0.98;
  return fit;
}

SincSolver::SincSolver(const AtomisticSystem& atoms, const DbemWorkspace& ws, Vec ubar_o, Vec f_ext)
    : atoms_(atoms), ws_(ws), ubar_o_(std::move(ubar_o)), fext_(std::move(f_ext)) {
  const auto& d = ws.decomposition();
  const int dm = d.dim();
  if (fext_.size() == 0) fext_ = Vec::Zero(static_cast<Eigen::Index>(d.size()) * dm);
  if (ubar_o_.size() == 0) ubar_o_ = Vec::Zero(static_cast<Eigen::Index>(d.o.size()) * dm);
  fext_support_ = nonzero_sites(fext_, dm);
  for (int id : fext_support_)
    if (!set_contains(d.l, id)) throw std::invalid_argument("external force outside the domain");

  IndexSet all_sites(d.size());
  for (std::size_t k = 0; k < d.size(); ++k) all_sites[k] = static_cast<int>(k);
  ip_nbhd_ = neighbours_of(d, d.ip, all_sites, d.r_h);
  ip_nbhd_ = set_union(ip_nbhd_, d.ip);
  L_ip_ = stencil_block(ws.stencil().K, d, d.ip, ip_nbhd_);

  IndexSet tracked = set_union(d.p, d.ip);
  tracked = set_union(tracked, set_difference(ip_nbhd_, d.a));
  if (!ws.infinite()) tracked = set_union(tracked, d.o);
  tracked_ = set_difference(tracked, d.a);
  targets_ = ws.prepare(tracked_);
}

Vec SincSolver::continuum_residual(const Vec& u) const {
  const int dm = ws_.decomposition().dim();
  return L_ip_ * gather(u, ip_nbhd_, dm) - gather(fext_, ws_.decomposition().ip, dm);
}

Vec SincSolver::elastic_guess() const {
  const auto& d = ws_.decomposition();
  const int dm = d.dim();
  Vec u = Vec::Zero(static_cast<Eigen::Index>(d.size()) * dm);
  const Vec r = gather(fext_, fext_support_, dm);
  scatter(u, d.lb, ws_.solve(d.lb, ubar_o_, fext_support_, r), dm);
  return u;
}

ConvergenceReport SincSolver::run(const SincOptions& opts) const {
  const auto& d = ws_.decomposition();
  const int dm = d.dim();
  if (opts.schedule.empty()) throw std::invalid_argument("sinc: empty tolerance schedule");
  for (std::size_t s = 1; s < opts.schedule.size(); ++s)
    if (!(opts.schedule[s].first < opts.schedule[s - 1].first &&
          opts.schedule[s].second < opts.schedule[s - 1].second))
      throw std::invalid_argument("sinc: schedule must be strictly decreasing");
  if (opts.relax == RelaxMode::static_alpha && !(opts.alpha > 0 && opts.alpha < 2))
    throw std::invalid_argument("sinc: static alpha must lie in (0, 2)");

  ConvergenceReport rep;
  const long evals0 = atoms_.force_evals();
  const Vec zero_o = Vec::Zero(static_cast<Eigen::Index>(d.o.size()) * dm);
  const Vec ubar = ubar_o_;

  Vec u = Vec::Zero(static_cast<Eigen::Index>(d.size()) * dm);
  // Accumulated DBEM data, for reconstructing u on all of Λ^c at the end.
  Vec acc_force_ip = Vec::Zero(static_cast<Eigen::Index>(d.ip.size()) * dm);
  Vec u0 = u;
  if (opts.use_initial_guess) {
    u = elastic_guess();
    u0 = u;
  } else {
    const IndexSet fc = set_difference(fext_support_, d.a);
    if (!fc.empty()) {
      const IndexSet cx = set_difference(tracked_, d.o);
      scatter(u, cx, green_apply(ws_.green(), d, cx, fc, gather(fext_, fc, dm)), dm);
      u0 = u;
    }
  }

  const auto p_in_tracked = positions(tracked_, d.p);
  const IndexSet& free = atoms_.free_sites();
  const auto i_in_free = positions(free, d.i);
  const SpMat L_i_p = stencil_block(ws_.stencil().K, d, d.i, d.p);
  const SpMat L_ip_p = stencil_block(ws_.stencil().K, d, d.ip, d.p);
  const SpMat L_ip_i = stencil_block(ws_.stencil().K, d, d.ip, d.i);

  double alpha = opts.relax == RelaxMode::static_alpha ? opts.alpha : 1.0;
  LinearizedBlocks frozen;
  Eigen::LDLT<Mat> frozen_ldlt;
  if (opts.relax == RelaxMode::dynamic && opts.dyn == DynVariant::freeze_hessian) {
    frozen = atoms_.hessian_blocks(u);
    frozen_ldlt.compute(frozen.aa);
  }
  Vec predicted_da;  // predictor for the next inner minimisation

  int stage = 0;
  int rises = 0;
  double prev_res = std::numeric_limits<double>::infinity();
  int prev_stage = -1;
  const int last = static_cast<int>(opts.schedule.size()) - 1;
  const double final_tol = opts.schedule.back().first;
  for (int k = 0; k < opts.max_iter; ++k) {
    const auto [tol, tol_a] = opts.schedule[stage];
    const int stage_used = stage;
    if (predicted_da.size()) {
      Vec trial = u;
      scatter_add(trial, free, predicted_da, dm);
      u = trial;
    }
    MinimizeResult mr;
    try {
      mr = minimize_atomistic(atoms_, u, fext_, tol_a, opts.inner);
    } catch (const std::exception& e) {
      spdlog::warn("sinc: atomistic solve failed at k={}: {}", k, e.what());
      rep.status = "stalled";
      break;
    }
    if (!mr.converged) {
      spdlog::warn("sinc: atomistic solve did not reach {} at k={} (|f|={})", tol_a, k, mr.fnorm);
      rep.status = "stalled";
      break;
    }
    const Vec f_inh = continuum_residual(u);
    const Vec g_o = ws_.infinite() ? zero_o : Vec(ubar - gather(u, d.o, dm));
    const Vec du = ws_.solve(targets_, g_o, d.ip, -alpha * f_inh);
    acc_force_ip -= alpha * f_inh;
    const double alpha_used = alpha;

    if (opts.relax == RelaxMode::dynamic) {
      const Vec dp = pick(du, p_in_tracked, dm);
      LinearizedBlocks fresh;
      const LinearizedBlocks* blocks = &frozen;
      Eigen::LDLT<Mat> fresh_ldlt;
      const Eigen::LDLT<Mat>* ldlt = &frozen_ldlt;
      if (opts.dyn == DynVariant::refresh_hessian) {
        fresh = atoms_.hessian_blocks(u);
        fresh_ldlt.compute(fresh.aa);
        blocks = &fresh;
        ldlt = &fresh_ldlt;
      }
      const Vec y = ldlt->solve(blocks->ap * dp);  // (L^{aa})^{-1} L^{a|p} dp
      const Vec w1 = pick(ws_.solve(targets_, zero_o, d.i, L_i_p * dp), p_in_tracked, dm);
      const Vec w3 = pick(ws_.solve(targets_, zero_o, d.ip, L_ip_p * dp), p_in_tracked, dm);
      const Vec w2 =
          pick(ws_.solve(targets_, zero_o, d.ip, L_ip_i * pick(y, i_in_free, dm)), p_in_tracked, dm);
      alpha = dyn_relax_alpha(w1 + w3, w2 - w3);
      if (opts.predictor) predicted_da = -y;
    }
    scatter_add(u, tracked_, du, dm);

    IterationRecord rec;
    rec.k = k + 1;
    rec.alpha = alpha_used;
    rec.stage = stage_used;
    rec.fnorm_a = max_norm(atoms_.forces(u, &fext_));
    rec.fnorm_c = max_norm(continuum_residual(u));
    rec.energy = atoms_.energy(u) - gather(fext_, free, dm).dot(gather(u, free, dm));
    rec.n_force_evals = atoms_.force_evals() - evals0;
    rep.records.push_back(rec);
    if (opts.on_iterate) opts.on_iterate(rec.k, u);
    spdlog::debug("sinc k={} |dEa|={:.3e} |dEc|={:.3e} alpha={:.4f} evals={}", rec.k, rec.fnorm_a,
                  rec.fnorm_c, rec.alpha, rec.n_force_evals);

    const double res = std::max(rec.fnorm_a, rec.fnorm_c);
    if (!std::isfinite(res)) {
      rep.status = "diverged";
      break;
    }
    if (rec.fnorm_a < final_tol && rec.fnorm_c < final_tol) {
      rep.status = "converged";
      break;
    }
    if (stage_used == prev_stage && res > prev_res) {
      if (++rises >= opts.divergence_window) {
        rep.status = "diverged";
        break;
      }
    } else {
      rises = 0;
    }
    prev_res = res;
    prev_stage = stage_used;
    while (stage < last && rec.fnorm_a < opts.schedule[stage].first &&
           rec.fnorm_c < opts.schedule[stage].first)
      ++stage;
  }

  if (opts.reconstruct_continuum) {
    const IndexSet cx = set_difference(d.lb, d.a);
    const Vec g_o = ws_.infinite() ? zero_o : Vec(ubar - gather(u0, d.o, dm));
    Vec uc = gather(u0, cx, dm) + ws_.solve(cx, g_o, d.ip, acc_force_ip);
    scatter(u, cx, uc, dm);
  }
  rep.u = std::move(u);
  rep.n_iter = static_cast<int>(rep.records.size());
  rep.n_force = atoms_.force_evals() - evals0;
  rep.final_energy = rep.records.empty() ? 0.0 : rep.records.back().energy;
  rep.fit = fit_rate(rep.records, std::max(0, last - opts.fit_stages + 1), opts.fit_skip);
  return rep;
}

void write_history_csv(std::ostream& os, const ConvergenceReport& r) {
  os << "k,fnorm_a,fnorm_c,alpha,energy,n_force_evals\n";
  char buf[256];
  for (const auto& rec : r.records) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g,%ld\n", rec.k, rec.fnorm_a, rec.fnorm_c,
                  rec.alpha, rec.energy, rec.n_force_evals);
    os << buf;
  }
}

std::string summary_json(const ConvergenceReport& r) {
  nlohmann::ordered_json j;
  j["status"] = r.status;
  j["N_iter"] = r.n_iter;
  j["N_force"] = r.n_force;
  if (r.fit.fitted)
    j["fitted_rate"] = r.fit.rate;
  else
    j["fitted_rate"] = "unfitted";
  j["final_energy"] = r.final_energy;
  j["fit_r2"] = r.fit.r2;
  return j.dump(2) + "\n";
}

}  // namespace flexbc
