#include "flexbc/minimize.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace flexbc {

namespace {

class Objective {
 public:
  Objective(const AtomisticSystem& sys, const Vec& u, const Vec& fext) : sys_(sys), u_(u) {
    fext_ = fext.size() > 0 ? gather(fext, sys.free_sites(), sys.dim()) : Vec::Zero(sys.ndof());
  }
  // Returns phi and its gradient; false if the configuration is singular.
  bool eval(const Vec& x, double& phi, Vec& g) {
    scatter(u_, sys_.free_sites(), x, sys_.dim());
    try {
      phi = sys_.energy_and_gradient(u_, g) - fext_.dot(x);
    } catch (const std::runtime_error&) {
      return false;
    }
    g -= fext_;
    return std::isfinite(phi);
  }
  const Vec& state(const Vec& x) {
    scatter(u_, sys_.free_sites(), x, sys_.dim());
    return u_;
  }

 private:
  const AtomisticSystem& sys_;
  Vec u_;
  Vec fext_;
};

double max_norm(const Vec& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

bool near_roundoff(double phi_new, double phi) {
  return phi_new - phi <= 1e-12 * (1.0 + std::abs(phi));
}

Vec newton_direction(const AtomisticSystem& sys, const Vec& u, const Vec& g) {
  const int n = sys.ndof();
  if (n <= 3000) {
    Mat H = sys.hessian_blocks(u).aa;
    double shift = 0.0;
    const double scale = std::max(1e-12, H.diagonal().cwiseAbs().maxCoeff());
    for (int attempt = 0; attempt < 30; ++attempt) {
      Eigen::LLT<Mat> llt(H + shift * Mat::Identity(n, n));
      if (llt.info() == Eigen::Success) return -llt.solve(g);
      shift = shift == 0.0 ? 1e-4 * scale : 4.0 * shift;
    }
    return -g;
  }
  SpMat H = sys.hessian_sparse(u);
  SpMat I(n, n);
  I.setIdentity();
  double shift = 0.0;
  double scale = 0.0;
  for (int k = 0; k < n; ++k) scale = std::max(scale, std::abs(H.coeff(k, k)));
  Eigen::SimplicialLLT<SpMat> llt;
  llt.analyzePattern(H);
  for (int attempt = 0; attempt < 30; ++attempt) {
    llt.factorize(SpMat(H + shift * I));
    if (llt.info() == Eigen::Success) return -llt.solve(g);
    shift = shift == 0.0 ? 1e-4 * scale : 4.0 * shift;
  }
  return -g;
}

MinimizeResult run_newton(const AtomisticSystem& sys, Vec& u, const Vec& fext, double tol,
                          const MinimizeOptions& opts) {
  MinimizeResult res;
  const long start = sys.force_evals();
  Objective obj(sys, u, fext);
  Vec x = gather(u, sys.free_sites(), sys.dim());
  Vec g;
  double phi = 0;
  if (!obj.eval(x, phi, g)) throw std::runtime_error("singular configuration");
  for (res.iterations = 0; res.iterations < opts.max_iter; ++res.iterations) {
    res.fnorm = max_norm(g);
    if (res.fnorm < tol) {
      res.converged = true;
      break;
    }
    Vec s = newton_direction(sys, obj.state(x), g);
    double slope = g.dot(s);
    if (!(slope < 0.0)) {
      s = -g;
      slope = -g.squaredNorm();
    }
    double t = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls, t *= 0.5) {
      const Vec xt = x + t * s;
      double pt = 0;
      Vec gt;
      if (!obj.eval(xt, pt, gt)) continue;
      if (pt <= phi + 1e-4 * t * slope || (max_norm(gt) < res.fnorm && near_roundoff(pt, phi))) {
        x = xt;
        phi = pt;
        g = gt;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  res.fnorm = max_norm(g);
  res.converged = res.fnorm < tol;
  u = obj.state(x);
  res.force_evals = sys.force_evals() - start;
  return res;
}

// Strong-Wolfe line search (bracketing + zoom by bisection/interpolation).
struct LineSearch {
  Objective& obj;
  const Vec& x;
  const Vec& d;
  double phi0, dphi0;
  double c1 = 1e-4, c2 = 0.1;

  bool at(double t, double& p, double& dp, Vec& g) {
    if (!obj.eval(x + t * d, p, g)) return false;
    dp = g.dot(d);
    return true;
  }
  bool flat(double p, double ref) const { return std::abs(p - ref) <= 1e-12 * (1.0 + std::abs(ref)); }
  // Armijo, or its derivative form once energy differences drown in roundoff.
  bool decrease(double t, double p, double dp) const {
    return p <= phi0 + c1 * t * dphi0 || (flat(p, phi0) && dp <= (2.0 * c1 - 1.0) * dphi0);
  }

  bool run(double t1, double& t_out, double& p_out, Vec& g_out) {
    double t_prev = 0.0, p_prev = phi0, dp_prev = dphi0;
    double t = t1;
    for (int it = 0; it < 30; ++it) {
      double p, dp;
      Vec g;
      if (!at(t, p, dp, g)) {
        t = 0.5 * (t_prev + t);
        continue;
      }
      if (!decrease(t, p, dp) || (it > 0 && p >= p_prev && !flat(p, p_prev)))
        return zoom(t_prev, p_prev, dp_prev, t, p, dp, t_out, p_out, g_out);
      if (std::abs(dp) <= -c2 * dphi0) {
        t_out = t, p_out = p, g_out = g;
        return true;
      }
      if (dp >= 0) return zoom(t, p, dp, t_prev, p_prev, dp_prev, t_out, p_out, g_out);
      t_prev = t, p_prev = p, dp_prev = dp;
      t *= 2.0;
    }
    return false;
  }

  bool zoom(double lo, double plo, double dplo, double hi, double phi_hi, double dphi_hi,
            double& t_out, double& p_out, Vec& g_out) {
    for (int it = 0; it < 40; ++it) {
      // Cubic interpolation, safeguarded toward bisection.
      double t;
      const double d1 = dplo + dphi_hi - 3.0 * (plo - phi_hi) / (lo - hi);
      const double disc = d1 * d1 - dplo * dphi_hi;
      if (disc >= 0) {
        const double d2 = std::copysign(std::sqrt(disc), hi - lo);
        t = hi - (hi - lo) * (dphi_hi + d2 - d1) / (dphi_hi - dplo + 2.0 * d2);
      } else {
        t = 0.5 * (lo + hi);
      }
      const double a = std::min(lo, hi), b = std::max(lo, hi);
      if (!(t > a + 0.1 * (b - a) && t < b - 0.1 * (b - a))) t = 0.5 * (lo + hi);
      double p, dp;
      Vec g;
      if (!at(t, p, dp, g)) {
        hi = t, phi_hi = 1e300, dphi_hi = 0;
        continue;
      }
      if (!decrease(t, p, dp) || (p >= plo && !flat(p, plo))) {
        hi = t, phi_hi = p, dphi_hi = dp;
      } else {
        if (std::abs(dp) <= -c2 * dphi0) {
          t_out = t, p_out = p, g_out = g;
          return true;
        }
        if (dp * (hi - lo) >= 0) hi = lo, phi_hi = plo, dphi_hi = dplo;
        lo = t, plo = p, dplo = dp;
      }
      if (std::abs(hi - lo) < 1e-16 * std::max(1.0, std::abs(lo))) break;
    }
    // Accept the best point found if it decreases the objective.
    double p, dp;
    Vec g;
    if (lo > 0 && at(lo, p, dp, g) && p <= phi0) {
      t_out = lo, p_out = p, g_out = g;
      return true;
    }
    return false;
  }
};

MinimizeResult run_cg(const AtomisticSystem& sys, Vec& u, const Vec& fext, double tol,
                      const MinimizeOptions& opts) {
  MinimizeResult res;
  const long start = sys.force_evals();
  Objective obj(sys, u, fext);
  Vec x = gather(u, sys.free_sites(), sys.dim());
  Vec g;
  double phi = 0;
  if (!obj.eval(x, phi, g)) throw std::runtime_error("singular configuration");
  Vec d = -g;
  double t_guess = 1.0 / std::max(1.0, max_norm(g));
  for (res.iterations = 0; res.iterations < opts.max_iter; ++res.iterations) {
    res.fnorm = max_norm(g);
    if (res.fnorm < tol) break;
    double slope = g.dot(d);
    if (!(slope < 0)) {
      d = -g;
      slope = -g.squaredNorm();
    }
    LineSearch ls{obj, x, d, phi, slope};
    double t = 0, pn = 0;
    Vec gn;
    if (!ls.run(t_guess, t, pn, gn)) {
      if (d.dot(-g) == g.squaredNorm()) break;  // already steepest descent
      d = -g;
      continue;
    }
    x += t * d;
    const double beta = std::max(0.0, gn.dot(gn - g) / g.squaredNorm());
    d = -gn + beta * d;
    const double new_slope = gn.dot(d);
    t_guess = new_slope < 0 ? t * std::clamp(slope / new_slope, 0.1, 10.0) : t;
    g = gn;
    phi = pn;
  }
  res.fnorm = max_norm(g);
  res.converged = res.fnorm < tol;
  u = obj.state(x);
  res.force_evals = sys.force_evals() - start;
  return res;
}

}  // namespace

MinimizeResult minimize_atomistic(const AtomisticSystem& sys, Vec& u, const Vec& fext, double tol,
                                  const MinimizeOptions& opts) {
  if (!(tol > 0)) throw std::invalid_argument("minimize: tolerance must be positive");
  if (sys.ndof() == 0) return {true, 0, 0.0, 0};
  return opts.method == MinimizerKind::newton ? run_newton(sys, u, fext, tol, opts)
                                              : run_cg(sys, u, fext, tol, opts);
}

}  // namespace flexbc
