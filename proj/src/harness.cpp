#include "flexbc/harness.hpp"

#include "flexbc/minimize.hpp"

#include "json.hpp"
#include <spdlog/spdlog.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <stdexcept>

namespace flexbc {

namespace {

constexpr double kSlack = 1e-9;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Plane isotropic Kelvin solution with lambda, mu read off the elastic tensor; ln(r / ell).
Mat2 kelvin_kernel(const HarmonicStencil& h, const Vec2& x, double ell) {
  const double lambda = h.C[3];  // C_xxyy
  const double mu = h.C[5];      // C_xyxy
  const double r = x.norm();
  if (r == 0.0) throw std::invalid_argument("kelvin kernel at the origin");
  const double pre = 1.0 / (4.0 * std::numbers::pi * mu * (lambda + 2.0 * mu));
  const Vec2 n = x / r;
  return pre * (-(lambda + 3.0 * mu) * std::log(r / ell) * Mat2::Identity() +
                (lambda + mu) * n * n.transpose());
}

const DefectSpec& defect_of(const ExperimentSpec& spec, DefectSpec& storage) {
  if (spec.kind == ExperimentKind::microcrack && spec.default_defect) {
    storage = microcrack_pattern();
    return storage;
  }
  return spec.defect;
}

}  // namespace

DefectSpec microcrack_pattern() {
  DefectSpec d;
  for (int i = -3; i <= 1; ++i) d.vacancies.push_back({i, 0});
  for (int i = -2; i <= 0; ++i) d.vacancies.push_back({i, 1});
  return d;
}

DomainDecomposition experiment_domain(const ExperimentSpec& spec, bool infinite) {
  if (!(spec.r_a > 0)) throw std::invalid_argument("r_a must be positive");
  if (!infinite && !(spec.r > spec.r_a)) throw std::invalid_argument("r must exceed r_a");
  const double ell = morse_equilibrium_spacing(spec.morse, spec.shells);
  const auto basis = BravaisBasis::hexagonal(ell);
  const double r_cut = basis.shell_radii(spec.shells).back();
  const double r_a = spec.r_a * ell;
  const double r = infinite ? r_a + 2.0 * ell + r_cut : spec.r * ell;
  DomainDecomposition d = decompose(build_disc_domain(basis, r), basis, r, r_a, r_cut);
  DefectSpec storage;
  const DefectSpec& defect = defect_of(spec, storage);
  if (!defect.vacancies.empty()) d = remove_defect_atoms(std::move(d), defect);
  return d;
}

Setup2d::Setup2d(const ExperimentSpec& spec, bool linear, bool infinite) {
  ell = morse_equilibrium_spacing(spec.morse, spec.shells);
  if (std::abs(ell - spec.ell) > 1e-3 * spec.ell)
    spdlog::warn("stress-free lattice constant {:.6f} differs from the configured ell {:.6f}", ell,
                 spec.ell);
  basis = BravaisBasis::hexagonal(ell);
  morse = AtomisticModel::morse2d(spec.morse, basis, spec.shells);
  model = linear ? AtomisticModel::quadratic(morse.ground_state_stencil(), basis) : morse;
  h = build_harmonic_stencil(morse);
  d = experiment_domain(spec, infinite);
  g = gf_2d_table(h, basis, max_separation(d), spec.gf);
  ws = std::make_unique<DbemWorkspace>(d, h, g, infinite);
  sys = std::make_unique<AtomisticSystem>(model, d);
}

bool ExperimentResult::ok() const {
  for (const auto& r : runs)
    if (r.report.status != "converged") return false;
  return true;
}

const VariantResult* ExperimentResult::find(const std::string& variant) const {
  for (const auto& r : runs)
    if (r.name == variant) return &r;
  return nullptr;
}

double core_energy(const AtomisticSystem& sys, const Vec& u, double r_core_abs) {
  const auto& d = sys.decomposition();
  IndexSet core;
  for (int id : sys.free_sites())
    if (d.sites[id].x.norm() <= r_core_abs * (1.0 + kSlack)) core.push_back(id);
  return sys.region_energy(u, core);
}

ExperimentResult run_point_force(const ExperimentSpec& spec) {
  const auto t0 = std::chrono::steady_clock::now();
  Setup2d s(spec, true, false);
  const auto& d = s.d;
  ExperimentResult res;
  res.name = spec.name;
  res.kind = spec.kind;
  res.n_atomistic = static_cast<int>(s.sys->free_sites().size());

  const int origin = d.find({0, 0});
  if (origin < 0 || !set_contains(d.a, origin)) throw std::invalid_argument("origin outside Λ^a");
  const Vec2 F(spec.load * spec.morse.D * spec.morse.a, 0.0);
  Vec f = Vec::Zero(static_cast<Eigen::Index>(d.size()) * 2);
  f.segment<2>(2 * origin) = F;

  Vec ubar = Vec::Zero(static_cast<Eigen::Index>(d.o.size()) * 2);
  for (std::size_t k = 0; k < d.o.size(); ++k) {
    const auto& site = d.sites[d.o[k]];
    if (spec.boundary == OuterBoundary::lattice_gf)
      ubar.segment<2>(2 * static_cast<Eigen::Index>(k)) = s.g.at(site.n) * F;
    else if (spec.boundary == OuterBoundary::continuum_log)
      ubar.segment<2>(2 * static_cast<Eigen::Index>(k)) = kelvin_kernel(s.h, site.x, s.ell) * F;
  }

  const Vec zero = Vec::Zero(static_cast<Eigen::Index>(d.size()) * 2);
  const auto T = assemble_T(s.sys->hessian_blocks(zero), s.sys->free_sites(), *s.ws);
  const auto info = spectral_radius(T.Tpp());
  const auto opt = alpha_opt_static(T);
  res.sigma = info.sigma;
  res.kappa = info.kappa;
  res.sigma_opt = opt.sigma;
  res.alpha_opt = opt.alpha;
  spdlog::info("{}: sigma={:.6f} sigma_opt={:.6f} alpha_opt={:.6f}", spec.name, res.sigma,
               res.sigma_opt, res.alpha_opt);

  SincSolver solver(*s.sys, *s.ws, ubar, f);
  const std::vector<std::string> variants =
      spec.variants.empty() ? std::vector<std::string>{"sinc", "relax"} : spec.variants;
  for (const auto& v : variants) {
    SincOptions o = spec.opts;
    VariantResult vr;
    vr.name = v;
    if (v == "relax") {
      o.relax = RelaxMode::static_alpha;
      o.alpha = opt.alpha;
      vr.alpha = opt.alpha;
    } else if (v != "sinc") {
      throw std::invalid_argument("point force variant must be sinc or relax: " + v);
    }
    vr.report = solver.run(o);
    spdlog::info("{}/{}: {} after {} iterations, rate {:.6f}", spec.name, v, vr.report.status,
                 vr.report.n_iter, vr.report.fit.rate);
    res.runs.push_back(std::move(vr));
  }

  // Morse energy along the load path t * u must be quadratic in t: the quadratic through
  // t = 0, 1/3, 2/3 predicts t = 1.
  if (!res.runs.empty()) {
    AtomisticSystem full(s.morse, d);
    const Vec& u = res.runs.front().report.u;
    double e[4];
    for (int q = 0; q < 4; ++q) e[q] = full.energy((q / 3.0) * u);
    const double predicted = e[0] - 3.0 * e[1] + 3.0 * e[2];
    const double scale = std::abs(e[3] - e[0]);
    if (scale > 0 && std::abs(e[3] - predicted) > 1e-2 * scale) {
      res.warnings.push_back("nonlinearity above 1% along the load path");
      spdlog::warn("{}: Morse energy is not quadratic along the load path", spec.name);
    }
  }
  res.seconds = seconds_since(t0);
  return res;
}

ReferenceResult run_reference(const ExperimentSpec& spec, double r_core) {
  const double ell = morse_equilibrium_spacing(spec.morse, spec.shells);
  const auto basis = BravaisBasis::hexagonal(ell);
  const auto model = AtomisticModel::morse2d(spec.morse, basis, spec.shells);
  const double rad = spec.r_ref * ell;
  const double r = rad + model.r_cut + ell;
  DomainDecomposition d = decompose(build_disc_domain(basis, r), basis, r, rad, model.r_cut);
  DefectSpec storage;
  const DefectSpec& defect = defect_of(spec, storage);
  if (!defect.vacancies.empty()) d = remove_defect_atoms(std::move(d), defect);
  AtomisticSystem sys(model, d);
  ReferenceResult out;
  out.atoms = static_cast<int>(sys.free_sites().size());
  out.u = Vec::Zero(static_cast<Eigen::Index>(d.size()) * 2);
  MinimizeOptions mo = spec.opts.inner;
  const auto mr = minimize_atomistic(sys, out.u, Vec(), spec.ref_tol, mo);
  out.converged = mr.converged;
  out.force_evals = mr.force_evals;
  if (!mr.converged) throw std::runtime_error("reference minimisation stalled");
  out.energy = core_energy(sys, out.u, r_core * ell);
  spdlog::info("reference r={}: {} atoms, {} force evaluations", spec.r_ref, out.atoms,
               out.force_evals);
  return out;
}

ExperimentResult run_microcrack(const ExperimentSpec& spec) {
  const auto t0 = std::chrono::steady_clock::now();
  Setup2d s(spec, false, true);
  ExperimentResult res;
  res.name = spec.name;
  res.kind = spec.kind;
  res.n_atomistic = static_cast<int>(s.sys->free_sites().size());

  SincSolver solver(*s.sys, *s.ws, Vec(), Vec());
  const std::vector<std::string> variants =
      spec.variants.empty() ? std::vector<std::string>{"sinc", "dyn1", "dyn2"} : spec.variants;
  for (const auto& v : variants) {
    SincOptions o = spec.opts;
    if (v == "dyn1" || v == "dyn2") {
      o.relax = RelaxMode::dynamic;
      o.dyn = v == "dyn1" ? DynVariant::freeze_hessian : DynVariant::refresh_hessian;
    } else if (v != "sinc") {
      throw std::invalid_argument("microcrack variant must be sinc, dyn1 or dyn2: " + v);
    }
    VariantResult vr;
    vr.name = v;
    vr.report = solver.run(o);
    spdlog::info("{}/{}: {} after {} iterations ({} force evaluations)", spec.name, v,
                 vr.report.status, vr.report.n_iter, vr.report.n_force);
    res.runs.push_back(std::move(vr));
  }

  const VariantResult* base = nullptr;
  for (const auto& r : res.runs)
    if (r.report.status == "converged") {
      base = &r;
      break;
    }
  if (base) {
    const Vec& u = base->report.u;
    const auto T = assemble_T(s.sys->hessian_blocks(u), s.sys->free_sites(), *s.ws);
    const auto info = spectral_radius(T.Tpp());
    const auto opt = alpha_opt_static(T);
    res.sigma = info.sigma;
    res.kappa = info.kappa;
    res.sigma_opt = opt.sigma;
    res.alpha_opt = opt.alpha;
    res.energy = core_energy(*s.sys, u, spec.r_a * s.ell);
    spdlog::info("{}: sigma_as={:.4f} sigma_as_opt={:.4f}", spec.name, res.sigma, res.sigma_opt);
  }

  if (spec.reference && base) {
    const auto ref = run_reference(spec, spec.r_a);
    res.energy_ref = ref.energy;
    res.energy_error = std::abs(ref.energy - res.energy);
    res.ref_atoms = ref.atoms;
    res.ref_force_evals = ref.force_evals;
    const VariantResult* dyn = res.find("dyn1");
    if (!dyn) dyn = base;
    if (dyn->report.n_force > 0)
      res.cost_ratio = static_cast<double>(ref.atoms) * static_cast<double>(ref.force_evals) /
                       (static_cast<double>(res.n_atomistic) * static_cast<double>(dyn->report.n_force));
  }
  res.seconds = seconds_since(t0);
  return res;
}

ExperimentResult run_fig5_scan(const ExperimentSpec& spec) {
  const auto t0 = std::chrono::steady_clock::now();
  if (spec.scan_points < 1) throw std::invalid_argument("scan needs at least one point");
  ExperimentResult res;
  res.name = spec.name;
  res.kind = spec.kind;
  res.n_atomistic = 2 * spec.scan_M + 1;
  // Half-open interval (lo, hi].
  std::vector<double> ratios;
  for (int j = 1; j <= spec.scan_points; ++j)
    ratios.push_back(spec.scan_lo + (spec.scan_hi - spec.scan_lo) * j / spec.scan_points);
  res.curve = stab1d_scan(spec.scan_M, spec.scan_k1, ratios);
  res.seconds = seconds_since(t0);
  return res;
}

ExperimentResult run_experiment(const ExperimentSpec& spec) {
  switch (spec.kind) {
    case ExperimentKind::point_force:
      return run_point_force(spec);
    case ExperimentKind::microcrack:
      return run_microcrack(spec);
    case ExperimentKind::fig5:
      return run_fig5_scan(spec);
  }
  throw std::logic_error("unknown experiment kind");
}

const std::vector<int>& stab1d_suite_M() {
  static const std::vector<int> m = {2, 3, 5, 7, 10};
  return m;
}

const std::vector<double>& stab1d_suite_k2() {
  static const std::vector<double> k = {-0.02, -0.06, -0.1, -0.15, -0.2};
  return k;
}

std::vector<VerifyReport> run_stab1d_suite() {
  std::vector<VerifyReport> out;
  for (int M : stab1d_suite_M())
    for (double k2 : stab1d_suite_k2()) out.push_back(verify_1d_theory(M, 1.0, k2));
  return out;
}

std::string to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::point_force:
      return "point_force";
    case ExperimentKind::microcrack:
      return "microcrack";
    case ExperimentKind::fig5:
      return "fig5";
  }
  return "?";
}

std::string to_string(OuterBoundary b) {
  switch (b) {
    case OuterBoundary::zero:
      return "zero";
    case OuterBoundary::lattice_gf:
      return "lattice_gf";
    case OuterBoundary::continuum_log:
      return "continuum_log";
  }
  return "?";
}

void write_curve_csv(std::ostream& os, const std::vector<ScanPoint>& pts) {
  os << "k2_over_k1,sigma,sigma_opt,alpha_opt,stable_flag\n";
  char buf[256];
  for (const auto& p : pts) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%d\n", p.ratio, p.sigma, p.sigma_opt,
                  p.alpha_opt, p.stable ? 1 : 0);
    os << buf;
  }
}

namespace {

nlohmann::ordered_json number_or_null(double v) {
  return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr);
}

}  // namespace

std::string result_json(const ExperimentResult& r) {
  nlohmann::ordered_json j;
  j["name"] = r.name;
  j["kind"] = to_string(r.kind);
  // Headline fields mirror the first variant.
  if (!r.runs.empty()) {
    const auto summary = nlohmann::ordered_json::parse(summary_json(r.runs.front().report));
    for (auto it = summary.begin(); it != summary.end(); ++it) j[it.key()] = it.value();
  } else {
    j["status"] = "converged";
  }
  j["n_atomistic"] = r.n_atomistic;
  j["sigma"] = number_or_null(r.sigma);
  j["sigma_opt"] = number_or_null(r.sigma_opt);
  j["alpha_opt"] = number_or_null(r.alpha_opt);
  j["kappa"] = number_or_null(r.kappa);
  j["energy"] = number_or_null(r.energy);
  j["energy_ref"] = number_or_null(r.energy_ref);
  j["energy_error"] = number_or_null(r.energy_error);
  j["ref_atoms"] = r.ref_atoms;
  j["ref_force_evals"] = r.ref_force_evals;
  j["cost_ratio"] = number_or_null(r.cost_ratio);
  nlohmann::ordered_json vs = nlohmann::ordered_json::object();
  for (const auto& v : r.runs) {
    auto s = nlohmann::ordered_json::parse(summary_json(v.report));
    s["alpha"] = v.alpha;
    vs[v.name] = s;
  }
  j["variants"] = vs;
  j["warnings"] = r.warnings;
  j["seconds"] = r.seconds;
  return j.dump(2) + "\n";
}

}  // namespace flexbc
