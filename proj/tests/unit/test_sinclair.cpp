#include "common.hpp"

#include "doctest.h"
#include "json.hpp"

#include <sstream>

using namespace flexbc;
using namespace flexbc::testing;

namespace {

std::vector<IterationRecord> geometric(double rate, int n) {
  std::vector<IterationRecord> out;
  for (int k = 1; k <= n; ++k) {
    IterationRecord r;
    r.k = k;
    r.fnorm_a = std::pow(rate, k);
    r.fnorm_c = 0.5 * std::pow(rate, k);
    out.push_back(r);
  }
  return out;
}

}  // namespace

TEST_CASE("dynamic alpha minimises the max norm") {
  Vec w13(2), w2m3(2);
  w13 << 1.0, -0.5;
  w2m3 << -2.0, 1.0;
  CHECK(dyn_relax_alpha(w13, w2m3) == doctest::Approx(0.5).epsilon(1e-5));
  CHECK(dyn_relax_alpha(w13, Vec::Zero(2)) == 1.0);
  w2m3 << 0.1, 0.1;  // minimiser below the bracket
  const double a = dyn_relax_alpha(w13, w2m3);
  CHECK(a > 0.0);
  CHECK(a <= 2.0);
}

TEST_CASE("rate fit") {
  const auto recs = geometric(0.3, 12);
  const auto f = fit_rate(recs, 0, 2);
  CHECK(f.fitted);
  CHECK(f.rate == doctest::Approx(0.3).epsilon(1e-10));
  CHECK(f.r2 == doctest::Approx(1.0));
  auto noisy = recs;
  for (std::size_t k = 0; k < noisy.size(); k += 2) noisy[k].fnorm_a *= 50;
  CHECK(!fit_rate(noisy, 0, 2).fitted);
  CHECK(!fit_rate(geometric(0.3, 2), 0, 2).fitted);
}

TEST_CASE("history and summary formats") {
  ConvergenceReport r;
  r.records = geometric(0.5, 3);
  r.records[1].alpha = 0.1;
  r.status = "converged";
  r.n_iter = 3;
  r.n_force = 17;
  std::ostringstream os;
  write_history_csv(os, r);
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "k,fnorm_a,fnorm_c,alpha,energy,n_force_evals");
  std::getline(in, line);
  std::getline(in, line);
  CHECK(line == "2,0.25,0.125,0.10000000000000001,0,0");
  CHECK(os.str().find('\r') == std::string::npos);

  const auto j = nlohmann::json::parse(summary_json(r));
  for (const char* key : {"status", "N_iter", "N_force", "fitted_rate", "final_energy"}) CHECK(j.contains(key));
  CHECK(j["N_iter"] == 3);
  CHECK(j["fitted_rate"] == "unfitted");
}

TEST_CASE("linear chain converges at the predicted rate") {
  Chain1d ch(6, 30, 1.0, -0.15);
  const Eigen::Index n = static_cast<Eigen::Index>(ch.d.size());
  Vec f = Vec::Zero(n);
  f[ch.d.find({0, 0})] = 0.01;
  f[ch.d.find({-2, 0})] = -0.004;
  SincSolver s(ch.sys, ch.ws, Vec::Zero(static_cast<Eigen::Index>(ch.d.o.size())), f);
  const auto T = assemble_T(ch.sys.hessian_blocks(Vec::Zero(n)), ch.sys.free_sites(), ch.ws);
  const double sigma = spectral_radius(T.Tpp()).sigma;

  SincOptions o;
  o.schedule = {{1e-13, 1e-15}};
  o.predictor = false;
  o.fit_stages = 1;
  o.fit_skip = 3;
  const auto r = s.run(o);
  REQUIRE(r.status == "converged");
  REQUIRE(r.fit.fitted);
  CHECK(r.fit.rate == doctest::Approx(sigma).epsilon(0.05));
  CHECK(r.n_iter == static_cast<int>(r.records.size()));
  CHECK(r.records.back().n_force_evals == r.n_force);

  SUBCASE("static relaxation is faster") {
    const auto opt = alpha_opt_static(T);
    SincOptions ro = o;
    ro.relax = RelaxMode::static_alpha;
    ro.alpha = opt.alpha;
    const auto rr = s.run(ro);
    CHECK(rr.status == "converged");
    CHECK(rr.n_iter < r.n_iter);
  }
  SUBCASE("the elastic guess solves the continuum equations") {
    const Vec u = s.elastic_guess();
    CHECK(s.continuum_residual(u).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("too few iterations stall") {
    SincOptions so = o;
    so.max_iter = 2;
    CHECK(s.run(so).status == "stalled");
  }
}

TEST_CASE("inhomogeneous force vanishes for equal states") {
  Chain1d ch(4, 12, 1.0, -0.1);
  const Vec u = random_vec(static_cast<Eigen::Index>(ch.d.size()), 3);
  CHECK(inhomogeneous_force(ch.h, ch.d, u, u).cwiseAbs().maxCoeff() == 0.0);
  CHECK(default_schedule().size() >= 2);
}
