#include "common.hpp"

#include "flexbc/config.hpp"

#include "doctest.h"
#include "json.hpp"

#include <sstream>

using namespace flexbc;
using namespace flexbc::testing;

TEST_CASE("microcrack geometry") {
  ExperimentSpec s = default_spec(ExperimentKind::microcrack);
  const auto d = experiment_domain(s, true);
  const auto full = decompose(build_disc_domain(hex(), d.r), hex(), d.r, d.r_a, d.r_cut);
  CHECK(d.active_a().size() + microcrack_pattern().vacancies.size() == full.active_a().size());
  // Infinite mode keeps only a thin continuum shell.
  CHECK(d.r < s.r_a * ell0() + 6 * ell0());
}

TEST_CASE("curve csv") {
  std::ostringstream os;
  ScanPoint p;
  p.ratio = -0.1;
  p.sigma = 0.5;
  p.sigma_opt = 0.05;
  p.alpha_opt = 1.2;
  write_curve_csv(os, {p});
  CHECK(os.str() == "k2_over_k1,sigma,sigma_opt,alpha_opt,stable_flag\n"
                    "-0.10000000000000001,0.5,0.050000000000000003,1.2,1\n");
}

TEST_CASE("fig5 scan") {
  ExperimentSpec s = default_spec(ExperimentKind::fig5);
  s.name = "scan";
  s.scan_M = 4;
  s.scan_points = 10;
  const auto r = run_fig5_scan(s);
  REQUIRE(r.curve.size() == 10);
  CHECK(r.curve.back().ratio == doctest::Approx(0.25));
  for (const auto& p : r.curve) CHECK(p.ratio > -0.25);
  const auto j = nlohmann::json::parse(result_json(r));
  CHECK(j["status"] == "converged");
  CHECK(j["sigma"].is_null());
  CHECK(j["kind"] == "fig5");
}

TEST_CASE("stab1d suite") {
  CHECK(stab1d_suite_M().size() == 5);
  CHECK(stab1d_suite_k2().size() == 5);
  for (const auto& rep : run_stab1d_suite()) CHECK(rep.passed());
}

TEST_CASE("small microcrack run") {
  ExperimentSpec s = default_spec(ExperimentKind::microcrack);
  s.name = "mc";
  s.r_a = 4;
  s.variants = {"sinc", "dyn2"};
  const auto r = run_microcrack(s);
  CHECK(r.ok());
  REQUIRE(r.find("sinc"));
  REQUIRE(r.find("dyn2"));
  CHECK(r.find("dyn1") == nullptr);
  CHECK(r.sigma > 0.3);
  CHECK(r.sigma < 0.7);
  CHECK(r.find("dyn2")->report.n_iter < r.find("sinc")->report.n_iter);
  const auto j = nlohmann::json::parse(result_json(r));
  CHECK(j["variants"].size() == 2);
  CHECK(j["N_iter"] == r.find("sinc")->report.n_iter);
}

TEST_CASE("names") {
  CHECK(to_string(ExperimentKind::microcrack) == "microcrack");
  CHECK(to_string(OuterBoundary::lattice_gf) == "lattice_gf");
}
