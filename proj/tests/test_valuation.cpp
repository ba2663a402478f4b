#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "gridval/valuation.hpp"
#include "json.hpp"
#include "support/toy.hpp"

using namespace gridval;

namespace {

using testing::ToyOpts;
using testing::toy_instance;

Solution solve_checked(const ConicProgram& prog) {
  Solution sol = solve(prog, {});
  REQUIRE(sol.status == SolveStatus::Optimal);
  return sol;
}

template <typename Fn>
void check_valuation_error(Fn&& fn) {
  try {
    fn();
    FAIL("expected a valuation error");
  } catch (const std::exception& e) {
    CHECK(std::string(e.what()).find("valuation error") != std::string::npos);
  }
}

ToyOpts tight_toy() {
  ToyOpts o;
  o.vmax = 1.015;
  o.der_kw = 40.0;
  o.I = 8;
  o.seed = 3;
  return o;
}

}  // namespace

TEST_CASE("marginal value matches finite differences at smooth points") {
  ToyOpts o = tight_toy();
  const std::vector<double> centers = {0.004, 0.008, 0.012, 0.02, 0.03,
                                       0.045, 0.06,  0.08,  0.12, 0.2};
  int smooth = 0;
  for (const double eps : centers) {
    o.eps = eps;
    const OpfInstance inst = toy_instance(o);
    const EnvelopeCheck c = envelope_fd_check(inst, 0, 1e-3);
    CAPTURE(eps);
    CHECK(c.mu >= -1e-6);
    if (c.kink) continue;
    ++smooth;
    const bool close =
        c.rel_gap <= 0.05 || std::abs(c.mu - c.fd) <= 1e-3;
    CAPTURE(c.mu);
    CAPTURE(c.fd);
    CHECK(close);
  }
  CHECK(smooth >= 6);
}

TEST_CASE("value vanishes beyond the support width") {
  ToyOpts o = tight_toy();
  o.eps = 5.0;
  const OpfInstance inst = toy_instance(o);
  const BuiltModel model = build_msw_dro(inst);
  const Solution sol = solve_checked(model.prog);
  const DataValueReport rep = marginal_data_value(model, sol, inst);
  const double scale = 1.0 + std::abs(sol.objective);
  for (const ClusterValue& cv : rep.clusters) {
    CHECK(std::abs(cv.mu) <= 1e-5 * scale);
    CHECK(std::abs(cv.lambda_co) <= 1e-5 * scale);
  }

  // The operational meaning: a 10 percent radius change moves nothing.
  for (const double bump : {4.5, 5.5}) {
    OpfInstance inst2 = inst;
    inst2.quality.eps[0] = bump;
    const Solution sol2 = solve_checked(build_msw_dro(inst2).prog);
    CHECK(std::abs(sol2.objective - sol.objective) <= 1e-6 * scale);
  }
}

TEST_CASE("value report carries duals and radii consistently") {
  ToyOpts o = tight_toy();
  o.eps = 0.05;
  const OpfInstance inst = toy_instance(o);
  const BuiltModel model = build_msw_dro(inst);
  const Solution sol = solve_checked(model.prog);
  const DataValueReport rep = marginal_data_value(model, sol, inst);

  CHECK(rep.objective == doctest::Approx(sol.objective));
  REQUIRE(rep.eps.size() == 2);
  CHECK(rep.eps[0] == 0.05);
  REQUIRE(rep.clusters.size() == 2);
  CHECK(rep.clusters[0].cluster == 0);
  CHECK(rep.clusters[1].cluster == 1);
  REQUIRE(rep.pv_nodes == std::vector<int>{0});
  REQUIRE(rep.lambda_inv.size() == 1);
  REQUIRE(rep.phi_inv.size() == 1);
  CHECK(rep.phi_vol >= -1e-9);
  CHECK(rep.phi_inv[0] >= -1e-9);
  CHECK(rep.rel_gap >= 0.0);

  CHECK(rep.clusters[0].lambda_co ==
        doctest::Approx(sol.x[model.layout.lam_cost(0)]));
  CHECK(rep.clusters[0].sum_lambda_inv == doctest::Approx(rep.lambda_inv[0]));
  CHECK(rep.clusters[1].sum_lambda_inv == 0.0);
  for (const ClusterValue& cv : rep.clusters) {
    const double inv_term =
        cv.cluster == 0 ? rep.phi_inv[0] * rep.lambda_inv[0] : 0.0;
    CHECK(cv.mu == doctest::Approx(cv.lambda_co +
                                   rep.phi_vol * cv.lambda_vol + inv_term));
    CHECK(cv.mu >= -1e-6);
  }

  const std::string csv = to_csv(rep);
  CHECK(csv.rfind("f,lambda_co,lambda_vol,sum_lambda_inv,phi_vol,mu\n", 0) ==
        0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
  CHECK(csv.find("\n0,") != std::string::npos);
  CHECK(csv.find("\n1,") != std::string::npos);

  const nlohmann::json j = nlohmann::json::parse(to_json(rep));
  CHECK(j["clusters"].size() == 2);
  CHECK(j["objective"].get<double>() == doctest::Approx(rep.objective));
  CHECK(j["clusters"][0]["mu"].get<double>() ==
        doctest::Approx(rep.clusters[0].mu));
  CHECK(j["phi_vol"].is_number());
  CHECK(j["degenerate"].is_boolean());
}

TEST_CASE("missing duals and non robust models are rejected") {
  ToyOpts o = tight_toy();
  o.eps = 0.01;
  const OpfInstance inst = toy_instance(o);
  const BuiltModel model = build_msw_dro(inst);
  const Solution sol = solve_checked(model.prog);

  check_valuation_error([&] { marginal_data_value(model, Solution{}, inst); });

  Solution no_duals = sol;
  no_duals.row_dual.clear();
  check_valuation_error([&] { marginal_data_value(model, no_duals, inst); });

  const BuiltModel saa = build_saa(inst);
  const Solution saa_sol = solve_checked(saa.prog);
  check_valuation_error([&] { marginal_data_value(saa, saa_sol, inst); });
}

TEST_CASE("critical radius grid scan per constraint family") {
  ToyOpts o;
  o.vmax = 1.015;
  const OpfInstance inst = toy_instance(o);
  const CriticalEpsOptions opts;
  const CriticalEpsReport rep = critical_epsilon(inst, 0, opts);

  CHECK(rep.cluster == 0);
  CHECK(rep.grid == opts.grid);
  CHECK(rep.fixed_eps == opts.fixed_eps);
  REQUIRE(rep.objective.size() == opts.grid.size());
  for (const FamilyCritical* fam : {&rep.co, &rep.vol, &rep.inv})
    REQUIRE(fam->lambda_max.size() == opts.grid.size());
  CHECK(rep.co.n_lambdas == 1);
  CHECK(rep.vol.n_lambdas == 1);
  CHECK(rep.inv.n_lambdas == 1);

  // Worst-case cost cannot rise when the scanned radius shrinks.
  for (size_t g = 0; g + 1 < rep.objective.size(); ++g)
    CHECK(rep.objective[g + 1] <=
          rep.objective[g] + 1e-6 * (1.0 + std::abs(rep.objective[g])));

  // Radius 1.0 covers the whole support box, so every family has vanished
  // there and the reported critical radius is a grid point.
  for (const FamilyCritical* fam : {&rep.co, &rep.vol, &rep.inv}) {
    REQUIRE(fam->found);
    CHECK(std::count(fam->vanish_eps.begin(), fam->vanish_eps.end(), 1.0) ==
          1);
    CHECK(std::count(rep.grid.begin(), rep.grid.end(), fam->critical_eps) ==
          1);
    CHECK(fam->critical_eps ==
          *std::min_element(fam->vanish_eps.begin(), fam->vanish_eps.end()));
  }

  const std::string csv = to_csv(rep);
  CHECK(csv.rfind("f,family,n_lambdas,found,critical_eps,vanish_eps\n", 0) ==
        0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
  const nlohmann::json j = nlohmann::json::parse(to_json(rep));
  CHECK(j["co"]["found"].is_boolean());
  CHECK(j["grid"].size() == opts.grid.size());
  CHECK(j["vol"]["lambda_max"].size() == opts.grid.size());
}

TEST_CASE("always useful data reports above grid max") {
  ToyOpts o;
  o.vmax = 1.015;
  const OpfInstance inst = toy_instance(o);
  CriticalEpsOptions opts;
  opts.grid = {2e-5, 1e-5};
  const CriticalEpsReport rep = critical_epsilon(inst, 1, opts);

  // The load at node 1 must always be served, so its hinge-cost transport
  // price never drops to zero at these tiny radii.
  CHECK(!rep.co.found);
  const std::string csv = to_csv(rep);
  CHECK(csv.find("co,1,0,above_grid_max,") != std::string::npos);

  // No PV at node 1: the inverter family is empty and trivially vanished.
  CHECK(rep.inv.n_lambdas == 0);
  REQUIRE(rep.inv.found);
  CHECK(rep.inv.critical_eps == 1e-5);
  CHECK(rep.inv.vanish_eps.size() == 2);
}

TEST_CASE("critical radius scan rejects bad input") {
  const OpfInstance inst = toy_instance(ToyOpts{});
  CriticalEpsOptions opts;
  opts.grid = {0.1, 0.5};
  CHECK_THROWS_AS(critical_epsilon(inst, 0, opts), std::invalid_argument);
  CHECK_THROWS_AS(critical_epsilon(inst, -1, {}), std::invalid_argument);
  CHECK_THROWS_AS(critical_epsilon(inst, 2, {}), std::invalid_argument);
  CHECK_THROWS_AS(envelope_fd_check(inst, 5, 1e-3), std::invalid_argument);
  CHECK_THROWS_AS(envelope_fd_check(inst, 0, 0.0), std::invalid_argument);
  OpfInstance near_zero = inst;
  near_zero.quality.eps = {0.004, 0.004};
  CHECK_THROWS_AS(envelope_fd_check(near_zero, 0, 0.01),
                  std::invalid_argument);
}

TEST_CASE("kink flag separates active set changes from flat regions") {
  ToyOpts o = tight_toy();

  // Wide steps sweeping from the steep small-radius region into the flat
  // large-radius region must cross at least one derivative jump.
  bool any_kink = false;
  for (const double center : {0.02, 0.05, 0.1, 0.2, 0.3}) {
    o.eps = center;
    const OpfInstance inst = toy_instance(o);
    const EnvelopeCheck c = envelope_fd_check(inst, 0, 0.5 * center);
    any_kink = any_kink || c.kink;
  }
  CHECK(any_kink);

  // Far beyond the support width the objective is flat: no kink, no value.
  o.eps = 5.0;
  const OpfInstance inst = toy_instance(o);
  const EnvelopeCheck c = envelope_fd_check(inst, 0, 0.5);
  CHECK(!c.kink);
  CHECK(std::abs(c.fd) <= 1e-5);
  CHECK(std::abs(c.mu) <= 1e-5 * (1.0 + std::abs(c.fd)));
}
