#include <cmath>
#include <functional>
#include <random>

#include "doctest.h"
#include "gridval/dro_opf.hpp"
#include "support/oracles.hpp"
#include "support/toy.hpp"

using namespace gridval;

namespace {

using testing::ToyOpts;
using testing::toy_instance;

Solution solve_checked(const ConicProgram& prog) {
  Solution sol = solve(prog, {});
  REQUIRE(sol.status == SolveStatus::Optimal);
  const KktReport kkt = check_kkt(prog, sol);
  CHECK(kkt.pass(1e-6));
  return sol;
}

// Standalone worst-case-expectation program over max-affine pieces on a
// single cluster, exercising the production transport-sup emitter.
double solve_sup_block(const std::vector<Eigen::VectorXd>& piece_a,
                       const std::vector<double>& piece_c,
                       const Eigen::MatrixXd& dhat, const Eigen::VectorXd& lo,
                       const Eigen::VectorXd& hi, double eps,
                       bool floor_at_zero = false) {
  const int K = static_cast<int>(piece_a.size());
  const int I = static_cast<int>(dhat.rows());
  const int D = static_cast<int>(dhat.cols());
  ConicProgram prog;
  const int lam = prog.add_var(0.0, 1e7, eps);
  std::vector<int> svars(I);
  for (int i = 0; i < I; ++i)
    svars[i] = prog.add_var(floor_at_zero ? 0.0 : -kInf, kInf, 1.0 / I);
  const int z0 = prog.num_vars();
  for (int v = 0; v < K * I * D; ++v) prog.add_var(-kInf, kInf);
  const int u0 = prog.num_vars();
  for (int v = 0; v < K * I * D; ++v) prog.add_var(0.0, kInf);
  const int l0 = prog.num_vars();
  for (int v = 0; v < K * I * D; ++v) prog.add_var(0.0, kInf);

  std::vector<std::vector<LinExpr>> a(K, std::vector<LinExpr>(D));
  std::vector<LinExpr> c(K);
  for (int k = 0; k < K; ++k) {
    for (int g = 0; g < D; ++g) a[k][g] = LinExpr(piece_a[k][g]);
    c[k] = LinExpr(piece_c[k]);
  }
  append_transport_sup_rows(prog, a, c, {dhat}, {lo}, {hi}, {lam}, svars,
                            std::vector<int>(D, 0), z0, u0, l0);
  const Solution sol = solve_checked(prog);
  return sol.objective;
}

}  // namespace

TEST_CASE("transport sup rows match the one-dimensional worst case") {
  // g(x) = max(2x - 1, -x + 0.4, 0.5x + 0.1) on [0, 1].
  std::vector<Eigen::VectorXd> pa(3, Eigen::VectorXd(1));
  pa[0] << 2.0;
  pa[1] << -1.0;
  pa[2] << 0.5;
  const std::vector<double> pc = {-1.0, 0.4, 0.1};
  auto g = [&](double x) {
    return std::max({2.0 * x - 1.0, -x + 0.4, 0.5 * x + 0.1});
  };
  Eigen::MatrixXd dhat(3, 1);
  dhat << 0.2, 0.5, 0.8;
  Eigen::VectorXd lo(1), hi(1);
  lo << 0.0;
  hi << 1.0;

  const std::vector<double> hats = {0.2, 0.5, 0.8};
  for (const double eps : {0.0, 0.05, 0.2, 1.0}) {
    const double got = solve_sup_block(pa, pc, dhat, lo, hi, eps);
    const double want =
        testing::worst_case_expectation_1d(g, hats, 0.0, 1.0, eps);
    CAPTURE(eps);
    CHECK(got == doctest::Approx(want).epsilon(1e-2));
  }

  // Radius zero is exactly the sample average of g.
  const double at_zero = solve_sup_block(pa, pc, dhat, lo, hi, 0.0);
  const double mean_g = (g(0.2) + g(0.5) + g(0.8)) / 3.0;
  CHECK(at_zero == doctest::Approx(mean_g).epsilon(1e-7));

  // A huge radius buys the box-wide worst case.
  const double at_inf = solve_sup_block(pa, pc, dhat, lo, hi, 50.0);
  CHECK(at_inf == doctest::Approx(g(1.0)).epsilon(1e-6));
}

TEST_CASE("transport sup rows move each coordinate independently") {
  // Two coordinates with different signs and scales in each piece; a
  // per-sample scalar shift instead of per-coordinate duals would miss
  // the optimum here.
  std::vector<Eigen::VectorXd> pa(3, Eigen::VectorXd(2));
  pa[0] << 1.5, -0.7;
  pa[1] << -1.0, 0.3;
  pa[2] << 0.0, 0.0;
  const std::vector<double> pc = {0.1, 0.0, 0.2};
  auto g = [&](double x, double y) {
    return std::max({1.5 * x - 0.7 * y + 0.1, -x + 0.3 * y, 0.2});
  };
  Eigen::MatrixXd dhat(2, 2);
  dhat << 0.3, -0.2, 0.7, 0.5;
  Eigen::VectorXd lo(2), hi(2);
  lo << 0.0, -1.0;
  hi << 1.0, 1.0;
  const std::vector<std::pair<double, double>> hats = {{0.3, -0.2},
                                                       {0.7, 0.5}};
  for (const double eps : {0.0, 0.1, 0.6}) {
    const double got = solve_sup_block(pa, pc, dhat, lo, hi, eps);
    const double want = testing::worst_case_expectation_2d(
        g, hats, 0.0, 1.0, -1.0, 1.0, eps);
    CAPTURE(eps);
    CHECK(got == doctest::Approx(want).epsilon(3e-2));
  }
}

TEST_CASE("empirical cvar") {
  CHECK(empirical_cvar({1.0, 2.0, 3.0, 4.0}, 0.5) == doctest::Approx(3.5));
  CHECK(empirical_cvar({1.0, 2.0, 3.0, 4.0}, 1.0) == doctest::Approx(2.5));
  CHECK(empirical_cvar({7.5, 7.5, 7.5}, 0.3) == doctest::Approx(7.5));
  CHECK(empirical_cvar({-2.0, 6.0}, 0.5) == doctest::Approx(6.0));
  CHECK_THROWS_AS(empirical_cvar({}, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(empirical_cvar({1.0}, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(empirical_cvar({1.0}, 1.5), std::invalid_argument);
}

TEST_CASE("voltage halfspaces on a single line") {
  Network net = testing::make_test_network({-1}, {0.1}, {0.2});
  AssetTable a;
  a.pv_kw = {200.0};
  a.pb_min_kw = {0.0};
  a.pb_max_kw = {0.0};
  a.qb_min_kvar = {0.0};
  a.qb_max_kvar = {0.0};
  a.cost_c = {10.0};
  a.cost_d = {3.0};
  a.cost_e = {3.0};
  a.cost_h = {6.0};
  Forecast fc;
  fc.pav_kw = {100.0};
  fc.pl_kw = {50.0};
  fc.ql_kvar = {20.0};
  ClusterSet cs = make_clusters({{0}}, 1);
  FeatureIndex fidx = feature_index_map(cs);
  SupportBox box = default_support(fc, a, cs, fidx);
  SampleSet samples = generate_samples(fc, 0.1, 3, 5, box, cs, fidx);
  QualityInfo q;
  q.eps = {0.0};
  OpfInstance inst = make_instance(net, a, cs, samples, box, q);
  VoltageHalfspaces hs = assemble_voltage_halfspaces(inst);

  // R = 0.2, B = 0.4 on a 1 MVA base; columns are (pav, pl, ql).
  CHECK(hs.coef(0, 0) == doctest::Approx(0.2));
  CHECK(hs.coef(0, 1) == doctest::Approx(-0.2));
  CHECK(hs.coef(0, 2) == doctest::Approx(-0.4));
  CHECK(hs.alpha_coef(0, 0) == doctest::Approx(-0.2));
  CHECK(hs.alpha_coef(0, 1) == 0.0);
  CHECK(hs.pb_coef(0, 0) == doctest::Approx(0.2));
  CHECK(hs.qcb_coef(0, 0) == doctest::Approx(0.4));
  CHECK(hs.c0[0] == doctest::Approx(1.0 - 1.1));
  CHECK(hs.c0[1] == doctest::Approx(0.9 - 1.0));
  for (int g = 0; g < 3; ++g) {
    CHECK(hs.coef(1, g) == doctest::Approx(-hs.coef(0, g)));
    CHECK(hs.alpha_coef(1, g) == doctest::Approx(-hs.alpha_coef(0, g)));
  }

  // The halfspace gap agrees with the voltage prediction itself.
  Decisions dec;
  dec.alpha = Eigen::VectorXd::Constant(1, 0.25);
  dec.qc = Eigen::VectorXd::Constant(1, -0.03);
  dec.pb = Eigen::VectorXd::Zero(1);
  dec.qb = Eigen::VectorXd::Zero(1);
  for (int i = 0; i < samples.I; ++i) {
    const double pav = samples.delta[0](i, 0) / kKwPerFeatureUnit;
    const double pl = samples.delta[0](i, 1) / kKwPerFeatureUnit;
    const double ql = samples.delta[0](i, 2) / kKwPerFeatureUnit;
    Eigen::VectorXd p(1), qv(1);
    p << (1.0 - dec.alpha[0]) * pav - pl;
    qv << dec.qc[0] - ql;
    const double rho = predict_voltages(inst.sens, p, qv)[0];
    const double want = std::max(rho - a.vmax, a.vmin - rho);
    CHECK(max_voltage_gap(hs, dec, samples, fidx, i) ==
          doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("robust model collapses to the sample average at radius zero") {
  for (const double der : {0.0, 40.0}) {
    ToyOpts o;
    o.der_kw = der;
    o.vmax = 1.015;  // make the voltage constraint matter
    OpfInstance inst = toy_instance(o);
    BuiltModel saa = build_saa(inst);
    BuiltModel dro = build_msw_dro(inst);
    const Solution ssol = solve_checked(saa.prog);
    const Solution dsol = solve_checked(dro.prog);
    CAPTURE(der);
    CHECK(std::fabs(dsol.objective - ssol.objective) <=
          1e-4 * (1.0 + std::fabs(ssol.objective)));
  }
}

TEST_CASE("voltage block reproduces the empirical cvar at radius zero") {
  ToyOpts o;
  o.I = 7;
  OpfInstance inst = toy_instance(o);
  VoltageHalfspaces hs = assemble_voltage_halfspaces(inst);
  const std::vector<int> off = feature_offsets(inst.index);
  const int K = 2 * inst.net.n();
  const int D = off.back();
  const int I = inst.samples.I;

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    Decisions dec;
    dec.alpha = Eigen::VectorXd::Zero(2);
    dec.qc = Eigen::VectorXd::Zero(2);
    dec.pb = Eigen::VectorXd::Zero(2);
    dec.qb = Eigen::VectorXd::Zero(2);
    dec.alpha[0] = unif(rng);
    dec.qc[0] = 0.3 * (unif(rng) - 0.5);

    std::vector<double> losses;
    for (int i = 0; i < I; ++i)
      losses.push_back(max_voltage_gap(hs, dec, inst.samples, inst.index, i));
    const double want = empirical_cvar(losses, inst.assets.eta_vol);

    // Minimal uniform relaxation m for which the block accepts the fixed
    // decisions; equals the CVaR when every radius is zero.
    ConicProgram prog;
    const int m = prog.add_var(-kInf, kInf, 1.0);
    const int phi = prog.add_var(-kInf, 0.0);
    const int cap = prog.add_var(-kInf, kInf);
    std::vector<int> lam(inst.clusters.num_clusters());
    for (auto& v : lam) v = prog.add_var(0.0, 1e7);
    std::vector<int> svars(I);
    for (auto& v : svars) v = prog.add_var(0.0, kInf);
    const int z0 = prog.num_vars();
    for (int v = 0; v < K * I * D; ++v) prog.add_var(-kInf, kInf);
    const int u0 = prog.num_vars();
    for (int v = 0; v < K * I * D; ++v) prog.add_var(0.0, kInf);
    const int l0 = prog.num_vars();
    for (int v = 0; v < K * I * D; ++v) prog.add_var(0.0, kInf);

    std::vector<Eigen::MatrixXd> dhat(inst.clusters.num_clusters());
    std::vector<Eigen::VectorXd> blo(dhat.size()), bhi(dhat.size());
    for (size_t f = 0; f < dhat.size(); ++f) {
      dhat[f] = inst.samples.delta[f] / kKwPerFeatureUnit;
      blo[f] = inst.support.lo[f] / kKwPerFeatureUnit;
      bhi[f] = inst.support.hi[f] / kKwPerFeatureUnit;
    }
    std::vector<std::vector<LinExpr>> a(K, std::vector<LinExpr>(D));
    std::vector<LinExpr> c(K);
    for (int k = 0; k < K; ++k) {
      for (int g = 0; g < D; ++g)
        a[k][g] = LinExpr(hs.coef(k, g) +
                          hs.alpha_coef(k, g) * dec.alpha[hs.col_node[g]]);
      double ck = hs.c0[k];
      for (int j = 0; j < 2; ++j)
        ck += hs.pb_coef(k, j) * dec.pb[j] +
              hs.qcb_coef(k, j) * (dec.qc[j] + dec.qb[j]);
      c[k] = LinExpr(ck) - LinExpr::var(m) - LinExpr::var(phi);
    }
    append_transport_sup_rows(prog, a, c, dhat, blo, bhi, lam, svars,
                              hs.col_cluster, z0, u0, l0);
    LinExpr budget = LinExpr::var(cap, -inst.assets.eta_vol);
    for (int i = 0; i < I; ++i) budget.add(svars[i], 1.0 / I);
    prog.add_row(std::move(budget), RowKind::Le, 0.0);
    prog.add_row(LinExpr::var(cap) + LinExpr::var(phi), RowKind::Le, 0.0);

    const Solution sol = solve_checked(prog);
    CHECK(sol.objective == doctest::Approx(want).epsilon(1e-6));
  }
}

TEST_CASE("sample average optimum matches a dense grid search") {
  ToyOpts o;
  o.I = 3;
  o.vmax = 1.015;
  o.seed = 23;
  OpfInstance inst = toy_instance(o);
  BuiltModel saa = build_saa(inst);
  const Solution sol = solve_checked(saa.prog);

  VoltageHalfspaces hs = assemble_voltage_halfspaces(inst);
  const double s_mw = inst.assets.pv_kw[0] / kKwPerFeatureUnit;
  const int I = inst.samples.I;
  auto objective_at = [&](double alpha, double qc) {
    Decisions dec;
    dec.alpha = Eigen::VectorXd::Zero(2);
    dec.qc = Eigen::VectorXd::Zero(2);
    dec.pb = Eigen::VectorXd::Zero(2);
    dec.qb = Eigen::VectorXd::Zero(2);
    dec.alpha[0] = alpha;
    dec.qc[0] = qc;
    std::vector<double> vol, inv;
    double cost = 0.0;
    for (int i = 0; i < I; ++i) {
      vol.push_back(max_voltage_gap(hs, dec, inst.samples, inst.index, i));
      const double pav = inst.samples.delta[0](i, 0) / kKwPerFeatureUnit;
      inv.push_back(qc * qc + (1.0 - alpha) * (1.0 - alpha) * pav * pav -
                    s_mw * s_mw);
      cost += realized_cost(inst, dec, inst.samples, i) / I;
    }
    if (empirical_cvar(vol, inst.assets.eta_vol) > 1e-9) return kInf;
    if (empirical_cvar(inv, inst.assets.eta_inv) > 1e-9) return kInf;
    return cost;
  };

  auto scan = [&](double a_lo, double a_hi, double q_lo, double q_hi,
                  int steps, double& best_a, double& best_q) {
    double best = kInf;
    for (int ia = 0; ia <= steps; ++ia)
      for (int iq = 0; iq <= steps; ++iq) {
        const double alpha = a_lo + (a_hi - a_lo) * ia / steps;
        const double qc = q_lo + (q_hi - q_lo) * iq / steps;
        const double v = objective_at(alpha, qc);
        if (v < best) {
          best = v;
          best_a = alpha;
          best_q = qc;
        }
      }
    return best;
  };

  double a1 = 0, q1 = 0;
  scan(0.0, 1.0, -s_mw, s_mw, 160, a1, q1);
  const double wa = 1.5 / 160.0, wq = 1.5 * 2.0 * s_mw / 160.0;
  double a2 = 0, q2 = 0;
  const double refined =
      scan(std::max(0.0, a1 - wa), std::min(1.0, a1 + wa),
           std::max(-s_mw, q1 - wq), std::min(s_mw, q1 + wq), 200, a2, q2);

  CHECK(refined >= sol.objective - 1e-7);
  CHECK(std::fabs(refined - sol.objective) <=
        1e-3 * (1.0 + std::fabs(sol.objective)));
}

TEST_CASE("objective never improves as radii grow") {
  for (const unsigned seed : {101u, 202u}) {
    ToyOpts o;
    o.seed = seed;
    o.vmax = 1.02;
    o.der_kw = 30.0;
    double prev = -kInf;
    for (const double eps : {0.0, 0.001, 0.01, 0.1, 1.0}) {
      o.eps = eps;
      OpfInstance inst = toy_instance(o);
      BuiltModel dro = build_msw_dro(inst);
      const Solution sol = solve_checked(dro.prog);
      CAPTURE(seed);
      CAPTURE(eps);
      CHECK(sol.objective >= prev - 1e-6 * (1.0 + std::fabs(prev)));
      prev = sol.objective;
    }
  }
}

TEST_CASE("large radii stop relying on the data") {
  ToyOpts o;
  o.eps = 5.0;
  o.vmax = 1.02;
  OpfInstance inst = toy_instance(o);
  BuiltModel dro = build_msw_dro(inst);
  const Solution sol = solve_checked(dro.prog);
  for (int f = 0; f < dro.layout.F; ++f) {
    CHECK(std::fabs(sol.x[dro.layout.lam_volt(f)]) < 1e-6);
    CHECK(std::fabs(sol.x[dro.layout.lam_cost(f)]) < 1e-6);
  }
}

TEST_CASE("instance validation rejects inconsistent inputs") {
  ToyOpts o;
  OpfInstance good = toy_instance(o);

  OpfInstance bad = good;
  bad.samples.delta[1] = bad.samples.delta[1].topRows(o.I - 1).eval();
  CHECK_THROWS_WITH_AS(validate_instance(bad),
                       doctest::Contains("sample counts differ"),
                       std::runtime_error);

  bad = good;
  bad.quality.eps[0] = -0.1;
  CHECK_THROWS_WITH_AS(validate_instance(bad), doctest::Contains("radii"),
                       std::runtime_error);

  bad = good;
  bad.samples.delta[0](0, 1) = 1e6;
  CHECK_THROWS_WITH_AS(validate_instance(bad),
                       doctest::Contains("outside the declared support"),
                       std::runtime_error);

  // PV samples at a node whose rating is zero.
  bad = good;
  bad.assets.pv_kw[0] = 0.0;
  CHECK_THROWS_WITH_AS(validate_instance(bad),
                       doctest::Contains("support inconsistency"),
                       std::runtime_error);

  bad = good;
  bad.assets.pb_min_kw[1] = 10.0;
  bad.assets.pb_max_kw[1] = -10.0;
  CHECK_THROWS_WITH_AS(validate_instance(bad),
                       doctest::Contains("storage box"), std::runtime_error);
}

TEST_CASE("risk level one is weaker than the default") {
  ToyOpts o;
  o.vmax = 1.012;
  OpfInstance tight = toy_instance(o);
  OpfInstance loose = tight;
  loose.assets.eta_vol = 1.0;
  loose.assets.eta_inv = 1.0;
  BuiltModel mt = build_saa(tight);
  BuiltModel ml = build_saa(loose);
  const Solution st = solve_checked(mt.prog);
  const Solution sl = solve_checked(ml.prog);
  CHECK(sl.objective <= st.objective + 1e-7 * (1.0 + std::fabs(st.objective)));
}
