#include <cmath>

#include "dro_detail.hpp"
#include "gridval/dro_opf.hpp"

namespace gridval {

namespace {

// Transport prices are degenerate at radius zero (any large enough value
// is optimal), which leaves an unbounded recession direction. A generous
// cap removes it; at positive radii the optimizer sits orders of magnitude
// below.
constexpr double kLamCap = 1e7;

}  // namespace

BuiltModel build_msw_dro(const OpfInstance& inst) {
  validate_instance(inst);
  const VoltageHalfspaces hs = assemble_voltage_halfspaces(inst);
  const std::vector<int> off = feature_offsets(inst.index);
  std::vector<Eigen::MatrixXd> dhat;
  std::vector<Eigen::VectorXd> lo, hi;
  detail::scaled_uncertainty(inst, dhat, lo, hi);

  BuiltModel m;
  DecisionLayout& lay = m.layout = detail::common_layout(inst, m.prog);
  ConicProgram& prog = m.prog;
  const int n = lay.n, F = lay.F, I = lay.I, K = lay.K, D = lay.D;
  const int npv = static_cast<int>(lay.pv_nodes.size());
  const double inv_i = 1.0 / I;

  lay.lam_cost0 = prog.num_vars();
  for (int f = 0; f < F; ++f)
    prog.add_var(0.0, kLamCap, inst.quality.eps[f]);
  lay.lam_volt0 = prog.num_vars();
  for (int f = 0; f < F; ++f) prog.add_var(0.0, kLamCap);
  lay.lam_inv0 = prog.num_vars();
  for (int p = 0; p < npv; ++p) prog.add_var(0.0, kLamCap);

  lay.s_cost_bal0 = prog.num_vars();
  for (int v = 0; v < n * I; ++v) prog.add_var(0.0, kInf, inv_i);
  lay.s_cost_curt0 = prog.num_vars();
  for (int v = 0; v < npv * I; ++v) prog.add_var(0.0, kInf, inv_i);
  lay.s_volt0 = prog.num_vars();
  for (int i = 0; i < I; ++i) prog.add_var(0.0, kInf);
  lay.s_inv0 = prog.num_vars();
  for (int v = 0; v < npv * I; ++v) prog.add_var(0.0, kInf);

  lay.cap_volt = prog.add_var(-kInf, kInf);
  lay.shift_volt = prog.add_var(-kInf, 0.0);
  lay.cap_inv0 = prog.num_vars();
  for (int p = 0; p < npv; ++p) prog.add_var(-kInf, kInf);
  lay.shift_inv0 = prog.num_vars();
  for (int p = 0; p < npv; ++p) prog.add_var(-kInf, 0.0);

  lay.z0 = prog.num_vars();
  for (int v = 0; v < K * I * D; ++v) prog.add_var(-kInf, kInf);
  lay.u0 = prog.num_vars();
  for (int v = 0; v < K * I * D; ++v) prog.add_var(0.0, kInf);
  lay.l0 = prog.num_vars();
  for (int v = 0; v < K * I * D; ++v) prog.add_var(0.0, kInf);
  lay.var_count = prog.num_vars();

  // Worst-case hinge cost per node and sample. The adversary moves the
  // node's load and PV power anywhere in the box, paying the transport
  // price per unit of l1 movement; binding candidates are the box corner
  // aligned with each slope and the sample itself.
  for (int j = 0; j < n; ++j) {
    const int f = inst.clusters.node_to_cluster[j];
    const double c = inst.assets.cost_c[j];
    const double d = inst.assets.cost_d[j];
    const int mpl = inst.index.pl_position(f, j);
    const int mpa = inst.index.pav_position(f, j);
    const double pl_lo = lo[f][mpl], pl_hi = hi[f][mpl];
    const double pa_lo = lo[f][mpa], pa_hi = hi[f][mpa];
    for (int i = 0; i < I; ++i) {
      const double pl_hat = dhat[f](i, mpl);
      const double pa_hat = dhat[f](i, mpa);
      const int s = lay.s_cost_bal(j, i);
      const int lam = lay.lam_cost(f);

      LinExpr high(c * (pl_hi - pa_lo));
      high.add(lay.pb(j), -c);
      high.add(lay.alpha(j), c * pa_lo);
      high.add(lam, -((pl_hi - pl_hat) + (pa_hat - pa_lo)));
      high.add(s, -1.0);
      prog.add_row(std::move(high), RowKind::Le, 0.0);

      LinExpr low(d * (pa_hi - pl_lo));
      low.add(lay.pb(j), d);
      low.add(lay.alpha(j), -d * pa_hi);
      low.add(lam, -((pl_hat - pl_lo) + (pa_hi - pa_hat)));
      low.add(s, -1.0);
      prog.add_row(std::move(low), RowKind::Le, 0.0);

      LinExpr at_c(c * (pl_hat - pa_hat));
      at_c.add(lay.pb(j), -c);
      at_c.add(lay.alpha(j), c * pa_hat);
      at_c.add(s, -1.0);
      prog.add_row(std::move(at_c), RowKind::Le, 0.0);

      LinExpr at_d(d * (pa_hat - pl_hat));
      at_d.add(lay.pb(j), d);
      at_d.add(lay.alpha(j), -d * pa_hat);
      at_d.add(s, -1.0);
      prog.add_row(std::move(at_d), RowKind::Le, 0.0);
    }
  }

  // Worst-case curtailment cost per PV node and sample.
  for (int p = 0; p < npv; ++p) {
    const int j = lay.pv_nodes[p];
    const int f = inst.clusters.node_to_cluster[j];
    const double h = inst.assets.cost_h[j];
    const int mpa = inst.index.pav_position(f, j);
    const double pa_lo = lo[f][mpa], pa_hi = hi[f][mpa];
    for (int i = 0; i < I; ++i) {
      const double pa_hat = dhat[f](i, mpa);
      const int s = lay.s_cost_curt(p, i);
      const int lam = lay.lam_cost(f);

      LinExpr up;
      up.add(lay.alpha(j), h * pa_hi);
      up.add(lam, -(pa_hi - pa_hat));
      up.add(s, -1.0);
      prog.add_row(std::move(up), RowKind::Le, 0.0);

      LinExpr down;
      down.add(lay.alpha(j), h * pa_lo);
      down.add(lam, -(pa_hat - pa_lo));
      down.add(s, -1.0);
      prog.add_row(std::move(down), RowKind::Le, 0.0);

      LinExpr at;
      at.add(lay.alpha(j), h * pa_hat);
      at.add(s, -1.0);
      prog.add_row(std::move(at), RowKind::Le, 0.0);
    }
  }

  // Voltage block: worst-case CVaR of the largest halfspace value.
  {
    std::vector<std::vector<LinExpr>> a(K, std::vector<LinExpr>(D));
    std::vector<LinExpr> c(K);
    for (int k = 0; k < K; ++k) {
      for (int g = 0; g < D; ++g) {
        LinExpr e(hs.coef(k, g));
        if (hs.alpha_coef(k, g) != 0.0)
          e.add(lay.alpha(hs.col_node[g]), hs.alpha_coef(k, g));
        a[k][g] = std::move(e);
      }
      LinExpr ck(hs.c0[k]);
      for (int j = 0; j < n; ++j) {
        ck.add(lay.pb(j), hs.pb_coef(k, j));
        ck.add(lay.qc(j), hs.qcb_coef(k, j));
        ck.add(lay.qb(j), hs.qcb_coef(k, j));
      }
      ck.add(lay.shift_volt, -1.0);
      c[k] = std::move(ck);
    }
    std::vector<int> lam(F), sv(I);
    for (int f = 0; f < F; ++f) lam[f] = lay.lam_volt(f);
    for (int i = 0; i < I; ++i) sv[i] = lay.s_volt(i);
    append_transport_sup_rows(prog, a, c, dhat, lo, hi, lam, sv,
                              hs.col_cluster, lay.z0, lay.u0, lay.l0);

    LinExpr budget;
    for (int f = 0; f < F; ++f)
      budget.add(lay.lam_volt(f), inst.quality.eps[f]);
    for (int i = 0; i < I; ++i) budget.add(lay.s_volt(i), inv_i);
    budget.add(lay.cap_volt, -inst.assets.eta_vol);
    m.handles.volt_budget = prog.add_row(std::move(budget), RowKind::Le, 0.0);
    prog.add_row(LinExpr::var(lay.cap_volt) + LinExpr::var(lay.shift_volt),
                 RowKind::Le, 0.0);
  }

  // Inverter block per PV node: worst-case CVaR of
  // qc^2 + ((1-alpha) pav)^2 - S^2 over the node's PV power coordinate.
  for (int p = 0; p < npv; ++p) {
    const int j = lay.pv_nodes[p];
    const int f = inst.clusters.node_to_cluster[j];
    const double s_rating = inst.assets.pv_kw[j] / kKwPerFeatureUnit;
    const int mpa = inst.index.pav_position(f, j);
    const double pa_hi = hi[f][mpa];
    for (int i = 0; i < I; ++i) {
      const double pa_hat = dhat[f](i, mpa);
      LinExpr at_top(-s_rating * s_rating);
      at_top.add(lay.r_qc(p), 1.0);
      at_top.add(lay.t_curt(p), pa_hi * pa_hi);
      at_top.add(lay.shift_inv(p), -1.0);
      at_top.add(lay.lam_inv(p), -(pa_hi - pa_hat));
      at_top.add(lay.s_inv(p, i), -1.0);
      prog.add_row(std::move(at_top), RowKind::Le, 0.0);

      LinExpr at_hat(-s_rating * s_rating);
      at_hat.add(lay.r_qc(p), 1.0);
      at_hat.add(lay.t_curt(p), pa_hat * pa_hat);
      at_hat.add(lay.shift_inv(p), -1.0);
      at_hat.add(lay.s_inv(p, i), -1.0);
      prog.add_row(std::move(at_hat), RowKind::Le, 0.0);
    }
    LinExpr budget = LinExpr::var(lay.lam_inv(p), inst.quality.eps[f]);
    for (int i = 0; i < I; ++i) budget.add(lay.s_inv(p, i), inv_i);
    budget.add(lay.cap_inv(p), -inst.assets.eta_inv);
    m.handles.inv_budget.push_back(
        prog.add_row(std::move(budget), RowKind::Le, 0.0));
    prog.add_row(LinExpr::var(lay.cap_inv(p)) + LinExpr::var(lay.shift_inv(p)),
                 RowKind::Le, 0.0);
  }

  return m;
}

}  // namespace gridval
