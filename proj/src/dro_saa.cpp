#include <cmath>

#include "dro_detail.hpp"
#include "gridval/dro_opf.hpp"

namespace gridval {

namespace detail {

// Decision variables both assembly paths share: physical setpoints with
// their boxes, reactive-cost epigraphs, and the inverter curve epigraphs
// t >= (1-alpha)^2, r >= qc^2.
DecisionLayout common_layout(const OpfInstance& inst, ConicProgram& prog) {
  DecisionLayout lay;
  lay.n = inst.net.n();
  lay.F = inst.clusters.num_clusters();
  lay.I = inst.samples.I;
  lay.K = 2 * lay.n;
  lay.D = feature_offsets(inst.index).back();
  lay.pv_slot.assign(lay.n, -1);
  for (int j = 0; j < lay.n; ++j)
    if (inst.assets.has_pv(j)) {
      lay.pv_slot[j] = static_cast<int>(lay.pv_nodes.size());
      lay.pv_nodes.push_back(j);
    }

  const double kw = kKwPerFeatureUnit;
  lay.alpha0 = prog.num_vars();
  for (int j = 0; j < lay.n; ++j)
    prog.add_var(0.0, inst.assets.has_pv(j) ? 1.0 : 0.0);
  lay.qc0 = prog.num_vars();
  for (int j = 0; j < lay.n; ++j) {
    const double s = inst.assets.pv_kw[j] / kw;
    prog.add_var(-s, s);
  }
  lay.pb0 = prog.num_vars();
  for (int j = 0; j < lay.n; ++j)
    prog.add_var(inst.assets.pb_min_kw[j] / kw, inst.assets.pb_max_kw[j] / kw);
  lay.qb0 = prog.num_vars();
  for (int j = 0; j < lay.n; ++j)
    prog.add_var(inst.assets.qb_min_kvar[j] / kw,
                 inst.assets.qb_max_kvar[j] / kw);

  lay.abs_qc0 = prog.num_vars();
  for (int j = 0; j < lay.n; ++j)
    prog.add_var(0.0, kInf, inst.assets.cost_e[j]);
  lay.abs_qb0 = prog.num_vars();
  for (int j = 0; j < lay.n; ++j)
    prog.add_var(0.0, kInf, inst.assets.cost_e[j]);
  for (int j = 0; j < lay.n; ++j) {
    prog.add_row(LinExpr::var(lay.qc(j)) - LinExpr::var(lay.abs_qc(j)),
                 RowKind::Le, 0.0);
    prog.add_row(LinExpr::var(lay.qc(j), -1.0) - LinExpr::var(lay.abs_qc(j)),
                 RowKind::Le, 0.0);
    prog.add_row(LinExpr::var(lay.qb(j)) - LinExpr::var(lay.abs_qb(j)),
                 RowKind::Le, 0.0);
    prog.add_row(LinExpr::var(lay.qb(j), -1.0) - LinExpr::var(lay.abs_qb(j)),
                 RowKind::Le, 0.0);
  }

  const int npv = static_cast<int>(lay.pv_nodes.size());
  lay.t_curt0 = prog.num_vars();
  for (int p = 0; p < npv; ++p) prog.add_var(0.0, kInf);
  lay.r_qc0 = prog.num_vars();
  for (int p = 0; p < npv; ++p) prog.add_var(0.0, kInf);
  for (int p = 0; p < npv; ++p) {
    const int j = lay.pv_nodes[p];
    const LinExpr one_minus_alpha = LinExpr(1.0) - LinExpr::var(lay.alpha(j));
    prog.add_soc({0.5 * LinExpr::var(lay.t_curt(p)) + 0.5,
                  0.5 * LinExpr::var(lay.t_curt(p)) - 0.5, one_minus_alpha});
    prog.add_soc({0.5 * LinExpr::var(lay.r_qc(p)) + 0.5,
                  0.5 * LinExpr::var(lay.r_qc(p)) - 0.5,
                  LinExpr::var(lay.qc(j))});
  }
  return lay;
}

// Voltage row value for sample i as an expression in the decisions.
LinExpr voltage_row_expr(const VoltageHalfspaces& hs, const DecisionLayout& lay,
                         const std::vector<Eigen::MatrixXd>& dhat,
                         const std::vector<int>& off, int k, int i) {
  LinExpr e(hs.c0[k]);
  e.terms.reserve(3 * lay.n);
  for (int g = 0; g < lay.D; ++g) {
    const double d = dhat[hs.col_cluster[g]](i, g - off[hs.col_cluster[g]]);
    if (d == 0.0) continue;
    e.constant += hs.coef(k, g) * d;
    if (hs.alpha_coef(k, g) != 0.0)
      e.add(lay.alpha(hs.col_node[g]), hs.alpha_coef(k, g) * d);
  }
  for (int j = 0; j < lay.n; ++j) {
    e.add(lay.pb(j), hs.pb_coef(k, j));
    e.add(lay.qc(j), hs.qcb_coef(k, j));
    e.add(lay.qb(j), hs.qcb_coef(k, j));
  }
  return e;
}

// Samples and box rescaled from kW to feature units.
void scaled_uncertainty(const OpfInstance& inst,
                        std::vector<Eigen::MatrixXd>& dhat,
                        std::vector<Eigen::VectorXd>& lo,
                        std::vector<Eigen::VectorXd>& hi) {
  const int F = inst.clusters.num_clusters();
  dhat.resize(F);
  lo.resize(F);
  hi.resize(F);
  for (int f = 0; f < F; ++f) {
    dhat[f] = inst.samples.delta[f] / kKwPerFeatureUnit;
    lo[f] = inst.support.lo[f] / kKwPerFeatureUnit;
    hi[f] = inst.support.hi[f] / kKwPerFeatureUnit;
  }
}

}  // namespace detail

BuiltModel build_saa(const OpfInstance& inst) {
  validate_instance(inst);
  const VoltageHalfspaces hs = assemble_voltage_halfspaces(inst);
  const std::vector<int> off = feature_offsets(inst.index);
  std::vector<Eigen::MatrixXd> dhat;
  std::vector<Eigen::VectorXd> lo, hi;
  detail::scaled_uncertainty(inst, dhat, lo, hi);

  BuiltModel m;
  DecisionLayout& lay = m.layout = detail::common_layout(inst, m.prog);
  ConicProgram& prog = m.prog;
  const int I = lay.I;
  const double inv_i = 1.0 / I;

  // Curtailment cost is linear in alpha, so it folds into the objective.
  for (int j = 0; j < lay.n; ++j) {
    const int f = inst.clusters.node_to_cluster[j];
    const double mean_pav =
        dhat[f].col(inst.index.pav_position(f, j)).mean();
    prog.add_obj(lay.alpha(j), inst.assets.cost_h[j] * mean_pav);
  }

  // Hinge cost: one epigraph per node and sample over both slopes.
  lay.cost_epi0 = prog.num_vars();
  for (int j = 0; j < lay.n * I; ++j) prog.add_var(-kInf, kInf, inv_i);
  for (int j = 0; j < lay.n; ++j) {
    const int f = inst.clusters.node_to_cluster[j];
    const double c = inst.assets.cost_c[j];
    const double d = inst.assets.cost_d[j];
    for (int i = 0; i < I; ++i) {
      const double pav = dhat[f](i, inst.index.pav_position(f, j));
      const double pl = dhat[f](i, inst.index.pl_position(f, j));
      LinExpr shortfall(pl - pav);
      shortfall.add(lay.pb(j), -1.0);
      shortfall.add(lay.alpha(j), pav);
      prog.add_row(c * shortfall - LinExpr::var(lay.cost_epi(j, i)),
                   RowKind::Le, 0.0);
      prog.add_row((-d) * shortfall - LinExpr::var(lay.cost_epi(j, i)),
                   RowKind::Le, 0.0);
    }
  }

  // Voltage joint chance constraint as sample CVaR.
  lay.phi_volt_saa = prog.add_var(0.0, kInf);
  lay.y_volt0 = prog.num_vars();
  for (int i = 0; i < I; ++i) prog.add_var(0.0, kInf);
  for (int i = 0; i < I; ++i)
    for (int k = 0; k < lay.K; ++k)
      prog.add_row(detail::voltage_row_expr(hs, lay, dhat, off, k, i) +
                       LinExpr::var(lay.phi_volt_saa) -
                       LinExpr::var(lay.y_volt(i)),
                   RowKind::Le, 0.0);
  {
    LinExpr budget = LinExpr::var(lay.phi_volt_saa, -inst.assets.eta_vol);
    for (int i = 0; i < I; ++i) budget.add(lay.y_volt(i), inv_i);
    prog.add_row(std::move(budget), RowKind::Le, 0.0);
  }

  // Inverter rating chance constraint per PV node.
  const int npv = static_cast<int>(lay.pv_nodes.size());
  lay.phi_inv_saa0 = prog.num_vars();
  for (int p = 0; p < npv; ++p) prog.add_var(0.0, kInf);
  lay.y_inv_saa0 = prog.num_vars();
  for (int p = 0; p < npv * I; ++p) prog.add_var(0.0, kInf);
  for (int p = 0; p < npv; ++p) {
    const int j = lay.pv_nodes[p];
    const int f = inst.clusters.node_to_cluster[j];
    const double s = inst.assets.pv_kw[j] / kKwPerFeatureUnit;
    for (int i = 0; i < I; ++i) {
      const double pav = dhat[f](i, inst.index.pav_position(f, j));
      LinExpr e(-s * s);
      e.add(lay.r_qc(p), 1.0);
      e.add(lay.t_curt(p), pav * pav);
      e.add(lay.phi_inv_saa(p), 1.0);
      e.add(lay.y_inv_saa(p, i), -1.0);
      prog.add_row(std::move(e), RowKind::Le, 0.0);
    }
    LinExpr budget = LinExpr::var(lay.phi_inv_saa(p), -inst.assets.eta_inv);
    for (int i = 0; i < I; ++i) budget.add(lay.y_inv_saa(p, i), inv_i);
    prog.add_row(std::move(budget), RowKind::Le, 0.0);
  }

  lay.var_count = prog.num_vars();
  return m;
}

}  // namespace gridval
