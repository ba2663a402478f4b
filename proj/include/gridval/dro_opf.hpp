#pragma once

// Chance-constrained operation of a radial feeder under PV and load
// uncertainty. Two assembly paths share one decision layout and one
// linearized voltage model:
//
//   build_saa      optimizes against the empirical sample distribution,
//   build_msw_dro  optimizes against the worst distribution within a
//                  1-Wasserstein ball around each provider's samples.
//
// The robust path collapses to the sample-average path when every radius
// is zero, which the tests pin down numerically.

#include <Eigen/Dense>
#include <vector>

#include "gridval/case_io.hpp"
#include "gridval/conic.hpp"
#include "gridval/lindistflow.hpp"
#include "gridval/uncertainty.hpp"

namespace gridval {

// Everything a single-hour solve needs. Self-contained by value; instances
// are cheap at feeder scale and assembly stays a pure function.
struct OpfInstance {
  Network net;
  VoltageSensitivity sens;
  AssetTable assets;
  ClusterSet clusters;
  FeatureIndex index;
  SampleSet samples;
  SupportBox support;
  QualityInfo quality;
  int hour = 0;
};

OpfInstance make_instance(const Network& net, const AssetTable& assets,
                          const ClusterSet& clusters, const SampleSet& samples,
                          const SupportBox& support, const QualityInfo& quality,
                          int hour = 0);

// Throws on dangling cross-references, empty samples, misaligned sample
// counts, nonfinite or negative radii, and inconsistent support boxes.
void validate_instance(const OpfInstance& inst);

// Start column of each cluster's block in the stacked feature vector, with
// the total dimension appended as the last entry.
std::vector<int> feature_offsets(const FeatureIndex& index);

// The two-sided voltage limits as K = 2n halfspaces. Row k < n encodes
// "squared voltage at node k stays below vmax", row n + k the vmin side.
// The value of row k at uncertainty delta (feature units, stacked in
// cluster order) and decisions (alpha, p_B, q_c, q_B) is
//
//   sum_g (coef(k,g) + alpha_coef(k,g) * alpha[node(g)]) * delta[g]
//     + c0(k) + sum_j pb_coef(k,j) * pB[j] + qcb_coef(k,j) * (qc[j]+qB[j])
//
// and the limit holds iff the value is <= 0.
struct VoltageHalfspaces {
  Eigen::MatrixXd coef;        // K x D
  Eigen::MatrixXd alpha_coef;  // K x D, nonzero only on PV power columns
  Eigen::MatrixXd pb_coef;     // K x n
  Eigen::MatrixXd qcb_coef;    // K x n
  Eigen::VectorXd c0;          // K
  std::vector<int> col_node;   // D: node of each feature column
  std::vector<int> col_cluster;
};

VoltageHalfspaces assemble_voltage_halfspaces(const OpfInstance& inst);

// Variable positions inside the assembled program. Fields set to -1 do not
// exist on the path that built the layout. Block bases are flat; the
// accessors encode the index arithmetic.
struct DecisionLayout {
  int n = 0;  // nodes
  int F = 0;  // clusters
  int I = 0;  // samples
  int K = 0;  // voltage halfspaces, 2n
  int D = 0;  // stacked feature dimension
  std::vector<int> pv_nodes;  // nodes with inverter decisions, ascending
  std::vector<int> pv_slot;   // node -> slot in pv_nodes, -1 elsewhere

  // Physical decisions, one per node; fixed to zero where not applicable.
  int alpha0 = -1;  // curtailment fraction
  int qc0 = -1;     // inverter reactive setpoint
  int pb0 = -1;     // storage active setpoint
  int qb0 = -1;     // storage reactive setpoint
  // Epigraphs of |qc| and |qB| carrying the reactive cost.
  int abs_qc0 = -1;
  int abs_qb0 = -1;
  // Per PV slot: t >= (1-alpha)^2 and r >= qc^2 (second-order cones).
  int t_curt0 = -1;
  int r_qc0 = -1;

  // Sample-average path.
  int cost_epi0 = -1;     // n*I, hinge cost epigraph per node and sample
  int phi_volt_saa = -1;  // CVaR shift, voltage
  int y_volt0 = -1;       // I
  int phi_inv_saa0 = -1;  // per PV slot
  int y_inv_saa0 = -1;    // PV*I

  // Robust path.
  int lam_cost0 = -1;    // F, transport price of the cost objective
  int lam_volt0 = -1;    // F, transport price of the voltage block
  int lam_inv0 = -1;     // per PV slot
  int s_cost_bal0 = -1;  // n*I, worst-case balance cost per node and sample
  int s_cost_curt0 = -1; // PV*I, worst-case curtailment cost
  int s_volt0 = -1;      // I
  int s_inv0 = -1;       // PV*I
  int z0 = -1;           // K*I*D, per-coordinate transport duals
  int u0 = -1;           // K*I*D, upper support weights
  int l0 = -1;           // K*I*D, lower support weights
  int cap_volt = -1;     // risk budget variable paired with shift_volt
  int shift_volt = -1;   // CVaR shift, <= 0
  int cap_inv0 = -1;     // per PV slot
  int shift_inv0 = -1;   // per PV slot

  int var_count = 0;

  int alpha(int node) const { return alpha0 + node; }
  int qc(int node) const { return qc0 + node; }
  int pb(int node) const { return pb0 + node; }
  int qb(int node) const { return qb0 + node; }
  int abs_qc(int node) const { return abs_qc0 + node; }
  int abs_qb(int node) const { return abs_qb0 + node; }
  int t_curt(int slot) const { return t_curt0 + slot; }
  int r_qc(int slot) const { return r_qc0 + slot; }
  int cost_epi(int node, int i) const { return cost_epi0 + node * I + i; }
  int y_volt(int i) const { return y_volt0 + i; }
  int phi_inv_saa(int slot) const { return phi_inv_saa0 + slot; }
  int y_inv_saa(int slot, int i) const { return y_inv_saa0 + slot * I + i; }
  int lam_cost(int f) const { return lam_cost0 + f; }
  int lam_volt(int f) const { return lam_volt0 + f; }
  int lam_inv(int slot) const { return lam_inv0 + slot; }
  int s_cost_bal(int node, int i) const { return s_cost_bal0 + node * I + i; }
  int s_cost_curt(int slot, int i) const { return s_cost_curt0 + slot * I + i; }
  int s_volt(int i) const { return s_volt0 + i; }
  int s_inv(int slot, int i) const { return s_inv0 + slot * I + i; }
  int z(int k, int i, int g) const { return z0 + (k * I + i) * D + g; }
  int u(int k, int i, int g) const { return u0 + (k * I + i) * D + g; }
  int l(int k, int i, int g) const { return l0 + (k * I + i) * D + g; }
  int cap_inv(int slot) const { return cap_inv0 + slot; }
  int shift_inv(int slot) const { return shift_inv0 + slot; }
};

// Row ids whose duals price the risk budgets, for sensitivity reporting.
struct ConstraintHandles {
  int volt_budget = -1;
  std::vector<int> inv_budget;  // per PV slot
};

struct BuiltModel {
  ConicProgram prog;
  DecisionLayout layout;
  ConstraintHandles handles;
};

BuiltModel build_saa(const OpfInstance& inst);
BuiltModel build_msw_dro(const OpfInstance& inst);

// Exact CVaR of an empirical distribution at level eta in (0, 1]:
// min over t of t + mean([loss - t]+) / eta. Throws on empty input.
double empirical_cvar(const std::vector<double>& losses, double eta);

struct Decisions {
  Eigen::VectorXd alpha, qc, pb, qb;
};

Decisions extract_decisions(const DecisionLayout& layout, const Solution& sol);

// Realized operating cost of fixed decisions under sample i (kW samples).
double realized_cost(const OpfInstance& inst, const Decisions& dec,
                     const SampleSet& samples, int i);

// Largest halfspace value over all 2n voltage rows for sample i; <= 0
// means every node stays inside its band.
double max_voltage_gap(const VoltageHalfspaces& hs, const Decisions& dec,
                       const SampleSet& samples, const FeatureIndex& index,
                       int i);

bool voltage_feasible(const VoltageHalfspaces& hs, const Decisions& dec,
                      const SampleSet& samples, const FeatureIndex& index,
                      int i, double tol = 1e-9);

// Appends, for every sample i, rows enforcing
//
//   s_i >= sup over delta in the box of
//          max_k (<a_k, delta> + c_k) - sum_f lam_f * ||delta_f - dhat_f,i||_1
//
// via per-coordinate transport duals z (free), u, l (nonnegative), which
// the caller preallocates as K*I*D blocks at z0/u0/l0. Entries of a and c
// may be affine in other decision variables. dhat, lo, hi are per cluster
// in feature units. Callers give the s variables lower bound 0 when the
// piece list should behave as if it also contained an all-zero row.
void append_transport_sup_rows(ConicProgram& prog,
                               const std::vector<std::vector<LinExpr>>& a,
                               const std::vector<LinExpr>& c,
                               const std::vector<Eigen::MatrixXd>& dhat,
                               const std::vector<Eigen::VectorXd>& lo,
                               const std::vector<Eigen::VectorXd>& hi,
                               const std::vector<int>& lam,
                               const std::vector<int>& s,
                               const std::vector<int>& col_cluster, int z0,
                               int u0, int l0);

}  // namespace gridval
