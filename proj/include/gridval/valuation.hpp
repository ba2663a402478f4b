#pragma once

// Marginal value of data quality. After a robust solve, the transport prices
// lambda and the duals of the risk-budget rows combine into mu_f, the rate at
// which the optimal worst-case cost drops per unit of ambiguity-radius
// reduction for provider f:
//
//   mu_f = lambda^co_f + phi^vol * lambda^vol_f
//          + sum over PV nodes n of provider f of phi^inv_n * lambda^inv_n
//
// where phi^vol and phi^inv_n are the multipliers of the voltage and inverter
// budget rows. The radius eps_f enters the program only through the objective
// coefficient of lambda^co_f and the budget-row coefficients of lambda^vol_f
// and lambda^inv_n, so mu_f is the envelope derivative dJ*/deps_f wherever
// the active set is stable. envelope_fd_check validates that numerically;
// critical_epsilon locates the radii beyond which a provider's data stops
// mattering to each constraint family.

#include <string>
#include <vector>

#include "gridval/dro_opf.hpp"

namespace gridval {

struct ClusterValue {
  int cluster = 0;
  double lambda_co = 0.0;
  double lambda_vol = 0.0;
  double sum_lambda_inv = 0.0;  // over the provider's PV nodes
  double mu = 0.0;
};

struct DataValueReport {
  double objective = 0.0;
  std::vector<double> eps;  // radii the solve used, feature units
  double phi_vol = 0.0;     // voltage budget row multiplier
  std::vector<int> pv_nodes;
  std::vector<double> lambda_inv;  // per PV slot
  std::vector<double> phi_inv;     // per PV slot, budget row multiplier
  std::vector<ClusterValue> clusters;
  // Multipliers at a degenerate optimum are not unique; flagged when the
  // relative duality gap exceeds 1e-7 or complementary slackness 1e-5.
  bool degenerate = false;
  double rel_gap = 0.0;
  double comp_slackness = 0.0;
};

std::string to_csv(const DataValueReport& r);
std::string to_json(const DataValueReport& r);

// Assembles the report from a solved robust model. The instance supplies the
// node-to-provider map and the radii. Throws "valuation error" when the
// solution is not optimal, carries no duals, or the model was built without
// the robust blocks; missing duals are never reported as zeros.
DataValueReport marginal_data_value(const BuiltModel& model,
                                    const Solution& sol,
                                    const OpfInstance& inst);

struct CriticalEpsOptions {
  // Descending radii to scan for cluster f while every other cluster is held
  // at fixed_eps. A grid rather than bisection: lambda(eps) need not be
  // monotone, so the full vanish set is recorded.
  std::vector<double> grid = {1.0, 0.5, 0.1, 0.05, 0.01, 0.005, 0.001, 0.0001};
  double fixed_eps = 0.01;
  // A family counts as vanished when its largest lambda is below
  // vanish_tol * max(1, |objective|), or when re-solving with the family
  // pinned to zero moves the objective by less than that. The second test
  // matters because a slack budget row leaves the price on a flat optimal
  // face where the interior-point iterate is arbitrary.
  double vanish_tol = 1e-6;
  SolveConfig solve;
};

struct FamilyCritical {
  std::string family;  // "co", "vol", or "inv"
  int n_lambdas = 0;   // lambdas in the family (0: no PV nodes in cluster)
  bool found = false;  // false: never vanished, critical radius above grid max
  double critical_eps = 0.0;        // smallest grid point in vanish_eps
  std::vector<double> vanish_eps;   // grid points where the family vanished
  std::vector<double> lambda_max;   // per grid point, largest family lambda
};

struct CriticalEpsReport {
  int cluster = 0;
  std::vector<double> grid;
  double fixed_eps = 0.0;
  double vanish_tol = 0.0;
  std::vector<double> objective;  // per grid point
  FamilyCritical co, vol, inv;
};

std::string to_csv(const CriticalEpsReport& r);
std::string to_json(const CriticalEpsReport& r);

// One robust solve per grid point. Throws on a non-descending grid, an out of
// range cluster, or any solver failure.
CriticalEpsReport critical_epsilon(const OpfInstance& inst, int cluster,
                                   const CriticalEpsOptions& opts = {});

struct EnvelopeCheck {
  int cluster = 0;
  double eps = 0.0;  // center radius for cluster f
  double h = 0.0;
  double mu = 0.0;   // dual-based value at the center
  double fd = 0.0;   // central difference of the optimal objective
  double fwd = 0.0;  // one-sided differences
  double bwd = 0.0;
  double rel_gap = 0.0;  // |mu - fd| / max(|mu|, |fd|, 1e-12)
  // The envelope identity holds only off active-set changes. Flagged when
  // the one-sided differences disagree: |fwd - bwd| exceeds
  // 0.05 * max(|fwd|, |bwd|) + 1e-3 * (1 + |fd|).
  bool kink = false;
  bool degenerate = false;
};

// Three robust solves (center, +h, -h) comparing mu_f against the central
// finite difference. Requires eps_f - h >= 0.
EnvelopeCheck envelope_fd_check(const OpfInstance& inst, int cluster, double h,
                                const SolveConfig& cfg = {});

}  // namespace gridval
