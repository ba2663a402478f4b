#include "gridval/valuation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <utility>

#include "json.hpp"

namespace gridval {

namespace {

[[noreturn]] void val_fail(const std::string& what) {
  throw std::runtime_error("valuation error: " + what);
}

std::string g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct SolvedInstance {
  OpfInstance inst;
  BuiltModel model;
  Solution sol;
};

SolvedInstance solve_at(const OpfInstance& base, std::vector<double> eps,
                        const SolveConfig& cfg) {
  SolvedInstance r;
  r.inst = base;
  r.inst.quality.eps = std::move(eps);
  r.model = build_msw_dro(r.inst);
  r.sol = solve(r.model.prog, cfg);
  if (!r.sol.optimal())
    val_fail(std::string("robust solve returned ") + to_string(r.sol.status));
  return r;
}

}  // namespace

DataValueReport marginal_data_value(const BuiltModel& model,
                                    const Solution& sol,
                                    const OpfInstance& inst) {
  const DecisionLayout& lay = model.layout;
  if (!sol.optimal())
    val_fail(std::string("solution status is ") + to_string(sol.status));
  if (static_cast<int>(sol.x.size()) != model.prog.num_vars())
    val_fail("solution does not match the model");
  if (static_cast<int>(sol.row_dual.size()) != model.prog.num_rows())
    val_fail("solution carries no row duals");
  if (lay.lam_cost0 < 0 || lay.lam_volt0 < 0 || model.handles.volt_budget < 0)
    val_fail("model was built without the robust blocks");
  if (static_cast<int>(inst.quality.eps.size()) != lay.F ||
      static_cast<int>(inst.clusters.node_to_cluster.size()) != lay.n)
    val_fail("instance does not match the model layout");

  DataValueReport r;
  r.objective = sol.objective;
  r.eps = inst.quality.eps;
  r.phi_vol = sol.row_dual[model.handles.volt_budget];
  r.pv_nodes = lay.pv_nodes;
  const int P = static_cast<int>(lay.pv_nodes.size());
  if (static_cast<int>(model.handles.inv_budget.size()) != P)
    val_fail("inverter budget handles are incomplete");
  r.lambda_inv.resize(P);
  r.phi_inv.resize(P);
  for (int p = 0; p < P; ++p) {
    r.lambda_inv[p] = sol.x[lay.lam_inv(p)];
    r.phi_inv[p] = sol.row_dual[model.handles.inv_budget[p]];
  }

  const KktReport kkt = check_kkt(model.prog, sol);
  r.rel_gap = kkt.rel_gap;
  r.comp_slackness = kkt.comp_slackness;
  r.degenerate = kkt.rel_gap > 1e-7 || kkt.comp_slackness > 1e-5;

  r.clusters.resize(lay.F);
  for (int f = 0; f < lay.F; ++f) {
    ClusterValue& cv = r.clusters[f];
    cv.cluster = f;
    cv.lambda_co = sol.x[lay.lam_cost(f)];
    cv.lambda_vol = sol.x[lay.lam_volt(f)];
    cv.mu = cv.lambda_co + r.phi_vol * cv.lambda_vol;
    for (int p = 0; p < P; ++p) {
      if (inst.clusters.node_to_cluster[lay.pv_nodes[p]] != f) continue;
      cv.sum_lambda_inv += r.lambda_inv[p];
      cv.mu += r.phi_inv[p] * r.lambda_inv[p];
    }
  }
  return r;
}

std::string to_csv(const DataValueReport& r) {
  std::string out = "f,lambda_co,lambda_vol,sum_lambda_inv,phi_vol,mu\n";
  for (const ClusterValue& cv : r.clusters) {
    out += std::to_string(cv.cluster) + ',' + g17(cv.lambda_co) + ',' +
           g17(cv.lambda_vol) + ',' + g17(cv.sum_lambda_inv) + ',' +
           g17(r.phi_vol) + ',' + g17(cv.mu) + '\n';
  }
  return out;
}

std::string to_json(const DataValueReport& r) {
  nlohmann::json j;
  j["objective"] = r.objective;
  j["eps"] = r.eps;
  j["phi_vol"] = r.phi_vol;
  j["pv_nodes"] = r.pv_nodes;
  j["lambda_inv"] = r.lambda_inv;
  j["phi_inv"] = r.phi_inv;
  j["degenerate"] = r.degenerate;
  j["rel_gap"] = r.rel_gap;
  j["comp_slackness"] = r.comp_slackness;
  j["clusters"] = nlohmann::json::array();
  for (const ClusterValue& cv : r.clusters) {
    j["clusters"].push_back({{"f", cv.cluster},
                             {"lambda_co", cv.lambda_co},
                             {"lambda_vol", cv.lambda_vol},
                             {"sum_lambda_inv", cv.sum_lambda_inv},
                             {"mu", cv.mu}});
  }
  return j.dump(2) + "\n";
}

CriticalEpsReport critical_epsilon(const OpfInstance& inst, int cluster,
                                   const CriticalEpsOptions& opts) {
  const int F = inst.clusters.num_clusters();
  if (cluster < 0 || cluster >= F)
    throw std::invalid_argument("valuation error: cluster out of range");
  if (opts.grid.empty())
    throw std::invalid_argument("valuation error: empty radius grid");
  for (size_t g = 0; g + 1 < opts.grid.size(); ++g)
    if (!(opts.grid[g] > opts.grid[g + 1]))
      throw std::invalid_argument(
          "valuation error: radius grid must be strictly descending");
  if (!(opts.grid.back() >= 0.0) || !(opts.fixed_eps >= 0.0))
    throw std::invalid_argument("valuation error: radii must be nonnegative");

  CriticalEpsReport rep;
  rep.cluster = cluster;
  rep.grid = opts.grid;
  rep.fixed_eps = opts.fixed_eps;
  rep.vanish_tol = opts.vanish_tol;
  rep.co.family = "co";
  rep.vol.family = "vol";
  rep.inv.family = "inv";
  rep.co.n_lambdas = 1;
  rep.vol.n_lambdas = 1;

  for (const double g : opts.grid) {
    std::vector<double> eps(F, opts.fixed_eps);
    eps[cluster] = g;
    const SolvedInstance st = solve_at(inst, std::move(eps), opts.solve);
    const DecisionLayout& lay = st.model.layout;

    std::vector<int> inv_vars;
    double lam_inv_max = 0.0;
    for (size_t p = 0; p < lay.pv_nodes.size(); ++p) {
      if (inst.clusters.node_to_cluster[lay.pv_nodes[p]] != cluster) continue;
      inv_vars.push_back(lay.lam_inv(int(p)));
      lam_inv_max = std::max(lam_inv_max, st.sol.x[inv_vars.back()]);
    }
    rep.inv.n_lambdas = static_cast<int>(inv_vars.size());

    const double tol =
        opts.vanish_tol * std::max(1.0, std::abs(st.sol.objective));
    rep.objective.push_back(st.sol.objective);

    struct Probe {
      FamilyCritical* fam;
      double raw;
      std::vector<int> vars;
    };
    const Probe probes[] = {
        {&rep.co, st.sol.x[lay.lam_cost(cluster)], {lay.lam_cost(cluster)}},
        {&rep.vol, st.sol.x[lay.lam_volt(cluster)], {lay.lam_volt(cluster)}},
        {&rep.inv, lam_inv_max, inv_vars}};
    for (const Probe& pr : probes) {
      pr.fam->lambda_max.push_back(pr.raw);
      bool vanished = pr.raw <= tol;
      if (!vanished) {
        // A slack budget row leaves the transport price on a flat optimal
        // face, where the interior-point iterate is arbitrary. Pin the
        // family to zero: an unchanged objective means the data is unused.
        ConicProgram pinned = st.model.prog;
        for (const int v : pr.vars) pinned.set_bounds(v, 0.0, 0.0);
        const Solution psol = solve(pinned, opts.solve);
        if (!psol.optimal())
          val_fail(std::string("pinned solve returned ") +
                   to_string(psol.status));
        vanished = psol.objective <= st.sol.objective + tol;
      }
      if (vanished) pr.fam->vanish_eps.push_back(g);
    }
  }

  for (FamilyCritical* fam : {&rep.co, &rep.vol, &rep.inv}) {
    fam->found = !fam->vanish_eps.empty();
    if (fam->found)
      fam->critical_eps =
          *std::min_element(fam->vanish_eps.begin(), fam->vanish_eps.end());
  }
  return rep;
}

std::string to_csv(const CriticalEpsReport& r) {
  std::string out = "f,family,n_lambdas,found,critical_eps,vanish_eps\n";
  for (const FamilyCritical* fam : {&r.co, &r.vol, &r.inv}) {
    out += std::to_string(r.cluster) + ',' + fam->family + ',' +
           std::to_string(fam->n_lambdas) + ',' + (fam->found ? "1" : "0") +
           ',' + (fam->found ? g17(fam->critical_eps) : "above_grid_max") +
           ',';
    for (size_t i = 0; i < fam->vanish_eps.size(); ++i) {
      if (i) out += ';';
      out += g17(fam->vanish_eps[i]);
    }
    out += '\n';
  }
  return out;
}

std::string to_json(const CriticalEpsReport& r) {
  nlohmann::json j;
  j["cluster"] = r.cluster;
  j["grid"] = r.grid;
  j["fixed_eps"] = r.fixed_eps;
  j["vanish_tol"] = r.vanish_tol;
  j["objective"] = r.objective;
  for (const FamilyCritical* fam : {&r.co, &r.vol, &r.inv}) {
    nlohmann::json f;
    f["n_lambdas"] = fam->n_lambdas;
    f["found"] = fam->found;
    if (fam->found) f["critical_eps"] = fam->critical_eps;
    f["vanish_eps"] = fam->vanish_eps;
    f["lambda_max"] = fam->lambda_max;
    j[fam->family] = std::move(f);
  }
  return j.dump(2) + "\n";
}

EnvelopeCheck envelope_fd_check(const OpfInstance& inst, int cluster, double h,
                                const SolveConfig& cfg) {
  const int F = inst.clusters.num_clusters();
  if (cluster < 0 || cluster >= F)
    throw std::invalid_argument("valuation error: cluster out of range");
  if (!(h > 0.0))
    throw std::invalid_argument("valuation error: step must be positive");
  if (static_cast<int>(inst.quality.eps.size()) != F)
    throw std::invalid_argument("valuation error: radius vector size");
  const double eps0 = inst.quality.eps[cluster];
  if (eps0 - h < 0.0)
    throw std::invalid_argument(
        "valuation error: step reaches below radius zero");

  const SolvedInstance mid = solve_at(inst, inst.quality.eps, cfg);
  const DataValueReport rep = marginal_data_value(mid.model, mid.sol, mid.inst);

  std::vector<double> eplus = inst.quality.eps;
  eplus[cluster] = eps0 + h;
  std::vector<double> eminus = inst.quality.eps;
  eminus[cluster] = eps0 - h;
  const double jp = solve_at(inst, std::move(eplus), cfg).sol.objective;
  const double jm = solve_at(inst, std::move(eminus), cfg).sol.objective;
  const double j0 = mid.sol.objective;

  EnvelopeCheck c;
  c.cluster = cluster;
  c.eps = eps0;
  c.h = h;
  c.mu = rep.clusters[cluster].mu;
  c.fd = (jp - jm) / (2.0 * h);
  c.fwd = (jp - j0) / h;
  c.bwd = (j0 - jm) / h;
  c.rel_gap =
      std::abs(c.mu - c.fd) / std::max({std::abs(c.mu), std::abs(c.fd), 1e-12});
  c.kink = std::abs(c.fwd - c.bwd) >
           0.05 * std::max(std::abs(c.fwd), std::abs(c.bwd)) +
               1e-3 * (1.0 + std::abs(c.fd));
  c.degenerate = rep.degenerate;
  return c;
}

}  // namespace gridval
