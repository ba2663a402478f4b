#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "gridval/dro_opf.hpp"

namespace gridval {

namespace {

[[noreturn]] void build_fail(const std::string& what) {
  throw std::runtime_error("model build error: " + what);
}

}  // namespace

OpfInstance make_instance(const Network& net, const AssetTable& assets,
                          const ClusterSet& clusters, const SampleSet& samples,
                          const SupportBox& support, const QualityInfo& quality,
                          int hour) {
  OpfInstance inst;
  inst.net = net;
  inst.sens = sensitivity_matrices(net);
  inst.assets = assets;
  inst.clusters = clusters;
  inst.index = feature_index_map(clusters);
  inst.samples = samples;
  inst.support = support;
  inst.quality = quality;
  inst.hour = hour;
  validate_instance(inst);
  return inst;
}

void validate_instance(const OpfInstance& inst) {
  const int n = inst.net.n();
  const int F = inst.clusters.num_clusters();
  if (n <= 0) build_fail("network has no nodes");
  if (static_cast<int>(inst.clusters.node_to_cluster.size()) != n)
    build_fail("cluster partition does not cover the network");
  if (static_cast<int>(inst.assets.pv_kw.size()) != n)
    build_fail("asset table sized for a different network");
  if (inst.assets.vmin >= inst.assets.vmax)
    build_fail("empty voltage band");
  if (inst.sens.R.rows() != n) build_fail("stale voltage sensitivities");

  if (static_cast<int>(inst.samples.delta.size()) != F ||
      static_cast<int>(inst.support.lo.size()) != F ||
      static_cast<int>(inst.support.hi.size()) != F)
    build_fail("samples or support sized for a different cluster set");
  if (static_cast<int>(inst.quality.eps.size()) != F)
    build_fail("one radius per provider required");

  if (inst.samples.I < 1) build_fail("at least one sample required");
  for (int f = 0; f < F; ++f) {
    const int dim = inst.index.dim(f);
    if (inst.samples.delta[f].rows() != inst.samples.I)
      build_fail("sample counts differ across providers; "
                 "aligned sample indices are required");
    if (inst.samples.delta[f].cols() != dim ||
        inst.support.lo[f].size() != dim || inst.support.hi[f].size() != dim)
      build_fail("feature dimension mismatch");
    const double eps = inst.quality.eps[f];
    if (!std::isfinite(eps) || eps < 0.0)
      build_fail("radii must be finite and nonnegative");
    for (int m = 0; m < dim; ++m) {
      if (inst.support.lo[f][m] > inst.support.hi[f][m] + 1e-12)
        build_fail("support box has lo > hi");
      for (int i = 0; i < inst.samples.I; ++i) {
        const double v = inst.samples.delta[f](i, m);
        if (v < inst.support.lo[f][m] - 1e-9 ||
            v > inst.support.hi[f][m] + 1e-9)
          build_fail("sample outside the declared support");
      }
    }
  }

  for (int j = 0; j < n; ++j) {
    if (inst.assets.pb_min_kw[j] > inst.assets.pb_max_kw[j] ||
        inst.assets.qb_min_kvar[j] > inst.assets.qb_max_kvar[j])
      build_fail("storage box has lo > hi");
    if (inst.assets.pv_kw[j] > 0.0) continue;
    const int f = inst.clusters.node_to_cluster[j];
    const int m = inst.index.pav_position(f, j);
    if (inst.samples.delta[f].col(m).maxCoeff() > 1e-9 ||
        inst.support.hi[f][m] > 1e-9)
      throw std::runtime_error(
          "support inconsistency error: PV power samples at a node with no "
          "inverter rating");
  }
}

std::vector<int> feature_offsets(const FeatureIndex& index) {
  std::vector<int> off;
  int acc = 0;
  for (int f = 0; f < index.num_clusters(); ++f) {
    off.push_back(acc);
    acc += index.dim(f);
  }
  off.push_back(acc);
  return off;
}

VoltageHalfspaces assemble_voltage_halfspaces(const OpfInstance& inst) {
  const int n = inst.net.n();
  const int K = 2 * n;
  const std::vector<int> off = feature_offsets(inst.index);
  const int D = off.back();
  const double inv_base = 1.0 / inst.net.base_mva;

  VoltageHalfspaces hs;
  hs.coef = Eigen::MatrixXd::Zero(K, D);
  hs.alpha_coef = Eigen::MatrixXd::Zero(K, D);
  hs.pb_coef = Eigen::MatrixXd::Zero(K, n);
  hs.qcb_coef = Eigen::MatrixXd::Zero(K, n);
  hs.c0.resize(K);
  hs.col_node.resize(D);
  hs.col_cluster.resize(D);

  for (int f = 0; f < inst.index.num_clusters(); ++f)
    for (int m = 0; m < inst.index.dim(f); ++m) {
      hs.col_node[off[f] + m] = inst.index.node_feature(f, m).first;
      hs.col_cluster[off[f] + m] = f;
    }

  for (int k = 0; k < n; ++k) {
    hs.c0[k] = inst.sens.a[k] - inst.assets.vmax;
    hs.c0[n + k] = inst.assets.vmin - inst.sens.a[k];
    for (int j = 0; j < n; ++j) {
      const double r = inst.sens.R(k, j) * inv_base;
      const double b = inst.sens.B(k, j) * inv_base;
      hs.pb_coef(k, j) = r;
      hs.pb_coef(n + k, j) = -r;
      hs.qcb_coef(k, j) = b;
      hs.qcb_coef(n + k, j) = -b;
      const int f = inst.clusters.node_to_cluster[j];
      const int g_pav = off[f] + inst.index.pav_position(f, j);
      const int g_pl = off[f] + inst.index.pl_position(f, j);
      const int g_ql = off[f] + inst.index.position(f, j, Feature::QLoad);
      hs.coef(k, g_pav) = r;
      hs.alpha_coef(k, g_pav) = -r;
      hs.coef(k, g_pl) = -r;
      hs.coef(k, g_ql) = -b;
      hs.coef(n + k, g_pav) = -r;
      hs.alpha_coef(n + k, g_pav) = r;
      hs.coef(n + k, g_pl) = r;
      hs.coef(n + k, g_ql) = b;
    }
  }
  return hs;
}

double empirical_cvar(const std::vector<double>& losses, double eta) {
  if (losses.empty()) throw std::invalid_argument("empirical_cvar: no losses");
  if (!(eta > 0.0) || eta > 1.0)
    throw std::invalid_argument("empirical_cvar: eta outside (0, 1]");
  const double inv = 1.0 / (eta * static_cast<double>(losses.size()));
  double best = std::numeric_limits<double>::infinity();
  for (const double t : losses) {
    double v = t;
    for (const double x : losses) v += inv * std::max(x - t, 0.0);
    best = std::min(best, v);
  }
  return best;
}

Decisions extract_decisions(const DecisionLayout& layout,
                            const Solution& sol) {
  Decisions d;
  d.alpha.resize(layout.n);
  d.qc.resize(layout.n);
  d.pb.resize(layout.n);
  d.qb.resize(layout.n);
  for (int j = 0; j < layout.n; ++j) {
    d.alpha[j] = sol.x[layout.alpha(j)];
    d.qc[j] = sol.x[layout.qc(j)];
    d.pb[j] = sol.x[layout.pb(j)];
    d.qb[j] = sol.x[layout.qb(j)];
  }
  return d;
}

double realized_cost(const OpfInstance& inst, const Decisions& dec,
                     const SampleSet& samples, int i) {
  const int n = inst.net.n();
  double total = 0.0;
  for (int j = 0; j < n; ++j) {
    const int f = inst.clusters.node_to_cluster[j];
    const double pav =
        samples.delta[f](i, inst.index.pav_position(f, j)) / kKwPerFeatureUnit;
    const double pl =
        samples.delta[f](i, inst.index.pl_position(f, j)) / kKwPerFeatureUnit;
    const double shortfall = pl - dec.pb[j] - (1.0 - dec.alpha[j]) * pav;
    total += inst.assets.cost_c[j] * std::max(shortfall, 0.0) +
             inst.assets.cost_d[j] * std::max(-shortfall, 0.0) +
             inst.assets.cost_e[j] * (std::fabs(dec.qc[j]) + std::fabs(dec.qb[j])) +
             inst.assets.cost_h[j] * dec.alpha[j] * pav;
  }
  return total;
}

double max_voltage_gap(const VoltageHalfspaces& hs, const Decisions& dec,
                       const SampleSet& samples, const FeatureIndex& index,
                       int i) {
  const int K = static_cast<int>(hs.c0.size());
  const int D = static_cast<int>(hs.col_node.size());
  const std::vector<int> off = feature_offsets(index);
  Eigen::VectorXd delta(D);
  for (int g = 0; g < D; ++g) {
    const int f = hs.col_cluster[g];
    delta[g] = samples.delta[f](i, g - off[f]) / kKwPerFeatureUnit;
  }
  double worst = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < K; ++k) {
    double v = hs.c0[k];
    for (int g = 0; g < D; ++g)
      v += (hs.coef(k, g) + hs.alpha_coef(k, g) * dec.alpha[hs.col_node[g]]) *
           delta[g];
    v += hs.pb_coef.row(k).dot(dec.pb) +
         hs.qcb_coef.row(k).dot(dec.qc + dec.qb);
    worst = std::max(worst, v);
  }
  return worst;
}

bool voltage_feasible(const VoltageHalfspaces& hs, const Decisions& dec,
                      const SampleSet& samples, const FeatureIndex& index,
                      int i, double tol) {
  return max_voltage_gap(hs, dec, samples, index, i) <= tol;
}

void append_transport_sup_rows(ConicProgram& prog,
                               const std::vector<std::vector<LinExpr>>& a,
                               const std::vector<LinExpr>& c,
                               const std::vector<Eigen::MatrixXd>& dhat,
                               const std::vector<Eigen::VectorXd>& lo,
                               const std::vector<Eigen::VectorXd>& hi,
                               const std::vector<int>& lam,
                               const std::vector<int>& s,
                               const std::vector<int>& col_cluster, int z0,
                               int u0, int l0) {
  const int K = static_cast<int>(a.size());
  const int I = static_cast<int>(s.size());
  const int D = static_cast<int>(col_cluster.size());
  std::vector<int> local(D);  // column within its cluster block
  {
    std::vector<int> seen(lam.size(), 0);
    for (int g = 0; g < D; ++g) local[g] = seen[col_cluster[g]]++;
  }
  for (int k = 0; k < K; ++k) {
    for (int i = 0; i < I; ++i) {
      const int base = (k * I + i) * D;
      LinExpr srow = c[k];
      srow.terms.reserve(srow.terms.size() + 3 * D + 1);
      for (int g = 0; g < D; ++g) {
        const int f = col_cluster[g];
        const int zv = z0 + base + g;
        const int uv = u0 + base + g;
        const int lv = l0 + base + g;
        // Split a_k(g) across the ball (z) and the box faces (u, l).
        LinExpr split = a[k][g];
        split.terms.push_back({zv, -1.0});
        split.terms.push_back({uv, -1.0});
        split.terms.push_back({lv, 1.0});
        prog.add_row(std::move(split), RowKind::Eq, 0.0);
        prog.add_row(LinExpr::var(zv) + LinExpr::var(lam[f], -1.0),
                     RowKind::Le, 0.0);
        prog.add_row(LinExpr::var(zv, -1.0) + LinExpr::var(lam[f], -1.0),
                     RowKind::Le, 0.0);
        srow.terms.push_back({zv, dhat[f](i, local[g])});
        srow.terms.push_back({uv, hi[f][local[g]]});
        srow.terms.push_back({lv, -lo[f][local[g]]});
      }
      srow.terms.push_back({s[i], -1.0});
      prog.add_row(std::move(srow), RowKind::Le, 0.0);
    }
  }
}

}  // namespace gridval
