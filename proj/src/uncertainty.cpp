#include "gridval/uncertainty.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "gridval/conic.hpp"
#include "json.hpp"

namespace gridval {

namespace {

[[noreturn]] void partition_fail(const std::string& what) {
  throw std::runtime_error("partition error: " + what);
}

uint64_t splitmix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Box-Muller on explicit uniforms so draws are identical across standard
// libraries (std::normal_distribution is implementation-defined).
double standard_normal(std::mt19937_64& rng) {
  const double u1 =
      (static_cast<double>(rng() >> 11) + 1.0) * 0x1p-53;  // (0, 1]
  const double u2 = static_cast<double>(rng() >> 11) * 0x1p-53;  // [0, 1)
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

}  // namespace

uint64_t substream_seed(uint64_t seed, uint64_t tag0, uint64_t tag1) {
  return splitmix64(splitmix64(splitmix64(seed) ^ tag0) ^ tag1);
}

ClusterSet make_clusters(const std::vector<std::vector<int>>& node_lists,
                         int n_nodes) {
  ClusterSet cs;
  cs.clusters = node_lists;
  cs.node_to_cluster.assign(n_nodes, -1);
  for (int f = 0; f < static_cast<int>(node_lists.size()); ++f) {
    for (int node : node_lists[f]) {
      if (node < 0 || node >= n_nodes)
        partition_fail("node index " + std::to_string(node) + " out of range");
      if (cs.node_to_cluster[node] != -1)
        partition_fail("node " + std::to_string(node) +
                       " appears in two clusters");
      cs.node_to_cluster[node] = f;
    }
  }
  for (int n = 0; n < n_nodes; ++n)
    if (cs.node_to_cluster[n] == -1)
      partition_fail("node " + std::to_string(n) + " is in no cluster");
  return cs;
}

ClusterSet default_clusters(const Network& net) {
  static const std::vector<std::pair<int, int>> segments = {
      {2, 10}, {11, 18}, {19, 22}, {23, 25}, {26, 33}};
  bool is33 = net.n() == 32;
  for (int i = 0; is33 && i < net.n(); ++i)
    is33 = net.bus_ids[i] >= 2 && net.bus_ids[i] <= 33;
  if (!is33) {
    std::vector<int> all(net.n());
    for (int i = 0; i < net.n(); ++i) all[i] = i;
    return make_clusters({all}, net.n());
  }
  std::vector<std::vector<int>> lists(segments.size());
  for (size_t f = 0; f < segments.size(); ++f)
    for (int bus = segments[f].first; bus <= segments[f].second; ++bus)
      lists[f].push_back(net.node_index(bus));
  return make_clusters(lists, net.n());
}

ClusterSet clusters_from_config(const std::string& json_text,
                                const Network& net) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text.empty() ? std::string("{}")
                                                  : json_text);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("configuration error: invalid JSON: ") +
                             e.what());
  }
  if (!doc.contains("clusters")) return default_clusters(net);
  std::vector<std::vector<int>> lists;
  for (const auto& arr : doc["clusters"]) {
    std::vector<int> nodes;
    for (const auto& bus : arr) {
      const int idx = net.node_index(bus.get<int>());
      if (idx < 0)
        partition_fail("cluster bus " + std::to_string(bus.get<int>()) +
                       " not in network");
      nodes.push_back(idx);
    }
    lists.push_back(std::move(nodes));
  }
  return make_clusters(lists, net.n());
}

FeatureIndex::FeatureIndex(const ClusterSet& cs) : nodes_(cs.clusters) {
  int n_nodes = static_cast<int>(cs.node_to_cluster.size());
  rank_.assign(nodes_.size(), std::vector<int>(n_nodes, -1));
  for (size_t f = 0; f < nodes_.size(); ++f)
    for (size_t r = 0; r < nodes_[f].size(); ++r)
      rank_[f][nodes_[f][r]] = static_cast<int>(r);
}

int FeatureIndex::position(int cluster, int node, Feature f) const {
  const int r = rank_[cluster][node];
  if (r < 0)
    partition_fail("node " + std::to_string(node) + " not in cluster " +
                   std::to_string(cluster));
  return 3 * r + static_cast<int>(f);
}

std::pair<int, Feature> FeatureIndex::node_feature(int cluster, int m) const {
  return {nodes_[cluster][m / 3], static_cast<Feature>(m % 3)};
}

FeatureIndex feature_index_map(const ClusterSet& cs) {
  return FeatureIndex(cs);
}

SupportBox default_support(const Forecast& fc, const AssetTable& assets,
                           const ClusterSet& cs, const FeatureIndex& fidx) {
  SupportBox box;
  for (int f = 0; f < cs.num_clusters(); ++f) {
    const int d = fidx.dim(f);
    Eigen::VectorXd lo(d), hi(d);
    for (int m = 0; m < d; ++m) {
      const auto [node, feat] = fidx.node_feature(f, m);
      switch (feat) {
        case Feature::PAv:
          if (fc.pav_kw[node] > 0.0 && assets.pv_kw[node] <= 0.0)
            throw std::runtime_error(
                "configuration error: node " + std::to_string(node) +
                " has PV forecast but no inverter rating");
          lo[m] = 0.0;
          hi[m] = assets.pv_kw[node];
          break;
        case Feature::PLoad:
          lo[m] = 0.5 * fc.pl_kw[node];
          hi[m] = 1.2 * fc.pl_kw[node];
          break;
        case Feature::QLoad:
          lo[m] = 0.5 * fc.ql_kvar[node];
          hi[m] = 1.2 * fc.ql_kvar[node];
          break;
      }
    }
    box.lo.push_back(std::move(lo));
    box.hi.push_back(std::move(hi));
  }
  return box;
}

SampleSet generate_samples(const Forecast& fc, double rel_std, int I,
                           uint64_t seed, const SupportBox& support,
                           const ClusterSet& cs, const FeatureIndex& fidx) {
  if (I < 1) throw std::invalid_argument("sample count must be at least 1");
  if (rel_std < 0.0) throw std::invalid_argument("rel_std must be nonnegative");
  SampleSet out;
  out.I = I;
  for (int f = 0; f < cs.num_clusters(); ++f) {
    const int d = fidx.dim(f);
    Eigen::MatrixXd delta(I, d);
    std::mt19937_64 rng(substream_seed(seed, 0x5A4D504CULL, f));
    std::vector<double> mean(d), sd(d);
    for (int m = 0; m < d; ++m) {
      const auto [node, feat] = fidx.node_feature(f, m);
      mean[m] = feat == Feature::PAv    ? fc.pav_kw[node]
                : feat == Feature::PLoad ? fc.pl_kw[node]
                                         : fc.ql_kvar[node];
      sd[m] = rel_std * mean[m];
      if (mean[m] < support.lo[f][m] - 1e-9 ||
          mean[m] > support.hi[f][m] + 1e-9)
        throw std::runtime_error(
            "generation error: forecast mean outside the support box at "
            "cluster " +
            std::to_string(f) + " feature " + std::to_string(m));
    }
    for (int i = 0; i < I; ++i) {
      for (int m = 0; m < d; ++m) {
        double v = mean[m];
        if (sd[m] > 0.0) {
          bool accepted = false;
          for (int tries = 0; tries < 100; ++tries) {
            v = mean[m] + sd[m] * standard_normal(rng);
            if (v >= support.lo[f][m] && v <= support.hi[f][m]) {
              accepted = true;
              break;
            }
          }
          if (!accepted)
            v = std::clamp(v, support.lo[f][m], support.hi[f][m]);
        }
        delta(i, m) = v;
      }
    }
    out.delta.push_back(std::move(delta));
  }
  return out;
}

double wasserstein_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                            int p) {
  if (p != 1)
    throw std::invalid_argument("only order p = 1 is supported");
  const int ia = static_cast<int>(a.rows()), ib = static_cast<int>(b.rows());
  if (ia == 0 || ib == 0)
    throw std::invalid_argument("empty empirical distribution");
  if (a.cols() != b.cols())
    throw std::invalid_argument("atom dimension mismatch");

  ConicProgram lp;
  for (int i = 0; i < ia; ++i)
    for (int j = 0; j < ib; ++j)
      lp.add_var(0.0, kInf, (a.row(i) - b.row(j)).cwiseAbs().sum());
  for (int i = 0; i < ia; ++i) {
    LinExpr row;
    for (int j = 0; j < ib; ++j) row.add(i * ib + j, 1.0);
    lp.add_row(row, RowKind::Eq, 1.0 / ia);
  }
  // Last column constraint is implied by the others; dropping it keeps the
  // equality system full row rank.
  for (int j = 0; j + 1 < ib; ++j) {
    LinExpr col;
    for (int i = 0; i < ia; ++i) col.add(i * ib + j, 1.0);
    lp.add_row(col, RowKind::Eq, 1.0 / ib);
  }
  Solution sol = solve(lp, {});
  if (!sol.optimal())
    throw std::runtime_error(std::string("transport LP failed: ") +
                             to_string(sol.status));
  return std::max(0.0, sol.objective);
}

std::string samples_to_csv(const SampleSet& samples, const ClusterSet& cs,
                           const FeatureIndex& fidx, const Network& net) {
  std::string out = "cluster_id,sample_index,node_id,p_av_kw,p_l_kw,q_l_kvar\n";
  char buf[160];
  for (int f = 0; f < cs.num_clusters(); ++f) {
    for (int i = 0; i < samples.I; ++i) {
      for (int node : fidx.cluster_nodes(f)) {
        std::snprintf(buf, sizeof buf, "%d,%d,%d,%.17g,%.17g,%.17g\n", f, i,
                      net.bus_ids[node],
                      samples.delta[f](i, fidx.position(f, node, Feature::PAv)),
                      samples.delta[f](i, fidx.position(f, node, Feature::PLoad)),
                      samples.delta[f](i, fidx.position(f, node, Feature::QLoad)));
        out += buf;
      }
    }
  }
  return out;
}

SampleSet samples_from_csv(const std::string& text, const ClusterSet& cs,
                           const FeatureIndex& fidx, const Network& net) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) ||
      line.rfind("cluster_id,sample_index,node_id", 0) != 0)
    throw std::runtime_error("samples CSV: missing header");
  int max_i = -1;
  struct Row {
    int f, i, node;
    double pav, pl, ql;
  };
  std::vector<Row> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    Row r;
    int bus;
    if (std::sscanf(line.c_str(), "%d,%d,%d,%lf,%lf,%lf", &r.f, &r.i, &bus,
                    &r.pav, &r.pl, &r.ql) != 6)
      throw std::runtime_error("samples CSV: malformed line " +
                               std::to_string(lineno));
    r.node = net.node_index(bus);
    if (r.f < 0 || r.f >= cs.num_clusters() || r.node < 0)
      throw std::runtime_error("samples CSV: unknown cluster or node at line " +
                               std::to_string(lineno));
    max_i = std::max(max_i, r.i);
    rows.push_back(r);
  }
  SampleSet out;
  out.I = max_i + 1;
  if (out.I <= 0) throw std::runtime_error("samples CSV: no data rows");
  for (int f = 0; f < cs.num_clusters(); ++f)
    out.delta.push_back(Eigen::MatrixXd::Zero(out.I, fidx.dim(f)));
  for (const Row& r : rows) {
    out.delta[r.f](r.i, fidx.position(r.f, r.node, Feature::PAv)) = r.pav;
    out.delta[r.f](r.i, fidx.position(r.f, r.node, Feature::PLoad)) = r.pl;
    out.delta[r.f](r.i, fidx.position(r.f, r.node, Feature::QLoad)) = r.ql;
  }
  return out;
}

DayProfiles parse_profiles_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("hour,pv_scale", 0) != 0)
    throw std::runtime_error("profiles CSV: missing header");
  DayProfiles prof;
  std::array<bool, 24> seen{};
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    int hour;
    double pv, high, low;
    if (std::sscanf(line.c_str(), "%d,%lf,%lf,%lf", &hour, &pv, &high, &low) !=
        4)
      throw std::runtime_error("profiles CSV: malformed row '" + line + "'");
    if (hour < 0 || hour > 23)
      throw std::runtime_error("profiles CSV: hour out of range");
    prof.pv_scale[hour] = pv;
    prof.load_high[hour] = high;
    prof.load_low[hour] = low;
    seen[hour] = true;
  }
  for (int h = 0; h < 24; ++h)
    if (!seen[h])
      throw std::runtime_error("profiles CSV: missing hour " +
                               std::to_string(h));
  return prof;
}

DayProfiles load_profiles_file(const std::string& path) {
  std::ifstream in(path);
  if (!in.good())
    throw std::runtime_error("cannot open profiles CSV: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_profiles_csv(ss.str());
}

Forecast make_forecast(const Network& net, const AssetTable& assets,
                       const DayProfiles& profiles, int hour,
                       LoadScenario load) {
  if (hour < 0 || hour > 23) throw std::invalid_argument("hour out of range");
  const double ls = load == LoadScenario::High ? profiles.load_high[hour]
                                               : profiles.load_low[hour];
  const double pvs = profiles.pv_scale[hour];
  Forecast fc;
  const int n = net.n();
  fc.pav_kw.resize(n);
  fc.pl_kw.resize(n);
  fc.ql_kvar.resize(n);
  for (int i = 0; i < n; ++i) {
    fc.pav_kw[i] = assets.pv_kw[i] * pvs;
    fc.pl_kw[i] = net.pd_kw[i] * ls;
    fc.ql_kvar[i] = net.qd_kvar[i] * ls;
  }
  return fc;
}

}  // namespace gridval
