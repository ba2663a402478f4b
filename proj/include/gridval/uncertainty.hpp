#pragma once

// Data providers (clusters of nodes), per-hour forecasts, truncated sample
// generation, support boxes, and exact 1-Wasserstein distances between
// empirical distributions.

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "gridval/case_io.hpp"

namespace gridval {

// Feature vectors, Wasserstein distances, and radii are stated in MW
// (per-unit on a 1 MVA base) so radii are comparable across clusters;
// kW is the external unit everywhere else.
constexpr double kKwPerFeatureUnit = 1000.0;

struct ClusterSet {
  std::vector<std::vector<int>> clusters;  // node indices, order fixed
  std::vector<int> node_to_cluster;        // size N
  int num_clusters() const { return static_cast<int>(clusters.size()); }
};

// Validates that node_lists partition 0..n_nodes-1; throws "partition
// error: ..." otherwise.
ClusterSet make_clusters(const std::vector<std::vector<int>>& node_lists,
                         int n_nodes);

// Five feeder segments for the 33-bus case (bus ids 2-10, 11-18, 19-22,
// 23-25, 26-33); any other network gets a single cluster of all nodes.
ClusterSet default_clusters(const Network& net);

// Reads an optional "clusters" key (array of bus-id arrays) from the
// scenario JSON; falls back to default_clusters.
ClusterSet clusters_from_config(const std::string& json_text,
                                const Network& net);

enum class Feature : int { PAv = 0, PLoad = 1, QLoad = 2 };

// Bijection (node, feature) <-> position within each cluster's feature
// vector, ordered (p_av, p_l, q_l) per node, nodes in cluster order.
class FeatureIndex {
 public:
  FeatureIndex() = default;
  explicit FeatureIndex(const ClusterSet& cs);

  int dim(int cluster) const { return 3 * static_cast<int>(nodes_[cluster].size()); }
  int position(int cluster, int node, Feature f) const;
  std::pair<int, Feature> node_feature(int cluster, int m) const;
  // Selector positions: p_av drives the inverter/availability terms, p_l the
  // load terms.
  int pav_position(int cluster, int node) const {
    return position(cluster, node, Feature::PAv);
  }
  int pl_position(int cluster, int node) const {
    return position(cluster, node, Feature::PLoad);
  }
  const std::vector<int>& cluster_nodes(int cluster) const {
    return nodes_[cluster];
  }
  int num_clusters() const { return static_cast<int>(nodes_.size()); }

 private:
  std::vector<std::vector<int>> nodes_;
  std::vector<std::vector<int>> rank_;  // per cluster: node -> rank or -1
};

FeatureIndex feature_index_map(const ClusterSet& cs);

// One hour's point forecast per node (kW / kvar).
struct Forecast {
  std::vector<double> pav_kw, pl_kw, ql_kvar;
};

struct SupportBox {
  std::vector<Eigen::VectorXd> lo, hi;  // per cluster, feature order, kW
};

// Trust radius granted to each provider's empirical distribution, in
// feature units (see kKwPerFeatureUnit).
struct QualityInfo {
  std::vector<double> eps;
};

struct SampleSet {
  int I = 0;
  std::vector<Eigen::MatrixXd> delta;  // per cluster: I x 3N_f, kW
};

// The standard box: p_av in [0, S_n], p_l in [0.5, 1.2] * forecast, q_l the
// same. Degenerate [0,0] intervals where a feature's forecast is zero.
SupportBox default_support(const Forecast& fc, const AssetTable& assets,
                           const ClusterSet& cs, const FeatureIndex& fidx);

// Independent truncated normals per feature: Normal(forecast,
// (rel_std*forecast)^2), rejection-resampled up to 100 tries then clipped.
// Bitwise deterministic for a given seed. Throws "generation error: ..."
// when a forecast mean lies outside the support box.
SampleSet generate_samples(const Forecast& fc, double rel_std, int I,
                           uint64_t seed, const SupportBox& support,
                           const ClusterSet& cs, const FeatureIndex& fidx);

// Exact 1-Wasserstein distance between uniform empirical distributions
// (rows = atoms), l1 ground metric, solved as a transportation LP. Only
// order p = 1 is supported.
double wasserstein_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                            int p = 1);

// Samples CSV: cluster_id,sample_index,node_id,p_av_kw,p_l_kw,q_l_kvar.
std::string samples_to_csv(const SampleSet& samples, const ClusterSet& cs,
                           const FeatureIndex& fidx, const Network& net);
SampleSet samples_from_csv(const std::string& text, const ClusterSet& cs,
                           const FeatureIndex& fidx, const Network& net);

// Profiles CSV: hour,pv_scale,load_scale_high,load_scale_low (24 rows).
struct DayProfiles {
  std::array<double, 24> pv_scale{}, load_high{}, load_low{};
};
DayProfiles parse_profiles_csv(const std::string& text);
DayProfiles load_profiles_file(const std::string& path);

enum class LoadScenario { High, Low };

Forecast make_forecast(const Network& net, const AssetTable& assets,
                       const DayProfiles& profiles, int hour,
                       LoadScenario load);

// Deterministic substream derivation (splitmix64 chain over seed and tags).
uint64_t substream_seed(uint64_t seed, uint64_t tag0, uint64_t tag1 = 0);

}  // namespace gridval
