#include <cmath>
#include <random>

#include "doctest.h"
#include "gridval/uncertainty.hpp"
#include "support/oracles.hpp"

using namespace gridval;

namespace {

// Two nodes hanging off the slack: enough structure for cluster tests.
Network two_node_net() {
  return testing::make_test_network({-1, 0}, {0.1, 0.1}, {0.2, 0.2});
}

AssetTable toy_assets(const Network& net, double pv0_kw) {
  AssetTable t;
  const int n = net.n();
  t.pv_kw.assign(n, 0.0);
  t.pv_kw[0] = pv0_kw;
  t.pb_min_kw.assign(n, 0.0);
  t.pb_max_kw.assign(n, 0.0);
  t.qb_min_kvar.assign(n, 0.0);
  t.qb_max_kvar.assign(n, 0.0);
  t.cost_c.assign(n, 10.0);
  t.cost_d.assign(n, 3.0);
  t.cost_e.assign(n, 3.0);
  t.cost_h.assign(n, 6.0);
  return t;
}

}  // namespace

TEST_CASE("feature index ordering and round trip") {
  ClusterSet cs = make_clusters({{0, 1}}, 2);
  FeatureIndex fidx = feature_index_map(cs);
  CHECK(fidx.dim(0) == 6);
  CHECK(fidx.position(0, 0, Feature::PAv) == 0);
  CHECK(fidx.position(0, 0, Feature::PLoad) == 1);
  CHECK(fidx.position(0, 0, Feature::QLoad) == 2);
  CHECK(fidx.position(0, 1, Feature::PAv) == 3);
  CHECK(fidx.pav_position(0, 1) == 3);
  CHECK(fidx.pl_position(0, 1) == 4);
  for (int m = 0; m < fidx.dim(0); ++m) {
    const auto [node, feat] = fidx.node_feature(0, m);
    CHECK(fidx.position(0, node, feat) == m);
  }
}

TEST_CASE("singleton clusters give three features each") {
  ClusterSet cs = make_clusters({{0}, {1}, {2}}, 3);
  FeatureIndex fidx = feature_index_map(cs);
  for (int f = 0; f < 3; ++f) CHECK(fidx.dim(f) == 3);
}

TEST_CASE("partition violations are rejected") {
  CHECK_THROWS_WITH_AS(make_clusters({{0, 1}, {1}}, 2),
                       doctest::Contains("partition error"),
                       std::runtime_error);
  CHECK_THROWS_WITH_AS(make_clusters({{0}}, 2),
                       doctest::Contains("partition error"),
                       std::runtime_error);
  CHECK_THROWS_WITH_AS(make_clusters({{0, 5}}, 2),
                       doctest::Contains("partition error"),
                       std::runtime_error);
}

TEST_CASE("default clusters for the 33-bus case") {
  Network net = testing::load_case33_network();
  ClusterSet cs = default_clusters(net);
  REQUIRE(cs.num_clusters() == 5);
  CHECK(cs.clusters[0].size() == 9);
  CHECK(cs.clusters[1].size() == 8);
  CHECK(cs.clusters[2].size() == 4);
  CHECK(cs.clusters[3].size() == 3);
  CHECK(cs.clusters[4].size() == 8);
  CHECK(cs.node_to_cluster[net.node_index(12)] == 1);
  CHECK(cs.node_to_cluster[net.node_index(25)] == 3);

  Network toy = two_node_net();
  CHECK(default_clusters(toy).num_clusters() == 1);

  ClusterSet custom = clusters_from_config(
      R"({"clusters": [[2,3,4,5,6,7,8,9,10,11],[12,13,14,15,16,17,18],
                       [19,20,21,22],[23,24,25],[26,27,28,29,30,31,32,33]]})",
      net);
  CHECK(custom.clusters[0].size() == 10);
  CHECK(clusters_from_config("{}", net).num_clusters() == 5);
}

TEST_CASE("default support box") {
  Network net = two_node_net();
  AssetTable assets = toy_assets(net, 500.0);
  ClusterSet cs = make_clusters({{0, 1}}, 2);
  FeatureIndex fidx = feature_index_map(cs);
  Forecast fc;
  fc.pav_kw = {200.0, 0.0};
  fc.pl_kw = {100.0, 0.0};
  fc.ql_kvar = {60.0, 40.0};
  SupportBox box = default_support(fc, assets, cs, fidx);
  CHECK(box.lo[0][0] == 0.0);
  CHECK(box.hi[0][0] == 500.0);
  CHECK(box.lo[0][1] == doctest::Approx(50.0));
  CHECK(box.hi[0][1] == doctest::Approx(120.0));
  CHECK(box.lo[0][2] == doctest::Approx(30.0));
  CHECK(box.hi[0][2] == doctest::Approx(72.0));
  // Non-PV node: p_av pinned to [0,0]; zero load forecast degenerates too.
  CHECK(box.lo[0][3] == 0.0);
  CHECK(box.hi[0][3] == 0.0);
  CHECK(box.lo[0][4] == 0.0);
  CHECK(box.hi[0][4] == 0.0);
  CHECK(box.hi[0][5] == doctest::Approx(48.0));

  Forecast bad = fc;
  bad.pav_kw[1] = 50.0;  // forecast without a rating
  CHECK_THROWS_WITH_AS(default_support(bad, assets, cs, fidx),
                       doctest::Contains("configuration error"),
                       std::runtime_error);
}

TEST_CASE("sample generation determinism and truncation") {
  Network net = two_node_net();
  AssetTable assets = toy_assets(net, 500.0);
  ClusterSet cs = make_clusters({{0}, {1}}, 2);
  FeatureIndex fidx = feature_index_map(cs);
  Forecast fc;
  fc.pav_kw = {200.0, 0.0};
  fc.pl_kw = {100.0, 80.0};
  fc.ql_kvar = {60.0, 40.0};
  SupportBox box = default_support(fc, assets, cs, fidx);

  SampleSet s1 = generate_samples(fc, 0.2, 25, 42, box, cs, fidx);
  SampleSet s2 = generate_samples(fc, 0.2, 25, 42, box, cs, fidx);
  REQUIRE(s1.delta.size() == 2);
  CHECK(s1.delta[0] == s2.delta[0]);
  CHECK(s1.delta[1] == s2.delta[1]);
  SampleSet s3 = generate_samples(fc, 0.2, 25, 43, box, cs, fidx);
  CHECK(s1.delta[0] != s3.delta[0]);

  for (int f = 0; f < 2; ++f)
    for (int i = 0; i < s1.I; ++i)
      for (int m = 0; m < fidx.dim(f); ++m) {
        CHECK(s1.delta[f](i, m) >= box.lo[f][m]);
        CHECK(s1.delta[f](i, m) <= box.hi[f][m]);
      }

  SUBCASE("zero rel_std pins samples at the forecast") {
    SampleSet s0 = generate_samples(fc, 0.0, 5, 1, box, cs, fidx);
    for (int i = 0; i < 5; ++i) {
      CHECK(s0.delta[0](i, 0) == 200.0);
      CHECK(s0.delta[0](i, 1) == 100.0);
      CHECK(s0.delta[1](i, 2) == 40.0);
    }
  }

  SUBCASE("sample mean approaches the forecast on a wide box") {
    SupportBox wide = box;
    wide.lo[0].setConstant(-1e9);
    wide.hi[0].setConstant(1e9);
    SampleSet big = generate_samples(fc, 0.2, 10000, 7, wide, cs, fidx);
    for (int m = 0; m < 3; ++m) {
      const double mean = big.delta[0].col(m).mean();
      const double target = m == 0 ? 200.0 : m == 1 ? 100.0 : 60.0;
      CHECK(std::fabs(mean - target) / target < 0.01);
    }
  }

  SUBCASE("forecast outside the box is a generation error") {
    SupportBox tight = box;
    tight.hi[0][1] = 90.0;  // below the 100 kW load forecast
    tight.lo[0][1] = 80.0;
    CHECK_THROWS_WITH_AS(generate_samples(fc, 0.2, 5, 1, tight, cs, fidx),
                         doctest::Contains("generation error"),
                         std::runtime_error);
  }
}

TEST_CASE("wasserstein distance basics") {
  Eigen::MatrixXd a(1, 1), b(1, 1);
  a << 0.0;
  b << 3.0;
  CHECK(wasserstein_distance(a, a) == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(wasserstein_distance(a, b) == doctest::Approx(3.0).epsilon(1e-9));

  Eigen::MatrixXd c(2, 1), d(2, 1);
  c << 0.0, 2.0;
  d << 1.0, 3.0;
  CHECK(wasserstein_distance(c, d) == doctest::Approx(1.0).epsilon(1e-8));

  Eigen::MatrixXd wide(1, 2);
  CHECK_THROWS_AS(wasserstein_distance(a, wide), std::invalid_argument);
  Eigen::MatrixXd empty(0, 1);
  CHECK_THROWS_AS(wasserstein_distance(empty, b), std::invalid_argument);
  CHECK_THROWS_AS(wasserstein_distance(a, b, 2), std::invalid_argument);
}

TEST_CASE("wasserstein matches flow and permutation oracles") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> coord(-5.0, 5.0);
  std::uniform_int_distribution<int> natoms(1, 6);
  std::uniform_int_distribution<int> ndim(1, 3);
  for (int trial = 0; trial < 60; ++trial) {
    const int dim = ndim(rng);
    Eigen::MatrixXd a(natoms(rng), dim), b(natoms(rng), dim), c(natoms(rng), dim);
    for (auto* m : {&a, &b, &c})
      for (int i = 0; i < m->rows(); ++i)
        for (int j = 0; j < dim; ++j) (*m)(i, j) = coord(rng);

    const double dab = wasserstein_distance(a, b);
    CHECK(dab == doctest::Approx(testing::transport_distance_flow(a, b))
                     .epsilon(1e-8));
    if (a.rows() == b.rows() && a.rows() <= 5)
      CHECK(dab ==
            doctest::Approx(testing::transport_distance_permutations(a, b))
                .epsilon(1e-8));

    // Metric axioms.
    const double dba = wasserstein_distance(b, a);
    const double dac = wasserstein_distance(a, c);
    const double dcb = wasserstein_distance(c, b);
    CHECK(dab >= -1e-9);
    CHECK(dab == doctest::Approx(dba).epsilon(1e-7));
    CHECK(dab <= dac + dcb + 1e-7);
  }
}

TEST_CASE("samples csv round trip") {
  Network net = two_node_net();
  AssetTable assets = toy_assets(net, 300.0);
  ClusterSet cs = make_clusters({{0}, {1}}, 2);
  FeatureIndex fidx = feature_index_map(cs);
  Forecast fc;
  fc.pav_kw = {150.0, 0.0};
  fc.pl_kw = {90.0, 70.0};
  fc.ql_kvar = {30.0, 20.0};
  SupportBox box = default_support(fc, assets, cs, fidx);
  SampleSet s = generate_samples(fc, 0.2, 7, 9, box, cs, fidx);
  const std::string csv = samples_to_csv(s, cs, fidx, net);
  CHECK(csv.rfind("cluster_id,sample_index,node_id", 0) == 0);
  SampleSet back = samples_from_csv(csv, cs, fidx, net);
  REQUIRE(back.I == s.I);
  CHECK(back.delta[0] == s.delta[0]);
  CHECK(back.delta[1] == s.delta[1]);
  CHECK_THROWS_AS(samples_from_csv("bogus", cs, fidx, net),
                  std::runtime_error);
}

TEST_CASE("profiles csv and forecast assembly") {
  DayProfiles prof =
      load_profiles_file(std::string(GRIDVAL_DATA_DIR) + "/profiles.csv");
  CHECK(prof.pv_scale[18] == doctest::Approx(0.4833));
  CHECK(prof.pv_scale[13] == doctest::Approx(0.97));
  CHECK(prof.pv_scale[2] == 0.0);
  CHECK(prof.load_high[19] == doctest::Approx(1.0));
  for (int h = 0; h < 24; ++h)
    CHECK(prof.load_low[h] == doctest::Approx(0.6 * prof.load_high[h]));

  Network net = testing::load_case33_network();
  AssetTable assets = load_scenario_config("{}", net);
  Forecast fc = make_forecast(net, assets, prof, 18, LoadScenario::High);
  CHECK(fc.pav_kw[net.node_index(12)] == doctest::Approx(800 * 0.4833));
  CHECK(fc.pl_kw[net.node_index(2)] ==
        doctest::Approx(100.0 * prof.load_high[18]));
  Forecast low = make_forecast(net, assets, prof, 18, LoadScenario::Low);
  CHECK(low.pl_kw[net.node_index(2)] ==
        doctest::Approx(0.6 * fc.pl_kw[net.node_index(2)]));

  CHECK_THROWS_AS(parse_profiles_csv("hour,pv_scale,a,b\n0,1,1,1\n"),
                  std::runtime_error);
}
