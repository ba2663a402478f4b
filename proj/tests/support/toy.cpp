#include "support/toy.hpp"

#include "support/oracles.hpp"

namespace gridval::testing {

OpfInstance toy_instance(const ToyOpts& o) {
  Network net = make_test_network({-1, 0}, {0.05, 0.05}, {0.05, 0.05});
  AssetTable a;
  a.pv_kw = {o.pv_kw, 0.0};
  a.pb_min_kw = {0.0, -o.der_kw};
  a.pb_max_kw = {0.0, o.der_kw};
  a.qb_min_kvar = {0.0, 0.0};
  a.qb_max_kvar = {0.0, 0.0};
  a.cost_c = {10.0, 10.0};
  a.cost_d = {3.0, 3.0};
  a.cost_e = {3.0, 3.0};
  a.cost_h = {6.0, 6.0};
  a.vmax = o.vmax;
  a.vmin = o.vmin;
  Forecast fc;
  fc.pav_kw = {250.0, 0.0};
  fc.pl_kw = {50.0, 80.0};
  fc.ql_kvar = {20.0, 40.0};
  ClusterSet cs = o.split_clusters ? make_clusters({{0}, {1}}, 2)
                                   : make_clusters({{0, 1}}, 2);
  FeatureIndex fidx = feature_index_map(cs);
  SupportBox box = default_support(fc, a, cs, fidx);
  SampleSet samples = generate_samples(fc, o.rel_std, o.I, o.seed, box, cs, fidx);
  QualityInfo q;
  q.eps.assign(cs.num_clusters(), o.eps);
  return make_instance(net, a, cs, samples, box, q);
}

}  // namespace gridval::testing
