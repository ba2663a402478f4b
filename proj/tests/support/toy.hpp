#pragma once

// Small hand-sized OPF instances shared by the solver-level tests.

#include "gridval/dro_opf.hpp"

namespace gridval::testing {

struct ToyOpts {
  double pv_kw = 300.0;
  double vmax = 1.1;
  double vmin = 0.9;
  double der_kw = 0.0;  // symmetric storage box at node 1
  int I = 5;
  unsigned seed = 11;
  double rel_std = 0.2;
  double eps = 0.0;
  bool split_clusters = true;  // one provider per node vs a single provider
};

// Two-node chain: node 0 carries the PV system, node 1 the larger load.
OpfInstance toy_instance(const ToyOpts& o);

}  // namespace gridval::testing
