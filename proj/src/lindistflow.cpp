#include "gridval/lindistflow.hpp"

#include <stdexcept>

namespace gridval {

VoltageSensitivity sensitivity_matrices(const Network& net, double v0_sq) {
  if (v0_sq <= 0.0) throw std::invalid_argument("v0_sq must be positive");
  const int n = net.n();
  // path(j) as r/x sums shared with every ancestor: walk pairs up to the
  // common ancestor. Nodes are in breadth-first order, so parent < child.
  VoltageSensitivity s;
  s.R = Eigen::MatrixXd::Zero(n, n);
  s.B = Eigen::MatrixXd::Zero(n, n);
  s.a = Eigen::VectorXd::Constant(n, v0_sq);
  std::vector<int> depth(n, 0);
  for (int j = 0; j < n; ++j)
    depth[j] = net.parent[j] < 0 ? 1 : depth[net.parent[j]] + 1;
  for (int j = 0; j < n; ++j) {
    for (int k = 0; k <= j; ++k) {
      int a = j, b = k;
      while (depth[a] > depth[b]) a = net.parent[a];
      while (depth[b] > depth[a]) b = net.parent[b];
      while (a != b) {
        a = net.parent[a];
        b = net.parent[b];
      }
      // a == b is the deepest common ancestor; exactly its slack path is
      // shared by both nodes.
      double r = 0.0, x = 0.0;
      while (a >= 0) {
        r += net.r_pu[a];
        x += net.x_pu[a];
        a = net.parent[a];
      }
      s.R(j, k) = s.R(k, j) = 2.0 * r;
      s.B(j, k) = s.B(k, j) = 2.0 * x;
    }
  }
  return s;
}

Eigen::VectorXd predict_voltages(const VoltageSensitivity& sens,
                                 const Eigen::VectorXd& p,
                                 const Eigen::VectorXd& q) {
  if (p.size() != sens.R.rows() || q.size() != sens.R.rows())
    throw std::invalid_argument("injection vector size does not match N");
  return sens.R * p + sens.B * q + sens.a;
}

}  // namespace gridval
