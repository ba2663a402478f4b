#pragma once

// LinDistFlow voltage sensitivities for radial feeders: squared voltage
// rho = R p + B q + a, with p, q per-unit net injections at non-slack nodes.

#include <Eigen/Dense>

#include "gridval/case_io.hpp"

namespace gridval {

struct VoltageSensitivity {
  Eigen::MatrixXd R;  // d rho / d p, N x N
  Eigen::MatrixXd B;  // d rho / d q, N x N
  Eigen::VectorXd a;  // substation offset, v0^2 per node
};

// R_jk = 2 * sum of branch resistances on the common slack-path of j and k;
// B the same with reactances; a = v0_sq * ones.
VoltageSensitivity sensitivity_matrices(const Network& net, double v0_sq = 1.0);

// rho = R p + B q + a. Throws std::invalid_argument on dimension mismatch.
Eigen::VectorXd predict_voltages(const VoltageSensitivity& sens,
                                 const Eigen::VectorXd& p,
                                 const Eigen::VectorXd& q);

}  // namespace gridval
