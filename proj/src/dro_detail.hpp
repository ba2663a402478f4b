#pragma once

// Assembly helpers shared by the sample-average and robust builders.
// Internal to the library; defined in dro_saa.cpp.

#include <Eigen/Dense>
#include <vector>

#include "gridval/dro_opf.hpp"

namespace gridval::detail {

DecisionLayout common_layout(const OpfInstance& inst, ConicProgram& prog);

LinExpr voltage_row_expr(const VoltageHalfspaces& hs, const DecisionLayout& lay,
                         const std::vector<Eigen::MatrixXd>& dhat,
                         const std::vector<int>& off, int k, int i);

void scaled_uncertainty(const OpfInstance& inst,
                        std::vector<Eigen::MatrixXd>& dhat,
                        std::vector<Eigen::VectorXd>& lo,
                        std::vector<Eigen::VectorXd>& hi);

}  // namespace gridval::detail
