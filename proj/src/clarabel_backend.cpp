#include "gridval/conic.hpp"

#include <cmath>
#include <cstdint>
#include <vector>

extern "C" {

struct ClarabelFfiOptions {
  uint32_t max_iter;
  double time_limit;
  int32_t verbose;
  double tol_gap_abs;
  double tol_gap_rel;
  double tol_feas;
};

struct ClarabelFfiResult {
  int32_t status;
  double obj_val;
  double obj_val_dual;
  uint32_t iterations;
  double solve_time;
};

int clarabel_ffi_solve(size_t n, size_t m, const size_t* p_colptr,
                       const size_t* p_rowval, const double* p_nzval,
                       size_t p_nnz, const double* q, const size_t* a_colptr,
                       const size_t* a_rowval, const double* a_nzval,
                       size_t a_nnz, const double* b, const int32_t* cone_tags,
                       const size_t* cone_dims, size_t n_cones,
                       const ClarabelFfiOptions* opts, double* x_out,
                       double* z_out, double* s_out, ClarabelFfiResult* result);

}  // extern "C"

namespace gridval {

namespace {

constexpr int32_t kConeZero = 0;
constexpr int32_t kConeNonneg = 1;
constexpr int32_t kConeSoc = 2;

SolveStatus map_status(int32_t code, std::string& msg) {
  switch (code) {
    case 0: return SolveStatus::Optimal;
    case 1: return SolveStatus::AlmostOptimal;
    case 2: return SolveStatus::PrimalInfeasible;
    case 3: return SolveStatus::DualInfeasible;
    case 4:
      msg = "near primal infeasibility certificate";
      return SolveStatus::PrimalInfeasible;
    case 5:
      msg = "near dual infeasibility certificate";
      return SolveStatus::DualInfeasible;
    case 6: return SolveStatus::IterationLimit;
    case 7: return SolveStatus::TimeLimit;
    case 8:
      msg = "numerical error";
      return SolveStatus::NumericalLimit;
    case 9:
      msg = "insufficient progress";
      return SolveStatus::NumericalLimit;
    default:
      msg = "unrecognized solver status";
      return SolveStatus::Error;
  }
}

}  // namespace

Solution solve(const ConicProgram& prog, const SolveConfig& cfg) {
  Solution sol;
  const int n = prog.num_vars();
  if (n == 0) {
    sol.status = SolveStatus::Error;
    sol.message = "program has no variables";
    return sol;
  }

  // Variables with lb == ub become equality rows; other finite bounds become
  // one-sided inequality rows. Global row order: equalities (program Eq rows,
  // then fixed variables), inequalities (program Le rows, then lower bounds,
  // then upper bounds), then second-order cone blocks.
  std::vector<int> eq_rows, le_rows, fix_vars, lo_vars, up_vars;
  for (int r = 0; r < prog.num_rows(); ++r)
    (prog.row(r).kind == RowKind::Eq ? eq_rows : le_rows).push_back(r);
  for (int j = 0; j < n; ++j) {
    const double lo = prog.lb(j), up = prog.ub(j);
    if (lo == up) {
      fix_vars.push_back(j);
    } else {
      if (lo > -kInf) lo_vars.push_back(j);
      if (up < kInf) up_vars.push_back(j);
    }
  }

  size_t soc_dim_total = 0;
  for (int s = 0; s < prog.num_socs(); ++s) soc_dim_total += prog.soc(s).dim;
  const size_t m_zero = eq_rows.size() + fix_vars.size();
  const size_t m_nonneg = le_rows.size() + lo_vars.size() + up_vars.size();
  const size_t m = m_zero + m_nonneg + soc_dim_total;

  size_t nnz = fix_vars.size() + lo_vars.size() + up_vars.size();
  for (int r = 0; r < prog.num_rows(); ++r) nnz += prog.row(r).len;
  nnz += prog.soc_nnz();

  // Triplets are emitted in ascending global row order with unique columns
  // per row, so the counting sort by column below leaves each column's row
  // indices already sorted.
  std::vector<uint32_t> t_row(nnz), t_col(nnz);
  std::vector<double> t_val(nnz);
  std::vector<double> bvec(m, 0.0);
  size_t k = 0, grow = 0;

  auto emit_program_row = [&](int r) {
    auto row = prog.row(r);
    for (int t = 0; t < row.len; ++t) {
      t_row[k] = static_cast<uint32_t>(grow);
      t_col[k] = static_cast<uint32_t>(row.idx[t]);
      t_val[k++] = row.coef[t];
    }
    bvec[grow++] = row.rhs;
  };
  for (int r : eq_rows) emit_program_row(r);
  for (int j : fix_vars) {
    t_row[k] = static_cast<uint32_t>(grow);
    t_col[k] = static_cast<uint32_t>(j);
    t_val[k++] = 1.0;
    bvec[grow++] = prog.lb(j);
  }
  for (int r : le_rows) emit_program_row(r);
  for (int j : lo_vars) {
    t_row[k] = static_cast<uint32_t>(grow);
    t_col[k] = static_cast<uint32_t>(j);
    t_val[k++] = -1.0;
    bvec[grow++] = -prog.lb(j);
  }
  for (int j : up_vars) {
    t_row[k] = static_cast<uint32_t>(grow);
    t_col[k] = static_cast<uint32_t>(j);
    t_val[k++] = 1.0;
    bvec[grow++] = prog.ub(j);
  }
  for (int s = 0; s < prog.num_socs(); ++s) {
    auto blk = prog.soc(s);
    for (int e = 0; e < blk.dim; ++e) {
      for (int t = blk.off[e]; t < blk.off[e + 1]; ++t) {
        t_row[k] = static_cast<uint32_t>(grow);
        t_col[k] = static_cast<uint32_t>(blk.idx[t]);
        t_val[k++] = -blk.coef[t];
      }
      bvec[grow++] = blk.cst[e];
    }
  }

  std::vector<size_t> colptr(n + 1, 0);
  for (size_t t = 0; t < nnz; ++t) ++colptr[t_col[t] + 1];
  for (int j = 0; j < n; ++j) colptr[j + 1] += colptr[j];
  std::vector<size_t> rowval(nnz), fill(colptr.begin(), colptr.end() - 1);
  std::vector<double> nzval(nnz);
  for (size_t t = 0; t < nnz; ++t) {
    const size_t pos = fill[t_col[t]]++;
    rowval[pos] = t_row[t];
    nzval[pos] = t_val[t];
  }
  t_row.clear();
  t_row.shrink_to_fit();
  t_col.clear();
  t_col.shrink_to_fit();
  t_val.clear();
  t_val.shrink_to_fit();

  std::vector<int32_t> cone_tags;
  std::vector<size_t> cone_dims;
  if (m_zero > 0) {
    cone_tags.push_back(kConeZero);
    cone_dims.push_back(m_zero);
  }
  if (m_nonneg > 0) {
    cone_tags.push_back(kConeNonneg);
    cone_dims.push_back(m_nonneg);
  }
  for (int s = 0; s < prog.num_socs(); ++s) {
    cone_tags.push_back(kConeSoc);
    cone_dims.push_back(static_cast<size_t>(prog.soc(s).dim));
  }

  const std::vector<size_t> p_colptr(n + 1, 0);

  ClarabelFfiOptions opts{};
  opts.max_iter = static_cast<uint32_t>(cfg.max_iter);
  opts.time_limit = cfg.time_limit_s;
  opts.verbose = cfg.verbose ? 1 : 0;
  opts.tol_gap_abs = cfg.tol_gap_abs;
  opts.tol_gap_rel = cfg.tol_gap_rel;
  opts.tol_feas = cfg.tol_feas;

  std::vector<double> x(n, 0.0), z(m, 0.0), svals(m, 0.0);
  ClarabelFfiResult res{};
  const int rc = clarabel_ffi_solve(
      static_cast<size_t>(n), m, p_colptr.data(), nullptr, nullptr, 0,
      prog.objective().data(), colptr.data(), rowval.data(), nzval.data(), nnz,
      bvec.data(), cone_tags.data(), cone_dims.data(), cone_tags.size(), &opts,
      x.data(), z.data(), svals.data(), &res);
  if (rc != 0) {
    sol.status = SolveStatus::Error;
    sol.message = "solver rejected problem data, code " + std::to_string(rc);
    return sol;
  }

  sol.status = map_status(res.status, sol.message);
  sol.x = std::move(x);
  sol.objective = res.obj_val;
  sol.objective_dual = res.obj_val_dual;
  sol.iterations = static_cast<int>(res.iterations);
  sol.solve_time_s = res.solve_time;

  sol.row_dual.assign(prog.num_rows(), 0.0);
  sol.bound_dual_lo.assign(n, 0.0);
  sol.bound_dual_up.assign(n, 0.0);
  size_t pos = 0;
  for (int r : eq_rows) sol.row_dual[r] = z[pos++];
  for (int j : fix_vars) {
    const double y = z[pos++];
    sol.bound_dual_up[j] = std::max(y, 0.0);
    sol.bound_dual_lo[j] = std::max(-y, 0.0);
  }
  for (int r : le_rows) sol.row_dual[r] = z[pos++];
  for (int j : lo_vars) sol.bound_dual_lo[j] = z[pos++];
  for (int j : up_vars) sol.bound_dual_up[j] = z[pos++];
  sol.soc_dual.resize(prog.num_socs());
  for (int s = 0; s < prog.num_socs(); ++s) {
    const int d = prog.soc(s).dim;
    sol.soc_dual[s].assign(z.begin() + pos, z.begin() + pos + d);
    pos += d;
  }
  return sol;
}

}  // namespace gridval
