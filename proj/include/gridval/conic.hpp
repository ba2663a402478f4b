#pragma once

// Linear + second-order-cone program container, solver contract, and KKT
// verification. Rows and cone blocks keep stable integer ids so callers can
// look up dual multipliers after a solve.
//
// Conventions (verified by tests):
//   minimize c'x
//   subject to  rows:  a'x = b   (RowKind::Eq)   dual y free
//               rows:  a'x <= b  (RowKind::Le)   dual y >= 0
//               socs:  ||v(x)|| <= t(x)          dual (zt, zv), ||zv|| <= zt
//               bounds lb <= x <= ub             duals mu_lo, mu_up >= 0
//   Lagrangian = c'x + sum_rows y (a'x - b) + sum_lb mu_lo (lb - x)
//                + sum_ub mu_up (x - ub) - sum_socs z's(x)
//   so for a binding row a'x <= b, dJ/db = -y.

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace gridval {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Affine expression: sum of coef*var plus a constant. Used to build rows and
// cone entries without hand-tracking signs.
struct LinExpr {
  std::vector<std::pair<int, double>> terms;
  double constant = 0.0;

  LinExpr() = default;
  LinExpr(double c) : constant(c) {}
  static LinExpr var(int idx, double coef = 1.0) {
    LinExpr e;
    e.terms.push_back({idx, coef});
    return e;
  }
  LinExpr& add(int idx, double coef) {
    if (coef != 0.0) terms.push_back({idx, coef});
    return *this;
  }
  LinExpr& operator+=(const LinExpr& o) {
    terms.insert(terms.end(), o.terms.begin(), o.terms.end());
    constant += o.constant;
    return *this;
  }
  LinExpr& operator-=(const LinExpr& o) {
    for (const auto& [i, c] : o.terms) terms.push_back({i, -c});
    constant -= o.constant;
    return *this;
  }
  LinExpr& operator*=(double s) {
    for (auto& [i, c] : terms) c *= s;
    constant *= s;
    return *this;
  }
  friend LinExpr operator+(LinExpr a, const LinExpr& b) { return a += b; }
  friend LinExpr operator-(LinExpr a, const LinExpr& b) { return a -= b; }
  friend LinExpr operator*(LinExpr a, double s) { return a *= s; }
  friend LinExpr operator*(double s, LinExpr a) { return a *= s; }
};

enum class RowKind : uint8_t { Eq, Le };

class ConicProgram {
 public:
  // Variables.
  int add_var(double lb = -kInf, double ub = kInf, double obj = 0.0) {
    lb_.push_back(lb);
    ub_.push_back(ub);
    obj_.push_back(obj);
    return static_cast<int>(lb_.size()) - 1;
  }
  int num_vars() const { return static_cast<int>(lb_.size()); }
  void set_obj(int var, double coef) { obj_[var] = coef; }
  void add_obj(int var, double coef) { obj_[var] += coef; }
  void set_bounds(int var, double lb, double ub) {
    lb_[var] = lb;
    ub_[var] = ub;
  }
  double lb(int var) const { return lb_[var]; }
  double ub(int var) const { return ub_[var]; }
  const std::vector<double>& objective() const { return obj_; }

  // Rows. Terms of `e` are folded (duplicates summed); the row is
  // e.terms (kind) rhs - e.constant, i.e. add_row(expr, Le, 0) means expr<=0.
  int add_row(const LinExpr& e, RowKind kind, double rhs = 0.0);
  int num_rows() const { return static_cast<int>(row_off_.size()); }

  // Second-order cone ||(entries[1..])|| <= entries[0]. Entries are affine.
  int add_soc(const std::vector<LinExpr>& entries);
  int num_socs() const { return static_cast<int>(socs_.size()); }

  // Row access (for the backend and the KKT checker).
  struct RowView {
    const int* idx;
    const double* coef;
    int len;
    double rhs;
    RowKind kind;
  };
  RowView row(int r) const {
    return {idx_.data() + row_off_[r], coef_.data() + row_off_[r],
            row_len_[r], row_rhs_[r], row_kind_[r]};
  }
  struct SocView {
    // entry e spans terms [off[e], off[e+1]) with constant cst[e]
    const int* idx;
    const double* coef;
    const int* off;
    const double* cst;
    int dim;
  };
  SocView soc(int s) const {
    const auto& b = socs_[s];
    return {soc_idx_.data() + b.term_base, soc_coef_.data() + b.term_base,
            b.entry_off.data(), b.entry_cst.data(),
            static_cast<int>(b.entry_cst.size())};
  }

  size_t nnz() const { return idx_.size() + soc_idx_.size(); }
  size_t soc_nnz() const { return soc_idx_.size(); }

 private:
  std::vector<double> lb_, ub_, obj_;
  // Row storage: one flat arena shared by all rows.
  std::vector<int> idx_;
  std::vector<double> coef_;
  std::vector<size_t> row_off_;
  std::vector<int> row_len_;
  std::vector<double> row_rhs_;
  std::vector<RowKind> row_kind_;
  // SOC storage.
  struct SocBlock {
    size_t term_base;
    std::vector<int> entry_off;  // size dim+1, relative to term_base
    std::vector<double> entry_cst;
  };
  std::vector<SocBlock> socs_;
  std::vector<int> soc_idx_;
  std::vector<double> soc_coef_;
};

struct SolveConfig {
  double tol_feas = 1e-9;
  double tol_gap_abs = 1e-9;
  double tol_gap_rel = 1e-9;
  int max_iter = 400;
  double time_limit_s = 1800.0;
  bool verbose = false;
};

enum class SolveStatus {
  Optimal,
  AlmostOptimal,
  PrimalInfeasible,
  DualInfeasible,
  IterationLimit,
  TimeLimit,
  NumericalLimit,
  Error
};

const char* to_string(SolveStatus s);

struct Solution {
  SolveStatus status = SolveStatus::Error;
  std::vector<double> x;
  std::vector<double> row_dual;            // per row id
  std::vector<std::vector<double>> soc_dual;  // per soc id, length dim
  std::vector<double> bound_dual_lo, bound_dual_up;  // per variable
  double objective = 0.0;
  double objective_dual = 0.0;
  int iterations = 0;
  double solve_time_s = 0.0;
  std::string message;
  bool optimal() const {
    return status == SolveStatus::Optimal || status == SolveStatus::AlmostOptimal;
  }
};

Solution solve(const ConicProgram& prog, const SolveConfig& cfg = {});

struct KktReport {
  double primal_residual = 0.0;   // max violation of rows/socs/bounds
  double dual_residual = 0.0;     // max |stationarity| component
  double dual_cone_violation = 0.0;  // negative multipliers, soc dual outside cone
  double comp_slackness = 0.0;    // max |slack * multiplier|
  double rel_gap = 0.0;           // |c'x - dual objective| / (1 + |c'x|)
  bool pass(double tol) const {
    return primal_residual <= tol && dual_residual <= tol &&
           dual_cone_violation <= tol && comp_slackness <= tol &&
           rel_gap <= tol;
  }
};

// Recomputes all residuals from the program and solution alone; independent
// of any backend bookkeeping.
KktReport check_kkt(const ConicProgram& prog, const Solution& sol);

}  // namespace gridval
