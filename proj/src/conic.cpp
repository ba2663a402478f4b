#include "gridval/conic.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace gridval {

namespace {

// Sums duplicate variable indices so each row stores one coefficient per
// variable; assembly code is free to emit the same variable twice.
void fold_terms(const std::vector<std::pair<int, double>>& in,
                std::vector<std::pair<int, double>>& out) {
  out.clear();
  if (in.size() <= 8) {
    for (const auto& [i, c] : in) {
      bool found = false;
      for (auto& [j, cj] : out) {
        if (j == i) {
          cj += c;
          found = true;
          break;
        }
      }
      if (!found && c != 0.0) out.push_back({i, c});
    }
    out.erase(std::remove_if(out.begin(), out.end(),
                             [](const auto& t) { return t.second == 0.0; }),
              out.end());
    return;
  }
  std::unordered_map<int, double> acc;
  acc.reserve(in.size());
  for (const auto& [i, c] : in) acc[i] += c;
  out.reserve(acc.size());
  for (const auto& [i, c] : acc)
    if (c != 0.0) out.push_back({i, c});
  std::sort(out.begin(), out.end());
}

}  // namespace

int ConicProgram::add_row(const LinExpr& e, RowKind kind, double rhs) {
  static thread_local std::vector<std::pair<int, double>> folded;
  fold_terms(e.terms, folded);
  row_off_.push_back(idx_.size());
  row_len_.push_back(static_cast<int>(folded.size()));
  for (const auto& [i, c] : folded) {
    idx_.push_back(i);
    coef_.push_back(c);
  }
  row_rhs_.push_back(rhs - e.constant);
  row_kind_.push_back(kind);
  return num_rows() - 1;
}

int ConicProgram::add_soc(const std::vector<LinExpr>& entries) {
  SocBlock b;
  b.term_base = soc_idx_.size();
  b.entry_off.push_back(0);
  static thread_local std::vector<std::pair<int, double>> folded;
  for (const auto& e : entries) {
    fold_terms(e.terms, folded);
    for (const auto& [i, c] : folded) {
      soc_idx_.push_back(i);
      soc_coef_.push_back(c);
    }
    b.entry_off.push_back(static_cast<int>(soc_idx_.size() - b.term_base));
    b.entry_cst.push_back(e.constant);
  }
  socs_.push_back(std::move(b));
  return num_socs() - 1;
}

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::AlmostOptimal: return "almost_optimal";
    case SolveStatus::PrimalInfeasible: return "primal_infeasible";
    case SolveStatus::DualInfeasible: return "dual_infeasible";
    case SolveStatus::IterationLimit: return "iteration_limit";
    case SolveStatus::TimeLimit: return "time_limit";
    case SolveStatus::NumericalLimit: return "numerical_limit";
    case SolveStatus::Error: return "error";
  }
  return "unknown";
}

KktReport check_kkt(const ConicProgram& prog, const Solution& sol) {
  KktReport rep;
  const int n = prog.num_vars();
  const auto& x = sol.x;
  const auto& c = prog.objective();

  double cx = 0.0;
  for (int j = 0; j < n; ++j) cx += c[j] * x[j];

  // Stationarity accumulator starts at the objective gradient.
  std::vector<double> grad(c.begin(), c.end());
  double dual_obj = 0.0;

  auto rel = [](double v, double scale) { return std::fabs(v) / (1.0 + scale); };

  for (int r = 0; r < prog.num_rows(); ++r) {
    auto row = prog.row(r);
    double ax = 0.0, anorm = 0.0;
    for (int t = 0; t < row.len; ++t) {
      ax += row.coef[t] * x[row.idx[t]];
      anorm = std::max(anorm, std::fabs(row.coef[t] * x[row.idx[t]]));
    }
    const double y = sol.row_dual[r];
    const double slack = row.rhs - ax;
    const double scale = std::max(anorm, std::fabs(row.rhs));
    if (row.kind == RowKind::Eq) {
      rep.primal_residual = std::max(rep.primal_residual, rel(slack, scale));
    } else {
      rep.primal_residual =
          std::max(rep.primal_residual, rel(std::max(0.0, -slack), scale));
      rep.dual_cone_violation =
          std::max(rep.dual_cone_violation, std::max(0.0, -y));
      rep.comp_slackness =
          std::max(rep.comp_slackness, std::fabs(y * slack) / (1.0 + std::fabs(cx)));
    }
    for (int t = 0; t < row.len; ++t) grad[row.idx[t]] += y * row.coef[t];
    dual_obj -= y * row.rhs;
  }

  for (int s = 0; s < prog.num_socs(); ++s) {
    auto blk = prog.soc(s);
    const auto& z = sol.soc_dual[s];
    std::vector<double> sv(blk.dim);
    for (int e = 0; e < blk.dim; ++e) {
      double v = blk.cst[e];
      for (int t = blk.off[e]; t < blk.off[e + 1]; ++t)
        v += blk.coef[t] * x[blk.idx[t]];
      sv[e] = v;
    }
    double vnorm = 0.0, znorm = 0.0, zs = 0.0;
    for (int e = 1; e < blk.dim; ++e) {
      vnorm += sv[e] * sv[e];
      znorm += z[e] * z[e];
    }
    vnorm = std::sqrt(vnorm);
    znorm = std::sqrt(znorm);
    rep.primal_residual = std::max(
        rep.primal_residual, rel(std::max(0.0, vnorm - sv[0]), std::fabs(sv[0])));
    rep.dual_cone_violation =
        std::max(rep.dual_cone_violation, std::max(0.0, znorm - z[0]));
    for (int e = 0; e < blk.dim; ++e) zs += z[e] * sv[e];
    rep.comp_slackness =
        std::max(rep.comp_slackness, std::fabs(zs) / (1.0 + std::fabs(cx)));
    for (int e = 0; e < blk.dim; ++e) {
      for (int t = blk.off[e]; t < blk.off[e + 1]; ++t)
        grad[blk.idx[t]] -= z[e] * blk.coef[t];
      dual_obj -= z[e] * blk.cst[e];
    }
  }

  for (int j = 0; j < n; ++j) {
    const double lo = prog.lb(j), up = prog.ub(j);
    const double mlo = sol.bound_dual_lo[j], mup = sol.bound_dual_up[j];
    if (lo > -kInf) {
      rep.primal_residual = std::max(rep.primal_residual,
                                     rel(std::max(0.0, lo - x[j]), std::fabs(lo)));
      rep.dual_cone_violation =
          std::max(rep.dual_cone_violation, std::max(0.0, -mlo));
      if (lo != up)
        rep.comp_slackness = std::max(
            rep.comp_slackness, std::fabs(mlo * (x[j] - lo)) / (1.0 + std::fabs(cx)));
      grad[j] -= mlo;
      dual_obj += mlo * lo;
    }
    if (up < kInf) {
      rep.primal_residual = std::max(rep.primal_residual,
                                     rel(std::max(0.0, x[j] - up), std::fabs(up)));
      rep.dual_cone_violation =
          std::max(rep.dual_cone_violation, std::max(0.0, -mup));
      if (lo != up)
        rep.comp_slackness = std::max(
            rep.comp_slackness, std::fabs(mup * (up - x[j])) / (1.0 + std::fabs(cx)));
      grad[j] += mup;
      dual_obj -= mup * up;
    }
  }

  for (int j = 0; j < n; ++j)
    rep.dual_residual =
        std::max(rep.dual_residual, rel(grad[j], std::fabs(c[j])));
  rep.rel_gap = std::fabs(cx - dual_obj) /
                (1.0 + std::fabs(cx) + std::fabs(dual_obj));
  return rep;
}

}  // namespace gridval
