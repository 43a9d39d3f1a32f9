#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ltlplan/common.hpp"

namespace ltlplan {

/// Linear program  min c'x  s.t.  A_eq x = b_eq,  A_ge x >= b_ge,
/// x >= lower (0 when unset).  Rows are stored sparsely; the solver keeps a
/// dense basis inverse, which is the part that actually needs dense algebra.
struct LpProblem {
  struct Row {
    std::vector<std::pair<int, double>> coeffs;  // (column, value)
    double rhs = 0.0;
  };

  int num_vars = 0;
  std::vector<double> objective;
  std::vector<Row> eq_rows;
  std::vector<Row> ge_rows;
  std::vector<double> lower;  // optional; empty means all zeros

  int add_var(double cost = 0.0) {
    objective.push_back(cost);
    return num_vars++;
  }
};

enum class LpStatus { Optimal, Infeasible, Unbounded, NumericalBreakdown };

inline const char* lp_status_name(LpStatus s) {
  switch (s) {
    case LpStatus::Optimal: return "Optimal";
    case LpStatus::Infeasible: return "Infeasible";
    case LpStatus::Unbounded: return "Unbounded";
    case LpStatus::NumericalBreakdown: return "NumericalBreakdown";
  }
  return "?";
}

struct LpSolution {
  LpStatus status = LpStatus::NumericalBreakdown;
  std::vector<double> x;
  double objective = 0.0;
  double max_residual = 0.0;
  long iterations = 0;
  bool blands_rule_used = false;
  std::string diagnostics;
};

namespace detail {

/// Two-phase revised simplex with an explicit dense basis inverse and
/// product-form updates.  Pivot rule: Dantzig with lowest-index tie-break,
/// falling back to Bland's rule after 10*(m+n) consecutive degenerate
/// pivots.  Deterministic for identical input.
class SimplexEngine {
 public:
  explicit SimplexEngine(const LpProblem& p) : prob_(p) { build(); }

  LpSolution run() {
    LpSolution sol;
    if (m_ == 0) {  // only bounds: optimum at shifted origin
      sol.status = LpStatus::Optimal;
      finish(sol);
      return sol;
    }
    // Phase 1: minimize the sum of artificials.
    phase1_ = true;
    LpStatus st = iterate();
    if (st != LpStatus::Optimal) {
      sol.status = st == LpStatus::Unbounded ? LpStatus::NumericalBreakdown : st;
      sol.diagnostics = "phase 1 failed";
      return sol;
    }
    double art_sum = 0.0;
    for (int i = 0; i < m_; ++i)
      if (basis_[i] >= n_total_) art_sum += xb_[i];
    if (art_sum > kLpFeasTol) {
      sol.status = LpStatus::Infeasible;
      sol.diagnostics = "artificial residue " + std::to_string(art_sum);
      return sol;
    }
    // Phase 2 on the real objective; artificials may stay basic at zero but
    // never re-enter and never grow (see ratio test).
    phase1_ = false;
    st = iterate();
    sol.status = st;
    if (st == LpStatus::Optimal) finish(sol);
    sol.iterations = iters_;
    sol.blands_rule_used = blands_used_;
    return sol;
  }

 private:
  void build() {
    const LpProblem& p = prob_;
    n_ = p.num_vars;
    lower_ = p.lower;
    lower_.resize(n_, 0.0);
    m_ = static_cast<int>(p.eq_rows.size() + p.ge_rows.size());
    n_total_ = n_ + static_cast<int>(p.ge_rows.size());

    cols_.assign(n_total_, {});
    rhs_.assign(m_, 0.0);
    auto add_row = [&](const LpProblem::Row& row, int r, int surplus) {
      double b = row.rhs;
      for (const auto& [j, v] : row.coeffs) b -= v * lower_[j];
      const double sign = b < 0.0 ? -1.0 : 1.0;
      rhs_[r] = sign * b;
      for (const auto& [j, v] : row.coeffs)
        if (v != 0.0) cols_[j].emplace_back(r, sign * v);
      if (surplus >= 0) cols_[surplus].emplace_back(r, -sign);
    };
    int r = 0;
    for (const auto& row : p.eq_rows) add_row(row, r++, -1);
    for (std::size_t k = 0; k < p.ge_rows.size(); ++k)
      add_row(p.ge_rows[k], r++, n_ + static_cast<int>(k));

    cost_.assign(n_total_, 0.0);
    for (int j = 0; j < n_; ++j) cost_[j] = p.objective[j];
    scale_.assign(n_total_, 1.0);
    for (int j = 0; j < n_total_; ++j)
      scale_[j] = std::max(1.0, std::abs(cost_[j]));

    basis_.resize(m_);
    for (int i = 0; i < m_; ++i) basis_[i] = n_total_ + i;  // artificials
    binv_ = Eigen::MatrixXd::Identity(m_, m_);
    xb_ = Eigen::Map<const Eigen::VectorXd>(rhs_.data(), m_);
  }

  double column_value(int j, const Eigen::VectorXd& y) const {
    if (j >= n_total_) return y[j - n_total_];  // artificial: unit column
    double dot = 0.0;
    for (const auto& [r, v] : cols_[j]) dot += y[r] * v;
    return dot;
  }

  Eigen::VectorXd ftran(int j) const {
    if (j >= n_total_) return binv_.col(j - n_total_);
    Eigen::VectorXd w = Eigen::VectorXd::Zero(m_);
    for (const auto& [r, v] : cols_[j]) w += v * binv_.col(r);
    return w;
  }

  double basic_cost(int j) const {
    if (phase1_) return j >= n_total_ ? 1.0 : 0.0;
    return j >= n_total_ ? 0.0 : cost_[j];
  }

  LpStatus iterate() {
    const long degen_limit = 10L * (m_ + n_total_);
    const long iter_limit = 20000L + 50L * (m_ + n_total_);
    long degen_run = 0;
    bool blands = false;
    std::vector<char> in_basis(n_total_ + m_, 0);
    for (int i = 0; i < m_; ++i) in_basis[basis_[i]] = 1;

    for (long it = 0; it < iter_limit; ++it, ++iters_) {
      // BTRAN: simplex multipliers for the current basis.
      Eigen::VectorXd cb(m_);
      for (int i = 0; i < m_; ++i) cb[i] = basic_cost(basis_[i]);
      Eigen::VectorXd y = binv_.transpose() * cb;

      int enter = -1;
      double best = 0.0;
      for (int j = 0; j < n_total_; ++j) {
        if (in_basis[j]) continue;
        const double tol = kLpPivotTol * (phase1_ ? 1.0 : scale_[j]);
        const double d = basic_cost(j) - column_value(j, y);
        if (d < -tol) {
          if (blands) {
            enter = j;
            break;
          }
          const double score = d / scale_[j];  // scale-free Dantzig
          if (score < best - 1e-15) {
            best = score;
            enter = j;
          }
        }
      }
      if (enter < 0) return LpStatus::Optimal;

      Eigen::VectorXd w = ftran(enter);
      // Ratio test.  Basic artificials pinned at zero leave as soon as the
      // entering column touches their row, keeping them at level zero.
      int leave = -1;
      double best_ratio = 0.0;
      double best_pivot = 0.0;
      for (int i = 0; i < m_; ++i) {
        const bool artificial = basis_[i] >= n_total_;
        const double wi = w[i];
        double ratio;
        if (wi > kLpPivotTol) {
          ratio = xb_[i] / wi;
        } else if (artificial && wi < -kLpPivotTol && xb_[i] <= kLpFeasTol) {
          ratio = 0.0;  // forces the artificial out instead of growing it
        } else {
          continue;
        }
        bool better;
        if (leave < 0) {
          better = true;
        } else if (blands) {
          better = ratio < best_ratio - 1e-12 ||
                   (std::abs(ratio - best_ratio) <= 1e-12 &&
                    basis_[i] < basis_[leave]);
        } else {
          better = ratio < best_ratio - 1e-12 ||
                   (std::abs(ratio - best_ratio) <= 1e-12 &&
                    (artificial && basis_[leave] < n_total_)) ||
                   (std::abs(ratio - best_ratio) <= 1e-12 &&
                    (artificial == (basis_[leave] >= n_total_)) &&
                    std::abs(wi) > best_pivot);
        }
        if (better) {
          leave = i;
          best_ratio = ratio;
          best_pivot = std::abs(wi);
        }
      }
      if (leave < 0) return LpStatus::Unbounded;

      const double step = best_ratio;
      if (step <= kLpPivotTol) {
        if (++degen_run > degen_limit && !blands) {
          blands = true;
          blands_used_ = true;
        }
      } else {
        degen_run = 0;
      }

      // Basis change with a product-form inverse update.
      const double piv = w[leave];
      if (std::abs(piv) < kLpPivotTol) return LpStatus::NumericalBreakdown;
      xb_ -= step * w;
      xb_[leave] = step;
      for (int i = 0; i < m_; ++i)
        if (i != leave && xb_[i] < 0.0 && xb_[i] > -kLpFeasTol) xb_[i] = 0.0;
      in_basis[basis_[leave]] = 0;
      in_basis[enter] = 1;
      basis_[leave] = enter;
      binv_.row(leave) /= piv;
      for (int i = 0; i < m_; ++i) {
        if (i == leave) continue;
        const double f = w[i];
        if (f != 0.0) binv_.row(i) -= f * binv_.row(leave);
      }
      if ((it & 1023) == 1023) refactorize();
    }
    return LpStatus::NumericalBreakdown;
  }

  /// Recomputes the basis inverse and basic solution from scratch to shed
  /// accumulated product-form drift.
  void refactorize() {
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(m_, m_);
    for (int i = 0; i < m_; ++i) {
      const int j = basis_[i];
      if (j >= n_total_) {
        B(j - n_total_, i) = 1.0;
      } else {
        for (const auto& [r, v] : cols_[j]) B(r, i) = v;
      }
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(B);
    binv_ = lu.inverse();
    xb_ = binv_ * Eigen::Map<const Eigen::VectorXd>(rhs_.data(), m_);
    for (int i = 0; i < m_; ++i)
      if (xb_[i] < 0.0 && xb_[i] > -kLpFeasTol) xb_[i] = 0.0;
  }

  void finish(LpSolution& sol) const {
    sol.x.assign(n_, 0.0);
    for (int i = 0; i < m_; ++i)
      if (basis_[i] < n_) sol.x[basis_[i]] = xb_[i];
    for (int j = 0; j < n_; ++j) {
      sol.x[j] += lower_[j];
      if (sol.x[j] < lower_[j] && sol.x[j] > lower_[j] - kLpFeasTol)
        sol.x[j] = lower_[j];
    }
    double obj = 0.0;
    for (int j = 0; j < n_; ++j) obj += prob_.objective[j] * sol.x[j];
    sol.objective = obj;
    double resid = 0.0;
    auto row_value = [&](const LpProblem::Row& row) {
      double v = 0.0;
      for (const auto& [j, c] : row.coeffs) v += c * sol.x[j];
      return v;
    };
    for (const auto& row : prob_.eq_rows)
      resid = std::max(resid, std::abs(row_value(row) - row.rhs));
    for (const auto& row : prob_.ge_rows)
      resid = std::max(resid, std::max(0.0, row.rhs - row_value(row)));
    sol.max_residual = resid;
  }

  const LpProblem& prob_;
  int n_ = 0;        // structural variables
  int n_total_ = 0;  // structural + surplus
  int m_ = 0;
  bool phase1_ = true;
  long iters_ = 0;
  bool blands_used_ = false;
  std::vector<std::vector<std::pair<int, double>>> cols_;
  std::vector<double> rhs_, cost_, scale_, lower_;
  std::vector<int> basis_;
  Eigen::MatrixXd binv_;
  Eigen::VectorXd xb_;
};

}  // namespace detail

inline LpSolution solve(const LpProblem& p) {
  require(static_cast<int>(p.objective.size()) == p.num_vars,
          Errc::BadDocument, "objective size mismatch");
  for (double c : p.objective)
    require(std::isfinite(c), Errc::BadDocument, "non-finite objective");
  detail::SimplexEngine engine(p);
  LpSolution sol = engine.run();
  if (sol.status == LpStatus::Optimal && sol.max_residual > kLpFeasTol) {
    sol.status = LpStatus::NumericalBreakdown;
    sol.diagnostics = "feasibility residual " +
                      std::to_string(sol.max_residual) + " above tolerance";
  }
  return sol;
}

/// Documented JSON form for cross-checking against external solvers.
inline Json lp_to_json(const LpProblem& p) {
  Json doc;
  doc["vars"] = p.num_vars;
  doc["minimize"] = p.objective;
  auto rows_to_json = [](const std::vector<LpProblem::Row>& rows) {
    Json arr = Json::array();
    for (const auto& row : rows) {
      Json coeffs = Json::array();
      for (const auto& [j, v] : row.coeffs) coeffs.push_back({{"var", j}, {"coef", v}});
      arr.push_back({{"coeffs", coeffs}, {"rhs", row.rhs}});
    }
    return arr;
  };
  doc["eq"] = rows_to_json(p.eq_rows);
  doc["ge"] = rows_to_json(p.ge_rows);
  if (!p.lower.empty()) doc["lower"] = p.lower;
  return doc;
}

}  // namespace ltlplan
