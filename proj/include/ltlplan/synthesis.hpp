#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ltlplan/common.hpp"
#include "ltlplan/graph.hpp"
#include "ltlplan/lp.hpp"
#include "ltlplan/product.hpp"

namespace ltlplan {

enum class NodeKind : std::uint8_t {
  Interior,  // X_r
  Entry,     // X_tr or X_tr_prime: every action is rewired to the trap
  Trap,      // v
  Sink,      // absorbs mass that drifts to states with no AMEC ahead
};

/// Prefix MDP over X_r, the one-step AMEC entry states, a trap state v that
/// stands for "inside some AMEC", and a cost-free sink that collects mass
/// leaking to transient states from which no AMEC is reachable.  Without
/// the sink the flow-balance system would force entry probability 1 and the
/// gamma constraint could never bind.
struct PrefixMdp {
  struct Succ {
    int node = 0;
    double p = 0.0;
    double viol = 0.0;  // already zeroed where the construction requires it
  };
  struct Action {
    int orig_action = -1;  // index into rp.actions[orig]; -1 for tau/sink
    double exec = 0.0;
    std::vector<Succ> succ;
  };

  const Product* rp = nullptr;
  std::vector<int> nodes;     // product index per node; -1 for trap/sink
  std::vector<NodeKind> kind;
  std::vector<std::vector<Action>> actions;
  std::vector<int> node_of;   // product index -> node or -1
  int trap = -1;
  int sink = -1;
  std::vector<double> chi0;   // initial distribution over nodes
  bool trivial = false;       // x0 already inside an AMEC

  int num_nodes() const { return static_cast<int>(nodes.size()); }
};

/// Builds the prefix MDP.  Violation costs are kept on transitions from X_r
/// into X_r and X_tr and zeroed elsewhere; action costs at entry states and
/// at the trap are zero.
inline PrefixMdp build_prefix_mdp(const Product& rp, const StatePartition& part) {
  PrefixMdp pm;
  pm.rp = &rp;
  pm.trivial = part.trivial_prefix;
  const int n = rp.num_states();
  pm.node_of.assign(n, -1);
  auto is_entry = [&](int x) { return part.x_tr[x] || part.x_tr_prime[x]; };
  for (int x = 0; x < n; ++x) {
    if (part.x_r[x] || is_entry(x)) {
      pm.node_of[x] = pm.num_nodes();
      pm.nodes.push_back(x);
      pm.kind.push_back(part.x_r[x] ? NodeKind::Interior : NodeKind::Entry);
    }
  }
  if (!pm.trivial && pm.nodes.empty())
    fail(Errc::NoReachableAmec, "prefix state space is empty");
  pm.trap = pm.num_nodes();
  pm.nodes.push_back(-1);
  pm.kind.push_back(NodeKind::Trap);
  bool needs_sink = false;
  for (int x = 0; x < n; ++x)
    if (part.x_r[x])
      for (const auto& act : rp.actions[x])
        for (const auto& sc : act.succ)
          if (sc.p > 0.0 && part.x_not_r[sc.x]) needs_sink = true;
  if (needs_sink) {
    pm.sink = pm.num_nodes();
    pm.nodes.push_back(-1);
    pm.kind.push_back(NodeKind::Sink);
  }

  pm.actions.resize(pm.num_nodes());
  for (int node = 0; node < pm.num_nodes(); ++node) {
    switch (pm.kind[node]) {
      case NodeKind::Interior: {
        const int x = pm.nodes[node];
        for (int u = 0; u < static_cast<int>(rp.actions[x].size()); ++u) {
          const ProductAction& act = rp.actions[x][u];
          PrefixMdp::Action pa;
          pa.orig_action = u;
          pa.exec = act.exec_cost;
          for (const auto& sc : act.succ) {
            if (sc.p <= 0.0) continue;
            int target = pm.node_of[sc.x];
            double viol = sc.viol;
            if (target < 0) {
              target = pm.sink;  // no AMEC ahead of this successor
              viol = 0.0;
            } else if (!(part.x_r[sc.x] || part.x_tr[sc.x])) {
              viol = 0.0;  // entry via X_tr_prime carries no violation here
            }
            pa.succ.push_back({target, sc.p, viol});
          }
          pm.actions[node].push_back(std::move(pa));
        }
        break;
      }
      case NodeKind::Entry: {
        const int x = pm.nodes[node];
        for (int u = 0; u < static_cast<int>(rp.actions[x].size()); ++u) {
          PrefixMdp::Action pa;
          pa.orig_action = u;
          pa.exec = 0.0;
          pa.succ.push_back({pm.trap, 1.0, 0.0});
          pm.actions[node].push_back(std::move(pa));
        }
        break;
      }
      case NodeKind::Trap:
      case NodeKind::Sink: {
        PrefixMdp::Action tau;
        tau.succ.push_back({node, 1.0, 0.0});
        pm.actions[node].push_back(std::move(tau));
        break;
      }
    }
  }

  pm.chi0.assign(pm.num_nodes(), 0.0);
  require(pm.node_of[rp.x0] >= 0, Errc::NoReachableAmec,
          "x0 is outside the prefix state space");
  pm.chi0[pm.node_of[rp.x0]] = 1.0;
  return pm;
}

/// Suffix MDP of one AMEC: accepting states are split into an `out` copy
/// keeping their outgoing edges and an absorbing `in` copy receiving every
/// edge that entered the accepting set, so accepting cycles become acyclic
/// flows.
struct SuffixMdp {
  enum class Kind : std::uint8_t { Plain, Out, In };
  struct Succ {
    int node = 0;
    double p = 0.0;
    double viol = 0.0;
  };
  struct Action {
    int orig_action = -1;
    double exec = 0.0;
    std::vector<Succ> succ;
  };

  const Product* rp = nullptr;
  int amec_index = -1;
  std::vector<int> orig;            // product state per node
  std::vector<Kind> kind;
  std::vector<std::vector<Action>> actions;  // empty at `in` nodes (tau only)
  std::vector<int> flow_node_of;    // product -> plain/out node (-1 outside)
  std::vector<int> in_node_of;      // product -> in node (-1 if not accepting)
  std::vector<double> d_tr;         // entry distribution over flow nodes
  double d_tr_total = 0.0;

  int num_nodes() const { return static_cast<int>(orig.size()); }
};

/// Structure-only constructor; the entry distribution is attached by
/// `attach_entry_distribution` (sequential mode) or expressed linearly in y
/// inside the coupled LP.
inline SuffixMdp build_suffix_structure(const Product& rp, const Mec& amec,
                                        int amec_index) {
  SuffixMdp sm;
  sm.rp = &rp;
  sm.amec_index = amec_index;
  const int n = rp.num_states();
  sm.flow_node_of.assign(n, -1);
  sm.in_node_of.assign(n, -1);
  for (std::size_t i = 0; i < amec.states.size(); ++i) {
    const int x = amec.states[i];
    sm.flow_node_of[x] = sm.num_nodes();
    sm.orig.push_back(x);
    sm.kind.push_back(rp.accepting[x] ? SuffixMdp::Kind::Out
                                      : SuffixMdp::Kind::Plain);
  }
  for (int x : amec.states) {
    if (!rp.accepting[x]) continue;
    sm.in_node_of[x] = sm.num_nodes();
    sm.orig.push_back(x);
    sm.kind.push_back(SuffixMdp::Kind::In);
  }
  sm.actions.resize(sm.num_nodes());
  for (std::size_t i = 0; i < amec.states.size(); ++i) {
    const int x = amec.states[i];
    const int node = sm.flow_node_of[x];
    for (int u : amec.action_map[i]) {
      const ProductAction& act = rp.actions[x][u];
      SuffixMdp::Action sa;
      sa.orig_action = u;
      sa.exec = act.exec_cost;
      for (const auto& sc : act.succ) {
        if (sc.p <= 0.0) continue;
        require(sm.flow_node_of[sc.x] >= 0, Errc::InternalInvariant,
                "AMEC action escapes its component");
        const int target = rp.accepting[sc.x] ? sm.in_node_of[sc.x]
                                              : sm.flow_node_of[sc.x];
        sa.succ.push_back({target, sc.p, sc.viol});
      }
      sm.actions[node].push_back(std::move(sa));
    }
  }
  sm.d_tr.assign(sm.num_nodes(), 0.0);
  return sm;
}

/// Entry states of this AMEC: members also in X_tr or X_tr_prime.
inline std::vector<int> amec_entry_states(const Mec& amec,
                                          const StatePartition& part) {
  std::vector<int> out;
  for (int x : amec.states)
    if (part.x_tr[x] || part.x_tr_prime[x]) out.push_back(x);
  return out;
}

/// D_tr(x) = sum over source states and actions of y * p into x, for every
/// entry state x of the AMEC.  Sources default to X_n; with
/// `all_entries` the X_not_n mass is included as well.
inline void attach_entry_distribution(SuffixMdp& sm, const PrefixMdp& pm,
                                      const StatePartition& part,
                                      const std::vector<std::vector<double>>& y,
                                      bool all_entries) {
  const Product& rp = *sm.rp;
  std::fill(sm.d_tr.begin(), sm.d_tr.end(), 0.0);
  sm.d_tr_total = 0.0;
  if (pm.trivial) {
    if (sm.flow_node_of[rp.x0] >= 0) {
      sm.d_tr[sm.flow_node_of[rp.x0]] = 1.0;
      sm.d_tr_total = 1.0;
    }
    return;
  }
  for (int node = 0; node < pm.num_nodes(); ++node) {
    if (pm.kind[node] != NodeKind::Interior) continue;
    const int xh = pm.nodes[node];
    if (!(part.x_n[xh] || (all_entries && part.x_not_n[xh]))) continue;
    for (std::size_t u = 0; u < rp.actions[xh].size(); ++u) {
      const double yu = y[node][u];
      if (yu <= 0.0) continue;
      for (const auto& sc : rp.actions[xh][u].succ) {
        const int fnode = sm.flow_node_of[sc.x];
        if (fnode < 0 || sc.p <= 0.0) continue;
        if (!(part.x_tr[sc.x] || part.x_tr_prime[sc.x])) continue;
        sm.d_tr[fnode] += yu * sc.p;
        sm.d_tr_total += yu * sc.p;
      }
    }
  }
}

/// Convenience form matching the synthesis pipeline: build + attach, failing
/// with EmptyEntry when the AMEC is never entered.
inline SuffixMdp build_suffix_mdp(const Product& rp, const StatePartition& part,
                                  const Mec& amec, int amec_index,
                                  const PrefixMdp& pm,
                                  const std::vector<std::vector<double>>& y,
                                  bool all_entries = false) {
  SuffixMdp sm = build_suffix_structure(rp, amec, amec_index);
  attach_entry_distribution(sm, pm, part, y, all_entries);
  require(sm.d_tr_total > kSupportTol, Errc::EmptyEntry,
          "AMEC " + std::to_string(amec_index) + " receives no prefix mass");
  return sm;
}

// ---------------------------------------------------------------------------
// Occupancy LPs
// ---------------------------------------------------------------------------

struct PrefixLpResult {
  std::vector<std::vector<double>> y;  // [node][action], trap/sink excluded
  double objective = 0.0;
  double entry_flow = 0.0;
  double gamma_achieved = 0.0;
  double max_residual = 0.0;
  long iterations = 0;
  bool saturated = false;
};

namespace detail {

struct PrefixVars {
  std::vector<std::vector<int>> var;  // [node][action] -> LP column
};

/// Shared assembly of the prefix LP constraint blocks: entry flow >= gamma
/// (or >= slack variable), flow balance with chi0 at every X_r node, y >= 0.
inline PrefixVars assemble_prefix_lp(const PrefixMdp& pm, double beta,
                                     LpProblem& lp, bool& saturated) {
  PrefixVars vars;
  vars.var.resize(pm.num_nodes());
  for (int node = 0; node < pm.num_nodes(); ++node) {
    if (pm.kind[node] == NodeKind::Trap || pm.kind[node] == NodeKind::Sink)
      continue;
    vars.var[node].resize(pm.actions[node].size());
    for (std::size_t u = 0; u < pm.actions[node].size(); ++u) {
      const auto& act = pm.actions[node][u];
      double coeff = 0.0;
      for (const auto& sc : act.succ) {
        RegulatedCost rc = regulated_cost(act.exec, sc.viol, beta);
        coeff += sc.p * rc.value;
        saturated = saturated || rc.saturated;
      }
      vars.var[node][u] = lp.add_var(coeff);
    }
  }
  // Flow balance at interior nodes.
  std::vector<int> row_of(pm.num_nodes(), -1);
  for (int node = 0; node < pm.num_nodes(); ++node) {
    if (pm.kind[node] != NodeKind::Interior) continue;
    row_of[node] = static_cast<int>(lp.eq_rows.size());
    LpProblem::Row row;
    row.rhs = pm.chi0[node];
    lp.eq_rows.push_back(row);
  }
  for (int node = 0; node < pm.num_nodes(); ++node) {
    if (vars.var[node].empty()) continue;
    for (std::size_t u = 0; u < pm.actions[node].size(); ++u) {
      const int col = vars.var[node][u];
      if (row_of[node] >= 0)
        lp.eq_rows[row_of[node]].coeffs.emplace_back(col, 1.0);
      for (const auto& sc : pm.actions[node][u].succ)
        if (row_of[sc.node] >= 0)
          lp.eq_rows[row_of[sc.node]].coeffs.emplace_back(col, -sc.p);
    }
  }
  // Entry-flow row (>= gamma) built by the caller from these coefficients.
  LpProblem::Row entry;
  for (int node = 0; node < pm.num_nodes(); ++node) {
    if (vars.var[node].empty()) continue;
    for (std::size_t u = 0; u < pm.actions[node].size(); ++u) {
      double coeff = 0.0;
      for (const auto& sc : pm.actions[node][u].succ)
        if (pm.kind[sc.node] == NodeKind::Entry) coeff += sc.p;
      if (coeff != 0.0) entry.coeffs.emplace_back(vars.var[node][u], coeff);
    }
  }
  lp.ge_rows.push_back(std::move(entry));  // rhs filled by caller
  return vars;
}

inline void merge_duplicate_coeffs(LpProblem& lp) {
  auto merge = [](LpProblem::Row& row) {
    std::sort(row.coeffs.begin(), row.coeffs.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<std::pair<int, double>> out;
    for (const auto& [j, v] : row.coeffs) {
      if (!out.empty() && out.back().first == j)
        out.back().second += v;
      else
        out.emplace_back(j, v);
    }
    row.coeffs = std::move(out);
  };
  for (auto& r : lp.eq_rows) merge(r);
  for (auto& r : lp.ge_rows) merge(r);
}

inline PrefixLpResult read_prefix_solution(const PrefixMdp& pm,
                                           const PrefixVars& vars,
                                           const LpSolution& sol,
                                           bool saturated) {
  PrefixLpResult res;
  res.y.resize(pm.num_nodes());
  for (int node = 0; node < pm.num_nodes(); ++node) {
    res.y[node].assign(pm.actions[node].size(), 0.0);
    if (vars.var[node].empty()) continue;
    for (std::size_t u = 0; u < pm.actions[node].size(); ++u) {
      double v = sol.x[vars.var[node][u]];
      if (v < 0.0) {
        require(v > -kSupportTol, Errc::InternalInvariant,
                "occupancy fell below -1e-9");
        v = 0.0;
      }
      res.y[node][u] = v;
    }
  }
  res.max_residual = sol.max_residual;
  res.iterations = sol.iterations;
  res.saturated = saturated;
  return res;
}

}  // namespace detail

/// Solves the prefix LP at a fixed satisfaction threshold gamma.
inline PrefixLpResult solve_prefix(const PrefixMdp& pm, double gamma,
                                   double beta) {
  require(gamma > 0.0 && gamma <= 1.0, Errc::BadDocument,
          "gamma must be in (0,1]");
  if (pm.trivial) {
    PrefixLpResult res;
    res.y.resize(pm.num_nodes());
    for (int node = 0; node < pm.num_nodes(); ++node)
      res.y[node].assign(pm.actions[node].size(), 0.0);
    res.gamma_achieved = 1.0;
    res.entry_flow = 1.0;
    return res;
  }
  LpProblem lp;
  bool saturated = false;
  detail::PrefixVars vars = detail::assemble_prefix_lp(pm, beta, lp, saturated);
  lp.ge_rows.back().rhs = gamma;
  detail::merge_duplicate_coeffs(lp);
  LpSolution sol = solve(lp);
  if (sol.status == LpStatus::Infeasible)
    fail(Errc::PrefixInfeasible,
         "no policy reaches the AMEC entry set with probability " +
             std::to_string(gamma));
  require(sol.status == LpStatus::Optimal, Errc::NumericalBreakdown,
          std::string("prefix LP: ") + lp_status_name(sol.status) + " " +
              sol.diagnostics);
  PrefixLpResult res = detail::read_prefix_solution(pm, vars, sol, saturated);
  res.objective = sol.objective;
  double entry = 0.0;
  for (const auto& [col, coeff] : lp.ge_rows.back().coeffs)
    entry += coeff * sol.x[col];
  res.entry_flow = entry;
  res.gamma_achieved = std::min(entry, 1.0);
  return res;
}

/// Remark-style slack variant: gamma becomes a decision variable in [0,1]
/// and the objective trades J_pre against w_gamma * gamma, rewarding
/// achieved entry probability.  Never infeasible beyond LP pathologies.
inline PrefixLpResult solve_prefix_slack(const PrefixMdp& pm, double w_gamma,
                                         double beta) {
  require(w_gamma >= 0.0, Errc::BadDocument, "w_gamma must be >= 0");
  if (pm.trivial) {
    PrefixLpResult res;
    res.y.resize(pm.num_nodes());
    for (int node = 0; node < pm.num_nodes(); ++node)
      res.y[node].assign(pm.actions[node].size(), 0.0);
    res.gamma_achieved = 1.0;
    res.entry_flow = 1.0;
    return res;
  }
  LpProblem lp;
  bool saturated = false;
  detail::PrefixVars vars = detail::assemble_prefix_lp(pm, beta, lp, saturated);
  const int gvar = lp.add_var(-w_gamma);
  lp.ge_rows.back().coeffs.emplace_back(gvar, -1.0);  // entry - g >= 0
  lp.ge_rows.back().rhs = 0.0;
  LpProblem::Row cap;  // -g >= -1
  cap.coeffs.emplace_back(gvar, -1.0);
  cap.rhs = -1.0;
  lp.ge_rows.push_back(cap);
  detail::merge_duplicate_coeffs(lp);
  LpSolution sol = solve(lp);
  require(sol.status == LpStatus::Optimal, Errc::NumericalBreakdown,
          std::string("slack prefix LP: ") + lp_status_name(sol.status) + " " +
              sol.diagnostics);
  PrefixLpResult res = detail::read_prefix_solution(pm, vars, sol, saturated);
  double entry = 0.0;
  for (const auto& [col, coeff] : lp.ge_rows[lp.ge_rows.size() - 2].coeffs)
    if (col != gvar) entry += coeff * sol.x[col];
  res.entry_flow = entry;
  res.gamma_achieved = std::min(entry, 1.0);
  res.objective = sol.objective + w_gamma * sol.x[gvar];  // J_pre alone
  res.iterations = sol.iterations;
  res.max_residual = sol.max_residual;
  return res;
}

struct SuffixLpResult {
  std::vector<std::vector<double>> z;  // [node][action] over flow nodes
  double objective = 0.0;
  double max_residual = 0.0;
  long iterations = 0;
  bool saturated = false;
};

namespace detail {

struct SuffixVars {
  std::vector<std::vector<int>> var;  // [node][action]; empty at `in` nodes
};

inline SuffixVars add_suffix_vars(const SuffixMdp& sm, double beta,
                                  LpProblem& lp, bool& saturated) {
  SuffixVars vars;
  vars.var.resize(sm.num_nodes());
  for (int node = 0; node < sm.num_nodes(); ++node) {
    if (sm.kind[node] == SuffixMdp::Kind::In) continue;
    vars.var[node].resize(sm.actions[node].size());
    for (std::size_t u = 0; u < sm.actions[node].size(); ++u) {
      const auto& act = sm.actions[node][u];
      double coeff = 0.0;
      for (const auto& sc : act.succ) {
        RegulatedCost rc = regulated_cost(act.exec, sc.viol, beta);
        coeff += sc.p * rc.value;
        saturated = saturated || rc.saturated;
      }
      vars.var[node][u] = lp.add_var(coeff);
    }
  }
  return vars;
}

inline SuffixLpResult read_suffix_solution(const SuffixMdp& sm,
                                           const SuffixVars& vars,
                                           const LpSolution& sol,
                                           double objective, bool saturated) {
  SuffixLpResult res;
  res.z.resize(sm.num_nodes());
  for (int node = 0; node < sm.num_nodes(); ++node) {
    res.z[node].assign(sm.actions[node].size(), 0.0);
    if (vars.var[node].empty()) continue;
    for (std::size_t u = 0; u < sm.actions[node].size(); ++u) {
      double v = sol.x[vars.var[node][u]];
      if (v < 0.0) {
        require(v > -kSupportTol, Errc::InternalInvariant,
                "occupancy fell below -1e-9");
        v = 0.0;
      }
      res.z[node][u] = v;
    }
  }
  res.objective = objective;
  res.max_residual = sol.max_residual;
  res.iterations = sol.iterations;
  res.saturated = saturated;
  return res;
}

}  // namespace detail

/// One-pass suffix LP: routes the entry mass D_tr to the absorbing accepting
/// copies, minimizing regulated cost, with flow balance at every non-`in`
/// node and total absorption pinned to the injected mass.
inline SuffixLpResult solve_suffix(const SuffixMdp& sm, double beta) {
  require(sm.d_tr_total > 0.0, Errc::EmptyEntry,
          "suffix LP needs positive entry mass");
  LpProblem lp;
  bool saturated = false;
  detail::SuffixVars vars = detail::add_suffix_vars(sm, beta, lp, saturated);
  std::vector<int> row_of(sm.num_nodes(), -1);
  for (int node = 0; node < sm.num_nodes(); ++node) {
    if (sm.kind[node] == SuffixMdp::Kind::In) continue;
    row_of[node] = static_cast<int>(lp.eq_rows.size());
    LpProblem::Row row;
    row.rhs = sm.d_tr[node];
    lp.eq_rows.push_back(row);
  }
  LpProblem::Row absorb;
  absorb.rhs = sm.d_tr_total;
  for (int node = 0; node < sm.num_nodes(); ++node) {
    if (vars.var[node].empty()) continue;
    for (std::size_t u = 0; u < sm.actions[node].size(); ++u) {
      const int col = vars.var[node][u];
      lp.eq_rows[row_of[node]].coeffs.emplace_back(col, 1.0);
      for (const auto& sc : sm.actions[node][u].succ) {
        if (sm.kind[sc.node] == SuffixMdp::Kind::In)
          absorb.coeffs.emplace_back(col, sc.p);
        else
          lp.eq_rows[row_of[sc.node]].coeffs.emplace_back(col, -sc.p);
      }
    }
  }
  lp.eq_rows.push_back(std::move(absorb));
  detail::merge_duplicate_coeffs(lp);
  LpSolution sol = solve(lp);
  if (sol.status == LpStatus::Infeasible)
    fail(Errc::SuffixInfeasible,
         "suffix LP infeasible inside an AMEC; this indicates a bug");
  require(sol.status == LpStatus::Optimal, Errc::NumericalBreakdown,
          std::string("suffix LP: ") + lp_status_name(sol.status) + " " +
              sol.diagnostics);
  return detail::read_suffix_solution(sm, vars, sol, sol.objective, saturated);
}

/// Steady-cycle LP: a pure circulation on the split AMEC where flow
/// absorbed at an accepting `in` copy re-emerges at its `out` twin, scaled
/// so that accepting visits happen at rate `scale`.  This is the stationary
/// complement of the one-pass LP: its support is closed under the extracted
/// policy, so execution never leaves optimized states once inside.
inline SuffixLpResult solve_suffix_cycle(const SuffixMdp& sm, double beta,
                                         double scale) {
  require(scale > 0.0, Errc::EmptyEntry, "cycle LP needs a positive scale");
  LpProblem lp;
  bool saturated = false;
  detail::SuffixVars vars = detail::add_suffix_vars(sm, beta, lp, saturated);
  std::vector<int> row_of(sm.num_nodes(), -1);
  for (int node = 0; node < sm.num_nodes(); ++node) {
    if (sm.kind[node] == SuffixMdp::Kind::In) continue;
    row_of[node] = static_cast<int>(lp.eq_rows.size());
    lp.eq_rows.push_back({});
  }
  LpProblem::Row absorb;
  absorb.rhs = scale;
  for (int node = 0; node < sm.num_nodes(); ++node) {
    if (vars.var[node].empty()) continue;
    for (std::size_t u = 0; u < sm.actions[node].size(); ++u) {
      const int col = vars.var[node][u];
      lp.eq_rows[row_of[node]].coeffs.emplace_back(col, 1.0);
      for (const auto& sc : sm.actions[node][u].succ) {
        if (sm.kind[sc.node] == SuffixMdp::Kind::In) {
          absorb.coeffs.emplace_back(col, sc.p);
          // recycle into the out twin of the same accepting state
          const int out_node = sm.flow_node_of[sm.orig[sc.node]];
          lp.eq_rows[row_of[out_node]].coeffs.emplace_back(col, -sc.p);
        } else {
          lp.eq_rows[row_of[sc.node]].coeffs.emplace_back(col, -sc.p);
        }
      }
    }
  }
  lp.eq_rows.push_back(std::move(absorb));
  detail::merge_duplicate_coeffs(lp);
  LpSolution sol = solve(lp);
  require(sol.status == LpStatus::Optimal, Errc::NumericalBreakdown,
          std::string("cycle LP: ") + lp_status_name(sol.status) + " " +
              sol.diagnostics);
  return detail::read_suffix_solution(sm, vars, sol, sol.objective, saturated);
}

// ---------------------------------------------------------------------------
// Policies
// ---------------------------------------------------------------------------

enum class Provenance : std::uint8_t {
  PrefixOptimal,
  SuffixOptimal,
  UniformFallback,
  RoundRobin,
};

inline const char* provenance_name(Provenance p) {
  switch (p) {
    case Provenance::PrefixOptimal: return "prefix-optimal";
    case Provenance::SuffixOptimal: return "suffix-optimal";
    case Provenance::UniformFallback: return "uniform-fallback";
    case Provenance::RoundRobin: return "round-robin";
  }
  return "?";
}

/// Stochastic policy over the relaxed product: one distribution over the
/// enabled extended actions per state.
struct ProductPolicy {
  std::vector<std::vector<double>> probs;  // [x][action index]
  std::vector<Provenance> provenance;

  void init_uniform(const Product& rp) {
    probs.resize(rp.num_states());
    provenance.assign(rp.num_states(), Provenance::UniformFallback);
    for (int x = 0; x < rp.num_states(); ++x) {
      const std::size_t k = rp.actions[x].size();
      probs[x].assign(k, k ? 1.0 / static_cast<double>(k) : 0.0);
    }
  }
};

/// Normalizes prefix occupancies into a policy on X_r; states without
/// support (and every other prefix state) stay uniform over their enabled
/// extended actions.
inline void extract_prefix_policy(const PrefixMdp& pm,
                                  const std::vector<std::vector<double>>& y,
                                  ProductPolicy& pol) {
  for (int node = 0; node < pm.num_nodes(); ++node) {
    if (pm.kind[node] != NodeKind::Interior) continue;
    const int x = pm.nodes[node];
    double total = 0.0;
    for (double v : y[node]) total += v;
    if (total > kSupportTol) {
      auto& row = pol.probs[x];
      std::fill(row.begin(), row.end(), 0.0);
      for (std::size_t u = 0; u < y[node].size(); ++u) {
        const int orig = pm.actions[node][u].orig_action;
        row[orig] = y[node][u] / total;
      }
      pol.provenance[x] = Provenance::PrefixOptimal;
    }
  }
}

/// Folds a suffix occupancy (merged one-pass + cycle flow) back onto the
/// original AMEC states; accepting states take their `out` copy's policy.
/// Member states without support get the cheapest violation-free action
/// toward the supported set later (see rejoin_repair), not a uniform mix,
/// so that reachable states never sample unoptimized violating actions.
inline void extract_suffix_policy(const SuffixMdp& sm,
                                  const std::vector<std::vector<double>>& z,
                                  ProductPolicy& pol) {
  for (int node = 0; node < sm.num_nodes(); ++node) {
    if (sm.kind[node] == SuffixMdp::Kind::In) continue;
    const int x = sm.orig[node];
    double total = 0.0;
    for (double v : z[node]) total += v;
    if (total <= kSupportTol) continue;
    auto& row = pol.probs[x];
    std::fill(row.begin(), row.end(), 0.0);
    for (std::size_t u = 0; u < z[node].size(); ++u) {
      const int orig = sm.actions[node][u].orig_action;
      row[orig] += z[node][u] / total;
    }
    pol.provenance[x] = Provenance::SuffixOptimal;
  }
}

/// Stochastic-shortest-path repair: AMEC states left without flow support
/// get the action minimizing expected regulated cost to reach a supported
/// state, restricted to the AMEC's action map.  Keeps execution inside the
/// optimized support whenever the agent drifts off it.
inline void rejoin_repair(const Product& rp, const Mec& amec,
                          const std::vector<char>& supported,
                          double beta, ProductPolicy& pol) {
  const double kStep = 1e-9;  // forces progress through zero-cost actions
  std::map<int, int> pos;
  for (std::size_t i = 0; i < amec.states.size(); ++i)
    pos[amec.states[i]] = static_cast<int>(i);
  const std::size_t k = amec.states.size();
  std::vector<double> value(k, 0.0);
  std::vector<int> best(k, -1);
  bool any_unsupported = false;
  for (std::size_t i = 0; i < k; ++i)
    if (!supported[amec.states[i]]) {
      value[i] = std::numeric_limits<double>::infinity();
      any_unsupported = true;
    }
  if (!any_unsupported) return;
  for (std::size_t sweep = 0; sweep < 4 * k + 16; ++sweep) {
    double change = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      if (supported[amec.states[i]]) continue;
      const int x = amec.states[i];
      double vbest = std::numeric_limits<double>::infinity();
      int ubest = -1;
      for (int u : amec.action_map[i]) {
        const ProductAction& act = rp.actions[x][u];
        double v = expected_regulated_cost(act, beta).value + kStep;
        for (const auto& sc : act.succ) {
          if (sc.p <= 0.0) continue;
          if (!supported[sc.x]) v += sc.p * value[pos.at(sc.x)];
          if (!std::isfinite(v)) break;
        }
        if (v < vbest - 1e-15) {
          vbest = v;
          ubest = u;
        }
      }
      if (ubest >= 0 && vbest < value[i]) {
        change = std::max(change, value[i] - vbest);
        value[i] = vbest;
        best[i] = ubest;
      }
    }
    if (change < 1e-12 && sweep > k) break;
  }
  for (std::size_t i = 0; i < k; ++i) {
    const int x = amec.states[i];
    if (supported[x] || best[i] < 0) continue;
    auto& row = pol.probs[x];
    std::fill(row.begin(), row.end(), 0.0);
    row[best[i]] = 1.0;
    pol.provenance[x] = Provenance::SuffixOptimal;
  }
}

/// Round-Robin baseline over one AMEC: each state cycles deterministically
/// through its ordered restricted actions across successive visits.  The
/// per-state counters make this a non-stationary policy; they are confined
/// to one simulation thread.
struct RoundRobinPolicy {
  const Mec* amec = nullptr;
  std::vector<int> pos_of;            // product -> member index or -1
  mutable std::vector<int> counter;   // per member state

  bool covers(int x) const { return pos_of[x] >= 0; }

  int next_action(int x) const {
    const int i = pos_of[x];
    const auto& order = amec->action_map[i];
    const int u = order[counter[i] % static_cast<int>(order.size())];
    ++counter[i];
    return u;
  }

  void reset() const { std::fill(counter.begin(), counter.end(), 0); }
};

inline RoundRobinPolicy round_robin(const Product& rp, const Mec& amec) {
  RoundRobinPolicy rr;
  rr.amec = &amec;
  rr.pos_of.assign(rp.num_states(), -1);
  for (std::size_t i = 0; i < amec.states.size(); ++i)
    rr.pos_of[amec.states[i]] = static_cast<int>(i);
  rr.counter.assign(amec.states.size(), 0);
  return rr;
}

}  // namespace ltlplan
