#pragma once

#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "ltlplan/synthesis.hpp"

namespace ltlplan {

struct SynthesisOptions {
  double gamma = 0.9;
  double beta = 100.0;
  double eta = 0.5;
  bool sequential = false;
  double slack_wgamma = -1.0;  // < 0 disables the slack fallback
  bool dtr_all_entries = false;
  std::string lp_dump;  // write the assembled LP as JSON when nonempty
};

/// One AMEC's share of the solution: the suffix structure, the merged
/// one-pass + steady-cycle occupancy, and the objective split.
struct SuffixPlan {
  int amec_index = -1;
  SuffixMdp sm;
  std::vector<std::vector<double>> z;
  double entry_mass = 0.0;
  double j_entry = 0.0;
  double j_cycle = 0.0;
  bool skipped = false;
};

struct SynthesisResult {
  std::string mode;
  bool used_slack = false;
  double gamma_achieved = 0.0;
  double j_pre = 0.0;
  double j_suffix_total = 0.0;
  double objective = 0.0;  // (1-eta)*j_pre + eta*j_suffix_total
  double max_residual = 0.0;
  long lp_iterations = 0;
  bool saturated = false;
  PrefixMdp pm;
  std::vector<std::vector<double>> y;
  std::vector<SuffixPlan> suffixes;
  ProductPolicy policy;
};

namespace detail {

inline void dump_lp(const LpProblem& lp, const std::string& path) {
  if (path.empty()) return;
  std::ofstream out(path);
  require(out.good(), Errc::BadDocument, "cannot write LP dump to " + path);
  out << lp_to_json(lp).dump(1) << "\n";
}

/// Linear coefficients of the entry distribution in terms of prefix
/// occupancies: for each entry flow-node of the AMEC, the (node, action, p)
/// triples whose y mass feeds it.
struct EntryCoeffs {
  // per suffix flow node: list of (prefix node, action, probability)
  std::vector<std::vector<std::tuple<int, int, double>>> into;
};

inline EntryCoeffs entry_coefficients(const SuffixMdp& sm, const PrefixMdp& pm,
                                      const StatePartition& part,
                                      bool all_entries) {
  const Product& rp = *sm.rp;
  EntryCoeffs ec;
  ec.into.resize(sm.num_nodes());
  for (int node = 0; node < pm.num_nodes(); ++node) {
    if (pm.kind[node] != NodeKind::Interior) continue;
    const int xh = pm.nodes[node];
    if (!(part.x_n[xh] || (all_entries && part.x_not_n[xh]))) continue;
    for (std::size_t u = 0; u < rp.actions[xh].size(); ++u) {
      for (const auto& sc : rp.actions[xh][u].succ) {
        if (sc.p <= 0.0) continue;
        const int fnode = sm.flow_node_of[sc.x];
        if (fnode < 0) continue;
        if (!(part.x_tr[sc.x] || part.x_tr_prime[sc.x])) continue;
        ec.into[fnode].emplace_back(node, static_cast<int>(u), sc.p);
      }
    }
  }
  return ec;
}

inline void finalize_policy(const Product& rp,
                            const std::vector<Mec>& amec_list,
                            double beta, SynthesisResult& res) {
  res.policy.init_uniform(rp);
  extract_prefix_policy(res.pm, res.y, res.policy);
  for (const auto& sp : res.suffixes) {
    if (sp.skipped) continue;
    extract_suffix_policy(sp.sm, sp.z, res.policy);
    std::vector<char> supported(rp.num_states(), 0);
    for (int x : amec_list[sp.amec_index].states)
      if (res.policy.provenance[x] == Provenance::SuffixOptimal)
        supported[x] = 1;
    rejoin_repair(rp, amec_list[sp.amec_index], supported, beta, res.policy);
  }
}

}  // namespace detail

/// Prefix-then-suffix pipeline: solve the prefix LP (optionally through the
/// slack variant), derive each AMEC's entry distribution from y*, then
/// solve the one-pass and steady-cycle LPs per entered AMEC.
inline SynthesisResult solve_sequential(const Product& rp,
                                        const std::vector<Mec>& amec_list,
                                        const StatePartition& part,
                                        const SynthesisOptions& opts) {
  SynthesisResult res;
  res.mode = "sequential";
  res.pm = build_prefix_mdp(rp, part);
  PrefixLpResult pre;
  try {
    pre = solve_prefix(res.pm, opts.gamma, opts.beta);
  } catch (const Error& e) {
    if (e.code() != Errc::PrefixInfeasible || opts.slack_wgamma < 0.0) throw;
    pre = solve_prefix_slack(res.pm, opts.slack_wgamma, opts.beta);
    res.used_slack = true;
    res.mode += "+slack";
  }
  res.y = pre.y;
  res.j_pre = pre.objective;
  res.gamma_achieved = pre.gamma_achieved;
  res.max_residual = pre.max_residual;
  res.lp_iterations = pre.iterations;
  res.saturated = pre.saturated;

  for (std::size_t j = 0; j < amec_list.size(); ++j) {
    SuffixPlan sp;
    sp.amec_index = static_cast<int>(j);
    sp.sm = build_suffix_structure(rp, amec_list[j], static_cast<int>(j));
    attach_entry_distribution(sp.sm, res.pm, part, res.y,
                              opts.dtr_all_entries);
    sp.entry_mass = sp.sm.d_tr_total;
    if (sp.entry_mass <= kSupportTol) {
      sp.skipped = true;  // never entered under y*
      res.suffixes.push_back(std::move(sp));
      continue;
    }
    SuffixLpResult entry = solve_suffix(sp.sm, opts.beta);
    SuffixLpResult cycle =
        solve_suffix_cycle(sp.sm, opts.beta, sp.sm.d_tr_total);
    sp.j_entry = entry.objective;
    sp.j_cycle = cycle.objective;
    sp.z = entry.z;
    for (int node = 0; node < sp.sm.num_nodes(); ++node)
      for (std::size_t u = 0; u < sp.z[node].size(); ++u)
        sp.z[node][u] += cycle.z[node][u];
    res.j_suffix_total += sp.j_entry + sp.j_cycle;
    res.max_residual = std::max(
        {res.max_residual, entry.max_residual, cycle.max_residual});
    res.lp_iterations += entry.iterations + cycle.iterations;
    res.saturated = res.saturated || entry.saturated || cycle.saturated;
    res.suffixes.push_back(std::move(sp));
  }
  res.objective =
      (1.0 - opts.eta) * res.j_pre + opts.eta * res.j_suffix_total;
  detail::finalize_policy(rp, amec_list, opts.beta, res);
  return res;
}

/// Single coupled LP over prefix and suffix occupancies.  Each AMEC's entry
/// distribution is substituted as a linear expression in y, so the whole
/// trade-off (1-eta)*J_pre + eta*sum_j J_j stays one linear program.
inline SynthesisResult solve_coupled(const Product& rp,
                                     const std::vector<Mec>& amec_list,
                                     const StatePartition& part,
                                     const SynthesisOptions& opts) {
  require(opts.eta >= 0.0 && opts.eta <= 1.0, Errc::BadDocument,
          "eta must lie in [0,1]");
  SynthesisResult res;
  res.mode = "coupled";
  res.pm = build_prefix_mdp(rp, part);
  const PrefixMdp& pm = res.pm;

  LpProblem lp;
  std::vector<double> unit_cost;  // unweighted objective per variable
  bool saturated = false;

  // Prefix block (skipped entirely for a trivial prefix).
  detail::PrefixVars yvars;
  int gamma_row = -1;
  if (!pm.trivial) {
    yvars = detail::assemble_prefix_lp(pm, opts.beta, lp, saturated);
    gamma_row = static_cast<int>(lp.ge_rows.size()) - 1;
    lp.ge_rows[gamma_row].rhs = opts.gamma;
  }
  const int n_yvars = lp.num_vars;
  unit_cost = lp.objective;
  for (int j = 0; j < n_yvars; ++j) lp.objective[j] *= (1.0 - opts.eta);

  struct Block {
    int amec_index;
    SuffixMdp sm;
    detail::EntryCoeffs ec;
    detail::SuffixVars wvars, zvars;
    int w_begin = 0, w_end = 0, z_begin = 0, z_end = 0;
  };
  std::vector<Block> blocks;
  for (std::size_t j = 0; j < amec_list.size(); ++j) {
    Block b;
    b.amec_index = static_cast<int>(j);
    b.sm = build_suffix_structure(rp, amec_list[j], static_cast<int>(j));
    if (pm.trivial) {
      attach_entry_distribution(b.sm, pm, part, {}, opts.dtr_all_entries);
      if (b.sm.d_tr_total <= kSupportTol) continue;
    } else {
      b.ec = detail::entry_coefficients(b.sm, pm, part, opts.dtr_all_entries);
      bool enterable = false;
      for (const auto& lst : b.ec.into) enterable = enterable || !lst.empty();
      if (!enterable) continue;
    }
    blocks.push_back(std::move(b));
  }

  for (Block& b : blocks) {
    const SuffixMdp& sm = b.sm;
    b.w_begin = lp.num_vars;
    b.wvars = detail::add_suffix_vars(sm, opts.beta, lp, saturated);
    b.w_end = lp.num_vars;
    b.z_begin = lp.num_vars;
    b.zvars = detail::add_suffix_vars(sm, opts.beta, lp, saturated);
    b.z_end = lp.num_vars;
    unit_cost.resize(lp.num_vars);
    for (int v = b.w_begin; v < lp.num_vars; ++v) {
      unit_cost[v] = lp.objective[v];
      lp.objective[v] *= opts.eta;
    }

    auto d_expr = [&](int fnode, LpProblem::Row& row, double sign) {
      if (pm.trivial) {
        row.rhs -= sign * sm.d_tr[fnode];
      } else {
        for (const auto& [pnode, act, p] : b.ec.into[fnode])
          row.coeffs.emplace_back(yvars.var[pnode][act], -sign * p);
      }
    };

    // One-pass block: balance rows with the entry expression, absorption
    // equal to the injected mass.
    std::vector<int> w_row(sm.num_nodes(), -1);
    for (int node = 0; node < sm.num_nodes(); ++node) {
      if (sm.kind[node] == SuffixMdp::Kind::In) continue;
      w_row[node] = static_cast<int>(lp.eq_rows.size());
      LpProblem::Row row;
      d_expr(node, row, 1.0);
      lp.eq_rows.push_back(std::move(row));
    }
    LpProblem::Row w_absorb;
    for (int node = 0; node < sm.num_nodes(); ++node) {
      if (sm.kind[node] == SuffixMdp::Kind::In) continue;
      d_expr(node, w_absorb, 1.0);
    }
    for (int node = 0; node < sm.num_nodes(); ++node) {
      if (b.wvars.var[node].empty()) continue;
      for (std::size_t u = 0; u < sm.actions[node].size(); ++u) {
        const int col = b.wvars.var[node][u];
        lp.eq_rows[w_row[node]].coeffs.emplace_back(col, 1.0);
        for (const auto& sc : sm.actions[node][u].succ) {
          if (sm.kind[sc.node] == SuffixMdp::Kind::In)
            w_absorb.coeffs.emplace_back(col, sc.p);
          else
            lp.eq_rows[w_row[sc.node]].coeffs.emplace_back(col, -sc.p);
        }
      }
    }
    lp.eq_rows.push_back(std::move(w_absorb));

    // Steady-cycle block: circulation through the accepting copies at a
    // rate tied to the same entry mass.
    std::vector<int> z_row(sm.num_nodes(), -1);
    for (int node = 0; node < sm.num_nodes(); ++node) {
      if (sm.kind[node] == SuffixMdp::Kind::In) continue;
      z_row[node] = static_cast<int>(lp.eq_rows.size());
      lp.eq_rows.push_back({});
    }
    LpProblem::Row z_absorb;
    for (int node = 0; node < sm.num_nodes(); ++node) {
      if (sm.kind[node] == SuffixMdp::Kind::In) continue;
      d_expr(node, z_absorb, 1.0);
    }
    for (int node = 0; node < sm.num_nodes(); ++node) {
      if (b.zvars.var[node].empty()) continue;
      for (std::size_t u = 0; u < sm.actions[node].size(); ++u) {
        const int col = b.zvars.var[node][u];
        lp.eq_rows[z_row[node]].coeffs.emplace_back(col, 1.0);
        for (const auto& sc : sm.actions[node][u].succ) {
          if (sm.kind[sc.node] == SuffixMdp::Kind::In) {
            z_absorb.coeffs.emplace_back(col, sc.p);
            const int out_node = sm.flow_node_of[sm.orig[sc.node]];
            lp.eq_rows[z_row[out_node]].coeffs.emplace_back(col, -sc.p);
          } else {
            lp.eq_rows[z_row[sc.node]].coeffs.emplace_back(col, -sc.p);
          }
        }
      }
    }
    lp.eq_rows.push_back(std::move(z_absorb));
  }

  detail::merge_duplicate_coeffs(lp);
  detail::dump_lp(lp, opts.lp_dump);
  LpSolution sol = solve(lp);
  int gamma_var = -1;
  if (sol.status == LpStatus::Infeasible) {
    if (opts.slack_wgamma < 0.0 || gamma_row < 0)
      fail(Errc::CoupledInfeasible,
           "coupled LP infeasible at gamma=" + std::to_string(opts.gamma) +
               "; rerun with a slack weight to trade gamma off");
    gamma_var = lp.add_var(-opts.slack_wgamma);
    unit_cost.push_back(0.0);
    lp.ge_rows[gamma_row].coeffs.emplace_back(gamma_var, -1.0);
    lp.ge_rows[gamma_row].rhs = 0.0;
    LpProblem::Row cap;
    cap.coeffs.emplace_back(gamma_var, -1.0);
    cap.rhs = -1.0;
    lp.ge_rows.push_back(std::move(cap));
    res.used_slack = true;
    res.mode += "+slack";
    sol = solve(lp);
  }
  require(sol.status == LpStatus::Optimal, Errc::NumericalBreakdown,
          std::string("coupled LP: ") + lp_status_name(sol.status) + " " +
              sol.diagnostics);

  res.max_residual = sol.max_residual;
  res.lp_iterations = sol.iterations;
  res.saturated = saturated;

  if (pm.trivial) {
    res.gamma_achieved = 1.0;
    res.y.resize(pm.num_nodes());
    for (int node = 0; node < pm.num_nodes(); ++node)
      res.y[node].assign(pm.actions[node].size(), 0.0);
  } else {
    PrefixLpResult pre = detail::read_prefix_solution(pm, yvars, sol, saturated);
    res.y = pre.y;
    for (int v = 0; v < n_yvars; ++v) res.j_pre += unit_cost[v] * sol.x[v];
    double entry = 0.0;
    for (const auto& [col, coeff] : lp.ge_rows[gamma_row].coeffs)
      if (col != gamma_var) entry += coeff * sol.x[col];
    res.gamma_achieved = std::min(entry, 1.0);
  }

  for (Block& b : blocks) {
    SuffixPlan sp;
    sp.amec_index = b.amec_index;
    sp.sm = std::move(b.sm);
    const SuffixMdp& sm = sp.sm;
    sp.z.resize(sm.num_nodes());
    for (int node = 0; node < sm.num_nodes(); ++node) {
      sp.z[node].assign(sm.actions[node].size(), 0.0);
      if (b.wvars.var[node].empty()) continue;
      for (std::size_t u = 0; u < sm.actions[node].size(); ++u) {
        double v = sol.x[b.wvars.var[node][u]] + sol.x[b.zvars.var[node][u]];
        sp.z[node][u] = std::max(v, 0.0);
      }
    }
    for (int v = b.w_begin; v < b.w_end; ++v)
      sp.j_entry += unit_cost[v] * sol.x[v];
    for (int v = b.z_begin; v < b.z_end; ++v)
      sp.j_cycle += unit_cost[v] * sol.x[v];
    if (!pm.trivial) {
      attach_entry_distribution(sp.sm, pm, part, res.y, opts.dtr_all_entries);
    }
    sp.entry_mass = sp.sm.d_tr_total;
    sp.skipped = sp.entry_mass <= kSupportTol;
    res.j_suffix_total += sp.j_entry + sp.j_cycle;
    res.suffixes.push_back(std::move(sp));
  }
  res.objective =
      (1.0 - opts.eta) * res.j_pre + opts.eta * res.j_suffix_total;
  detail::finalize_policy(rp, amec_list, opts.beta, res);
  return res;
}

inline SynthesisResult synthesize(const Product& rp,
                                  const std::vector<Mec>& amec_list,
                                  const StatePartition& part,
                                  const SynthesisOptions& opts) {
  require(!amec_list.empty(), Errc::NoReachableAmec,
          "the relaxed product has no accepting maximal end component");
  return opts.sequential ? solve_sequential(rp, amec_list, part, opts)
                         : solve_coupled(rp, amec_list, part, opts);
}

}  // namespace ltlplan
