#pragma once

#include <algorithm>
#include <string>
#include <utility>
#include <vector>

#include "ltlplan/common.hpp"
#include "ltlplan/product.hpp"

namespace ltlplan {

/// Tarjan strongly connected components, iterative to keep stack depth flat.
/// Components come out in reverse topological order of the condensation
/// (sinks first).  A singleton without a self-loop is still emitted; loop
/// detection is the caller's concern.
inline std::vector<std::vector<int>> sccs(
    const std::vector<std::vector<int>>& adj) {
  const int n = static_cast<int>(adj.size());
  std::vector<int> index(n, -1), low(n, 0);
  std::vector<char> on_stack(n, 0);
  std::vector<int> stack;
  std::vector<std::vector<int>> comps;
  int next_index = 0;

  struct Frame {
    int v;
    std::size_t edge;
  };
  std::vector<Frame> call;
  for (int root = 0; root < n; ++root) {
    if (index[root] != -1) continue;
    call.push_back({root, 0});
    index[root] = low[root] = next_index++;
    stack.push_back(root);
    on_stack[root] = 1;
    while (!call.empty()) {
      Frame& f = call.back();
      if (f.edge < adj[f.v].size()) {
        const int w = adj[f.v][f.edge++];
        if (index[w] == -1) {
          index[w] = low[w] = next_index++;
          stack.push_back(w);
          on_stack[w] = 1;
          call.push_back({w, 0});
        } else if (on_stack[w]) {
          low[f.v] = std::min(low[f.v], index[w]);
        }
      } else {
        const int v = f.v;
        call.pop_back();
        if (!call.empty())
          low[call.back().v] = std::min(low[call.back().v], low[v]);
        if (low[v] == index[v]) {
          std::vector<int> comp;
          while (true) {
            const int w = stack.back();
            stack.pop_back();
            on_stack[w] = 0;
            comp.push_back(w);
            if (w == v) break;
          }
          std::sort(comp.begin(), comp.end());
          comps.push_back(std::move(comp));
        }
      }
    }
  }
  return comps;
}

/// Maximal end component: a closed, strongly connected sub-MDP of the
/// product, with the surviving action indices per member state.
struct Mec {
  std::vector<int> states;                   // ascending product indices
  std::vector<std::vector<int>> action_map;  // parallel to `states`
  bool accepting = false;

  bool contains(int x) const {
    return std::binary_search(states.begin(), states.end(), x);
  }
};

/// Iterative SCC-and-prune decomposition: repeatedly drop state/action
/// pairs whose successors leave their current component until a fixpoint,
/// then read the surviving components off the last SCC pass.
inline std::vector<Mec> mecs(const Product& p) {
  const int n = p.num_states();
  std::vector<std::vector<int>> alive_actions(n);
  std::vector<char> alive(n, 1);
  for (int x = 0; x < n; ++x) {
    alive_actions[x].resize(p.actions[x].size());
    for (std::size_t u = 0; u < p.actions[x].size(); ++u)
      alive_actions[x][u] = static_cast<int>(u);
    if (alive_actions[x].empty()) alive[x] = 0;
  }

  std::vector<int> comp_of(n, -1);
  while (true) {
    std::vector<std::vector<int>> adj(n);
    for (int x = 0; x < n; ++x) {
      if (!alive[x]) continue;
      for (int u : alive_actions[x])
        for (const auto& sc : p.actions[x][u].succ)
          if (sc.p > 0.0) adj[x].push_back(sc.x);
    }
    const auto comps = sccs(adj);
    std::fill(comp_of.begin(), comp_of.end(), -1);
    for (std::size_t c = 0; c < comps.size(); ++c)
      for (int x : comps[c])
        if (alive[x]) comp_of[x] = static_cast<int>(c);

    bool changed = false;
    for (int x = 0; x < n; ++x) {
      if (!alive[x]) continue;
      std::vector<int> kept;
      for (int u : alive_actions[x]) {
        bool stays = true;
        for (const auto& sc : p.actions[x][u].succ) {
          if (sc.p > 0.0 && (!alive[sc.x] || comp_of[sc.x] != comp_of[x])) {
            stays = false;
            break;
          }
        }
        if (stays) kept.push_back(u);
      }
      if (kept.size() != alive_actions[x].size()) changed = true;
      alive_actions[x] = std::move(kept);
      if (alive_actions[x].empty() && alive[x]) {
        alive[x] = 0;
        changed = true;
      }
    }
    if (!changed) break;
  }

  // Group surviving states by component; singletons need a self-loop
  // action, which pruning already guarantees when any action survived.
  std::vector<std::vector<int>> groups;
  {
    std::vector<int> remap(n, -1);
    for (int x = 0; x < n; ++x) {
      if (!alive[x]) continue;
      int& g = remap[comp_of[x]];
      if (g == -1) {
        g = static_cast<int>(groups.size());
        groups.emplace_back();
      }
      groups[g].push_back(x);
    }
  }
  std::vector<Mec> out;
  for (auto& g : groups) {
    Mec mec;
    std::sort(g.begin(), g.end());
    mec.states = g;
    for (int x : g) {
      mec.action_map.push_back(alive_actions[x]);
      if (p.accepting[x]) mec.accepting = true;
    }
    out.push_back(std::move(mec));
  }
  std::sort(out.begin(), out.end(),
            [](const Mec& a, const Mec& b) { return a.states[0] < b.states[0]; });
  return out;
}

inline std::vector<Mec> amecs(const Product& p) {
  std::vector<Mec> out;
  for (auto& m : mecs(p))
    if (m.accepting) out.push_back(std::move(m));
  return out;
}

/// Partition of the reachable product into AMEC states (X_R) and the rest,
/// with the transient side split by whether an AMEC is reachable at all
/// (X_r vs X_not_r) and, within X_r, whether it is reachable through
/// zero-violation actions only (X_n vs X_not_n).  X_tr / X_tr_prime are the
/// AMEC states enterable in one step from X_n / X_not_n.
struct StatePartition {
  std::vector<char> in_amec;   // >= 0 entries of amec_index
  std::vector<int> amec_index; // -1 outside X_R
  std::vector<char> x_r, x_not_r, x_n, x_not_n, x_tr, x_tr_prime;
  bool trivial_prefix = false;  // x0 already inside an AMEC

  std::vector<int> list(const std::vector<char>& mask) const {
    std::vector<int> out;
    for (std::size_t i = 0; i < mask.size(); ++i)
      if (mask[i]) out.push_back(static_cast<int>(i));
    return out;
  }
};

/// An action is violation-free when every positive-probability successor
/// resolves to zero violation cost; X_n must guarantee violation-free
/// reachability regardless of the stochastic outcome.
inline bool action_violation_free(const ProductAction& act) {
  for (const auto& sc : act.succ)
    if (sc.p > 0.0 && sc.viol != 0.0) return false;
  return true;
}

inline StatePartition partition_states(const Product& p,
                                       const std::vector<Mec>& amec_list) {
  const int n = p.num_states();
  StatePartition part;
  part.in_amec.assign(n, 0);
  part.amec_index.assign(n, -1);
  for (std::size_t j = 0; j < amec_list.size(); ++j) {
    for (int x : amec_list[j].states) {
      part.in_amec[x] = 1;
      part.amec_index[x] = static_cast<int>(j);
    }
  }

  // Backward reachability to X_R, once over all edges (live transient
  // states) and once over violation-free actions only (X_n).
  std::vector<std::vector<int>> preds_all(n), preds_free(n);
  for (int x = 0; x < n; ++x) {
    for (const auto& act : p.actions[x]) {
      const bool vfree = action_violation_free(act);
      for (const auto& sc : act.succ) {
        if (sc.p <= 0.0) continue;
        preds_all[sc.x].push_back(x);
        if (vfree) preds_free[sc.x].push_back(x);
      }
    }
  }
  auto backward = [&](const std::vector<std::vector<int>>& preds) {
    std::vector<char> mark(n, 0);
    std::vector<int> stack;
    for (int x = 0; x < n; ++x)
      if (part.in_amec[x]) {
        mark[x] = 1;
        stack.push_back(x);
      }
    while (!stack.empty()) {
      const int x = stack.back();
      stack.pop_back();
      for (int pr : preds[x])
        if (!mark[pr]) {
          mark[pr] = 1;
          stack.push_back(pr);
        }
    }
    return mark;
  };
  const std::vector<char> reach_any = backward(preds_all);
  const std::vector<char> reach_free = backward(preds_free);

  part.x_r.assign(n, 0);
  part.x_not_r.assign(n, 0);
  part.x_n.assign(n, 0);
  part.x_not_n.assign(n, 0);
  for (int x = 0; x < n; ++x) {
    if (part.in_amec[x]) continue;
    if (reach_any[x]) {
      part.x_r[x] = 1;
      (reach_free[x] ? part.x_n[x] : part.x_not_n[x]) = 1;
    } else {
      part.x_not_r[x] = 1;  // reachable from x0 but no AMEC ahead
    }
  }

  part.trivial_prefix = part.in_amec[p.x0];
  if (!part.trivial_prefix && !part.x_r[p.x0])
    fail(Errc::EmptyReachableSet,
         "x0 cannot reach any accepting maximal end component");

  part.x_tr.assign(n, 0);
  part.x_tr_prime.assign(n, 0);
  for (int x = 0; x < n; ++x) {
    if (!part.x_n[x] && !part.x_not_n[x]) continue;
    for (const auto& act : p.actions[x]) {
      for (const auto& sc : act.succ) {
        if (sc.p <= 0.0 || !part.in_amec[sc.x]) continue;
        (part.x_n[x] ? part.x_tr : part.x_tr_prime)[sc.x] = 1;
      }
    }
  }
  if (part.trivial_prefix) part.x_tr[p.x0] = 1;
  return part;
}

/// Component statistics for the `graph report` CLI surface.
inline Json graph_report(const Product& p) {
  std::vector<std::vector<int>> adj(p.num_states());
  for (int x = 0; x < p.num_states(); ++x)
    for (const auto& act : p.actions[x])
      for (const auto& sc : act.succ)
        if (sc.p > 0.0) adj[x].push_back(sc.x);
  const auto comps = sccs(adj);
  const auto mec_list = mecs(p);

  Json doc;
  doc["kind"] = p.relaxed ? "relaxed" : "standard";
  doc["states"] = p.num_states();
  int accepting_states = 0;
  for (char c : p.accepting) accepting_states += c;
  doc["accepting_states"] = accepting_states;
  doc["scc_count"] = comps.size();
  Json mecs_doc = Json::array();
  int amec_count = 0;
  for (const auto& m : mec_list) {
    int acts = 0;
    for (const auto& au : m.action_map) acts += static_cast<int>(au.size());
    mecs_doc.push_back({{"size", m.states.size()},
                        {"actions", acts},
                        {"accepting", m.accepting}});
    if (m.accepting) ++amec_count;
  }
  doc["mecs"] = mecs_doc;
  doc["mec_count"] = mec_list.size();
  doc["amec_count"] = amec_count;
  return doc;
}

}  // namespace ltlplan
