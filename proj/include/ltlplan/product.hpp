#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ltlplan/common.hpp"
#include "ltlplan/ldba.hpp"
#include "ltlplan/model.hpp"

namespace ltlplan {

struct ProductState {
  int s = 0;
  Letter l = 0;  // in the automaton alphabet
  int q = 0;
};

struct ProductSucc {
  int x = 0;
  double p = 0.0;
  double viol = 0.0;  // p_L(s',l') * dist(l, X(q,q')); 0 in the standard product
};

/// Extended action of the relaxed product: a model action paired with the
/// chosen automaton successor, or an eps jump.  Letters selecting the same
/// successor are cost-equivalent, so actions are enumerated per (action,
/// successor) pair rather than per letter.  In the standard product the
/// successor is forced to delta(q, l).
struct ProductAction {
  int model_action = -1;  // index into model actions[s]; -1 for eps
  int target_q = 0;
  double exec_cost = 0.0;
  double wv = 0.0;  // dist(l, X(q, target_q)); 0 for eps
  std::vector<ProductSucc> succ;

  bool is_eps() const { return model_action < 0; }
};

/// Reachable fragment of a product MDP between a PL-MDP and an LDBA.
/// States are discovered breadth-first from x0, so indices are stable for
/// identical inputs.  Immutable after construction.
struct Product {
  const PlMdp* model = nullptr;
  const Ldba* ldba = nullptr;
  bool relaxed = false;
  std::vector<ProductState> states;
  std::vector<std::vector<ProductAction>> actions;
  std::vector<char> accepting;
  int x0 = 0;

  int num_states() const { return static_cast<int>(states.size()); }

  std::string state_key(int x) const {
    const ProductState& ps = states[x];
    return "(" + model->state_names[ps.s] + "," +
           letter_to_string(ps.l, ldba->aps) + "," + ldba->state_names[ps.q] +
           ")";
  }
};

namespace detail {

inline std::uint64_t pack_xkey(int s, Letter l, int q) {
  return (static_cast<std::uint64_t>(s) << 40) ^
         (static_cast<std::uint64_t>(l) << 20) ^ static_cast<std::uint64_t>(q);
}

/// Maps each model ap bit onto its position in the automaton alphabet.
inline std::vector<int> alphabet_embedding(const PlMdp& m, const Ldba& a) {
  std::vector<int> remap;
  for (const auto& ap : m.aps) {
    auto it = std::find(a.aps.begin(), a.aps.end(), ap);
    require(it != a.aps.end(), Errc::AlphabetMismatch,
            "model ap '" + ap + "' is not in the automaton alphabet");
    remap.push_back(static_cast<int>(it - a.aps.begin()));
  }
  return remap;
}

inline Letter remap_letter(Letter l, const std::vector<int>& remap) {
  Letter out = 0;
  for (std::size_t i = 0; i < remap.size(); ++i)
    if (l & (Letter{1} << i)) out |= Letter{1} << remap[i];
  return out;
}

struct ProductBuilder {
  const PlMdp& m;
  const Ldba& a;
  std::vector<int> remap;
  Product prod;
  std::unordered_map<std::uint64_t, int> index;
  std::deque<int> queue;

  ProductBuilder(const PlMdp& m_, const Ldba& a_, bool relaxed)
      : m(m_), a(a_), remap(alphabet_embedding(m_, a_)) {
    prod.model = &m;
    prod.ldba = &a;
    prod.relaxed = relaxed;
  }

  int intern(int s, Letter l, int q) {
    const std::uint64_t key = pack_xkey(s, l, q);
    auto it = index.find(key);
    if (it != index.end()) return it->second;
    const int xi = prod.num_states();
    index.emplace(key, xi);
    prod.states.push_back({s, l, q});
    prod.accepting.push_back(a.accepting[q]);
    prod.actions.emplace_back();
    queue.push_back(xi);
    return xi;
  }

  /// Successors reachable by playing model action `ai` while the automaton
  /// moves to `q2`; probability p_L(s',l') * p_S(s,a,s'), violation
  /// p_L(s',l') * wv.
  std::vector<ProductSucc> expand_model_action(int s, int ai, int q2,
                                               double wv) {
    std::vector<ProductSucc> out;
    for (const auto& [s2, ps] : m.actions[s][ai].dist) {
      for (const auto& le : m.labels[s2]) {
        const Letter l2 = remap_letter(le.props, remap);
        out.push_back({intern(s2, l2, q2), ps * le.p, le.p * wv});
      }
    }
    return out;
  }

  void check_row(const std::vector<ProductSucc>& succ, int x) {
    double sum = 0.0;
    for (const auto& sc : succ) sum += sc.p;
    require(std::abs(sum - 1.0) <= kStochasticTol, Errc::InternalInvariant,
            "product row sums to " + std::to_string(sum) + " at " +
                prod.state_key(x));
  }
};

}  // namespace detail

/// Standard product: the automaton reads the state's own letter, so every
/// model action shares the single successor delta(q, l).  States where no
/// guard edge is enabled keep only their eps actions (possibly none).
inline Product build_standard_product(const PlMdp& m, const Ldba& a) {
  detail::ProductBuilder b(m, a, /*relaxed=*/false);
  const Letter l0 = detail::remap_letter(m.initial_label, b.remap);
  b.prod.x0 = b.intern(m.initial_state, l0, a.initial);
  while (!b.queue.empty()) {
    const int x = b.queue.front();
    b.queue.pop_front();
    const ProductState ps = b.prod.states[x];
    if (auto q2 = a.guard_successor(ps.q, ps.l)) {
      for (std::size_t ai = 0; ai < m.actions[ps.s].size(); ++ai) {
        ProductAction act;
        act.model_action = static_cast<int>(ai);
        act.target_q = *q2;
        act.exec_cost = m.actions[ps.s][ai].cost;
        act.succ = b.expand_model_action(ps.s, static_cast<int>(ai), *q2, 0.0);
        for (auto& sc : act.succ) sc.viol = 0.0;
        b.check_row(act.succ, x);
        b.prod.actions[x].push_back(std::move(act));
      }
    }
    for (int q2 : a.eps_successors(ps.q)) {
      ProductAction act;
      act.model_action = -1;
      act.target_q = q2;
      act.exec_cost = 0.0;
      act.succ = {{b.intern(ps.s, ps.l, q2), 1.0, 0.0}};
      b.prod.actions[x].push_back(std::move(act));
    }
  }
  return std::move(b.prod);
}

/// Relaxed product: one extended action per (model action, automaton
/// guard-successor) pair plus the eps jumps.  The violation weight is the
/// distance from the state's own letter to the chosen edge's alphabet.
inline Product build_relaxed_product(const PlMdp& m, const Ldba& a) {
  detail::ProductBuilder b(m, a, /*relaxed=*/true);
  const Letter l0 = detail::remap_letter(m.initial_label, b.remap);
  b.prod.x0 = b.intern(m.initial_state, l0, a.initial);
  while (!b.queue.empty()) {
    const int x = b.queue.front();
    b.queue.pop_front();
    const ProductState ps = b.prod.states[x];
    const auto targets = a.guard_targets(ps.q);
    for (std::size_t ai = 0; ai < m.actions[ps.s].size(); ++ai) {
      for (const auto& [q2, letters] : targets) {
        ProductAction act;
        act.model_action = static_cast<int>(ai);
        act.target_q = q2;
        act.exec_cost = m.actions[ps.s][ai].cost;
        act.wv = static_cast<double>(dist(ps.l, letters));
        act.succ =
            b.expand_model_action(ps.s, static_cast<int>(ai), q2, act.wv);
        b.check_row(act.succ, x);
        b.prod.actions[x].push_back(std::move(act));
      }
    }
    for (int q2 : a.eps_successors(ps.q)) {
      ProductAction act;
      act.model_action = -1;
      act.target_q = q2;
      act.exec_cost = 0.0;
      act.succ = {{b.intern(ps.s, ps.l, q2), 1.0, 0.0}};
      b.prod.actions[x].push_back(std::move(act));
    }
  }
  return std::move(b.prod);
}

struct RegulatedCost {
  double value = 0.0;
  bool saturated = false;
};

/// Regulated transition cost c_A * max{exp(beta * c_V), 1}, with the
/// exponent clamped at kExpSaturation to stay inside double range.  The
/// saturation flag tells callers to consider lowering beta.
inline RegulatedCost regulated_cost(double exec_cost, double viol_cost,
                                    double beta) {
  require(beta > 0.0, Errc::BadDocument, "beta must be positive");
  RegulatedCost rc;
  double expo = beta * viol_cost;
  if (expo > kExpSaturation) {
    expo = kExpSaturation;
    rc.saturated = true;
  }
  const double mult = expo > 0.0 ? std::exp(expo) : 1.0;
  rc.value = exec_cost * std::max(mult, 1.0);
  return rc;
}

inline RegulatedCost regulated_cost(const Product& rp, int x, int u, int succ_i,
                                    double beta) {
  const ProductAction& act = rp.actions[x][u];
  return regulated_cost(act.exec_cost, act.succ[succ_i].viol, beta);
}

/// Expected regulated cost of one (state, action) pair:
/// sum_x' p(x,u,x') * c_A * max{exp(beta*c_V(x,u,x')), 1}.
inline RegulatedCost expected_regulated_cost(const ProductAction& act,
                                             double beta) {
  RegulatedCost out;
  for (const auto& sc : act.succ) {
    const RegulatedCost rc = regulated_cost(act.exec_cost, sc.viol, beta);
    out.value += sc.p * rc.value;
    out.saturated = out.saturated || rc.saturated;
  }
  return out;
}

/// JSON digraph dump (nodes, edges with probabilities and both costs) for
/// external inspection.
inline Json product_to_json(const Product& p) {
  Json doc;
  doc["kind"] = p.relaxed ? "relaxed" : "standard";
  doc["initial"] = p.state_key(p.x0);
  Json nodes = Json::array();
  for (int x = 0; x < p.num_states(); ++x) {
    nodes.push_back({{"id", x},
                     {"key", p.state_key(x)},
                     {"accepting", static_cast<bool>(p.accepting[x])}});
  }
  doc["nodes"] = nodes;
  Json edges = Json::array();
  for (int x = 0; x < p.num_states(); ++x) {
    for (std::size_t u = 0; u < p.actions[x].size(); ++u) {
      const ProductAction& act = p.actions[x][u];
      Json action;
      action["from"] = x;
      if (act.is_eps()) {
        action["eps"] = true;
      } else {
        action["action"] = p.model->actions[p.states[x].s][act.model_action].name;
      }
      action["target_q"] = p.ldba->state_names[act.target_q];
      action["exec_cost"] = act.exec_cost;
      Json succ = Json::array();
      for (const auto& sc : act.succ)
        succ.push_back({{"to", sc.x}, {"p", sc.p}, {"viol_cost", sc.viol}});
      action["succ"] = succ;
      edges.push_back(action);
    }
  }
  doc["edges"] = edges;
  return doc;
}

}  // namespace ltlplan
