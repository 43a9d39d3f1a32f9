#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ltlplan/common.hpp"

namespace ltlplan {

using Json = nlohmann::ordered_json;

/// One candidate label set of a state together with its probability.
struct LabelEntry {
  Letter props = 0;
  double p = 0.0;
};

/// One enabled action: a cost and a distribution over successor states.
struct ModelAction {
  std::string name;
  double cost = 0.0;
  std::vector<std::pair<int, double>> dist;  // (successor index, probability)
};

/// Probabilistic labeled MDP.  States and actions keep the order of the
/// source document; state ids are strings in files and dense indices here.
/// Immutable after validation.
struct PlMdp {
  std::vector<std::string> state_names;
  std::vector<std::string> aps;
  std::vector<std::vector<LabelEntry>> labels;     // per state
  std::vector<std::vector<ModelAction>> actions;   // per state, nonempty
  int initial_state = 0;
  Letter initial_label = 0;

  int num_states() const { return static_cast<int>(state_names.size()); }

  int state_index(const std::string& name) const {
    for (int i = 0; i < num_states(); ++i)
      if (state_names[i] == name) return i;
    fail(Errc::UnknownState, "state '" + name + "'");
  }

  const ModelAction* find_action(int s, const std::string& name) const {
    for (const auto& a : actions[s])
      if (a.name == name) return &a;
    return nullptr;
  }

  double label_prob(int s, Letter l) const {
    for (const auto& e : labels[s])
      if (e.props == l) return e.p;
    return 0.0;
  }
};

/// Per-state distribution over enabled actions (indices into
/// PlMdp::actions[s]).
struct StationaryPolicy {
  std::vector<std::vector<double>> probs;  // probs[s][a]
};

/// Markov chain induced by a policy: dense row-stochastic matrix plus the
/// copied label distributions.
struct InducedChain {
  std::vector<std::vector<double>> trans;  // trans[s][s']
  std::vector<std::vector<LabelEntry>> labels;
};

struct SubMdp {
  const PlMdp* parent = nullptr;
  std::vector<int> states;                      // ascending
  std::vector<std::vector<int>> action_map;     // per entry of `states`
};

namespace detail {

inline bool parse_prop_list(const Json& arr, const std::vector<std::string>& aps,
                            Letter& out, std::string& bad) {
  out = 0;
  for (const auto& p : arr) {
    const std::string name = p.get<std::string>();
    auto it = std::find(aps.begin(), aps.end(), name);
    if (it == aps.end()) {
      bad = name;
      return false;
    }
    out |= Letter{1} << (it - aps.begin());
  }
  return true;
}

}  // namespace detail

/// Result of validate_model: either a usable model or a report listing every
/// violated constraint with state/action coordinates.
struct ModelLoadResult {
  std::optional<PlMdp> model;
  ValidationReport report;
};

/// Decodes and validates a model document.  All constraints are checked and
/// reported together rather than stopping at the first failure.  With
/// `strict`, unknown keys anywhere in the document are rejected.
inline ModelLoadResult validate_model(const Json& doc, bool strict = false) {
  ModelLoadResult res;
  ValidationReport& rep = res.report;

  auto check_keys = [&](const Json& obj, std::vector<std::string> allowed,
                        const std::string& where) {
    if (!strict || !obj.is_object()) return;
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
        rep.add(Errc::BadDocument, where, "unknown key '" + it.key() + "'");
    }
  };

  if (!doc.is_object() || !doc.contains("states") || !doc.contains("aps") ||
      !doc.contains("initial")) {
    rep.add(Errc::BadDocument, "document",
            "expected an object with keys 'aps', 'states', 'initial'");
    return res;
  }
  check_keys(doc, {"aps", "states", "initial"}, "document");

  PlMdp m;
  for (const auto& ap : doc["aps"]) m.aps.push_back(ap.get<std::string>());
  if (m.aps.size() > 8 * sizeof(Letter))
    rep.add(Errc::ApSetTooLarge, "aps", "too many atomic propositions");

  const Json& states = doc["states"];
  std::unordered_map<std::string, int> index;
  for (auto it = states.begin(); it != states.end(); ++it) {
    if (index.count(it.key())) {
      rep.add(Errc::DuplicateStateId, it.key(), "state declared twice");
      continue;
    }
    index[it.key()] = static_cast<int>(m.state_names.size());
    m.state_names.push_back(it.key());
  }

  m.labels.resize(m.state_names.size());
  m.actions.resize(m.state_names.size());

  for (auto it = states.begin(); it != states.end(); ++it) {
    const std::string& sname = it.key();
    const int s = index[sname];
    const Json& sdoc = it.value();
    check_keys(sdoc, {"labels", "actions"}, sname);

    double lsum = 0.0;
    if (sdoc.contains("labels")) {
      for (const auto& entry : sdoc["labels"]) {
        check_keys(entry, {"props", "p"}, sname + ".labels");
        Letter props = 0;
        std::string bad;
        if (!detail::parse_prop_list(entry["props"], m.aps, props, bad)) {
          rep.add(Errc::BadDocument, sname, "undeclared ap '" + bad + "'");
          continue;
        }
        const double p = entry["p"].get<double>();
        if (p < 0.0 || p > 1.0)
          rep.add(Errc::ProbabilitySumError, sname,
                  "label probability " + std::to_string(p) + " outside [0,1]");
        if (p == 0.0) {
          rep.notes.push_back("pruned zero-probability label entry at " +
                              sname);
          continue;
        }
        bool dup = false;
        for (auto& e : m.labels[s])
          if (e.props == props) {
            e.p += p;
            dup = true;
          }
        if (!dup) m.labels[s].push_back({props, p});
        lsum += p;
      }
    }
    if (m.labels[s].empty()) {  // unlabeled states carry the empty letter
      m.labels[s].push_back({0, 1.0});
      lsum = 1.0;
    }
    if (std::abs(lsum - 1.0) > kStochasticTol)
      rep.add(Errc::ProbabilitySumError, sname,
              "label probabilities sum to " + std::to_string(lsum));

    if (!sdoc.contains("actions") || sdoc["actions"].empty()) {
      rep.add(Errc::EmptyActionSet, sname, "state has no enabled action");
      continue;
    }
    for (auto ait = sdoc["actions"].begin(); ait != sdoc["actions"].end();
         ++ait) {
      const std::string aname = ait.key();
      check_keys(ait.value(), {"cost", "dist"}, sname + "." + aname);
      ModelAction act;
      act.name = aname;
      act.cost = ait.value().value("cost", 0.0);
      if (act.cost < 0.0)
        rep.add(Errc::NegativeCost, sname + "." + aname,
                "cost " + std::to_string(act.cost));
      double psum = 0.0;
      if (ait.value().contains("dist")) {
        for (auto dit = ait.value()["dist"].begin();
             dit != ait.value()["dist"].end(); ++dit) {
          auto tit = index.find(dit.key());
          if (tit == index.end()) {
            rep.add(Errc::UnknownSuccessor, sname + "." + aname,
                    "successor '" + dit.key() + "'");
            continue;
          }
          const double p = dit.value().get<double>();
          if (p < 0.0 || p > 1.0)
            rep.add(Errc::ProbabilitySumError, sname + "." + aname,
                    "transition probability " + std::to_string(p) +
                        " outside [0,1]");
          if (p > 0.0) act.dist.emplace_back(tit->second, p);
          psum += p;
        }
      }
      if (std::abs(psum - 1.0) > kStochasticTol)
        rep.add(Errc::ProbabilitySumError, sname + "." + aname,
                "successor probabilities sum to " + std::to_string(psum));
      m.actions[s].push_back(std::move(act));
    }
  }

  const Json& init = doc["initial"];
  check_keys(init, {"state", "label"}, "initial");
  if (!init.contains("state") || !index.count(init["state"].get<std::string>())) {
    rep.add(Errc::UnknownState, "initial", "missing or undeclared state");
  } else {
    m.initial_state = index[init["state"].get<std::string>()];
    Letter l0 = 0;
    std::string bad;
    if (init.contains("label") &&
        !detail::parse_prop_list(init["label"], m.aps, l0, bad))
      rep.add(Errc::BadDocument, "initial", "undeclared ap '" + bad + "'");
    m.initial_label = l0;
    if (rep.ok() && m.label_prob(m.initial_state, l0) <= 0.0)
      rep.add(Errc::ProbabilitySumError, "initial",
              "initial label has probability 0 at the initial state");
  }

  if (rep.ok()) res.model = std::move(m);
  return res;
}

inline ModelLoadResult validate_model_text(const std::string& text,
                                           bool strict = false) {
  Json doc = Json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded()) {
    ModelLoadResult res;
    res.report.add(Errc::BadDocument, "document", "not valid JSON");
    return res;
  }
  return validate_model(doc, strict);
}

inline Json model_to_json(const PlMdp& m) {
  Json doc;
  doc["aps"] = m.aps;
  Json states = Json::object();
  for (int s = 0; s < m.num_states(); ++s) {
    Json sdoc;
    Json labels = Json::array();
    for (const auto& e : m.labels[s]) {
      Json props = Json::array();
      for (std::size_t i = 0; i < m.aps.size(); ++i)
        if (e.props & (Letter{1} << i)) props.push_back(m.aps[i]);
      labels.push_back({{"props", props}, {"p", e.p}});
    }
    sdoc["labels"] = labels;
    Json acts = Json::object();
    for (const auto& a : m.actions[s]) {
      Json dist = Json::object();
      for (const auto& [t, p] : a.dist) dist[m.state_names[t]] = p;
      acts[a.name] = {{"cost", a.cost}, {"dist", dist}};
    }
    sdoc["actions"] = acts;
    states[m.state_names[s]] = sdoc;
  }
  doc["states"] = states;
  Json init;
  init["state"] = m.state_names[m.initial_state];
  Json l0 = Json::array();
  for (std::size_t i = 0; i < m.aps.size(); ++i)
    if (m.initial_label & (Letter{1} << i)) l0.push_back(m.aps[i]);
  init["label"] = l0;
  doc["initial"] = init;
  return doc;
}

/// Chain induced by a stationary policy:
/// trans(s,s') = sum_a pol(s,a) * p_S(s,a,s').
inline InducedChain induce_chain(const PlMdp& m, const StationaryPolicy& pol) {
  require(pol.probs.size() == static_cast<std::size_t>(m.num_states()),
          Errc::PolicyDomainMismatch, "policy does not cover every state");
  InducedChain chain;
  const int n = m.num_states();
  chain.trans.assign(n, std::vector<double>(n, 0.0));
  chain.labels = m.labels;
  for (int s = 0; s < n; ++s) {
    require(pol.probs[s].size() == m.actions[s].size(),
            Errc::PolicyDomainMismatch,
            "policy at " + m.state_names[s] + " has wrong arity");
    double psum = 0.0;
    for (std::size_t a = 0; a < m.actions[s].size(); ++a) {
      const double w = pol.probs[s][a];
      require(w >= -kStochasticTol, Errc::PolicyDomainMismatch,
              "negative policy weight");
      psum += w;
      for (const auto& [t, p] : m.actions[s][a].dist)
        chain.trans[s][t] += w * p;
    }
    require(std::abs(psum - 1.0) <= kStochasticTol,
            Errc::PolicyDomainMismatch,
            "policy at " + m.state_names[s] + " sums to " +
                std::to_string(psum));
    double rsum = 0.0;
    for (double v : chain.trans[s]) rsum += v;
    require(std::abs(rsum - 1.0) <= kStochasticTol, Errc::InternalInvariant,
            "induced chain row not stochastic at " + m.state_names[s]);
  }
  return chain;
}

/// Restriction to a state subset and per-state action subset; fails when the
/// restricted pair is not closed under positive-probability successors.
inline SubMdp restrict(const PlMdp& m, const std::vector<int>& states,
                       const std::vector<std::vector<int>>& action_map) {
  require(!states.empty(), Errc::EmptyActionSet, "empty state subset");
  require(states.size() == action_map.size(), Errc::PolicyDomainMismatch,
          "action map arity mismatch");
  std::vector<char> inside(m.num_states(), 0);
  for (int s : states) {
    require(s >= 0 && s < m.num_states(), Errc::UnknownState,
            "state index " + std::to_string(s));
    inside[s] = 1;
  }
  SubMdp sub;
  sub.parent = &m;
  sub.states = states;
  sub.action_map = action_map;
  for (std::size_t i = 0; i < states.size(); ++i) {
    const int s = states[i];
    require(!action_map[i].empty(), Errc::EmptyActionSet,
            "no actions kept at " + m.state_names[s]);
    for (int a : action_map[i]) {
      require(a >= 0 && a < static_cast<int>(m.actions[s].size()),
              Errc::UnknownState, "action index out of range");
      for (const auto& [t, p] : m.actions[s][a].dist) {
        if (p > 0.0 && !inside[t])
          fail(Errc::NotClosed, "action '" + m.actions[s][a].name + "' at " +
                                    m.state_names[s] + " escapes to " +
                                    m.state_names[t]);
      }
    }
  }
  return sub;
}

inline bool submdp_equal(const SubMdp& a, const SubMdp& b) {
  return a.parent == b.parent && a.states == b.states &&
         a.action_map == b.action_map;
}

}  // namespace ltlplan
