#pragma once

#include <string>
#include <utility>
#include <vector>

#include "ltlplan/synthesize.hpp"

namespace ltlplan {

/// Serializes a synthesized policy plus solver metadata.  Keys are the
/// product-state triples "(s,{props},q)"; each entry lists the extended
/// actions with their probabilities and provenance.
inline Json policy_to_json(const Product& rp, const SynthesisResult& res,
                           const SynthesisOptions& opts) {
  Json doc;
  doc["format"] = "ltlplan-policy-v1";
  doc["mode"] = res.mode;
  doc["gamma"] = opts.gamma;
  doc["gamma_achieved"] = res.gamma_achieved;
  doc["beta"] = opts.beta;
  doc["eta"] = opts.eta;
  Json obj;
  obj["prefix"] = res.j_pre;
  Json suffix = Json::array();
  for (const auto& sp : res.suffixes) {
    suffix.push_back({{"amec", sp.amec_index},
                      {"entry_mass", sp.entry_mass},
                      {"entry", sp.j_entry},
                      {"cycle", sp.j_cycle},
                      {"skipped", sp.skipped}});
  }
  obj["suffix"] = suffix;
  obj["total"] = res.objective;
  doc["objective"] = obj;
  doc["diagnostics"] = {{"lp_iterations", res.lp_iterations},
                        {"max_residual", res.max_residual},
                        {"saturated", res.saturated},
                        {"used_slack", res.used_slack}};
  Json states = Json::object();
  for (int x = 0; x < rp.num_states(); ++x) {
    Json acts = Json::array();
    for (std::size_t u = 0; u < rp.actions[x].size(); ++u) {
      const double p = res.policy.probs[x][u];
      if (p <= 0.0) continue;
      const ProductAction& act = rp.actions[x][u];
      Json a;
      if (act.is_eps()) {
        a["eps"] = true;
      } else {
        a["action"] = rp.model->actions[rp.states[x].s][act.model_action].name;
      }
      a["target_q"] = rp.ldba->state_names[act.target_q];
      a["prob"] = p;
      a["provenance"] = provenance_name(res.policy.provenance[x]);
      acts.push_back(std::move(a));
    }
    states[rp.state_key(x)] = std::move(acts);
  }
  doc["states"] = states;
  return doc;
}

/// Rebuilds a ProductPolicy against a freshly constructed product.  States
/// missing from the file fall back to uniform; actions are matched by
/// (model action name | eps, automaton successor).
inline ProductPolicy policy_from_json(const Product& rp, const Json& doc) {
  require(doc.is_object() && doc.value("format", "") == "ltlplan-policy-v1",
          Errc::BadDocument, "not an ltlplan policy file");
  ProductPolicy pol;
  pol.init_uniform(rp);
  const Json& states = doc.at("states");
  for (int x = 0; x < rp.num_states(); ++x) {
    auto it = states.find(rp.state_key(x));
    if (it == states.end()) continue;
    auto& row = pol.probs[x];
    std::fill(row.begin(), row.end(), 0.0);
    double total = 0.0;
    for (const auto& a : *it) {
      const bool eps = a.value("eps", false);
      const std::string name = a.value("action", std::string());
      const std::string target = a.at("target_q").get<std::string>();
      const double p = a.at("prob").get<double>();
      int found = -1;
      for (std::size_t u = 0; u < rp.actions[x].size(); ++u) {
        const ProductAction& act = rp.actions[x][u];
        if (act.is_eps() != eps) continue;
        if (!eps &&
            rp.model->actions[rp.states[x].s][act.model_action].name != name)
          continue;
        if (rp.ldba->state_names[act.target_q] != target) continue;
        found = static_cast<int>(u);
        break;
      }
      require(found >= 0, Errc::UntrackedState,
              "policy action not present at " + rp.state_key(x));
      row[found] += p;
      total += p;
      if (a.contains("provenance")) {
        const std::string prov = a["provenance"].get<std::string>();
        if (prov == "prefix-optimal")
          pol.provenance[x] = Provenance::PrefixOptimal;
        else if (prov == "suffix-optimal")
          pol.provenance[x] = Provenance::SuffixOptimal;
        else if (prov == "round-robin")
          pol.provenance[x] = Provenance::RoundRobin;
        else
          pol.provenance[x] = Provenance::UniformFallback;
      }
    }
    require(std::abs(total - 1.0) <= 1e-6, Errc::BadDocument,
            "policy at " + rp.state_key(x) + " sums to " +
                std::to_string(total));
    for (double& v : row) v /= total;
  }
  return pol;
}

}  // namespace ltlplan
