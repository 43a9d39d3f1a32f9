#include <catch2/catch_amalgamated.hpp>

#include "test_util.hpp"

using namespace ltlplan;

namespace {

Ldba unit_automaton() {
  return parse_ldba_text(R"({
    "aps": ["a", "b"],
    "states": ["q"],
    "initial": "q",
    "accepting": ["q"],
    "deterministic": ["q"],
    "edges": [{"from": "q", "to": "q", "guard": "true"}]
  })");
}

using EdgeKey = std::tuple<std::string, std::string, std::string>;

std::set<EdgeKey> edge_keys(const Product& p) {
  std::set<EdgeKey> out;
  for (int x = 0; x < p.num_states(); ++x) {
    for (const auto& act : p.actions[x]) {
      const std::string label =
          act.is_eps()
              ? std::string("eps")
              : p.model->actions[p.states[x].s][act.model_action].name;
      for (const auto& sc : act.succ)
        if (sc.p > 0.0)
          out.insert({p.state_key(x), label, p.state_key(sc.x)});
    }
  }
  return out;
}

}  // namespace

TEST_CASE("unit automaton: product is the label-expanded model") {
  PlMdp m = testutil::ab_islands();
  Ldba a = unit_automaton();
  Product p = build_standard_product(m, a);
  // reachable (s,l) pairs: s0 has two labels, the rest one each
  REQUIRE(p.num_states() == 5);
  for (int x = 0; x < p.num_states(); ++x) {
    REQUIRE(p.accepting[x]);
    REQUIRE(p.actions[x].size() == m.actions[p.states[x].s].size());
  }
}

TEST_CASE("single empty-labeled state under GF a never accepts") {
  PlMdp m = testutil::single_state_model();
  Ldba a = testutil::load_ldba_file("ldba/gf_a.ldba.json");
  // model has no aps; embedding into {a} is fine
  Product p = build_standard_product(m, a);
  // q0 --{}--> q1 --{}--> q1: the reachable fragment has two states and no
  // accepting cycle
  REQUIRE(p.num_states() == 2);
  REQUIRE(amecs(p).empty());
}

TEST_CASE("alphabet mismatch is rejected") {
  PlMdp m = testutil::ab_islands();  // aps {a, b}
  Ldba a = parse_ldba_text(R"({
    "aps": ["a"],
    "states": ["q"],
    "initial": "q",
    "accepting": ["q"],
    "deterministic": ["q"],
    "edges": [{"from": "q", "to": "q", "guard": "true"}]
  })");
  REQUIRE_THROWS_AS(build_standard_product(m, a), Error);
  try {
    build_standard_product(m, a);
  } catch (const Error& e) {
    REQUIRE(e.code() == Errc::AlphabetMismatch);
  }
}

TEST_CASE("two-region model: no standard AMEC, relaxed AMEC exists") {
  PlMdp m = testutil::ab_islands();
  Ldba a = testutil::load_ldba_file("ldba/gf_a_and_gf_b.ldba.json");
  Product std_p = build_standard_product(m, a);
  Product rel_p = build_relaxed_product(m, a);
  REQUIRE(amecs(std_p).empty());
  REQUIRE_FALSE(amecs(rel_p).empty());
}

TEST_CASE("edges shared with the standard product carry zero violation") {
  PlMdp m = testutil::ab_islands();
  Ldba a = testutil::load_ldba_file("ldba/gf_a_and_gf_b.ldba.json");
  Product rel = build_relaxed_product(m, a);
  Product std = build_standard_product(m, a);
  const auto std_edges = edge_keys(std);
  for (int x = 0; x < rel.num_states(); ++x) {
    for (const auto& act : rel.actions[x]) {
      if (act.is_eps()) continue;
      const std::string label =
          rel.model->actions[rel.states[x].s][act.model_action].name;
      for (const auto& sc : act.succ) {
        if (sc.p <= 0.0) continue;
        if (std_edges.count({rel.state_key(x), label, rel.state_key(sc.x)})) {
          // the standard product read the true letter here, so the relaxed
          // action with the same (s, l) -> q' choice has distance zero
          if (act.target_q ==
              *a.guard_successor(rel.states[x].q, rel.states[x].l))
            REQUIRE(sc.viol == 0.0);
        }
      }
    }
  }
}

TEST_CASE("pretending a letter pays p_L * distance") {
  PlMdp m = testutil::single_state_model();  // one state, label {}
  Ldba a = testutil::load_ldba_file("ldba/gf_a.ldba.json");
  Product rel = build_relaxed_product(m, a);
  // from (s0, {}, q0), choosing the a-edge to q0 has X = {{a}}, wv = 1 and
  // the single successor has p_L = 1
  bool found = false;
  for (const auto& act : rel.actions[rel.x0]) {
    if (act.is_eps()) continue;
    if (a.state_names[act.target_q] == "q0") {
      REQUIRE(act.wv == 1.0);
      REQUIRE(act.succ.size() == 1);
      REQUIRE(act.succ[0].viol == Catch::Approx(1.0));
      found = true;
    }
  }
  REQUIRE(found);
}

TEST_CASE("relaxed rows stay stochastic and eps actions are free") {
  Rng rng(31);
  Ldba fg = testutil::load_ldba_file("ldba/fg_a.ldba.json");
  for (int t = 0; t < 50; ++t) {
    PlMdp m = testutil::random_model(rng, 6, 3, 1);
    Product rel = build_relaxed_product(m, fg);
    for (int x = 0; x < rel.num_states(); ++x) {
      for (const auto& act : rel.actions[x]) {
        double sum = 0.0;
        for (const auto& sc : act.succ) sum += sc.p;
        REQUIRE(std::abs(sum - 1.0) <= 1e-9);
        if (act.is_eps()) {
          REQUIRE(act.exec_cost == 0.0);
          for (const auto& sc : act.succ) REQUIRE(sc.viol == 0.0);
        }
      }
    }
  }
}

TEST_CASE("standard product digraph is a subgraph of the relaxed digraph") {
  Rng rng(41);
  Ldba automata[2] = {testutil::load_ldba_file("ldba/gf_a.ldba.json"),
                      testutil::load_ldba_file("ldba/gf_a_and_gf_b.ldba.json")};
  for (int t = 0; t < 60; ++t) {
    PlMdp m = testutil::random_model(rng, 6, 3, 2);
    const Ldba& a = automata[t % 2];
    Product std_p = build_standard_product(m, a);
    Product rel_p = build_relaxed_product(m, a);
    // compare state-to-state edges regardless of the action labels
    std::set<std::pair<std::string, std::string>> rel_edges;
    for (int x = 0; x < rel_p.num_states(); ++x)
      for (const auto& act : rel_p.actions[x])
        for (const auto& sc : act.succ)
          if (sc.p > 0.0)
            rel_edges.insert({rel_p.state_key(x), rel_p.state_key(sc.x)});
    for (int x = 0; x < std_p.num_states(); ++x)
      for (const auto& act : std_p.actions[x])
        for (const auto& sc : act.succ)
          if (sc.p > 0.0)
            REQUIRE(rel_edges.count(
                {std_p.state_key(x), std_p.state_key(sc.x)}));
  }
}

TEST_CASE("regulated cost") {
  REQUIRE(regulated_cost(2.0, 0.0, 100.0).value == Catch::Approx(2.0));
  REQUIRE(regulated_cost(0.0, 5.0, 100.0).value == 0.0);
  // 2 * e^5, cross-checked against high-precision evaluation
  const RegulatedCost rc = regulated_cost(2.0, 0.05, 100.0);
  REQUIRE(rc.value == Catch::Approx(296.8263182051532).epsilon(1e-12));
  REQUIRE_FALSE(rc.saturated);
  const RegulatedCost sat = regulated_cost(2.0, 8.0, 100.0);
  REQUIRE(sat.saturated);
  REQUIRE(sat.value == Catch::Approx(2.0 * std::exp(700.0)));
  REQUIRE_THROWS_AS(regulated_cost(1.0, 1.0, 0.0), Error);
}
