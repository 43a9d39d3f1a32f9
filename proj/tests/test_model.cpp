#include <catch2/catch_amalgamated.hpp>

#include "test_util.hpp"

using namespace ltlplan;

namespace {

Json grid_cell_doc(double up_n, double up_e, double up_w) {
  // one interior cell with neighbors; Up splits across n/e/w
  Json doc = Json::parse(R"({
    "aps": ["obs"],
    "states": {
      "c":  {"labels": [{"props": [], "p": 1.0}],
             "actions": {"Up": {"cost": 2.0, "dist": {}}}},
      "n":  {"labels": [{"props": [], "p": 1.0}],
             "actions": {"Stay": {"cost": 1.0, "dist": {"n": 1.0}}}},
      "e":  {"labels": [{"props": [], "p": 1.0}],
             "actions": {"Stay": {"cost": 1.0, "dist": {"e": 1.0}}}},
      "w":  {"labels": [{"props": [], "p": 1.0}],
             "actions": {"Stay": {"cost": 1.0, "dist": {"w": 1.0}}}}
    },
    "initial": {"state": "c", "label": []}
  })");
  doc["states"]["c"]["actions"]["Up"]["dist"] =
      Json{{"n", up_n}, {"e", up_e}, {"w", up_w}};
  return doc;
}

}  // namespace

TEST_CASE("validate accepts the slip-split cell") {
  auto res = validate_model(grid_cell_doc(0.8, 0.1, 0.1));
  REQUIRE(res.report.ok());
  REQUIRE(res.model.has_value());
  REQUIRE(res.model->num_states() == 4);
}

TEST_CASE("validate reports probability sums with coordinates") {
  auto res = validate_model(grid_cell_doc(0.5, 0.4, 0.0));
  REQUIRE_FALSE(res.report.ok());
  bool found = false;
  for (const auto& issue : res.report.issues) {
    if (issue.code == Errc::ProbabilitySumError && issue.where == "c.Up" &&
        issue.message.find("0.9") != std::string::npos)
      found = true;
  }
  REQUIRE(found);
  REQUIRE_FALSE(res.model.has_value());
}

TEST_CASE("validate accepts the minimal self-loop model") {
  PlMdp m = testutil::single_state_model();
  REQUIRE(m.num_states() == 1);
  REQUIRE(m.labels[0].size() == 1);
  REQUIRE(m.labels[0][0].props == 0);
}

TEST_CASE("validate rejects unknown successors, negative costs, bad initial") {
  Json doc = grid_cell_doc(0.8, 0.1, 0.1);
  doc["states"]["c"]["actions"]["Up"]["dist"]["nowhere"] = 0.0;
  doc["states"]["c"]["actions"]["Up"]["cost"] = -1.0;
  doc["initial"]["label"] = Json::array({"obs"});
  auto res = validate_model(doc);
  std::set<Errc> codes;
  for (const auto& issue : res.report.issues) codes.insert(issue.code);
  REQUIRE(codes.count(Errc::UnknownSuccessor));
  REQUIRE(codes.count(Errc::NegativeCost));
  REQUIRE(codes.count(Errc::ProbabilitySumError));
}

TEST_CASE("strict mode rejects unknown keys") {
  Json doc = grid_cell_doc(0.8, 0.1, 0.1);
  doc["extra"] = 1;
  REQUIRE(validate_model(doc, false).report.ok());
  REQUIRE_FALSE(validate_model(doc, true).report.ok());
}

TEST_CASE("zero-probability labels are pruned with a note") {
  Json doc = grid_cell_doc(0.8, 0.1, 0.1);
  doc["states"]["c"]["labels"] = Json::array(
      {{{"props", Json::array()}, {"p", 1.0}},
       {{"props", Json::array({"obs"})}, {"p", 0.0}}});
  auto res = validate_model(doc);
  REQUIRE(res.report.ok());
  REQUIRE(res.model->labels[0].size() == 1);
  REQUIRE_FALSE(res.report.notes.empty());
}

TEST_CASE("induced chain: deterministic stay is the identity") {
  PlMdp m = testutil::single_state_model();
  StationaryPolicy pol;
  pol.probs = {{1.0}};
  InducedChain chain = induce_chain(m, pol);
  REQUIRE(chain.trans[0][0] == Catch::Approx(1.0));
}

TEST_CASE("induced chain mixes rows with the policy weights") {
  Json doc = grid_cell_doc(0.8, 0.1, 0.1);
  doc["states"]["c"]["actions"]["Stay"] =
      Json{{"cost", 1.0}, {"dist", Json{{"c", 1.0}}}};
  auto res = validate_model(doc);
  REQUIRE(res.model.has_value());
  const PlMdp& m = *res.model;
  StationaryPolicy pol;
  pol.probs.assign(4, {1.0});
  pol.probs[0] = {0.5, 0.5};  // Up, Stay at "c"
  InducedChain chain = induce_chain(m, pol);
  const int c = m.state_index("c"), n = m.state_index("n");
  REQUIRE(chain.trans[c][c] == Catch::Approx(0.5));
  REQUIRE(chain.trans[c][n] == Catch::Approx(0.4));
  for (int s = 0; s < 4; ++s) {
    double sum = 0.0;
    for (double v : chain.trans[s]) sum += v;
    REQUIRE(std::abs(sum - 1.0) <= 1e-9);
  }
}

TEST_CASE("induce_chain is linear in the policy") {
  Rng rng(11);
  for (int t = 0; t < 30; ++t) {
    PlMdp m = testutil::random_model(rng, 5, 3, 2);
    auto random_policy = [&]() {
      StationaryPolicy p;
      p.probs.resize(m.num_states());
      for (int s = 0; s < m.num_states(); ++s) {
        p.probs[s].resize(m.actions[s].size());
        double tot = 0.0;
        for (double& v : p.probs[s]) {
          v = 0.05 + rng.uniform01();
          tot += v;
        }
        for (double& v : p.probs[s]) v /= tot;
      }
      return p;
    };
    StationaryPolicy p1 = random_policy(), p2 = random_policy();
    const double lam = rng.uniform01();
    StationaryPolicy mix;
    mix.probs.resize(m.num_states());
    for (int s = 0; s < m.num_states(); ++s) {
      mix.probs[s].resize(m.actions[s].size());
      for (std::size_t a = 0; a < m.actions[s].size(); ++a)
        mix.probs[s][a] = lam * p1.probs[s][a] + (1 - lam) * p2.probs[s][a];
    }
    auto c1 = induce_chain(m, p1), c2 = induce_chain(m, p2),
         cm = induce_chain(m, mix);
    for (int s = 0; s < m.num_states(); ++s)
      for (int s2 = 0; s2 < m.num_states(); ++s2)
        REQUIRE(std::abs(cm.trans[s][s2] - (lam * c1.trans[s][s2] +
                                            (1 - lam) * c2.trans[s][s2])) <=
                1e-12);
  }
}

TEST_CASE("uniform policy over identical rows returns the common row") {
  Json doc = Json::parse(R"({
    "aps": [],
    "states": {
      "s0": {"labels": [{"props": [], "p": 1.0}],
             "actions": {"u0": {"cost": 1.0, "dist": {"s0": 0.3, "s1": 0.7}},
                         "u1": {"cost": 2.0, "dist": {"s0": 0.3, "s1": 0.7}}}},
      "s1": {"labels": [{"props": [], "p": 1.0}],
             "actions": {"u0": {"cost": 1.0, "dist": {"s1": 1.0}}}}
    },
    "initial": {"state": "s0", "label": []}
  })");
  auto res = validate_model(doc);
  StationaryPolicy pol;
  pol.probs = {{0.5, 0.5}, {1.0}};
  InducedChain chain = induce_chain(*res.model, pol);
  REQUIRE(chain.trans[0][0] == Catch::Approx(0.3));
  REQUIRE(chain.trans[0][1] == Catch::Approx(0.7));
}

TEST_CASE("restrict: full sets, closed pairs, escapes, idempotence") {
  PlMdp m = testutil::ab_islands();
  const int s0 = m.state_index("s0"), s1 = m.state_index("s1"),
            s2 = m.state_index("s2"), s3 = m.state_index("s3");

  // full restriction equals the model
  std::vector<int> all = {s0, s1, s2, s3};
  std::sort(all.begin(), all.end());
  std::vector<std::vector<int>> full_map;
  for (int s : all) {
    std::vector<int> acts;
    for (std::size_t a = 0; a < m.actions[s].size(); ++a)
      acts.push_back(static_cast<int>(a));
    full_map.push_back(acts);
  }
  SubMdp whole = restrict(m, all, full_map);
  REQUIRE(whole.states.size() == 4);

  // absorbing pair {s1, s2} under swap actions is closed
  SubMdp pair = restrict(m, {s1, s2}, {{0}, {0}});
  REQUIRE(pair.states == std::vector<int>{s1, s2});
  SubMdp pair2 = restrict(m, pair.states, pair.action_map);
  REQUIRE(submdp_equal(pair, pair2));

  // s0's go1 leaks outside {s0, s1}
  REQUIRE_THROWS_AS(restrict(m, {s0, s1}, {{0}, {0}}), Error);
  try {
    restrict(m, {s0, s1}, {{0}, {0}});
  } catch (const Error& e) {
    REQUIRE(e.code() == Errc::NotClosed);
  }
  REQUIRE_THROWS_AS(restrict(m, {s1}, {{}}), Error);
}
