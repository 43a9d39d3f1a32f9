#include <catch2/catch_amalgamated.hpp>

#include "test_util.hpp"

using namespace ltlplan;
using testutil::eval_lasso;
using testutil::ldba_accepts_lasso;

namespace {

const char* kGfA = R"({
  "aps": ["a"],
  "states": ["q0", "q1"],
  "initial": "q0",
  "accepting": ["q0"],
  "deterministic": ["q0", "q1"],
  "edges": [
    {"from": "q0", "to": "q0", "guard": "a"},
    {"from": "q0", "to": "q1", "guard": "!a"},
    {"from": "q1", "to": "q0", "guard": "a"},
    {"from": "q1", "to": "q1", "guard": "!a"}
  ]
})";

void check_language(const Ldba& a, const std::string& formula, int trials,
                    Rng& rng) {
  auto f = parse_ltl(formula);
  const Letter range = Letter{1} << a.aps.size();
  for (int t = 0; t < trials; ++t) {
    const int stem = static_cast<int>(rng.next_u64() % 3);
    const int loop = 1 + static_cast<int>(rng.next_u64() % 5);
    std::vector<Letter> word;
    for (int i = 0; i < stem + loop; ++i)
      word.push_back(static_cast<Letter>(rng.next_u64() % range));
    INFO(formula);
    REQUIRE(ldba_accepts_lasso(a, word, stem) ==
            eval_lasso(f, word, stem, a.aps));
  }
}

}  // namespace

TEST_CASE("hand-built GF a automaton parses, validates, and matches its "
          "language on short lassos") {
  Ldba a = parse_ldba_text(kGfA);
  REQUIRE(validate_ldba(a).ok());
  REQUIRE(a.num_states() == 2);
  // exhaustive over 6-step lassos on {0, {a}}
  auto f = parse_ltl("G F a");
  for (int stem = 0; stem <= 2; ++stem) {
    for (int loop = 1; loop + stem <= 6; ++loop) {
      const int n = stem + loop;
      for (int bits = 0; bits < (1 << n); ++bits) {
        std::vector<Letter> word;
        for (int i = 0; i < n; ++i) word.push_back((bits >> i) & 1);
        REQUIRE(ldba_accepts_lasso(a, word, stem) ==
                eval_lasso(f, word, stem, a.aps));
      }
    }
  }
}

TEST_CASE("accepting state with an outgoing eps edge fails validation") {
  Json doc = Json::parse(kGfA);
  doc["edges"].push_back({{"from", "q0"}, {"to", "q1"}, {"eps", true}});
  Ldba a = parse_ldba(doc);
  ValidationReport rep = validate_ldba(a);
  REQUIRE_FALSE(rep.ok());
  bool found = false;
  for (const auto& issue : rep.issues)
    if (issue.message.find("EpsilonFromDeterministic") != std::string::npos)
      found = true;
  REQUIRE(found);
}

TEST_CASE("nondeterminism and missing letters in Q_D are reported") {
  Json doc = Json::parse(kGfA);
  doc["edges"].push_back({{"from", "q0"}, {"to", "q1"}, {"guard", "a"}});
  ValidationReport rep = validate_ldba(parse_ldba(doc));
  bool nondet = false;
  for (const auto& issue : rep.issues)
    if (issue.message.find("NondeterministicInQD") != std::string::npos)
      nondet = true;
  REQUIRE(nondet);

  Json doc2 = Json::parse(kGfA);
  doc2["edges"].erase(1);  // q0 loses its !a edge
  ValidationReport rep2 = validate_ldba(parse_ldba(doc2));
  bool missing = false;
  for (const auto& issue : rep2.issues)
    if (issue.message.find("MissingLetterInQD") != std::string::npos)
      missing = true;
  REQUIRE(missing);
}

TEST_CASE("unsatisfiable guards are dropped, unknown states rejected") {
  Json doc = Json::parse(kGfA);
  doc["edges"].push_back({{"from", "q0"}, {"to", "q1"}, {"guard", "a & !a"}});
  Ldba a = parse_ldba(doc);
  REQUIRE(a.edges.size() == 4);  // the contradiction is not an edge
  Json doc2 = Json::parse(kGfA);
  doc2["edges"].push_back({{"from", "q0"}, {"to", "nope"}, {"guard", "a"}});
  REQUIRE_THROWS_AS(parse_ldba(doc2), Error);
}

TEST_CASE("shipped benchmark automata validate and match their formulas") {
  Rng rng(99);
  struct Entry {
    const char* file;
    const char* formula;
    int states;
  };
  const Entry entries[] = {
      {"ldba/gf_a.ldba.json", "G F a", 2},
      {"ldba/gf_a_and_gf_b.ldba.json", "G F a & G F b", 3},
      {"ldba/fg_a.ldba.json", "F G a", 3},
      {"ldba/seq_b1_b2.ldba.json", "F (b1 & F b2)", 3},
      {"ldba/seq_b1_b2_safe.ldba.json", "F (b1 & F b2) & G !obs", 4},
      {"ldba/surveil2_safe.ldba.json", "G F base1 & G F base2 & G !obs", 4},
      {"ldba/surveil3_safe.ldba.json",
       "G F b1 & G F b2 & G F b3 & G !obs", 5},
      {"ldba/case3.ldba.json", "F t1 & G (t1 -> X (!t1 U t2)) & G !obs", 5},
      {"ldba/case1.ldba.json",
       "G F base1 & G F base2 & G F base3 & G ((base1 | base2 | base3) -> "
       "X (!(base1 | base2 | base3) U delivery)) & G !obs",
       9},
      {"ldba/case2.ldba.json",
       "G F pickup & G F upload1 & G F upload2 & G F upload3 & G (pickup -> "
       "X (!pickup U (upload1 | upload2 | upload3))) & G !obs",
       11},
  };
  for (const auto& e : entries) {
    INFO(e.file);
    Ldba a = testutil::load_ldba_file(e.file);
    REQUIRE(a.num_states() == e.states);
    check_language(a, e.formula, 400, rng);
  }
}

TEST_CASE("Q_D successor is total, re-checked by independent enumeration") {
  for (const char* file :
       {"ldba/gf_a_and_gf_b.ldba.json", "ldba/case1.ldba.json",
        "ldba/fg_a.ldba.json"}) {
    Ldba a = testutil::load_ldba_file(file);
    const Letter end = Letter{1} << a.aps.size();
    for (int q = 0; q < a.num_states(); ++q) {
      if (!a.deterministic[q]) continue;
      for (Letter l = 0; l < end; ++l) {
        int enabled = 0;
        for (int e : a.out_edges[q]) {
          if (a.edges[e].eps) continue;
          if (eval_guard(a.edges[e].guard_ast, l, a.aps)) ++enabled;
        }
        REQUIRE(enabled == 1);
        REQUIRE(a.guard_successor(q, l).has_value());
      }
    }
  }
}

TEST_CASE("HOA subset import") {
  const std::string hoa = R"(HOA: v1
States: 2
Start: 0
AP: 1 "a"
Acceptance: 1 Inf(0)
acc-name: Buchi
--BODY--
State: 0 {0}
[0] 0
[!0] 1
State: 1
[0] 0
[!0] 1
--END--
)";
  Ldba a = parse_hoa(hoa);
  REQUIRE(validate_ldba(a).ok());
  REQUIRE(a.num_states() == 2);
  REQUIRE(a.accepting[0]);
  Rng rng(5);
  check_language(a, "G F a", 300, rng);

  const std::string rabin = R"(HOA: v1
States: 1
Start: 0
AP: 0
Acceptance: 2 Fin(0) & Inf(1)
--BODY--
State: 0
--END--
)";
  REQUIRE_THROWS_AS(parse_hoa(rabin), Error);
  try {
    parse_hoa(rabin);
  } catch (const Error& e) {
    REQUIRE(e.code() == Errc::HoaUnsupportedFeature);
  }
}
