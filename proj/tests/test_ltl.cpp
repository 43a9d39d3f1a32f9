#include <catch2/catch_amalgamated.hpp>

#include "test_util.hpp"

using namespace ltlplan;
using testutil::eval_lasso;

TEST_CASE("parser extracts aps and handles precedence") {
  auto f = parse_ltl("G F base1 & G F base2 & G F base3");
  auto aps = formula_aps(f);
  REQUIRE(aps == std::set<std::string>{"base1", "base2", "base3"});
  // & binds the three G F blocks, not the inner formulas
  REQUIRE(f->op == LtlOp::And);
  REQUIRE(f->lhs->op == LtlOp::And);
  REQUIRE(f->rhs->op == LtlOp::Always);

  auto t = parse_ltl("true");
  REQUIRE(t->op == LtlOp::True);
  REQUIRE(formula_aps(t).empty());
}

TEST_CASE("until is right-associative") {
  auto f = parse_ltl("a U b U c");
  auto g = parse_ltl("a U (b U c)");
  REQUIRE(to_string(f) == to_string(g));
  REQUIRE(f->op == LtlOp::Until);
  REQUIRE(f->rhs->op == LtlOp::Until);
  REQUIRE(formula_aps(f) == std::set<std::string>{"a", "b", "c"});
}

TEST_CASE("precedence: unary > U > & > | > ->") {
  auto f = parse_ltl("!a U b & c | d -> X e");
  // ((((!a) U b) & c) | d) -> (X e)
  REQUIRE(f->op == LtlOp::Imp);
  REQUIRE(f->rhs->op == LtlOp::Next);
  REQUIRE(f->lhs->op == LtlOp::Or);
  REQUIRE(f->lhs->lhs->op == LtlOp::And);
  REQUIRE(f->lhs->lhs->lhs->op == LtlOp::Until);
  REQUIRE(f->lhs->lhs->lhs->lhs->op == LtlOp::Not);
}

TEST_CASE("syntax errors carry positions") {
  REQUIRE_THROWS_AS(parse_ltl("a &"), Error);
  REQUIRE_THROWS_AS(parse_ltl("(a & b"), Error);
  REQUIRE_THROWS_AS(parse_ltl("a) & b"), Error);
  try {
    parse_ltl("(a & b");
  } catch (const Error& e) {
    REQUIRE(e.code() == Errc::UnbalancedParens);
  }
  REQUIRE_THROWS_AS(parse_guard("F a"), Error);
  try {
    parse_guard("a U b");
  } catch (const Error& e) {
    REQUIRE(e.code() == Errc::GuardParseError);
  }
}

TEST_CASE("normalize preserves lasso semantics") {
  const std::vector<std::string> aps = {"a", "b"};
  const std::vector<std::string> formulas = {
      "G F a",         "F (a & F b)",      "a U (b U a)",
      "G (a -> X b)",  "F G a | G F b",    "!(a | b) U (a & !b)",
      "false | G !b",  "a -> (b -> a)",
  };
  Rng rng(7);
  for (const auto& text : formulas) {
    auto f = parse_ltl(text);
    auto g = normalize(f);
    // normalized form uses only the core operators
    std::function<void(const LtlPtr&)> check_core = [&](const LtlPtr& n) {
      if (!n) return;
      REQUIRE((n->op == LtlOp::True || n->op == LtlOp::Ap ||
               n->op == LtlOp::Not || n->op == LtlOp::And ||
               n->op == LtlOp::Next || n->op == LtlOp::Until));
      check_core(n->lhs);
      check_core(n->rhs);
    };
    check_core(g);
    for (int trial = 0; trial < 200; ++trial) {
      const int stem = static_cast<int>(rng.next_u64() % 3);
      const int loop = 1 + static_cast<int>(rng.next_u64() % 4);
      std::vector<Letter> word;
      for (int i = 0; i < stem + loop; ++i)
        word.push_back(static_cast<Letter>(rng.next_u64() % 4));
      REQUIRE(eval_lasso(f, word, stem, aps) == eval_lasso(g, word, stem, aps));
    }
  }
}

TEST_CASE("guard letter enumeration") {
  REQUIRE(guard_letters("a & !b", {"a", "b"}) == std::vector<Letter>{1});
  REQUIRE(guard_letters("true", {"a", "b"}).size() == 4);
  REQUIRE(guard_letters("a | b", {"a", "b", "c"}).size() == 6);
  std::vector<std::string> big(21, "x");
  for (int i = 0; i < 21; ++i) big[i] = "x" + std::to_string(i);
  REQUIRE_THROWS_AS(guard_letters("x0", big), Error);
}

TEST_CASE("guard conjunction meets letter-set intersection") {
  Rng rng(21);
  const std::vector<std::string> aps = {"a", "b", "c"};
  const std::vector<std::string> pool = {"a",      "!b",    "a | c", "b & !c",
                                         "a -> b", "!(a&b)", "c",    "true"};
  for (int t = 0; t < 100; ++t) {
    const auto& g1 = pool[rng.next_u64() % pool.size()];
    const auto& g2 = pool[rng.next_u64() % pool.size()];
    auto l1 = guard_letters(g1, aps);
    auto l2 = guard_letters(g2, aps);
    auto l12 = guard_letters("(" + g1 + ") & (" + g2 + ")", aps);
    std::vector<Letter> expect;
    std::set_intersection(l1.begin(), l1.end(), l2.begin(), l2.end(),
                          std::back_inserter(expect));
    REQUIRE(l12 == expect);
  }
}

TEST_CASE("violation distance") {
  REQUIRE(dist(0b01, {0b01}) == 0);
  REQUIRE(dist(0b01, {0b11}) == 1);
  REQUIRE(dist(0b00, {0b01, 0b10}) == 1);
  REQUIRE_THROWS_AS(dist(0, {}), Error);
}

TEST_CASE("distance properties on random letter sets") {
  Rng rng(5);
  for (int t = 0; t < 500; ++t) {
    const Letter l = static_cast<Letter>(rng.next_u64() % 16);
    std::vector<Letter> xs, ys;
    const int nx = 1 + static_cast<int>(rng.next_u64() % 4);
    const int ny = 1 + static_cast<int>(rng.next_u64() % 4);
    for (int i = 0; i < nx; ++i)
      xs.push_back(static_cast<Letter>(rng.next_u64() % 16));
    for (int i = 0; i < ny; ++i)
      ys.push_back(static_cast<Letter>(rng.next_u64() % 16));
    // membership <=> zero
    const bool member = std::find(xs.begin(), xs.end(), l) != xs.end();
    REQUIRE((dist(l, xs) == 0) == member);
    // symmetry with an achieving witness
    int d = dist(l, xs);
    bool witness = false;
    for (Letter w : xs)
      if (letter_popcount(l ^ w) == d && dist(w, {l}) == d) witness = true;
    REQUIRE(witness);
    // union law
    std::vector<Letter> un = xs;
    un.insert(un.end(), ys.begin(), ys.end());
    REQUIRE(dist(l, un) == std::min(dist(l, xs), dist(l, ys)));
  }
}
