#pragma once

#include <cctype>
#include <memory>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "ltlplan/common.hpp"

namespace ltlplan {

/// LTL over the ASCII syntax `G F X U & | ! -> true false` plus
/// identifiers.  Propositional subsets of the same grammar double as
/// automaton edge guards.
enum class LtlOp {
  True,
  False,
  Ap,
  Not,
  And,
  Or,
  Imp,
  Next,
  Until,
  Eventually,
  Always,
};

struct LtlNode;
using LtlPtr = std::shared_ptr<const LtlNode>;

struct LtlNode {
  LtlOp op;
  std::string ap;  // leaf name when op == Ap
  LtlPtr lhs, rhs;

  static LtlPtr make(LtlOp op, LtlPtr l = nullptr, LtlPtr r = nullptr) {
    auto n = std::make_shared<LtlNode>();
    n->op = op;
    n->lhs = std::move(l);
    n->rhs = std::move(r);
    return n;
  }
  static LtlPtr atom(std::string name) {
    auto n = std::make_shared<LtlNode>();
    n->op = LtlOp::Ap;
    n->ap = std::move(name);
    return n;
  }
};

namespace detail {

struct LtlToken {
  enum Kind { Ident, LParen, RParen, AndT, OrT, NotT, ImpT, End } kind;
  std::string text;
  std::size_t pos;
};

inline std::vector<LtlToken> ltl_lex(const std::string& s) {
  std::vector<LtlToken> out;
  std::size_t i = 0;
  while (i < s.size()) {
    char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (c == '(') {
      out.push_back({LtlToken::LParen, "(", i++});
    } else if (c == ')') {
      out.push_back({LtlToken::RParen, ")", i++});
    } else if (c == '&') {
      out.push_back({LtlToken::AndT, "&", i++});
    } else if (c == '|') {
      out.push_back({LtlToken::OrT, "|", i++});
    } else if (c == '!') {
      out.push_back({LtlToken::NotT, "!", i++});
    } else if (c == '-' && i + 1 < s.size() && s[i + 1] == '>') {
      out.push_back({LtlToken::ImpT, "->", i});
      i += 2;
    } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = i;
      while (i < s.size() && (std::isalnum(static_cast<unsigned char>(s[i])) ||
                              s[i] == '_'))
        ++i;
      out.push_back({LtlToken::Ident, s.substr(start, i - start), start});
    } else {
      fail(Errc::SyntaxError, "unexpected character '" + std::string(1, c) +
                                  "' at position " + std::to_string(i));
    }
  }
  out.push_back({LtlToken::End, "", s.size()});
  return out;
}

/// Recursive-descent parser.  Precedence: unary (!, G, F, X) > U > & > | > ->
/// with U and -> right-associative.  `temporal` false restricts the grammar
/// to propositional guards.
class LtlParser {
 public:
  LtlParser(const std::string& text, bool temporal)
      : toks_(ltl_lex(text)), temporal_(temporal) {}

  LtlPtr parse() {
    LtlPtr f = parse_imp();
    if (cur().kind == LtlToken::RParen)
      fail(Errc::UnbalancedParens,
           "unmatched ')' at position " + std::to_string(cur().pos));
    if (cur().kind != LtlToken::End)
      fail(Errc::SyntaxError, "trailing input at position " +
                                  std::to_string(cur().pos) + " near '" +
                                  cur().text + "'");
    return f;
  }

 private:
  const LtlToken& cur() const { return toks_[idx_]; }
  void advance() { ++idx_; }

  LtlPtr parse_imp() {
    LtlPtr l = parse_or();
    if (cur().kind == LtlToken::ImpT) {
      advance();
      return LtlNode::make(LtlOp::Imp, l, parse_imp());
    }
    return l;
  }

  LtlPtr parse_or() {
    LtlPtr l = parse_and();
    while (cur().kind == LtlToken::OrT) {
      advance();
      l = LtlNode::make(LtlOp::Or, l, parse_and());
    }
    return l;
  }

  LtlPtr parse_and() {
    LtlPtr l = parse_until();
    while (cur().kind == LtlToken::AndT) {
      advance();
      l = LtlNode::make(LtlOp::And, l, parse_until());
    }
    return l;
  }

  LtlPtr parse_until() {
    LtlPtr l = parse_unary();
    if (cur().kind == LtlToken::Ident && cur().text == "U") {
      if (!temporal_)
        fail(Errc::GuardParseError, "temporal operator U in a guard");
      advance();
      return LtlNode::make(LtlOp::Until, l, parse_until());
    }
    return l;
  }

  LtlPtr parse_unary() {
    if (cur().kind == LtlToken::NotT) {
      advance();
      return LtlNode::make(LtlOp::Not, parse_unary());
    }
    if (cur().kind == LtlToken::Ident) {
      const std::string& t = cur().text;
      if (t == "G" || t == "F" || t == "X") {
        if (!temporal_)
          fail(Errc::GuardParseError, "temporal operator " + t + " in a guard");
        advance();
        LtlOp op = t == "G" ? LtlOp::Always
                            : (t == "F" ? LtlOp::Eventually : LtlOp::Next);
        return LtlNode::make(op, parse_unary());
      }
    }
    return parse_atom();
  }

  LtlPtr parse_atom() {
    if (cur().kind == LtlToken::LParen) {
      std::size_t open = cur().pos;
      advance();
      LtlPtr f = parse_imp();
      if (cur().kind != LtlToken::RParen)
        fail(Errc::UnbalancedParens,
             "missing ')' for '(' at position " + std::to_string(open));
      advance();
      return f;
    }
    if (cur().kind == LtlToken::Ident) {
      std::string t = cur().text;
      if (t == "U" || t == "G" || t == "F" || t == "X")
        fail(Errc::SyntaxError, "operator '" + t + "' needs an operand at " +
                                    std::to_string(cur().pos));
      advance();
      if (t == "true") return LtlNode::make(LtlOp::True);
      if (t == "false") return LtlNode::make(LtlOp::False);
      return LtlNode::atom(t);
    }
    fail(Errc::SyntaxError, "expected a formula at position " +
                                std::to_string(cur().pos) + " near '" +
                                cur().text + "'");
  }

  std::vector<LtlToken> toks_;
  std::size_t idx_ = 0;
  bool temporal_;
};

}  // namespace detail

inline LtlPtr parse_ltl(const std::string& text) {
  return detail::LtlParser(text, /*temporal=*/true).parse();
}

/// Parses a propositional guard; rejects temporal operators.
inline LtlPtr parse_guard(const std::string& text) {
  try {
    return detail::LtlParser(text, /*temporal=*/false).parse();
  } catch (const Error& e) {
    if (e.code() == Errc::SyntaxError || e.code() == Errc::UnbalancedParens)
      throw Error(Errc::GuardParseError, e.what());
    throw;
  }
}

inline void collect_aps(const LtlPtr& f, std::set<std::string>& out) {
  if (!f) return;
  if (f->op == LtlOp::Ap) out.insert(f->ap);
  collect_aps(f->lhs, out);
  collect_aps(f->rhs, out);
}

inline std::set<std::string> formula_aps(const LtlPtr& f) {
  std::set<std::string> out;
  collect_aps(f, out);
  return out;
}

/// Rewrites sugar to the core `true, ap, !, &, X, U` fragment.
inline LtlPtr normalize(const LtlPtr& f) {
  auto neg = [](LtlPtr g) { return LtlNode::make(LtlOp::Not, std::move(g)); };
  switch (f->op) {
    case LtlOp::True:
    case LtlOp::Ap:
      return f;
    case LtlOp::False:
      return neg(LtlNode::make(LtlOp::True));
    case LtlOp::Not:
      return neg(normalize(f->lhs));
    case LtlOp::And:
      return LtlNode::make(LtlOp::And, normalize(f->lhs), normalize(f->rhs));
    case LtlOp::Or:  // a|b == !(!a & !b)
      return neg(LtlNode::make(LtlOp::And, neg(normalize(f->lhs)),
                               neg(normalize(f->rhs))));
    case LtlOp::Imp:  // a->b == !(a & !b)
      return neg(
          LtlNode::make(LtlOp::And, normalize(f->lhs), neg(normalize(f->rhs))));
    case LtlOp::Next:
      return LtlNode::make(LtlOp::Next, normalize(f->lhs));
    case LtlOp::Until:
      return LtlNode::make(LtlOp::Until, normalize(f->lhs), normalize(f->rhs));
    case LtlOp::Eventually:  // F a == true U a
      return LtlNode::make(LtlOp::Until, LtlNode::make(LtlOp::True),
                           normalize(f->lhs));
    case LtlOp::Always:  // G a == !(true U !a)
      return neg(LtlNode::make(LtlOp::Until, LtlNode::make(LtlOp::True),
                               neg(normalize(f->lhs))));
  }
  fail(Errc::InternalInvariant, "normalize: unhandled operator");
}

inline std::string to_string(const LtlPtr& f) {
  switch (f->op) {
    case LtlOp::True: return "true";
    case LtlOp::False: return "false";
    case LtlOp::Ap: return f->ap;
    case LtlOp::Not: return "!" + to_string(f->lhs);
    case LtlOp::And:
      return "(" + to_string(f->lhs) + " & " + to_string(f->rhs) + ")";
    case LtlOp::Or:
      return "(" + to_string(f->lhs) + " | " + to_string(f->rhs) + ")";
    case LtlOp::Imp:
      return "(" + to_string(f->lhs) + " -> " + to_string(f->rhs) + ")";
    case LtlOp::Next: return "X " + to_string(f->lhs);
    case LtlOp::Until:
      return "(" + to_string(f->lhs) + " U " + to_string(f->rhs) + ")";
    case LtlOp::Eventually: return "F " + to_string(f->lhs);
    case LtlOp::Always: return "G " + to_string(f->lhs);
  }
  return "?";
}

/// Evaluates a propositional formula against one letter.  `ap_index` maps
/// names to bit positions; unknown names are an error.
inline bool eval_guard(const LtlPtr& f, Letter letter,
                       const std::vector<std::string>& aps) {
  switch (f->op) {
    case LtlOp::True: return true;
    case LtlOp::False: return false;
    case LtlOp::Ap: {
      for (std::size_t i = 0; i < aps.size(); ++i)
        if (aps[i] == f->ap) return (letter >> i) & 1u;
      fail(Errc::GuardParseError, "guard uses undeclared ap '" + f->ap + "'");
    }
    case LtlOp::Not: return !eval_guard(f->lhs, letter, aps);
    case LtlOp::And:
      return eval_guard(f->lhs, letter, aps) && eval_guard(f->rhs, letter, aps);
    case LtlOp::Or:
      return eval_guard(f->lhs, letter, aps) || eval_guard(f->rhs, letter, aps);
    case LtlOp::Imp:
      return !eval_guard(f->lhs, letter, aps) ||
             eval_guard(f->rhs, letter, aps);
    default:
      fail(Errc::GuardParseError, "temporal operator in a guard");
  }
}

/// All letters over `aps` satisfying the guard, by truth-table enumeration.
inline std::vector<Letter> guard_letters(const LtlPtr& guard,
                                         const std::vector<std::string>& aps) {
  require(static_cast<int>(aps.size()) <= kMaxApsForEnumeration,
          Errc::ApSetTooLarge,
          "guard enumeration over " + std::to_string(aps.size()) + " aps");
  std::vector<Letter> out;
  const Letter end = Letter{1} << aps.size();
  for (Letter l = 0; l < end; ++l)
    if (eval_guard(guard, l, aps)) out.push_back(l);
  return out;
}

inline std::vector<Letter> guard_letters(const std::string& guard,
                                         const std::vector<std::string>& aps) {
  return guard_letters(parse_guard(guard), aps);
}

}  // namespace ltlplan
