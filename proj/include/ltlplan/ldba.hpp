#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ltlplan/common.hpp"
#include "ltlplan/ltl.hpp"

namespace ltlplan {

using Json = nlohmann::ordered_json;

struct LdbaEdge {
  int from = 0;
  int to = 0;
  bool eps = false;
  std::string guard;            // empty for eps edges
  LtlPtr guard_ast;             // parsed guard (non-eps)
  std::vector<Letter> letters;  // memoized enabling letters (non-eps)
};

/// Limit-deterministic Buchi automaton.  The deterministic part Q_D is
/// declared in the source document and verified, not inferred.  Guard
/// alphabets are memoized eagerly at load time.
struct Ldba {
  std::vector<std::string> state_names;
  std::vector<std::string> aps;
  std::vector<LdbaEdge> edges;
  std::vector<std::vector<int>> out_edges;  // per state: indices into edges
  std::vector<char> accepting;
  std::vector<char> deterministic;  // membership in Q_D
  int initial = 0;

  int num_states() const { return static_cast<int>(state_names.size()); }

  int state_index(const std::string& name) const {
    for (int i = 0; i < num_states(); ++i)
      if (state_names[i] == name) return i;
    fail(Errc::UnknownState, "automaton state '" + name + "'");
  }

  /// The unique guard successor of q on letter l, or nullopt when no guard
  /// edge is enabled.  Requires a validated automaton (per-letter
  /// determinism); returns the first enabled edge otherwise.
  std::optional<int> guard_successor(int q, Letter l) const {
    for (int e : out_edges[q]) {
      const LdbaEdge& edge = edges[e];
      if (edge.eps) continue;
      if (std::binary_search(edge.letters.begin(), edge.letters.end(), l))
        return edge.to;
    }
    return std::nullopt;
  }

  std::vector<int> eps_successors(int q) const {
    std::vector<int> out;
    for (int e : out_edges[q])
      if (edges[e].eps) out.push_back(edges[e].to);
    return out;
  }

  /// Distinct guard-successor states of q, in first-edge order, together
  /// with the union of enabling letters per successor: X(q, q').
  std::vector<std::pair<int, std::vector<Letter>>> guard_targets(int q) const {
    std::vector<std::pair<int, std::vector<Letter>>> out;
    for (int e : out_edges[q]) {
      const LdbaEdge& edge = edges[e];
      if (edge.eps || edge.letters.empty()) continue;
      auto it = std::find_if(out.begin(), out.end(),
                             [&](const auto& pr) { return pr.first == edge.to; });
      if (it == out.end()) {
        out.emplace_back(edge.to, edge.letters);
      } else {
        it->second.insert(it->second.end(), edge.letters.begin(),
                          edge.letters.end());
      }
    }
    for (auto& [q2, letters] : out) {
      std::sort(letters.begin(), letters.end());
      letters.erase(std::unique(letters.begin(), letters.end()), letters.end());
    }
    return out;
  }
};

/// Violation distance of Def-style letter sets: 0 on membership, otherwise
/// the minimal Hamming distance to any enabling letter.
inline int dist(Letter l, const std::vector<Letter>& enabling) {
  return letter_set_distance(l, enabling);
}

/// Checks the three structural requirements on a parsed automaton:
/// totality/determinism/closure of Q_D, eps edges only from Q_N into Q_D,
/// and acceptance confined to Q_D.  Per-letter determinism is additionally
/// required in Q_N so the product construction is unambiguous.
inline ValidationReport validate_ldba(const Ldba& a) {
  ValidationReport rep;
  const Letter end = Letter{1} << a.aps.size();
  for (int q = 0; q < a.num_states(); ++q) {
    const std::string& qn = a.state_names[q];
    for (int e : a.out_edges[q]) {
      const LdbaEdge& edge = a.edges[e];
      if (edge.eps) {
        if (a.deterministic[q])
          rep.add(Errc::BadDocument, qn, "EpsilonFromDeterministic");
        if (!a.deterministic[edge.to])
          rep.add(Errc::BadDocument, qn,
                  "eps edge must target the deterministic set");
      }
    }
    for (Letter l = 0; l < end; ++l) {
      int enabled = 0;
      int target = -1;
      for (int e : a.out_edges[q]) {
        const LdbaEdge& edge = a.edges[e];
        if (edge.eps) continue;
        if (std::binary_search(edge.letters.begin(), edge.letters.end(), l)) {
          ++enabled;
          target = edge.to;
        }
      }
      if (a.deterministic[q]) {
        if (enabled == 0)
          rep.add(Errc::BadDocument, qn,
                  "MissingLetterInQD: no edge on " + letter_to_string(l, a.aps));
        if (enabled > 1)
          rep.add(Errc::BadDocument, qn,
                  "NondeterministicInQD on " + letter_to_string(l, a.aps));
        if (enabled >= 1 && !a.deterministic[target])
          rep.add(Errc::BadDocument, qn, "edge leaves the deterministic set");
      } else if (enabled > 1) {
        rep.add(Errc::BadDocument, qn,
                "NondeterministicOnLetter " + letter_to_string(l, a.aps));
      }
    }
    if (a.accepting[q] && !a.deterministic[q])
      rep.add(Errc::BadDocument, qn, "accepting state outside Q_D");
  }
  return rep;
}

/// Parses the JSON automaton format: keys `aps`, `states`, `initial`,
/// `accepting`, `deterministic`, `edges` (each {from,to,guard?|eps?}).
/// Guards with empty enabling sets are dropped with a note.
inline Ldba parse_ldba(const Json& doc) {
  require(doc.is_object() && doc.contains("states") && doc.contains("aps") &&
              doc.contains("initial") && doc.contains("edges"),
          Errc::BadDocument,
          "expected keys aps, states, initial, accepting, deterministic, edges");
  Ldba a;
  for (const auto& ap : doc["aps"]) a.aps.push_back(ap.get<std::string>());
  require(static_cast<int>(a.aps.size()) <= kMaxApsForEnumeration,
          Errc::ApSetTooLarge, "automaton alphabet too large");
  for (const auto& s : doc["states"]) {
    const std::string name = s.get<std::string>();
    for (const auto& other : a.state_names)
      require(other != name, Errc::DuplicateStateId, name);
    a.state_names.push_back(name);
  }
  a.accepting.assign(a.num_states(), 0);
  a.deterministic.assign(a.num_states(), 0);
  a.out_edges.resize(a.num_states());
  a.initial = a.state_index(doc["initial"].get<std::string>());
  if (doc.contains("accepting"))
    for (const auto& s : doc["accepting"])
      a.accepting[a.state_index(s.get<std::string>())] = 1;
  if (doc.contains("deterministic"))
    for (const auto& s : doc["deterministic"])
      a.deterministic[a.state_index(s.get<std::string>())] = 1;
  for (const auto& edoc : doc["edges"]) {
    LdbaEdge e;
    e.from = a.state_index(edoc["from"].get<std::string>());
    e.to = a.state_index(edoc["to"].get<std::string>());
    if (edoc.value("eps", false)) {
      e.eps = true;
      require(!edoc.contains("guard"), Errc::BadDocument,
              "edge cannot carry both a guard and eps");
    } else {
      e.guard = edoc.value("guard", std::string("true"));
      e.guard_ast = parse_guard(e.guard);
      for (const auto& ap : formula_aps(e.guard_ast))
        require(std::find(a.aps.begin(), a.aps.end(), ap) != a.aps.end(),
                Errc::GuardParseError,
                "guard uses undeclared ap '" + ap + "'");
      e.letters = guard_letters(e.guard_ast, a.aps);
      if (e.letters.empty()) continue;  // unsatisfiable guard, not an edge
    }
    a.out_edges[e.from].push_back(static_cast<int>(a.edges.size()));
    a.edges.push_back(std::move(e));
  }
  return a;
}

inline Ldba parse_ldba_text(const std::string& text) {
  Json doc = Json::parse(text, nullptr, /*allow_exceptions=*/false);
  require(!doc.is_discarded(), Errc::BadDocument, "automaton is not valid JSON");
  return parse_ldba(doc);
}

namespace detail {

inline std::string hoa_guard_to_text(const std::string& label,
                                     const std::vector<std::string>& aps) {
  // HOA labels use integer ap references and t/f constants; rewrite into
  // the guard grammar.
  std::string out;
  std::size_t i = 0;
  while (i < label.size()) {
    char c = label[i];
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      while (j < label.size() &&
             std::isdigit(static_cast<unsigned char>(label[j])))
        ++j;
      const int idx = std::stoi(label.substr(i, j - i));
      require(idx >= 0 && idx < static_cast<int>(aps.size()),
              Errc::BadDocument, "HOA label references unknown AP index");
      out += aps[idx];
      i = j;
    } else if (c == 't') {
      out += "true";
      ++i;
    } else if (c == 'f') {
      out += "false";
      ++i;
    } else {
      out += c;
      ++i;
    }
  }
  return out;
}

}  // namespace detail

/// Imports the HOA v1 subset: state-based Buchi acceptance `1 Inf(0)`,
/// explicit labeled edges, no alternation and no eps concept.  Every state
/// is placed in Q_D; validate_ldba then enforces determinism and totality.
inline Ldba parse_hoa(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int n_states = -1;
  int start = -1;
  std::vector<std::string> aps;
  bool acceptance_ok = false;
  std::vector<std::string> body;
  bool in_body = false;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n'))
      line.pop_back();
    if (line.empty()) continue;
    if (!in_body) {
      std::istringstream ls(line);
      std::string key;
      ls >> key;
      if (key == "HOA:") {
        std::string v;
        ls >> v;
        require(v == "v1", Errc::HoaUnsupportedFeature, "HOA version " + v);
      } else if (key == "States:") {
        ls >> n_states;
      } else if (key == "Start:") {
        ls >> start;
      } else if (key == "AP:") {
        int n = 0;
        ls >> n;
        for (int i = 0; i < n; ++i) {
          std::string q;
          ls >> std::ws;
          std::getline(ls, q, '"');  // opening quote
          std::getline(ls, q, '"');
          aps.push_back(q);
        }
      } else if (key == "Acceptance:") {
        std::string rest;
        std::getline(ls, rest);
        const bool buchi = rest.find("Inf(0)") != std::string::npos &&
                           rest.find("1 ") != std::string::npos;
        require(buchi, Errc::HoaUnsupportedFeature,
                "only state-based Buchi acceptance '1 Inf(0)' is supported");
        acceptance_ok = true;
      } else if (key == "--BODY--") {
        in_body = true;
      }
    } else if (line != "--END--") {
      body.push_back(line);
    }
  }
  require(n_states > 0 && start >= 0 && acceptance_ok, Errc::BadDocument,
          "incomplete HOA header");

  Json doc;
  doc["aps"] = aps;
  Json statenames = Json::array();
  for (int i = 0; i < n_states; ++i)
    statenames.push_back("q" + std::to_string(i));
  doc["states"] = statenames;
  doc["initial"] = "q" + std::to_string(start);
  Json accepting = Json::array();
  Json edges = Json::array();
  int current = -1;
  for (const auto& bline : body) {
    std::istringstream ls(bline);
    std::string tok;
    ls >> tok;
    if (tok == "State:") {
      std::string rest;
      std::getline(ls, rest);
      require(rest.find('[') == std::string::npos,
              Errc::HoaUnsupportedFeature, "state-labeled HOA not supported");
      std::istringstream rs(rest);
      rs >> current;
      require(current >= 0 && current < n_states, Errc::BadDocument,
              "state index out of range");
      if (rest.find('{') != std::string::npos)
        accepting.push_back("q" + std::to_string(current));
    } else {
      require(current >= 0, Errc::BadDocument, "edge before any State:");
      const auto lb = bline.find('[');
      const auto rb = bline.find(']');
      require(lb != std::string::npos && rb != std::string::npos && rb > lb,
              Errc::HoaUnsupportedFeature,
              "only explicit labeled edges are supported");
      const std::string label = bline.substr(lb + 1, rb - lb - 1);
      std::istringstream ts(bline.substr(rb + 1));
      int target = -1;
      ts >> target;
      require(target >= 0 && target < n_states, Errc::BadDocument,
              "edge target out of range");
      std::string trailer;
      std::getline(ts, trailer);
      require(trailer.find('{') == std::string::npos,
              Errc::HoaUnsupportedFeature,
              "transition-based acceptance not supported");
      edges.push_back({{"from", "q" + std::to_string(current)},
                       {"to", "q" + std::to_string(target)},
                       {"guard", detail::hoa_guard_to_text(label, aps)}});
    }
  }
  doc["accepting"] = accepting;
  doc["deterministic"] = statenames;  // HOA has no eps, all states in Q_D
  doc["edges"] = edges;
  return parse_ldba(doc);
}

}  // namespace ltlplan
