#pragma once

#include <bit>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace ltlplan {

/// Absolute tolerance for probability-sum checks on every constructed
/// transition structure.
inline constexpr double kStochasticTol = 1e-9;

/// LP tolerances (one order looser than construction-level checks).
inline constexpr double kLpFeasTol = 1e-8;
inline constexpr double kLpOptTol = 1e-7;
inline constexpr double kLpPivotTol = 1e-10;

/// Occupancy below this threshold counts as numerical dust when extracting
/// policy support.
inline constexpr double kSupportTol = 1e-9;

/// Exponent clamp for the regulated-cost exponential.
inline constexpr double kExpSaturation = 700.0;

/// Brute-force enumeration bound for guard alphabets.
inline constexpr int kMaxApsForEnumeration = 20;

enum class Errc {
  DuplicateStateId,
  ProbabilitySumError,
  UnknownSuccessor,
  NegativeCost,
  PolicyDomainMismatch,
  NotClosed,
  EmptyActionSet,
  SyntaxError,
  UnbalancedParens,
  UnknownState,
  GuardParseError,
  HoaUnsupportedFeature,
  ApSetTooLarge,
  EmptyAlphabetSet,
  AlphabetMismatch,
  NoReachableAmec,
  EmptyReachableSet,
  PrefixInfeasible,
  SuffixInfeasible,
  CoupledInfeasible,
  EmptyEntry,
  UntrackedState,
  LpInfeasible,
  LpUnbounded,
  NumericalBreakdown,
  BadDocument,
  InternalInvariant,
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::DuplicateStateId: return "DuplicateStateId";
    case Errc::ProbabilitySumError: return "ProbabilitySumError";
    case Errc::UnknownSuccessor: return "UnknownSuccessor";
    case Errc::NegativeCost: return "NegativeCost";
    case Errc::PolicyDomainMismatch: return "PolicyDomainMismatch";
    case Errc::NotClosed: return "NotClosed";
    case Errc::EmptyActionSet: return "EmptyActionSet";
    case Errc::SyntaxError: return "SyntaxError";
    case Errc::UnbalancedParens: return "UnbalancedParens";
    case Errc::UnknownState: return "UnknownState";
    case Errc::GuardParseError: return "GuardParseError";
    case Errc::HoaUnsupportedFeature: return "HoaUnsupportedFeature";
    case Errc::ApSetTooLarge: return "ApSetTooLarge";
    case Errc::EmptyAlphabetSet: return "EmptyAlphabetSet";
    case Errc::AlphabetMismatch: return "AlphabetMismatch";
    case Errc::NoReachableAmec: return "NoReachableAmec";
    case Errc::EmptyReachableSet: return "EmptyReachableSet";
    case Errc::PrefixInfeasible: return "PrefixInfeasible";
    case Errc::SuffixInfeasible: return "SuffixInfeasible";
    case Errc::CoupledInfeasible: return "CoupledInfeasible";
    case Errc::EmptyEntry: return "EmptyEntry";
    case Errc::UntrackedState: return "UntrackedState";
    case Errc::LpInfeasible: return "LpInfeasible";
    case Errc::LpUnbounded: return "LpUnbounded";
    case Errc::NumericalBreakdown: return "NumericalBreakdown";
    case Errc::BadDocument: return "BadDocument";
    case Errc::InternalInvariant: return "InternalInvariant";
  }
  return "UnknownError";
}

/// Exception carrying a machine-readable code next to the human message.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what),
        code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool ok, Errc code, const std::string& what) {
  if (!ok) fail(code, what);
}

/// A letter is one element of 2^AP, kept as a bitmask over the declared
/// AP list (ap i <-> bit i).
using Letter = std::uint32_t;

inline int letter_popcount(Letter l) { return std::popcount(l); }

inline std::string letter_to_string(Letter l,
                                    const std::vector<std::string>& aps) {
  std::string out = "{";
  bool first = true;
  for (std::size_t i = 0; i < aps.size(); ++i) {
    if (l & (Letter{1} << i)) {
      if (!first) out += ",";
      out += aps[i];
      first = false;
    }
  }
  out += "}";
  return out;
}

/// Hamming distance between a letter and a nonempty set of letters:
/// 0 on membership, otherwise the minimal symmetric-difference cardinality.
inline int letter_set_distance(Letter l, const std::vector<Letter>& set) {
  require(!set.empty(), Errc::EmptyAlphabetSet,
          "distance against an empty alphabet set");
  int best = std::numeric_limits<int>::max();
  for (Letter cand : set) {
    int d = std::popcount(static_cast<std::uint32_t>(l ^ cand));
    if (d < best) best = d;
    if (best == 0) break;
  }
  return best;
}

/// One finding of a validator; `where` carries state/action coordinates.
struct ValidationIssue {
  Errc code;
  std::string where;
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;
  std::vector<std::string> notes;

  bool ok() const { return issues.empty(); }
  void add(Errc code, std::string where, std::string message) {
    issues.push_back({code, std::move(where), std::move(message)});
  }
  std::string to_string() const {
    std::string out;
    for (const auto& i : issues) {
      out += std::string(errc_name(i.code)) + " at " + i.where + ": " +
             i.message + "\n";
    }
    for (const auto& n : notes) out += "note: " + n + "\n";
    return out;
  }
};

}  // namespace ltlplan
