#pragma once

#include <algorithm>
#include <map>
#include <regex>
#include <set>
#include <string>
#include <vector>

#include "agora/error.hpp"
#include "agora/json_extract.hpp"
#include "agora/rational.hpp"
#include "agora/types.hpp"

namespace agora {

inline constexpr int kMaxRankings = 5;  // "Provide up to 5 rankings."

struct Tally {
  std::map<int, Rational> per_solution_score;  // 1-based candidate index
  std::set<int> winners;

  friend bool operator==(const Tally&, const Tally&) = default;
};

namespace detail {

inline std::vector<long long> integers_in(std::string_view text) {
  static const std::regex re("-?\\d+");
  std::vector<long long> out;
  const std::string s(text);
  for (auto it = std::sregex_iterator(s.begin(), s.end(), re); it != std::sregex_iterator(); ++it) {
    try {
      out.push_back(std::stoll(it->str()));
    } catch (const std::out_of_range&) {
      out.push_back(-1);  // absurdly large; fails every range check
    }
  }
  return out;
}

// One value: 1-based if it fits, else 0-based shifted up.
inline int normalize_index(long long v, int k) {
  if (v >= 1 && v <= k) return static_cast<int>(v);
  if (v >= 0 && v <= k - 1) return static_cast<int>(v + 1);
  throw VoteParseFailure("index " + std::to_string(v) + " out of range for " + std::to_string(k) + " solutions");
}

// A whole list is read under a single convention.
inline std::vector<int> normalize_all(const std::vector<long long>& values, int k) {
  const bool one_based = std::all_of(values.begin(), values.end(), [k](long long v) { return v >= 1 && v <= k; });
  const bool zero_based = std::all_of(values.begin(), values.end(), [k](long long v) { return v >= 0 && v <= k - 1; });
  if (!one_based && !zero_based) throw VoteParseFailure("indices out of range for " + std::to_string(k) + " solutions");
  std::vector<int> out;
  for (auto v : values) out.push_back(static_cast<int>(one_based ? v : v + 1));
  return out;
}

inline void require_k(int k, int min) {
  if (k < min) throw PreconditionViolation("need at least " + std::to_string(min) + " candidates");
}

}  // namespace detail

inline int parse_simple_vote(std::string_view text, int k) {
  detail::require_k(k, 1);
  const auto ints = detail::integers_in(text);
  if (ints.empty()) throw VoteParseFailure("no number in vote");
  return detail::normalize_index(ints.front(), k);
}

inline std::set<int> parse_approval(std::string_view text, int k) {
  detail::require_k(k, 1);
  std::set<int> out;
  for (auto v : detail::integers_in(text)) out.insert(detail::normalize_index(v, k));
  if (out.empty()) throw VoteParseFailure("approval ballot approves nothing");
  return out;
}

inline std::map<int, int> parse_cumulative(std::string_view text, int k, int budget) {
  detail::require_k(k, 1);
  if (budget < 1) throw PreconditionViolation("budget must be >= 1");
  const auto obj = extract_first_json_object(text);
  if (!obj) throw VoteParseFailure("no JSON object in allocation");
  std::vector<long long> keys;
  std::vector<long long> points;
  for (const auto& [key, value] : obj->items()) {
    long long idx = 0;
    try {
      std::size_t used = 0;
      idx = std::stoll(key, &used);
      if (used != key.size()) throw std::invalid_argument(key);
    } catch (const std::exception&) {
      throw VoteParseFailure("allocation key '" + key + "' is not an integer");
    }
    if (!value.is_number_integer()) throw VoteParseFailure("points for '" + key + "' are not an integer");
    const auto p = value.get<long long>();
    if (p < 0) throw VoteParseFailure("negative points for '" + key + "'");
    keys.push_back(idx);
    points.push_back(p);
  }
  const auto normalized = detail::normalize_all(keys, k);
  std::map<int, int> out;
  long long total = 0;
  for (std::size_t i = 0; i < normalized.size(); ++i) {
    total += points[i];
    if (total > budget) break;
    out[normalized[i]] += static_cast<int>(points[i]);
  }
  if (total > budget)
    throw BudgetExceeded("allocation exceeds the budget of " + std::to_string(budget) + " points");
  return out;
}

struct RankedParse {
  std::vector<int> ranking;
  std::string warning;
};

// Longer rankings than min(k, 5) are truncated; the warning says so.
inline RankedParse parse_ranked_detailed(std::string_view text, int k) {
  detail::require_k(k, 2);
  auto ints = detail::integers_in(text);
  if (ints.empty()) throw VoteParseFailure("no ranking found");
  RankedParse out;
  const auto limit = static_cast<std::size_t>(std::min(k, kMaxRankings));
  if (ints.size() > limit) {
    out.warning = "ranking of " + std::to_string(ints.size()) + " entries truncated to " + std::to_string(limit);
    ints.resize(limit);
  }
  out.ranking = detail::normalize_all(ints, k);
  std::set<int> seen;
  for (int r : out.ranking)
    if (!seen.insert(r).second) throw DuplicateRank("solution " + std::to_string(r) + " ranked twice");
  return out;
}

inline std::vector<int> parse_ranked(std::string_view text, int k) { return parse_ranked_detailed(text, k).ranking; }

// Pure aggregation over valid ballots; invalid ones are abstentions.
inline Tally tally(ProtocolKind kind, const std::vector<Ballot>& ballots, int k) {
  if (!is_voting(kind)) throw PreconditionViolation("tally needs a voting protocol");
  detail::require_k(k, 1);
  std::map<int, long long> score;
  for (int i = 1; i <= k; ++i) score[i] = 0;
  auto check = [k](int idx) {
    if (idx < 1 || idx > k) throw PreconditionViolation("ballot index outside 1.." + std::to_string(k));
    return idx;
  };
  bool any = false;
  for (const auto& b : ballots) {
    if (!b.valid) continue;
    any = true;
    switch (kind) {
      case ProtocolKind::SimpleVoting:
        score[check(std::get<VoteIndex>(b.parsed))] += 1;
        break;
      case ProtocolKind::ApprovalVoting:
        for (int i : std::get<ApprovalSet>(b.parsed)) score[check(i)] += 1;
        break;
      case ProtocolKind::CumulativeVoting:
        for (const auto& [i, p] : std::get<PointMap>(b.parsed)) score[check(i)] += p;
        break;
      case ProtocolKind::RankedVoting: {
        const auto& r = std::get<Ranking>(b.parsed);
        for (std::size_t p = 0; p < r.size(); ++p) score[check(r[p])] += k - 1 - static_cast<long long>(p);
        break;
      }
      default:
        break;
    }
  }
  if (!any) throw AllBallotsInvalid("no valid ballots");
  Tally t;
  long long best = 0;
  for (const auto& [i, s] : score) best = std::max(best, s);
  for (const auto& [i, s] : score) {
    t.per_solution_score.emplace(i, Rational(s));
    if (s == best) t.winners.insert(i);
  }
  return t;
}

// Parses `text` for the given kind into a ballot; failures come back as
// an invalid ballot carrying the reason.
inline Ballot parse_ballot(ProtocolKind kind, int voter, const std::string& text, int k, int budget) {
  Ballot b;
  b.voter = voter;
  b.raw_text = text;
  try {
    switch (kind) {
      case ProtocolKind::SimpleVoting: b.parsed = parse_simple_vote(text, k); break;
      case ProtocolKind::ApprovalVoting: b.parsed = parse_approval(text, k); break;
      case ProtocolKind::CumulativeVoting: b.parsed = parse_cumulative(text, k, budget); break;
      case ProtocolKind::RankedVoting: {
        auto r = parse_ranked_detailed(text, k);
        b.parsed = std::move(r.ranking);
        b.warning = std::move(r.warning);
        break;
      }
      default: throw PreconditionViolation("parse_ballot needs a voting protocol");
    }
    b.valid = true;
  } catch (const VoteParseFailure& e) {
    b.failure_reason = e.what();
  } catch (const BudgetExceeded& e) {
    b.failure_reason = e.what();
  } catch (const DuplicateRank& e) {
    b.failure_reason = e.what();
  }
  return b;
}

}  // namespace agora
