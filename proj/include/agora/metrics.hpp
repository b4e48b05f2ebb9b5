#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "agora/error.hpp"

namespace agora::metrics {

namespace detail {

// Length of a Unicode whitespace sequence starting at s[i] (0 if none).
inline std::size_t unicode_space_len(std::string_view s, std::size_t i) {
  const auto b = [&](std::size_t k) { return static_cast<unsigned char>(s[k]); };
  const auto c = b(i);
  if (c == ' ' || (c >= 0x09 && c <= 0x0d)) return 1;
  if (c == 0xc2 && i + 1 < s.size() && (b(i + 1) == 0x85 || b(i + 1) == 0xa0)) return 2;
  if (c == 0xe1 && i + 2 < s.size() && b(i + 1) == 0x9a && b(i + 2) == 0x80) return 3;  // U+1680
  if (c == 0xe2 && i + 2 < s.size()) {
    const auto c1 = b(i + 1), c2 = b(i + 2);
    if (c1 == 0x80 && ((c2 >= 0x80 && c2 <= 0x8a) || c2 == 0xa8 || c2 == 0xa9 || c2 == 0xaf)) return 3;
    if (c1 == 0x81 && c2 == 0x9f) return 3;  // U+205F
  }
  if (c == 0xe3 && i + 2 < s.size() && b(i + 1) == 0x80 && b(i + 2) == 0x80) return 3;  // U+3000
  return 0;
}

inline bool is_punct(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }

using Ngram = std::vector<std::string>;
using NgramCounts = std::map<Ngram, int>;

inline NgramCounts ngram_counts(const std::vector<std::string>& tokens, std::size_t n) {
  NgramCounts out;
  if (n == 0 || tokens.size() < n) return out;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) ++out[Ngram(tokens.begin() + i, tokens.begin() + i + n)];
  return out;
}

inline int total(const NgramCounts& c) {
  int t = 0;
  for (const auto& [_, k] : c) t += k;
  return t;
}

inline int overlap(const NgramCounts& a, const NgramCounts& b) {
  int m = 0;
  for (const auto& [g, k] : a)
    if (auto it = b.find(g); it != b.end()) m += std::min(k, it->second);
  return m;
}

inline double f1(double p, double r) { return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r); }

inline std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

}  // namespace detail

// Lowercase, split on whitespace, strip leading/trailing ASCII punctuation.
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    std::size_t b = 0, e = cur.size();
    while (b < e && detail::is_punct(cur[b])) ++b;
    while (e > b && detail::is_punct(cur[e - 1])) --e;
    if (e > b) out.push_back(cur.substr(b, e - b));
    cur.clear();
  };
  for (std::size_t i = 0; i < text.size();) {
    if (const auto len = detail::unicode_space_len(text, i)) {
      flush();
      i += len;
      continue;
    }
    cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(text[i]))));
    ++i;
  }
  flush();
  return out;
}

inline double bleu(std::string_view candidate, const std::vector<std::string>& references, int max_n = 4) {
  if (references.empty()) throw PreconditionViolation("bleu needs at least one reference");
  if (max_n < 1) throw PreconditionViolation("bleu max_n must be >= 1");
  const auto cand = tokenize(candidate);
  if (cand.empty()) return 0.0;
  std::vector<std::vector<std::string>> refs;
  for (const auto& r : references) refs.push_back(tokenize(r));

  double log_sum = 0.0;
  for (int n = 1; n <= max_n; ++n) {
    const auto un = static_cast<std::size_t>(n);
    const auto cand_counts = detail::ngram_counts(cand, un);
    detail::NgramCounts max_ref;
    for (const auto& r : refs)
      for (const auto& [g, k] : detail::ngram_counts(r, un)) max_ref[g] = std::max(max_ref[g], k);
    double matched = detail::overlap(cand_counts, max_ref);
    double possible = detail::total(cand_counts);
    if (matched == 0.0) {
      if (n == 1) return 0.0;
      matched += 1.0;
      possible += 1.0;
    }
    log_sum += std::log(matched / possible);
  }

  const auto c = static_cast<double>(cand.size());
  double r = static_cast<double>(refs.front().size());
  for (const auto& ref : refs) {
    const auto len = static_cast<double>(ref.size());
    const auto d = std::abs(len - c), best = std::abs(r - c);
    if (d < best || (d == best && len < r)) r = len;
  }
  const double bp = c < r ? std::exp(1.0 - r / c) : 1.0;
  return bp * std::exp(log_sum / max_n);
}

enum class RougeVariant { R1, R2, R3, L };

inline double rouge(std::string_view candidate, std::string_view reference, RougeVariant variant) {
  const auto cand = tokenize(candidate);
  const auto ref = tokenize(reference);
  if (variant == RougeVariant::L) {
    if (cand.empty() || ref.empty()) return 0.0;
    const auto l = static_cast<double>(detail::lcs_length(cand, ref));
    return detail::f1(l / static_cast<double>(cand.size()), l / static_cast<double>(ref.size()));
  }
  const std::size_t n = variant == RougeVariant::R1 ? 1 : variant == RougeVariant::R2 ? 2 : 3;
  const auto cc = detail::ngram_counts(cand, n);
  const auto rc = detail::ngram_counts(ref, n);
  const auto ct = detail::total(cc), rt = detail::total(rc);
  if (ct == 0 || rt == 0) return 0.0;
  const double m = detail::overlap(cc, rc);
  return detail::f1(m / ct, m / rt);
}

inline double rouge(std::string_view candidate, const std::vector<std::string>& references, RougeVariant variant) {
  double best = 0.0;
  for (const auto& r : references) best = std::max(best, rouge(candidate, r, variant));
  return best;
}

struct Alignment {
  int matches = 0;
  int chunks = 0;
};

// Exact-match unigram alignment. Every matchable token is matched (maximum
// match count); chunks are kept low by tiling longest common runs first.
// Minimizing chunks exactly is a minimum common string partition problem,
// so this is a heuristic on that second criterion.
inline Alignment align(const std::vector<std::string>& cand, const std::vector<std::string>& ref) {
  std::vector<int> to_ref(cand.size(), -1);
  std::vector<bool> ref_used(ref.size(), false);
  for (;;) {
    std::size_t best_len = 0, best_i = 0, best_j = 0;
    for (std::size_t i = 0; i < cand.size(); ++i) {
      if (to_ref[i] >= 0) continue;
      for (std::size_t j = 0; j < ref.size(); ++j) {
        std::size_t len = 0;
        while (i + len < cand.size() && j + len < ref.size() && to_ref[i + len] < 0 && !ref_used[j + len] &&
               cand[i + len] == ref[j + len])
          ++len;
        if (len > best_len) {
          best_len = len;
          best_i = i;
          best_j = j;
        }
      }
    }
    if (best_len == 0) break;
    for (std::size_t k = 0; k < best_len; ++k) {
      to_ref[best_i + k] = static_cast<int>(best_j + k);
      ref_used[best_j + k] = true;
    }
  }
  Alignment a;
  int prev = -2;
  for (int r : to_ref) {
    if (r < 0) {
      prev = -2;
      continue;
    }
    ++a.matches;
    if (r != prev + 1) ++a.chunks;
    prev = r;
  }
  return a;
}

inline double meteor_lite(std::string_view candidate, std::string_view reference) {
  const auto cand = tokenize(candidate);
  const auto ref = tokenize(reference);
  const auto a = align(cand, ref);
  if (a.matches == 0) return 0.0;
  const double m = a.matches;
  const double p = m / static_cast<double>(cand.size());
  const double r = m / static_cast<double>(ref.size());
  const double fmean = 10.0 * p * r / (r + 9.0 * p);
  const double frag = static_cast<double>(a.chunks) / m;
  const double penalty = 0.5 * frag * frag * frag;
  return fmean * (1.0 - penalty);
}

inline double meteor_lite(std::string_view candidate, const std::vector<std::string>& references) {
  double best = 0.0;
  for (const auto& r : references) best = std::max(best, meteor_lite(candidate, r));
  return best;
}

}  // namespace agora::metrics
