#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "agora/error.hpp"

namespace agora::stats {

struct Summary {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation (n - 1)
  std::size_t n = 0;
  std::string annotation;  // "single repeat" when n == 1
};

// Values are sorted before summing so the result does not depend on the
// order repeats finished in.
inline Summary summarize(std::vector<double> values) {
  if (values.empty()) throw PreconditionViolation("summarize needs at least one value");
  std::sort(values.begin(), values.end());
  Summary s;
  s.n = values.size();
  if (values.front() == values.back()) {
    s.mean = values.front();
    s.std = 0.0;
  } else {
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(s.n);
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(s.n - 1));
  }
  if (s.n == 1) s.annotation = "single repeat";
  return s;
}

inline double mean(const std::vector<double>& values) { return summarize(values).mean; }

// Linear-interpolated quantile (the common "type 7" definition).
inline double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw PreconditionViolation("quantile of an empty list");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

}  // namespace agora::stats
