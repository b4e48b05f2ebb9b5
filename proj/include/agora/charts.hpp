#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "agora/csv.hpp"
#include "agora/error.hpp"
#include "agora/evaluation.hpp"
#include "agora/stats.hpp"

namespace agora::charts {

// Shortest representation that parses back to the same double.
inline std::string format_number(double v) {
  if (v == 0.0) return "0";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

// Fixed two-decimal labels for the drawing itself.
inline std::string label(double v) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(2);
  os << v;
  return os.str();
}

inline std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

struct Bar {
  std::string label;
  double value = 0.0;
  std::optional<double> error;
};

namespace detail {

constexpr int kWidth = 480;
constexpr int kHeight = 320;
constexpr int kLeft = 60;
constexpr int kRight = 20;
constexpr int kTop = 40;
constexpr int kBottom = 50;

inline std::string svg_header(const std::string& title) {
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << xml_escape(title)
     << "</text>\n";
  return os.str();
}

inline double nice_max(double v) {
  if (v <= 0.0) return 1.0;
  const double mag = std::pow(10.0, std::floor(std::log10(v)));
  for (double step : {1.0, 2.0, 2.5, 5.0, 10.0})
    if (step * mag >= v) return step * mag;
  return 10.0 * mag;
}

inline std::string axis(double ymax, const std::string& ylabel) {
  std::ostringstream os;
  const int plot_h = kHeight - kTop - kBottom;
  os << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kHeight - kBottom
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << kLeft << "\" y1=\"" << kHeight - kBottom << "\" x2=\"" << kWidth - kRight << "\" y2=\""
     << kHeight - kBottom << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double v = ymax * t / 4.0;
    const int y = kHeight - kBottom - plot_h * t / 4;
    os << "<text x=\"" << kLeft - 6 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\">" << label(v) << "</text>\n";
  }
  os << "<text x=\"14\" y=\"" << kTop + plot_h / 2 << "\" transform=\"rotate(-90 14 " << kTop + plot_h / 2
     << ")\" text-anchor=\"middle\">" << xml_escape(ylabel) << "</text>\n";
  return os.str();
}

inline double to_y(double v, double ymax) {
  const double plot_h = kHeight - kTop - kBottom;
  return kHeight - kBottom - plot_h * std::clamp(v / ymax, 0.0, 1.0);
}

}  // namespace detail

inline std::string bar_chart_svg(const std::string& title, const std::string& ylabel, const std::vector<Bar>& bars,
                                 std::optional<double> fixed_max = std::nullopt) {
  double top = 0.0;
  for (const auto& b : bars) top = std::max(top, b.value + b.error.value_or(0.0));
  const double ymax = fixed_max ? *fixed_max : detail::nice_max(top);
  std::ostringstream os;
  os << detail::svg_header(title) << detail::axis(ymax, ylabel);
  const double plot_w = detail::kWidth - detail::kLeft - detail::kRight;
  const double slot = bars.empty() ? plot_w : plot_w / static_cast<double>(bars.size());
  for (std::size_t i = 0; i < bars.size(); ++i) {
    const auto& b = bars[i];
    const double x = detail::kLeft + slot * static_cast<double>(i) + slot * 0.2;
    const double w = slot * 0.6;
    const double y = detail::to_y(b.value, ymax);
    os << "<rect x=\"" << label(x) << "\" y=\"" << label(y) << "\" width=\"" << label(w) << "\" height=\""
       << label(detail::kHeight - detail::kBottom - y) << "\" fill=\"#4878a8\"/>\n";
    if (b.error) {
      const double cx = x + w / 2;
      const double y1 = detail::to_y(b.value - *b.error, ymax), y2 = detail::to_y(b.value + *b.error, ymax);
      os << "<line x1=\"" << label(cx) << "\" y1=\"" << label(y1) << "\" x2=\"" << label(cx) << "\" y2=\""
         << label(y2) << "\" stroke=\"black\"/>\n";
      for (double yy : {y1, y2})
        os << "<line x1=\"" << label(cx - 6) << "\" y1=\"" << label(yy) << "\" x2=\"" << label(cx + 6) << "\" y2=\""
           << label(yy) << "\" stroke=\"black\"/>\n";
    }
    os << "<text x=\"" << label(x + w / 2) << "\" y=\"" << detail::kHeight - detail::kBottom + 16
       << "\" text-anchor=\"middle\">" << xml_escape(b.label) << "</text>\n";
    os << "<text x=\"" << label(x + w / 2) << "\" y=\"" << label(y - 4) << "\" text-anchor=\"middle\" font-size=\"10\">"
       << label(b.value) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

struct BoxStats {
  double min = 0, q1 = 0, median = 0, q3 = 0, max = 0, mean = 0;
};

inline BoxStats box_stats(const std::vector<int>& values) {
  if (values.empty()) return {};
  std::vector<double> v(values.begin(), values.end());
  BoxStats b;
  b.min = *std::min_element(v.begin(), v.end());
  b.max = *std::max_element(v.begin(), v.end());
  b.q1 = stats::quantile(v, 0.25);
  b.median = stats::quantile(v, 0.5);
  b.q3 = stats::quantile(v, 0.75);
  b.mean = stats::mean(v);
  return b;
}

inline std::string box_plot_svg(const std::string& title, const std::string& name, const BoxStats& b) {
  const double ymax = detail::nice_max(b.max);
  std::ostringstream os;
  os << detail::svg_header(title) << detail::axis(ymax, "turns");
  const double cx = (detail::kLeft + detail::kWidth - detail::kRight) / 2.0;
  const double w = 80;
  const auto y = [&](double v) { return label(detail::to_y(v, ymax)); };
  os << "<line x1=\"" << label(cx) << "\" y1=\"" << y(b.min) << "\" x2=\"" << label(cx) << "\" y2=\"" << y(b.max)
     << "\" stroke=\"black\"/>\n";
  os << "<rect x=\"" << label(cx - w / 2) << "\" y=\"" << y(b.q3) << "\" width=\"" << label(w) << "\" height=\""
     << label(detail::to_y(b.q1, ymax) - detail::to_y(b.q3, ymax)) << "\" fill=\"#a8c4e0\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << label(cx - w / 2) << "\" y1=\"" << y(b.median) << "\" x2=\"" << label(cx + w / 2)
     << "\" y2=\"" << y(b.median) << "\" stroke=\"black\" stroke-width=\"2\"/>\n";
  os << "<circle cx=\"" << label(cx) << "\" cy=\"" << y(b.mean) << "\" r=\"4\" fill=\"#c03030\"/>\n";
  os << "<text x=\"" << label(cx) << "\" y=\"" << detail::kHeight - detail::kBottom + 16
     << "\" text-anchor=\"middle\">" << xml_escape(name) << "</text>\n";
  os << "</svg>\n";
  return os.str();
}

namespace detail {

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::trunc | std::ios::binary);
  if (!out) throw FormatError("cannot write " + p.string());
  out << text;
}

inline std::string csv_text(const std::vector<std::vector<std::string>>& rows) {
  std::string out;
  for (const auto& r : rows) out += csv::format_row(r);
  return out;
}

}  // namespace detail

// Four charts per result: score, turns, decision, clock. Each is an SVG
// plus a CSV with the plotted numbers. Returns the written paths.
inline std::vector<std::filesystem::path> emit_charts(const std::vector<EvalResult>& results,
                                                      const std::filesystem::path& out_dir,
                                                      const std::optional<std::string>& metric = std::nullopt) {
  if (results.empty()) throw EmptyResults("no evaluation results to chart");
  std::filesystem::create_directories(out_dir);
  std::vector<std::filesystem::path> manifest;
  auto emit = [&](const std::string& stem, const std::string& svg, const std::vector<std::vector<std::string>>& rows) {
    detail::write_text(out_dir / (stem + ".svg"), svg);
    detail::write_text(out_dir / (stem + ".csv"), detail::csv_text(rows));
    manifest.push_back(out_dir / (stem + ".svg"));
    manifest.push_back(out_dir / (stem + ".csv"));
  };

  for (const auto& r : results) {
    const auto& name = r.job_name;

    std::vector<Bar> bars;
    std::vector<std::vector<std::string>> score_rows{{"config", "metric", "mean", "std"}};
    for (const auto& [m, s] : r.metrics) {
      if (metric && m != *metric) continue;
      bars.push_back({m, s.mean, s.std});
      score_rows.push_back({name, m, format_number(s.mean), format_number(s.std)});
    }
    if (metric && bars.empty()) throw PreconditionViolation("metric '" + *metric + "' not in results for " + name);
    emit("score-" + name, bar_chart_svg("Score: " + name, "score (mean, std error bars)", bars, 1.0), score_rows);

    const auto box = box_stats(r.turns);
    emit("turns-" + name, box_plot_svg("Turns: " + name, name, box),
         {{"config", "count", "min", "q1", "median", "q3", "max", "mean"},
          {name, std::to_string(r.turns.size()), format_number(box.min), format_number(box.q1),
           format_number(box.median), format_number(box.q3), format_number(box.max), format_number(box.mean)}});

    emit("decision-" + name,
         bar_chart_svg("Decision success: " + name, "success rate", {{name, r.decision_success_rate, std::nullopt}}, 1.0),
         {{"config", "success_rate"}, {name, format_number(r.decision_success_rate)}});

    const double clock = r.wall_clock_s.empty() ? 0.0 : stats::mean(r.wall_clock_s);
    emit("clock-" + name, bar_chart_svg("Wall clock: " + name, "seconds (mean)", {{name, clock, std::nullopt}}),
         {{"config", "mean_s"}, {name, format_number(clock)}});
  }
  return manifest;
}

}  // namespace agora::charts
