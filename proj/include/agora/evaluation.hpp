#pragma once

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "agora/error.hpp"
#include "agora/log_json.hpp"
#include "agora/metrics.hpp"
#include "agora/stats.hpp"
#include "agora/types.hpp"

namespace agora {

namespace detail {

inline std::string last_nonempty_line(std::string_view text) {
  std::string last, cur;
  auto done = [&] {
    if (cur.find_first_not_of(" \t\r") != std::string::npos) last = cur;
    cur.clear();
  };
  for (char c : text) {
    if (c == '\n') done();
    else cur.push_back(c);
  }
  done();
  return last;
}

inline bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

}  // namespace detail

// Letter after the last "final solution" marker; otherwise the only
// standalone capital letter on the final line. A capital used as a word
// ("I am", "A cat") does not count as standalone.
inline std::optional<char> extract_answer_letter(std::string_view text) {
  static const std::regex marker(R"(final\s*solution\s*[:\-]?\s*[\(\[\*"'\s]*([a-z])(?![a-z0-9]))",
                                 std::regex::ECMAScript | std::regex::icase);
  const std::string s(text);
  std::optional<char> found;
  for (auto it = std::sregex_iterator(s.begin(), s.end(), marker); it != std::sregex_iterator(); ++it)
    found = static_cast<char>(std::toupper(static_cast<unsigned char>((*it)[1].str()[0])));
  if (found) return found;

  const auto line = detail::last_nonempty_line(text);
  std::optional<char> only;
  int count = 0;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (c < 'A' || c > 'Z') continue;
    if (i > 0 && detail::is_alnum(line[i - 1])) continue;
    if (i + 1 < line.size() && detail::is_alnum(line[i + 1])) continue;
    const bool used_as_word = i + 2 < line.size() && line[i + 1] == ' ' &&
                              std::islower(static_cast<unsigned char>(line[i + 2]));
    if (used_as_word) continue;
    ++count;
    only = c;
  }
  return count == 1 ? only : std::nullopt;
}

using SampleIndex = std::map<std::string, TaskInstance>;

inline SampleIndex index_samples(const std::vector<TaskInstance>& samples) {
  SampleIndex out;
  for (const auto& s : samples) out.emplace(s.id, s);
  return out;
}

inline const TaskInstance& lookup_sample(const SampleIndex& samples, const std::string& id) {
  const auto it = samples.find(id);
  if (it == samples.end()) throw MissingReference("no sample with id '" + id + "' in the dataset");
  return it->second;
}

inline bool answer_correct(const RecordSummary& r, const TaskInstance& sample) {
  if (!sample.answer_letter) throw MissingReference("sample '" + sample.id + "' has no answer letter");
  const auto got = extract_answer_letter(r.final_text);
  return got && *got == *sample.answer_letter;
}

inline double accuracy(const std::vector<RecordSummary>& records, const SampleIndex& samples) {
  if (records.empty()) return 0.0;
  int correct = 0;
  for (const auto& r : records) correct += answer_correct(r, lookup_sample(samples, r.sample_id)) ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(records.size());
}

// Accuracy when every sample carries an answer letter, overlap metrics
// otherwise.
inline std::vector<std::string> default_metrics(const std::vector<TaskInstance>& samples) {
  const bool lettered = !samples.empty() && std::all_of(samples.begin(), samples.end(),
                                                        [](const auto& s) { return s.answer_letter.has_value(); });
  if (lettered) return {"accuracy"};
  return {"bleu", "rouge1", "rouge2", "rouge3", "rougeL", "meteor"};
}

inline const std::vector<std::string>& known_metrics() {
  static const std::vector<std::string> names{"accuracy", "bleu", "rouge1", "rouge2", "rouge3", "rougeL", "meteor"};
  return names;
}

inline double score_record(const std::string& metric, const RecordSummary& r, const TaskInstance& sample) {
  if (metric == "accuracy") return answer_correct(r, sample) ? 1.0 : 0.0;
  if (sample.references.empty()) throw MissingReference("sample '" + sample.id + "' has no reference solutions");
  using metrics::RougeVariant;
  if (metric == "bleu") return metrics::bleu(r.final_text, sample.references);
  if (metric == "rouge1") return metrics::rouge(r.final_text, sample.references, RougeVariant::R1);
  if (metric == "rouge2") return metrics::rouge(r.final_text, sample.references, RougeVariant::R2);
  if (metric == "rouge3") return metrics::rouge(r.final_text, sample.references, RougeVariant::R3);
  if (metric == "rougeL") return metrics::rouge(r.final_text, sample.references, RougeVariant::L);
  if (metric == "meteor") return metrics::meteor_lite(r.final_text, sample.references);
  throw PreconditionViolation("unknown metric '" + metric + "'");
}

// Per-repeat raw numbers, before aggregation.
struct RepeatResult {
  int repeat_index = 1;
  std::map<std::string, std::vector<double>> metric_values;
  int records = 0;
  int successes = 0;
  int failed = 0;
  std::vector<int> turns;
  std::vector<double> wall_clock_s;
};

struct MetricSummary {
  double mean = 0.0;
  double std = 0.0;
  std::vector<double> repeat_means;
  std::vector<double> per_sample;
};

struct EvalResult {
  std::string job_name;
  int repeats = 0;
  int records = 0;
  int failed_records = 0;
  std::map<std::string, MetricSummary> metrics;
  double decision_success_rate = 0.0;
  std::vector<int> turns;
  std::vector<double> wall_clock_s;
  std::vector<std::string> annotations;
};

inline RepeatResult score_repeat(int repeat_index, const std::vector<RecordSummary>& records, const SampleIndex& samples,
                                 const std::vector<std::string>& metric_names) {
  RepeatResult out;
  out.repeat_index = repeat_index;
  for (const auto& m : metric_names) out.metric_values[m];
  for (const auto& r : records) {
    const auto& sample = lookup_sample(samples, r.sample_id);
    for (const auto& m : metric_names) out.metric_values[m].push_back(score_record(m, r, sample));
    ++out.records;
    out.successes += r.success ? 1 : 0;
    out.failed += r.failed ? 1 : 0;
    out.turns.push_back(r.turns);
    out.wall_clock_s.push_back(r.clock_s);
  }
  return out;
}

// Mean and sample std over repeat-level means; turns, clocks and decision
// success are pooled over all records.
inline EvalResult aggregate(const std::string& job_name, std::vector<RepeatResult> repeats) {
  if (repeats.empty()) throw PreconditionViolation("aggregate needs at least one repeat");
  std::sort(repeats.begin(), repeats.end(), [](const auto& a, const auto& b) { return a.repeat_index < b.repeat_index; });
  EvalResult out;
  out.job_name = job_name;
  out.repeats = static_cast<int>(repeats.size());
  int successes = 0;
  for (const auto& rep : repeats) {
    out.records += rep.records;
    out.failed_records += rep.failed;
    successes += rep.successes;
    out.turns.insert(out.turns.end(), rep.turns.begin(), rep.turns.end());
    out.wall_clock_s.insert(out.wall_clock_s.end(), rep.wall_clock_s.begin(), rep.wall_clock_s.end());
    for (const auto& [name, values] : rep.metric_values) {
      auto& ms = out.metrics[name];
      ms.per_sample.insert(ms.per_sample.end(), values.begin(), values.end());
      ms.repeat_means.push_back(values.empty() ? 0.0 : stats::mean(values));
    }
  }
  for (auto& [name, ms] : out.metrics) {
    const auto s = stats::summarize(ms.repeat_means);
    ms.mean = s.mean;
    ms.std = s.std;
  }
  out.decision_success_rate = out.records ? static_cast<double>(successes) / out.records : 0.0;
  if (out.repeats == 1) out.annotations.push_back("single repeat: std reported as 0");
  if (out.failed_records) out.annotations.push_back(std::to_string(out.failed_records) + " failed debate(s) scored as given");
  return out;
}

// Reads every JSON-lines record from a file, or from all .json/.jsonl
// files under a directory (sorted by path).
inline std::vector<RecordSummary> load_records(const std::filesystem::path& path) {
  std::vector<std::filesystem::path> files;
  if (std::filesystem::is_directory(path)) {
    for (const auto& e : std::filesystem::recursive_directory_iterator(path)) {
      const auto ext = e.path().extension().string();
      if (e.is_regular_file() && (ext == ".json" || ext == ".jsonl")) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
  } else {
    files.push_back(path);
  }
  std::vector<RecordSummary> out;
  for (const auto& f : files) {
    std::ifstream in(f);
    if (!in) throw FormatError("cannot read " + f.string());
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(line);
      } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(f.string() + ":" + std::to_string(lineno) + ": " + e.what());
      }
      out.push_back(summarize_record(j));
    }
  }
  return out;
}

// Groups records by run name and repeat, scores them, and aggregates.
inline std::vector<EvalResult> evaluate(const std::vector<RecordSummary>& records,
                                        const std::vector<TaskInstance>& samples,
                                        std::vector<std::string> metric_names = {}) {
  if (records.empty()) throw EmptyResults("no debate records to evaluate");
  if (metric_names.empty()) metric_names = default_metrics(samples);
  const auto index = index_samples(samples);
  std::map<std::string, std::map<int, std::vector<RecordSummary>>> grouped;
  for (const auto& r : records) grouped[r.run_name][r.repeat_index].push_back(r);
  std::vector<EvalResult> out;
  for (const auto& [name, reps] : grouped) {
    std::vector<RepeatResult> scored;
    for (const auto& [rep, recs] : reps) scored.push_back(score_repeat(rep, recs, index, metric_names));
    out.push_back(aggregate(name, std::move(scored)));
  }
  return out;
}

inline nlohmann::ordered_json to_json(const EvalResult& r) {
  nlohmann::ordered_json j;
  j["name"] = r.job_name;
  j["repeats"] = r.repeats;
  j["records"] = r.records;
  j["failedRecords"] = r.failed_records;
  auto metrics = nlohmann::ordered_json::object();
  for (const auto& [name, m] : r.metrics) {
    metrics[name] = {{"mean", m.mean}, {"std", m.std}, {"repeatMeans", m.repeat_means}, {"perSample", m.per_sample}};
  }
  j["metrics"] = std::move(metrics);
  j["decisionSuccessRate"] = r.decision_success_rate;
  j["turns"] = r.turns;
  j["wallClockS"] = r.wall_clock_s;
  j["annotations"] = r.annotations;
  return j;
}

inline EvalResult eval_from_json(const nlohmann::json& j) {
  EvalResult r;
  try {
    r.job_name = j.at("name").get<std::string>();
    r.repeats = j.at("repeats").get<int>();
    r.records = j.at("records").get<int>();
    r.failed_records = j.value("failedRecords", 0);
    for (const auto& [name, m] : j.at("metrics").items()) {
      MetricSummary ms;
      ms.mean = m.at("mean").get<double>();
      ms.std = m.at("std").get<double>();
      ms.repeat_means = m.value("repeatMeans", std::vector<double>{});
      ms.per_sample = m.value("perSample", std::vector<double>{});
      r.metrics.emplace(name, std::move(ms));
    }
    r.decision_success_rate = j.at("decisionSuccessRate").get<double>();
    r.turns = j.at("turns").get<std::vector<int>>();
    r.wall_clock_s = j.at("wallClockS").get<std::vector<double>>();
    r.annotations = j.value("annotations", std::vector<std::string>{});
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed eval.json: ") + e.what());
  }
  return r;
}

// Writes <out_dir>/<job>/eval.json for each result; returns the paths.
inline std::vector<std::filesystem::path> write_evals(const std::vector<EvalResult>& results,
                                                      const std::filesystem::path& out_dir) {
  std::vector<std::filesystem::path> paths;
  for (const auto& r : results) {
    const auto dir = out_dir / r.job_name;
    std::filesystem::create_directories(dir);
    const auto p = dir / "eval.json";
    std::ofstream out(p, std::ios::trunc);
    if (!out) throw FormatError("cannot write " + p.string());
    out << to_json(r).dump(2) << '\n';
    paths.push_back(p);
  }
  return paths;
}

inline std::vector<EvalResult> load_evals(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  if (std::filesystem::is_directory(dir)) {
    for (const auto& e : std::filesystem::recursive_directory_iterator(dir))
      if (e.is_regular_file() && e.path().filename() == "eval.json") files.push_back(e.path());
  } else if (std::filesystem::is_regular_file(dir)) {
    files.push_back(dir);
  }
  std::sort(files.begin(), files.end());
  std::vector<EvalResult> out;
  for (const auto& f : files) {
    std::ifstream in(f);
    try {
      out.push_back(eval_from_json(nlohmann::json::parse(in)));
    } catch (const nlohmann::json::parse_error& e) {
      throw FormatError(f.string() + ": " + e.what());
    }
  }
  return out;
}

}  // namespace agora
