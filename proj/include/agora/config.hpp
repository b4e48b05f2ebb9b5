#pragma once

#include <algorithm>
#include <array>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "agora/error.hpp"
#include "agora/types.hpp"

namespace agora {

using ordered_json = nlohmann::ordered_json;

inline constexpr std::array<std::string_view, 20> kConfigKeys{
    "task_instruction_prompt_template",
    "endpoint_url",
    "api_key",
    "model_name",
    "input_json_file_path",
    "output_json_file_path",
    "concurrent_api_requests",
    "num_samples",
    "max_turns",
    "response_generator",
    "decision_protocol",
    "use_baseline",
    "use_chain_of_thought",
    "persona_generator",
    "discussion_paradigm",
    "num_agents",
    "seed",
    "cumulative_points",
    "voting_after_turns",
    "debate_exchanges",
};

inline bool is_config_key(std::string_view key) {
  return std::find(kConfigKeys.begin(), kConfigKeys.end(), key) != kConfigKeys.end();
}

// Values are kept as raw JSON; typing happens when a job is resolved, so a
// template file with placeholder strings still expands.
struct BatchConfig {
  int repeats = 1;
  std::string name;
  ordered_json common = ordered_json::object();
  std::vector<ordered_json> runs;
};

struct JobSpec {
  std::string batch_name;
  int run_index = 0;     // 0-based position in `runs`
  int repeat_index = 1;  // 1..repeats
  ordered_json values = ordered_json::object();

  std::string output_path() const { return values.at("output_json_file_path").get<std::string>(); }
  // Run name shared by all repeats: output file stem without the repeat suffix.
  std::string run_name() const;
};

namespace detail {

inline void check_keys(const ordered_json& obj, const std::string& where) {
  if (!obj.is_object()) throw ConfigInvalid(where + " must be an object");
  for (const auto& [key, _] : obj.items())
    if (!is_config_key(key)) throw ConfigKeyUnknown(key);
}

}  // namespace detail

inline BatchConfig config_from_json(const ordered_json& j) {
  if (!j.is_object()) throw ConfigInvalid("batch config must be a JSON object");
  BatchConfig cfg;
  for (const auto& [key, value] : j.items()) {
    if (key == "repeats") {
      if (!value.is_number_integer() || value.get<long long>() < 1) throw ConfigInvalid("repeats must be an integer >= 1");
      cfg.repeats = value.get<int>();
    } else if (key == "name") {
      if (!value.is_string()) throw ConfigInvalid("name must be a string");
      cfg.name = value.get<std::string>();
    } else if (key == "common") {
      detail::check_keys(value, "common");
      cfg.common = value;
    } else if (key == "runs") {
      if (!value.is_array()) throw ConfigInvalid("runs must be an array");
      for (std::size_t i = 0; i < value.size(); ++i) {
        detail::check_keys(value[i], "runs[" + std::to_string(i) + "]");
        cfg.runs.push_back(value[i]);
      }
    } else {
      throw ConfigKeyUnknown(key);
    }
  }
  if (cfg.runs.empty()) cfg.runs.push_back(ordered_json::object());
  return cfg;
}

inline BatchConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigInvalid("cannot open config " + path.string());
  try {
    return config_from_json(ordered_json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigInvalid("config " + path.string() + " is not valid JSON: " + e.what());
  }
}

// "results/x.json" -> "results/x-r2.json"
inline std::string repeat_output_path(const std::string& path, int repeat_index) {
  std::filesystem::path p(path);
  auto name = p.stem().string() + "-r" + std::to_string(repeat_index) + p.extension().string();
  return (p.parent_path() / name).string();
}

inline std::string JobSpec::run_name() const {
  auto stem = std::filesystem::path(output_path()).stem().string();
  const auto suffix = "-r" + std::to_string(repeat_index);
  if (stem.size() > suffix.size() && stem.compare(stem.size() - suffix.size(), suffix.size(), suffix) == 0)
    stem.resize(stem.size() - suffix.size());
  return stem;
}

inline std::vector<JobSpec> expand_config(const BatchConfig& cfg) {
  if (cfg.repeats < 1) throw ConfigInvalid("repeats must be >= 1");
  std::vector<JobSpec> jobs;
  for (std::size_t r = 0; r < cfg.runs.size(); ++r) {
    detail::check_keys(cfg.runs[r], "runs[" + std::to_string(r) + "]");
    ordered_json merged = cfg.common;
    for (const auto& [key, value] : cfg.runs[r].items()) merged[key] = value;
    for (const auto* required : {"input_json_file_path", "output_json_file_path"}) {
      if (!merged.contains(required))
        throw ConfigMissingRequired(std::string(required) + " (run " + std::to_string(r + 1) + ")");
    }
    if (!merged["output_json_file_path"].is_string()) throw ConfigInvalid("output_json_file_path must be a string");
    for (int i = 1; i <= cfg.repeats; ++i) {
      JobSpec job;
      job.batch_name = cfg.name;
      job.run_index = static_cast<int>(r);
      job.repeat_index = i;
      job.values = merged;
      job.values["output_json_file_path"] = repeat_output_path(merged["output_json_file_path"].get<std::string>(), i);
      jobs.push_back(std::move(job));
    }
  }
  return jobs;
}

// Typed view of one job. Defaults apply to keys the config leaves out.
struct JobSettings {
  std::string instruction_key;  // empty: use each sample's own
  std::string endpoint_url;
  std::string api_key;
  std::string model_name;
  std::string input_path;
  std::string output_path;
  int concurrent_api_requests = 1;
  std::optional<int> num_samples;
  int max_turns = 7;
  ResponseGeneratorKind response_generator = ResponseGeneratorKind::Simple;
  ProtocolKind decision_protocol = ProtocolKind::MajorityConsensus;
  bool use_baseline = false;
  bool use_chain_of_thought = true;
  PersonaGeneratorKind persona_generator = PersonaGeneratorKind::None;
  ParadigmKind discussion_paradigm = ParadigmKind::Memory;
  int num_agents = 3;
  std::uint64_t seed = 0;
  int cumulative_points = 10;
  int voting_after_turns = 3;
  int debate_exchanges = 2;
};

namespace detail {

inline std::string get_string(const ordered_json& v, std::string_view key) {
  if (!v.is_string()) throw ConfigInvalid(std::string(key) + " must be a string");
  return v.get<std::string>();
}

inline int get_int(const ordered_json& v, std::string_view key, int min) {
  if (!v.is_number_integer()) throw ConfigInvalid(std::string(key) + " must be an integer");
  const auto x = v.get<long long>();
  if (x < min || x > 1'000'000'000) throw ConfigInvalid(std::string(key) + " must be >= " + std::to_string(min));
  return static_cast<int>(x);
}

inline bool get_bool(const ordered_json& v, std::string_view key) {
  if (!v.is_boolean()) throw ConfigInvalid(std::string(key) + " must be true or false");
  return v.get<bool>();
}

template <class E>
E get_enum(const ordered_json& v, std::string_view key) {
  const auto s = get_string(v, key);
  auto e = parse_enum<E>(s);
  if (!e) throw ConfigInvalid(std::string(key) + ": unknown value '" + s + "'");
  return *e;
}

}  // namespace detail

// MALLM_API_KEY in the environment overrides the configured key.
inline JobSettings resolve_job(const JobSpec& job) {
  using namespace detail;
  JobSettings s;
  for (const auto& [key, v] : job.values.items()) {
    if (key == "task_instruction_prompt_template") s.instruction_key = get_string(v, key);
    else if (key == "endpoint_url") s.endpoint_url = get_string(v, key);
    else if (key == "api_key") s.api_key = get_string(v, key);
    else if (key == "model_name") s.model_name = get_string(v, key);
    else if (key == "input_json_file_path") s.input_path = get_string(v, key);
    else if (key == "output_json_file_path") s.output_path = get_string(v, key);
    else if (key == "concurrent_api_requests") s.concurrent_api_requests = get_int(v, key, 1);
    else if (key == "num_samples") s.num_samples = get_int(v, key, 1);
    else if (key == "max_turns") s.max_turns = get_int(v, key, 1);
    else if (key == "response_generator") s.response_generator = get_enum<ResponseGeneratorKind>(v, key);
    else if (key == "decision_protocol") s.decision_protocol = get_enum<ProtocolKind>(v, key);
    else if (key == "use_baseline") s.use_baseline = get_bool(v, key);
    else if (key == "use_chain_of_thought") s.use_chain_of_thought = get_bool(v, key);
    else if (key == "persona_generator") s.persona_generator = get_enum<PersonaGeneratorKind>(v, key);
    else if (key == "discussion_paradigm") s.discussion_paradigm = get_enum<ParadigmKind>(v, key);
    else if (key == "num_agents") s.num_agents = get_int(v, key, 1);
    else if (key == "seed") {
      if (!v.is_number_unsigned() && !v.is_number_integer()) throw ConfigInvalid("seed must be an integer");
      s.seed = v.get<std::uint64_t>();
    }
    else if (key == "cumulative_points") s.cumulative_points = get_int(v, key, 1);
    else if (key == "voting_after_turns") s.voting_after_turns = get_int(v, key, 1);
    else if (key == "debate_exchanges") s.debate_exchanges = get_int(v, key, 1);
    else throw ConfigKeyUnknown(key);
  }
  if (const char* env = std::getenv("MALLM_API_KEY"); env && *env) s.api_key = env;
  return s;
}

// Config snapshot for logs, with the API key masked.
inline ordered_json redacted(const ordered_json& values) {
  auto out = values;
  if (out.contains("api_key")) out["api_key"] = "<redacted>";
  return out;
}

}  // namespace agora
