#pragma once

#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "agora/csv.hpp"
#include "agora/error.hpp"
#include "agora/types.hpp"

namespace agora {

enum class DatasetFormat { Json, Jsonl, Csv };

struct FieldMapping {
  std::optional<std::string> id_field;
  std::vector<std::string> input_fields;
  std::vector<std::string> context_fields;
  std::vector<std::string> reference_fields;
  std::optional<std::string> answer_letter_field;
  std::string instruction_key;  // applied to every mapped record; may be empty

  void validate() const {
    if (input_fields.empty()) throw MappingError("mapping needs at least one input field");
    if (reference_fields.empty()) throw MappingError("mapping needs at least one reference field");
  }
};

inline std::optional<DatasetFormat> format_from_extension(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".json") return DatasetFormat::Json;
  if (ext == ".jsonl") return DatasetFormat::Jsonl;
  if (ext == ".csv") return DatasetFormat::Csv;
  return std::nullopt;
}

namespace detail {

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// One record as field -> list of string values (arrays flatten, scalars are
// one value, null is no value).
using FlatRecord = std::map<std::string, std::vector<std::string>>;

inline std::vector<std::string> flatten_value(const nlohmann::json& v) {
  if (v.is_null()) return {};
  if (v.is_string()) return {v.get<std::string>()};
  if (v.is_array()) {
    std::vector<std::string> out;
    for (const auto& e : v) {
      auto inner = flatten_value(e);
      out.insert(out.end(), inner.begin(), inner.end());
    }
    return out;
  }
  return {v.dump()};
}

inline FlatRecord flatten_object(const nlohmann::json& obj, std::size_t row) {
  if (!obj.is_object()) throw FormatError("row " + std::to_string(row) + " is not a JSON object");
  FlatRecord rec;
  for (const auto& [k, v] : obj.items()) rec[k] = flatten_value(v);
  return rec;
}

inline std::vector<nlohmann::json> parse_json_records(const std::string& text, DatasetFormat format,
                                                      const std::string& origin) {
  std::vector<nlohmann::json> records;
  try {
    if (format == DatasetFormat::Json) {
      auto doc = nlohmann::json::parse(text);
      if (doc.is_object() && doc.contains("samples")) doc = doc["samples"];
      if (!doc.is_array()) throw FormatError(origin + ": expected a JSON array of records");
      for (auto& r : doc) records.push_back(std::move(r));
    } else {
      std::istringstream lines(text);
      std::string line;
      std::size_t lineno = 0;
      while (std::getline(lines, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        try {
          records.push_back(nlohmann::json::parse(line));
        } catch (const nlohmann::json::exception& e) {
          throw FormatError(origin + " line " + std::to_string(lineno) + ": " + e.what());
        }
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(origin + ": " + e.what());
  }
  return records;
}

inline std::vector<FlatRecord> read_flat_records(const std::string& text, DatasetFormat format,
                                                 const std::string& origin) {
  std::vector<FlatRecord> out;
  if (format == DatasetFormat::Csv) {
    const auto rows = csv::parse(text);
    if (rows.empty()) return out;
    const auto& header = rows.front();
    for (std::size_t r = 1; r < rows.size(); ++r) {
      if (rows[r].size() == 1 && rows[r][0].empty()) continue;  // blank line
      if (rows[r].size() != header.size())
        throw FormatError(origin + " row " + std::to_string(r) + ": expected " + std::to_string(header.size()) +
                          " fields, got " + std::to_string(rows[r].size()));
      FlatRecord rec;
      for (std::size_t c = 0; c < header.size(); ++c) rec[header[c]] = {rows[r][c]};
      out.push_back(std::move(rec));
    }
    return out;
  }
  const auto records = parse_json_records(text, format, origin);
  for (std::size_t i = 0; i < records.size(); ++i) out.push_back(flatten_object(records[i], i + 1));
  return out;
}

inline std::vector<std::string> require_fields(const FlatRecord& rec, const std::vector<std::string>& fields,
                                               std::size_t row, bool required) {
  std::vector<std::string> values;
  for (const auto& f : fields) {
    const auto it = rec.find(f);
    if (it == rec.end()) {
      if (!required) continue;
      throw MappingError("row " + std::to_string(row) + ": mapped field '" + f + "' is absent");
    }
    values.insert(values.end(), it->second.begin(), it->second.end());
  }
  return values;
}

inline std::optional<char> parse_letter(const std::string& value, std::size_t row) {
  std::string trimmed;
  for (char c : value)
    if (!std::isspace(static_cast<unsigned char>(c))) trimmed.push_back(c);
  if (trimmed.empty()) return std::nullopt;
  if (trimmed.size() != 1 || !std::isalpha(static_cast<unsigned char>(trimmed[0])))
    throw MappingError("row " + std::to_string(row) + ": answer letter '" + value + "' is not a single letter");
  return static_cast<char>(std::toupper(static_cast<unsigned char>(trimmed[0])));
}

inline std::string padded_row_id(std::size_t row, std::size_t total) {
  const auto width = std::max<std::size_t>(4, std::to_string(total).size());
  auto s = std::to_string(row);
  return std::string(width - std::min(width, s.size()), '0') + s;
}

inline void check_unique_ids(const std::vector<TaskInstance>& samples) {
  std::set<std::string> seen;
  std::set<std::string> dups;
  for (const auto& s : samples) {
    if (s.id.empty()) throw FormatError("sample with an empty id");
    if (!seen.insert(s.id).second) dups.insert(s.id);
  }
  if (!dups.empty()) {
    std::string list;
    for (const auto& d : dups) list += (list.empty() ? "" : ", ") + d;
    throw FormatError("duplicate sample ids: " + list);
  }
}

}  // namespace detail

// Unified on-disk sample: {id, instruction, inputs[], context[], references[], answerLetter?}
inline nlohmann::ordered_json to_json(const TaskInstance& t) {
  nlohmann::ordered_json j;
  j["id"] = t.id;
  j["instruction"] = t.instruction_key;
  j["inputs"] = t.input_lines;
  j["context"] = t.context_lines;
  j["references"] = t.references;
  if (t.answer_letter) j["answerLetter"] = std::string(1, *t.answer_letter);
  return j;
}

inline TaskInstance task_from_json(const nlohmann::json& j, std::size_t row) {
  TaskInstance t;
  try {
    t.id = j.at("id").is_string() ? j.at("id").get<std::string>() : j.at("id").dump();
    t.instruction_key = j.value("instruction", "");
    t.input_lines = j.at("inputs").get<std::vector<std::string>>();
    if (j.contains("context") && !j["context"].is_null()) t.context_lines = j["context"].get<std::vector<std::string>>();
    t.references = j.at("references").get<std::vector<std::string>>();
    if (j.contains("answerLetter") && !j["answerLetter"].is_null())
      t.answer_letter = detail::parse_letter(j["answerLetter"].get<std::string>(), row);
  } catch (const nlohmann::json::exception& e) {
    throw MappingError("row " + std::to_string(row) + ": not a unified sample: " + e.what());
  }
  return t;
}

// Loads a dataset in the unified schema (no mapping) or maps raw records.
inline std::vector<TaskInstance> load_dataset(const std::filesystem::path& path, DatasetFormat format,
                                              const std::optional<FieldMapping>& mapping = std::nullopt) {
  const auto text = detail::read_file(path);
  const auto origin = path.string();
  std::vector<TaskInstance> samples;

  if (!mapping) {
    if (format == DatasetFormat::Csv) throw FormatError(origin + ": CSV datasets need a field mapping");
    const auto records = detail::parse_json_records(text, format, origin);
    for (std::size_t i = 0; i < records.size(); ++i) samples.push_back(task_from_json(records[i], i + 1));
  } else {
    mapping->validate();
    const auto records = detail::read_flat_records(text, format, origin);
    for (std::size_t i = 0; i < records.size(); ++i) {
      const auto row = i + 1;
      const auto& rec = records[i];
      TaskInstance t;
      if (mapping->id_field) {
        const auto ids = detail::require_fields(rec, {*mapping->id_field}, row, true);
        if (ids.size() != 1) throw MappingError("row " + std::to_string(row) + ": id field must hold one value");
        t.id = ids.front();
      } else {
        t.id = detail::padded_row_id(row, records.size());
      }
      t.instruction_key = mapping->instruction_key;
      t.input_lines = detail::require_fields(rec, mapping->input_fields, row, true);
      t.context_lines = detail::require_fields(rec, mapping->context_fields, row, false);
      t.references = detail::require_fields(rec, mapping->reference_fields, row, true);
      if (mapping->answer_letter_field) {
        const auto letters = detail::require_fields(rec, {*mapping->answer_letter_field}, row, true);
        if (letters.size() == 1) t.answer_letter = detail::parse_letter(letters.front(), row);
      }
      samples.push_back(std::move(t));
    }
  }
  if (samples.empty()) throw EmptyDataset(origin + " contains no samples");
  detail::check_unique_ids(samples);
  return samples;
}

// Sidecar `<file>.mapping.json`:
//   {"format": "csv", "id": "...", "inputs": [...], "context": [...],
//    "references": [...], "answerLetter": "...", "instruction": "<key>"}
inline FieldMapping mapping_from_json(const nlohmann::json& j) {
  FieldMapping m;
  try {
    if (j.contains("id")) m.id_field = j["id"].get<std::string>();
    m.input_fields = j.at("inputs").get<std::vector<std::string>>();
    if (j.contains("context")) m.context_fields = j["context"].get<std::vector<std::string>>();
    m.reference_fields = j.at("references").get<std::vector<std::string>>();
    if (j.contains("answerLetter")) m.answer_letter_field = j["answerLetter"].get<std::string>();
    m.instruction_key = j.value("instruction", "");
  } catch (const nlohmann::json::exception& e) {
    throw MappingError(std::string("bad field mapping: ") + e.what());
  }
  m.validate();
  return m;
}

// Resolves format from the extension (or the sidecar's "format") and applies
// `<file>.mapping.json` when present; otherwise expects the unified schema.
inline std::vector<TaskInstance> load_dataset_auto(const std::filesystem::path& path) {
  auto sidecar = path;
  sidecar += ".mapping.json";
  std::optional<FieldMapping> mapping;
  auto format = format_from_extension(path);
  if (std::filesystem::exists(sidecar)) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(detail::read_file(sidecar));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(sidecar.string() + ": " + e.what());
    }
    mapping = mapping_from_json(j);
    if (j.contains("format")) {
      const auto f = j["format"].get<std::string>();
      if (f == "json") format = DatasetFormat::Json;
      else if (f == "jsonl") format = DatasetFormat::Jsonl;
      else if (f == "csv") format = DatasetFormat::Csv;
      else throw FormatError("unknown dataset format '" + f + "'");
    }
  }
  if (!format) throw FormatError("cannot infer dataset format of " + path.string());
  return load_dataset(path, *format, mapping);
}

inline void save_unified(const std::filesystem::path& path, const std::vector<TaskInstance>& samples) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& s : samples) arr.push_back(to_json(s));
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out << arr.dump(2) << '\n';
}

// Seeded uniform sample without replacement that keeps source order
// (selection sampling over raw mt19937_64 output, so the result does not
// depend on the standard library's distribution implementations).
inline std::vector<TaskInstance> subset(const std::vector<TaskInstance>& samples, int num_samples,
                                        std::uint64_t seed) {
  if (num_samples < 1) throw PreconditionViolation("num_samples must be >= 1");
  const auto n = samples.size();
  const auto want = static_cast<std::size_t>(num_samples);
  if (want >= n) return samples;

  std::mt19937_64 rng(seed);
  std::vector<TaskInstance> out;
  out.reserve(want);
  std::size_t needed = want;
  for (std::size_t i = 0; i < n && needed > 0; ++i) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    if (static_cast<double>(n - i) * u < static_cast<double>(needed)) {
      out.push_back(samples[i]);
      --needed;
    }
  }
  return out;
}

}  // namespace agora
