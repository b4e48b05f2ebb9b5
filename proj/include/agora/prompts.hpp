#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "agora/template.hpp"
#include "agora/types.hpp"

namespace agora {
namespace detail {
#include "agora/detail/prompt_templates.inc"
}  // namespace detail

inline constexpr std::string_view kPromptCatalogVersion = "1";

// Raw template text of a catalog entry (file name without `.txt`).
inline std::string_view prompt_text(std::string_view name) {
  for (const auto& [key, text] : detail::kEmbeddedPrompts)
    if (key == name) return text;
  throw TemplateError("no prompt template named '" + std::string(name) + "'");
}

inline std::vector<std::string_view> prompt_names() {
  std::vector<std::string_view> names;
  for (const auto& entry : detail::kEmbeddedPrompts) names.push_back(entry.first);
  return names;
}

inline std::string render_prompt(std::string_view name, const SlotMap& slots) {
  return PromptTemplate(prompt_text(name)).render(slots);
}

inline std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out.append(sep);
    out.append(parts[i]);
  }
  return out;
}

// "Solution 1: ...\nSolution 2: ..." as used by the vote and judge prompts.
inline std::string render_solution_list(const std::vector<std::string>& candidates) {
  std::vector<std::string> lines;
  lines.reserve(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i)
    lines.push_back("Solution " + std::to_string(i + 1) + ": " + candidates[i]);
  return join(lines, "\n");
}

// Catalog entry for a (generator, phase) user prompt. Phase is one of
// "improve", "feedback", "revise".
inline std::string user_prompt_name(ResponseGeneratorKind generator, std::string_view phase) {
  return std::string(phase) + "_" + std::string(to_string(generator));
}

}  // namespace agora
